#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "paec/autodiff.hpp"
#include "paec/checkpoint.hpp"
#include "paec/errors.hpp"
#include "paec/loss.hpp"
#include "paec/model.hpp"

using namespace paec;

namespace {

std::mt19937_64 g_rng(20240809);

Tensor<double> randt(std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.v) v = u(g_rng);
  return t;
}

// Central-difference check of d(loss)/d(inputs) for a graph builder that
// reads the current values of the given parameter nodes.
void gradcheck(const std::vector<Var<double>>& inputs,
               const std::function<Var<double>()>& build, double tol = 1e-4,
               int samples_per_input = 10) {
  for (const auto& in : inputs)
    if (!in.n->grad.v.empty())
      std::fill(in.n->grad.v.begin(), in.n->grad.v.end(), 0.0);
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    auto loss = build();
    tape.backward(loss.n);
    for (const auto& in : inputs) {
      REQUIRE(!in.n->grad.v.empty());
      analytic.push_back(in.n->grad);
    }
  }
  for (std::size_t pi = 0; pi < inputs.size(); ++pi) {
    auto& val = inputs[pi].n->val;
    std::uniform_int_distribution<std::size_t> pick(0, val.numel() - 1);
    for (int s = 0; s < samples_per_input; ++s) {
      const std::size_t idx = val.numel() <= static_cast<std::size_t>(samples_per_input)
                                  ? static_cast<std::size_t>(s) % val.numel()
                                  : pick(g_rng);
      const double x0 = val.v[idx];
      const double h = std::max(1e-6, 1e-4 * std::abs(x0));
      val.v[idx] = x0 + h;
      const double lp = build().val().v[0];
      val.v[idx] = x0 - h;
      const double lm = build().val().v[0];
      val.v[idx] = x0;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[pi].v[idx];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      CAPTURE(pi);
      CAPTURE(idx);
      CAPTURE(fd);
      CAPTURE(an);
      CHECK(rel < tol);
    }
  }
}

// Weighted sum so every output element influences the scalar loss. The
// weights are a fixed function of the shape so repeated builds agree.
Var<double> spread(const Var<double>& x) {
  Tensor<double> w(x.n->val.shape);
  std::mt19937_64 rng(0xfeed ^ (w.numel() * 2654435761ULL));
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (auto& v : w.v) v = u(rng);
  return sum_all(mul(x, constant<double>(std::move(w))));
}

} // namespace

TEST_CASE("gradcheck: elementwise ops") {
  auto a = parameter<double>(randt({3, 5}));
  auto b = parameter<double>(randt({3, 5}, 0.5, 1.5));
  gradcheck({a, b}, [&] { return spread(add(a, b)); });
  gradcheck({a, b}, [&] { return spread(sub(a, b)); });
  gradcheck({a, b}, [&] { return spread(mul(a, b)); });
  gradcheck({a, b}, [&] { return spread(div(a, b)); });
  gradcheck({a}, [&] { return spread(scale(a, 1.7)); });
  gradcheck({a}, [&] { return spread(sigmoid(a)); });
  gradcheck({a}, [&] { return spread(tanh_op(a)); });
  gradcheck({a}, [&] { return spread(square(a)); });
  gradcheck({b}, [&] { return spread(sqrt_eps(b, 1e-9)); });
  gradcheck({a}, [&] { return mean_all(square(a)); });
}

TEST_CASE("gradcheck: shape ops") {
  auto a = parameter<double>(randt({3, 4, 5}));
  gradcheck({a}, [&] { return spread(reshape(a, {12, 5})); });
  gradcheck({a}, [&] { return spread(permute3(a, {2, 0, 1})); });
  gradcheck({a}, [&] { return spread(slice_ch(a, 1, 3)); });
  gradcheck({a}, [&] { return spread(mean_axis0(a)); });
  gradcheck({a}, [&] { return spread(repeat_tail_time(a, 9)); });

  auto b = parameter<double>(randt({3, 4, 5}));
  gradcheck({a, b}, [&] {
    return spread(concat_ch(std::vector<Var<double>>{a, b}));
  });

  auto m = parameter<double>(randt({4, 6}));
  gradcheck({m}, [&] { return spread(slice_cols(m, 1, 4)); });
  gradcheck({m}, [&] { return spread(softmax_rows(m)); });
  auto m2 = parameter<double>(randt({4, 3}));
  gradcheck({m, m2}, [&] {
    return spread(concat_cols(std::vector<Var<double>>{m, m2}));
  });

  auto v = parameter<double>(randt({7}));
  gradcheck({v}, [&] { return spread(tile_time(v, 5)); });

  auto fr = parameter<double>(randt({4, 6}));
  gradcheck({fr}, [&] { return spread(frames_to_ctf(fr, 2, 3)); });
}

TEST_CASE("gradcheck: matmul variants and biases") {
  auto a = parameter<double>(randt({4, 6}));
  auto b = parameter<double>(randt({6, 5}));
  gradcheck({a, b}, [&] { return spread(matmul(a, b)); });

  auto bt = parameter<double>(randt({5, 6}));
  gradcheck({a, bt}, [&] { return spread(matmul(a, bt, false, true)); });

  auto at = parameter<double>(randt({6, 4}));
  gradcheck({at, b}, [&] { return spread(matmul(at, b, true, false)); });

  auto bias = parameter<double>(randt({5}));
  auto w2 = parameter<double>(randt({6, 5}));
  gradcheck({a, bias, w2}, [&] {
    return spread(add_bias_cols(matmul(a, w2), bias));
  });

  auto x3 = parameter<double>(randt({3, 4, 5}));
  auto cb = parameter<double>(randt({3}));
  gradcheck({x3, cb}, [&] { return spread(add_bias_ch(x3, cb)); });
}

TEST_CASE("gradcheck: encoder and decoder convolutions") {
  auto x = parameter<double>(randt({3, 4, 11}));
  auto w = parameter<double>(randt({5, 3 * 6}));
  auto b = parameter<double>(randt({5}));
  gradcheck({x, w, b}, [&] { return spread(conv_enc(x, w, b)); });

  auto xd = parameter<double>(randt({4, 3, 5}));
  auto wd = parameter<double>(randt({4, 3 * 6}));
  auto bd = parameter<double>(randt({3}));
  gradcheck({xd, wd, bd}, [&] { return spread(conv_dec(xd, wd, bd, 11)); });
  // Exact-inverse size (2*(f-1)+1) and padded size both work.
  gradcheck({xd, wd, bd}, [&] { return spread(conv_dec(xd, wd, bd, 9)); });
}

TEST_CASE("gradcheck: lstm forward and reverse") {
  const int B = 3, T = 4, I = 5, H = 6;
  auto x = parameter<double>(randt({B, T, I}));
  auto wih = parameter<double>(randt({4 * H, I}, -0.5, 0.5));
  auto whh = parameter<double>(randt({4 * H, H}, -0.5, 0.5));
  auto b = parameter<double>(randt({4 * H}, -0.5, 0.5));
  gradcheck({x, wih, whh, b},
            [&] { return spread(lstm_seq(x, wih, whh, b, false)); }, 2e-4);
  gradcheck({x, wih, whh, b},
            [&] { return spread(lstm_seq(x, wih, whh, b, true)); }, 2e-4);
}

TEST_CASE("encoder frequency chain matches conv arithmetic") {
  StageConfig sc;
  auto sizes = TdpfModel<float>::encoder_freq_sizes(sc);
  CHECK(sizes == std::vector<int>{161, 80, 39, 19, 9, 4});
}

TEST_CASE("conv_enc causality: future frames cannot affect the past") {
  auto x = randt({2, 6, 7});
  auto w = randt({3, 2 * 6});
  auto b = randt({3});
  auto base = conv_enc(constant<double>(x), constant<double>(w), constant<double>(b));
  auto x2 = x;
  for (int c = 0; c < 2; ++c)
    for (int f = 0; f < 7; ++f) x2.at(c, 3, f) += 1.0; // perturb frame 3
  auto pert = conv_enc(constant<double>(x2), constant<double>(w), constant<double>(b));
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t < 3; ++t)
      for (int f = 0; f < 3; ++f)
        CHECK(base.val().at(c, t, f) == pert.val().at(c, t, f));
  // Frame 3 must differ somewhere.
  bool diff = false;
  for (int c = 0; c < 3; ++c)
    for (int f = 0; f < 3; ++f)
      diff = diff || base.val().at(c, 3, f) != pert.val().at(c, 3, f);
  CHECK(diff);
}

namespace {

ModelVariantConfig tiny_config(Variant v) {
  auto cfg = default_variant_config(v, 8, 12);
  for (auto& sc : cfg.stages) {
    sc.ftlstm_hidden = 8;
    sc.mca_heads = 2;
    sc.mca_dim = 8;
    sc.spk_bilstm_hidden = 6;
  }
  return cfg;
}

template <class S>
ComplexGrid<S> random_grid(int c, int t, int f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Tensor<S> re({c, t, f}), im({c, t, f});
  for (auto& v : re.v) v = static_cast<S>(u(rng));
  for (auto& v : im.v) v = static_cast<S>(u(rng));
  return {constant<S>(std::move(re)), constant<S>(std::move(im))};
}

template <class S>
SpeakerInputs<S> random_speaker(int te, int f, std::uint64_t seed) {
  SpeakerInputs<S> spk;
  spk.enrollment = random_grid<S>(1, te, f, seed);
  std::mt19937_64 rng(seed ^ 0xabcdULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<S> fb({1, 160}), pv({1, 256});
  for (auto& v : fb.v) v = static_cast<S>(u(rng));
  for (auto& v : pv.v) v = static_cast<S>(u(rng));
  spk.fbank = constant<S>(std::move(fb));
  spk.provider = constant<S>(std::move(pv));
  return spk;
}

} // namespace

TEST_CASE("parameter budgets land within 15% of the published sizes") {
  const double aec = static_cast<double>(
      count_params(default_variant_config(Variant::gftnn_aec)));
  const double pse = static_cast<double>(
      count_params(default_variant_config(Variant::gftnn_pse)));
  const double gl = static_cast<double>(
      count_params(default_variant_config(Variant::gftnn_l)));
  const double tdpf = static_cast<double>(
      count_params(default_variant_config(Variant::tdpf2)));
  CHECK(std::abs(aec / 2.45e6 - 1.0) <= 0.15);
  CHECK(std::abs(pse / 3.54e6 - 1.0) <= 0.15);
  CHECK(std::abs(gl / 7.15e6 - 1.0) <= 0.15);
  CHECK(std::abs(tdpf / 6.59e6 - 1.0) <= 0.15);
  // TDPF variants share one budget.
  CHECK(count_params(default_variant_config(Variant::tdpf1)) ==
        count_params(default_variant_config(Variant::tdpf2)));
  CHECK(count_params(default_variant_config(Variant::tdpf3)) ==
        count_params(default_variant_config(Variant::tdpf2)));
}

TEST_CASE("F-LSTM per-direction parameter count matches the closed form") {
  auto cfg = default_variant_config(Variant::gftnn_aec);
  TdpfModel<float> model(cfg, 1);
  const int w = cfg.stages[0].width;
  const int h = cfg.stages[0].ftlstm_hidden;
  // One complex direction = two real LSTMs of 4*(in+hidden+1)*hidden each.
  std::size_t got = 0;
  for (const auto& [name, node] : model.params().all())
    if (name.rfind("s1.flstm.fwd.", 0) == 0) got += node->val.numel();
  CHECK(got == 2u * 4u * (w + h + 1) * h);
}

TEST_CASE("model forward preserves frame count and is deterministic") {
  for (auto v : {Variant::gftnn_aec, Variant::tdpf2}) {
    auto cfg = tiny_config(v);
    TdpfModel<float> model(cfg, 7);
    for (int t : {1, 17, 64}) {
      auto d = random_grid<float>(1, t, 161, 100 + t);
      auto e = random_grid<float>(1, t, 161, 200 + t);
      auto y = random_grid<float>(1, t, 161, 300 + t);
      auto spk = random_speaker<float>(9, 161, 400 + t);
      auto fwd = model.forward(d, e, y, v == Variant::gftnn_aec ? nullptr : &spk);
      CHECK(fwd.s2.re.shape() == std::vector<int>{1, t, 161});
      if (cfg.two_stage()) CHECK(fwd.s1.re.shape() == std::vector<int>{1, t, 161});
      auto fwd2 = model.forward(d, e, y, v == Variant::gftnn_aec ? nullptr : &spk);
      CHECK(fwd.s2.re.val().v == fwd2.s2.re.val().v);
      CHECK(fwd.s2.im.val().v == fwd2.s2.im.val().v);
    }
  }
}

TEST_CASE("strict causality for every variant") {
  for (auto v : {Variant::gftnn_aec, Variant::gftnn_pse, Variant::gftnn_l,
                 Variant::tdpf1, Variant::tdpf2, Variant::tdpf3}) {
    CAPTURE(to_string(v));
    auto cfg = tiny_config(v);
    TdpfModel<float> model(cfg, 11);
    const int t = 24;
    auto d = random_grid<float>(1, t, 161, 1);
    auto e = random_grid<float>(1, t, 161, 2);
    auto y = random_grid<float>(1, t, 161, 3);
    auto spk = random_speaker<float>(7, 161, 4);
    const bool needs = v != Variant::gftnn_aec;
    auto base = model.forward(d, e, y, needs ? &spk : nullptr);

    const int tp = 10; // perturbed frame
    auto perturb = [&](const ComplexGrid<float>& g, std::uint64_t seed) {
      Tensor<float> re = g.re.val(), im = g.im.val();
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.5, 1.0);
      for (int f = 0; f < 161; ++f) {
        re.at(0, tp, f) += static_cast<float>(u(rng));
        im.at(0, tp, f) -= static_cast<float>(u(rng));
      }
      return ComplexGrid<float>{constant<float>(std::move(re)),
                                constant<float>(std::move(im))};
    };
    auto fwd = model.forward(perturb(d, 91), perturb(e, 92), perturb(y, 93),
                             needs ? &spk : nullptr);
    for (int tt = 0; tt < tp; ++tt)
      for (int f = 0; f < 161; ++f) {
        REQUIRE(base.s2.re.val().at(0, tt, f) == fwd.s2.re.val().at(0, tt, f));
        REQUIRE(base.s2.im.val().at(0, tt, f) == fwd.s2.im.val().at(0, tt, f));
      }
    bool changed = false;
    for (int f = 0; f < 161; ++f)
      changed = changed || base.s2.re.val().at(0, tp, f) != fwd.s2.re.val().at(0, tp, f);
    CHECK(changed);
  }
}

TEST_CASE("gate closure: large negative gate bias zeroes a layer") {
  auto cfg = tiny_config(Variant::gftnn_aec);
  TdpfModel<float> model(cfg, 13);
  // Close the gate of encoder layer 2: zero weights, -1000 bias.
  for (const char* nm : {"s1.enc2.g.wr", "s1.enc2.g.wi"}) {
    auto w = model.params().get(nm);
    std::fill(w.val().v.begin(), w.val().v.end(), 0.f);
  }
  for (const char* nm : {"s1.enc2.g.br", "s1.enc2.g.bi"}) {
    auto b = model.params().get(nm);
    std::fill(b.val().v.begin(), b.val().v.end(), -1000.f);
  }
  // With the whole layer gated shut and all later biases zeroed, the mask
  // head sees zeros; easiest check: the layer output itself.
  auto x = random_grid<float>(cfg.stages[0].in_channels, 5, 161, 5);
  // Run only the encoder chain by calling forward and checking the layer
  // output indirectly is overkill; instead check the op composition.
  auto wc_r = model.params().get("s1.enc2.c.wr");
  auto wc_i = model.params().get("s1.enc2.c.wi");
  auto in = random_grid<float>(cfg.stages[0].width, 5, 39, 6);
  auto zb = constant<float>(Tensor<float>({cfg.stages[0].width}));
  auto cr = sub(conv_enc(in.re, wc_r, zb), conv_enc(in.im, wc_i, zb));
  auto gr_w = model.params().get("s1.enc2.g.wr");
  auto gr_b = model.params().get("s1.enc2.g.br");
  auto gr = conv_enc(in.re, gr_w, gr_b);
  auto gated = mul(cr, sigmoid(gr));
  for (float vv : gated.val().v) CHECK(vv == 0.f);
}

TEST_CASE("mca: attention weights sum to one and degenerate tokens pass through") {
  auto cfg = tiny_config(Variant::gftnn_pse);
  TdpfModel<float> model(cfg, 17);
  const int w = cfg.stages[0].width;
  auto btl = random_grid<float>(w, 6, 4, 21);
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor<float> fb({1, 160}), pv({1, 256});
  for (auto& v : fb.v) v = static_cast<float>(u(rng));
  for (auto& v : pv.v) v = static_cast<float>(u(rng));
  auto fbank = constant<float>(fb);
  auto prov = constant<float>(pv);

  auto gain = model.mca_gain(0, btl, fbank, prov);
  CHECK(gain.shape() == std::vector<int>{w, 6, 4});

  // Per-frame independence: permuting other frames leaves frame 2 unchanged.
  {
    Tensor<float> re = btl.re.val(), im = btl.im.val();
    // swap frames 0 and 5
    for (int c = 0; c < w; ++c)
      for (int f = 0; f < 4; ++f) {
        std::swap(re.at(c, 0, f), re.at(c, 5, f));
        std::swap(im.at(c, 0, f), im.at(c, 5, f));
      }
    ComplexGrid<float> btl2{constant<float>(std::move(re)),
                            constant<float>(std::move(im))};
    auto gain2 = model.mca_gain(0, btl2, fbank, prov);
    for (int c = 0; c < w; ++c)
      for (int f = 0; f < 4; ++f)
        CHECK(gain.val().at(c, 2, f) == gain2.val().at(c, 2, f));
  }

  // Identical K/V tokens: output equals the (value, output)-projected token,
  // independent of the attention weights. Force both token projections to
  // coincide by feeding the same projected content through both paths.
  {
    // Make wk_p/wv_p produce the same K/V as wk_f/wv_f does for this fbank:
    // zero the provider projections and copy biases from the fbank path
    // evaluated at this input.
    auto copy_path = [&](const char* wf, const char* bf, const char* wp,
                         const char* bp, const Var<float>& src) {
      auto wfv = model.params().get(wf);
      auto bfv = model.params().get(bf);
      // token_f = src * wf^T + bf  (1 x E)
      const int e = wfv.shape()[0];
      std::vector<float> token(static_cast<std::size_t>(e), 0.f);
      for (int i = 0; i < e; ++i) {
        double acc = bfv.val().v[static_cast<std::size_t>(i)];
        for (int j = 0; j < wfv.shape()[1]; ++j)
          acc += wfv.val().at(i, j) * src.val().at(0, j);
        token[static_cast<std::size_t>(i)] = static_cast<float>(acc);
      }
      auto wpv = model.params().get(wp);
      auto bpv = model.params().get(bp);
      std::fill(wpv.val().v.begin(), wpv.val().v.end(), 0.f);
      for (int i = 0; i < e; ++i) bpv.val().v[static_cast<std::size_t>(i)] = token[static_cast<std::size_t>(i)];
    };
    copy_path("s1.mca.wk_f", "s1.mca.bk_f", "s1.mca.wk_p", "s1.mca.bk_p", fbank);
    copy_path("s1.mca.wv_f", "s1.mca.bv_f", "s1.mca.wv_p", "s1.mca.bv_p", fbank);
    auto g_same = model.mca_gain(0, btl, fbank, prov);
    // Attention over two identical tokens must equal attention weight-free
    // value projection; verify by scaling the queries (weights change, the
    // convex combination does not).
    auto wq = model.params().get("s1.mca.wq");
    for (auto& vq : wq.val().v) vq *= 3.f;
    auto g_scaled = model.mca_gain(0, btl, fbank, prov);
    for (std::size_t i = 0; i < g_same.val().v.size(); ++i)
      CHECK(g_same.val().v[i] == doctest::Approx(g_scaled.val().v[i]).epsilon(1e-4));
  }
}

TEST_CASE("local speaker features: shapes and mixture independence") {
  auto cfg = tiny_config(Variant::gftnn_pse);
  TdpfModel<float> model(cfg, 19);
  auto enroll = random_grid<float>(1, 9, 161, 31);
  auto feats = model.local_speaker_features(0, enroll, 100);
  CHECK(feats.cond.shape() == std::vector<int>{161});
  auto sizes = TdpfModel<float>::encoder_freq_sizes(cfg.stages[0]);
  REQUIRE(feats.layer_maps.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(feats.layer_maps[k].re.shape() ==
          std::vector<int>({cfg.stages[0].width, 100, sizes[k + 1]}));
  }
  // Same enrollment, different frame budget: identical per-frame content.
  auto feats2 = model.local_speaker_features(0, enroll, 100);
  CHECK(feats.cond.val().v == feats2.cond.val().v);
  for (int k = 0; k < 4; ++k)
    CHECK(feats.layer_maps[k].re.val().v == feats2.layer_maps[k].re.val().v);

  // Temporal average invariance: one frame vs that frame repeated.
  Tensor<float> re1({1, 1, 161}), im1({1, 1, 161});
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int f = 0; f < 161; ++f) {
    re1.at(0, 0, f) = static_cast<float>(u(rng));
    im1.at(0, 0, f) = static_cast<float>(u(rng));
  }
  Tensor<float> re100({1, 100, 161}), im100({1, 100, 161});
  for (int t = 0; t < 100; ++t)
    for (int f = 0; f < 161; ++f) {
      re100.at(0, t, f) = re1.at(0, 0, f);
      im100.at(0, t, f) = im1.at(0, 0, f);
    }
  ComplexGrid<float> e1{constant<float>(std::move(re1)), constant<float>(std::move(im1))};
  ComplexGrid<float> e100{constant<float>(std::move(re100)), constant<float>(std::move(im100))};
  auto f1 = model.local_speaker_features(0, e1, 10);
  auto f100 = model.local_speaker_features(0, e100, 10);
  for (int f = 0; f < 161; ++f)
    CHECK(f1.cond.val().v[f] == doctest::Approx(f100.cond.val().v[f]).epsilon(1e-4));
}

TEST_CASE("mask head forced to unity reproduces the error spectrum") {
  auto cfg = tiny_config(Variant::gftnn_aec);
  TdpfModel<float> model(cfg, 23);
  // Final decoder layer: content -> constant (20, 0), gate -> fully open.
  const int w = cfg.stages[0].width;
  (void)w;
  for (const char* nm : {"s1.dec4.c.wr", "s1.dec4.c.wi", "s1.dec4.g.wr",
                         "s1.dec4.g.wi"}) {
    auto p = model.params().get(nm);
    std::fill(p.val().v.begin(), p.val().v.end(), 0.f);
  }
  auto set1 = [&](const char* nm, float v) {
    auto p = model.params().get(nm);
    std::fill(p.val().v.begin(), p.val().v.end(), v);
  };
  set1("s1.dec4.c.br", 20.f);
  set1("s1.dec4.c.bi", 0.f);
  set1("s1.dec4.g.br", 1000.f);
  set1("s1.dec4.g.bi", 1000.f);

  auto d = random_grid<float>(1, 5, 161, 51);
  auto e = random_grid<float>(1, 5, 161, 52);
  auto y = random_grid<float>(1, 5, 161, 53);
  auto fwd = model.forward(d, e, y, nullptr);
  for (std::size_t i = 0; i < e.re.val().v.size(); ++i) {
    CHECK(fwd.s2.re.val().v[i] == e.re.val().v[i]);
    CHECK(fwd.s2.im.val().v[i] == e.im.val().v[i]);
  }
}

TEST_CASE("conditioning errors") {
  auto cfg = tiny_config(Variant::tdpf2);
  TdpfModel<float> model(cfg, 29);
  auto d = random_grid<float>(1, 4, 161, 61);
  auto e = random_grid<float>(1, 4, 161, 62);
  auto y = random_grid<float>(1, 4, 161, 63);
  CHECK_THROWS_AS(model.forward(d, e, y, nullptr), ConditioningError);
}

TEST_CASE("model-level gradient sanity: sampled parameters vs finite differences") {
  // Double-precision twin of the network at small width; PLCPA loss on a
  // 5-frame input, 1% of parameters (at least 60) sampled across layers.
  auto cfg = tiny_config(Variant::tdpf2);
  TdpfModel<double> model(cfg, 31);
  auto d = random_grid<double>(1, 5, 161, 71);
  auto e = random_grid<double>(1, 5, 161, 72);
  auto y = random_grid<double>(1, 5, 161, 73);
  auto spk = random_speaker<double>(6, 161, 74);
  auto target_s = random_grid<double>(1, 5, 161, 75);
  auto target_y = random_grid<double>(1, 5, 161, 76);

  auto loss_value = [&]() -> Var<double> {
    auto fwd = model.forward(d, e, y, &spk);
    TrainTargets<double> tg;
    tg.s_c = target_s;
    tg.y_c = target_y;
    return variant_loss<double>(Variant::tdpf2, fwd, tg).total;
  };

  std::map<std::string, Tensor<double>> analytic;
  {
    Tape<double> tape;
    auto loss = loss_value();
    tape.backward(loss.n);
    for (auto& [name, node] : model.params().all())
      if (!node->grad.v.empty()) analytic[name] = node->grad;
  }

  std::mt19937_64 rng(77);
  int checked = 0, failures = 0;
  for (auto& [name, node] : model.params().all()) {
    if (analytic.count(name) == 0) continue;
    // one sampled entry per parameter tensor
    std::uniform_int_distribution<std::size_t> pick(0, node->val.numel() - 1);
    const std::size_t idx = pick(rng);
    const double x0 = node->val.v[idx];
    const double h = std::max(1e-6, 1e-4 * std::abs(x0));
    node->val.v[idx] = x0 + h;
    const double lp = loss_value().val().v[0];
    node->val.v[idx] = x0 - h;
    const double lm = loss_value().val().v[0];
    node->val.v[idx] = x0;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = analytic[name].v[idx];
    const double rel =
        std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    ++checked;
    // Sub-1e-9 differences are below central-difference resolution here.
    if (rel >= 1e-3 && std::abs(fd - an) >= 1e-9) {
      ++failures;
      MESSAGE("grad mismatch at " << name << "[" << idx << "]: fd=" << fd
                                  << " an=" << an << " rel=" << rel);
    }
  }
  CHECK(checked > 60);
  CHECK(failures == 0);
}

TEST_CASE("checkpoint round-trip with prefix remap") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "paec_ckpt_test";
  fs::remove_all(dir);

  auto cfg = tiny_config(Variant::gftnn_pse);
  TdpfModel<float> model(cfg, 37);
  Checkpoint ck;
  ck.cfg = cfg;
  ck.weights = snapshot_weights(model);
  ck.step = 123;
  ck.adam_t = 456;
  ck.task = "pse";
  save_checkpoint((dir / "ck").string(), ck);
  CHECK(checkpoint_exists((dir / "ck").string()));

  auto back = load_checkpoint((dir / "ck").string());
  CHECK(back.step == 123);
  CHECK(back.adam_t == 456);
  CHECK(back.task == "pse");
  CHECK(back.weights.size() == ck.weights.size());
  CHECK(back.cfg.stages[0].width == cfg.stages[0].width);

  // Load the single-stage weights into stage 2 of a TDPF model.
  auto cfg2 = tiny_config(Variant::tdpf2);
  TdpfModel<float> two(cfg2, 41);
  apply_weights(two, back.weights, "s1", "s2");
  auto w_src = back.weights.at("s1.enc1.c.wr");
  auto w_dst = two.params().get("s2.enc1.c.wr");
  CHECK(std::equal(w_src.begin(), w_src.end(), w_dst.val().v.begin()));
  fs::remove_all(dir);
}
