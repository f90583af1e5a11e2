#include "paec/model.hpp"

#include <cmath>
#include <random>

#include "paec/errors.hpp"
#include "paec/speaker.hpp"

namespace paec {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::gftnn_aec: return "gftnn_aec";
    case Variant::gftnn_pse: return "gftnn_pse";
    case Variant::gftnn_l: return "gftnn_l";
    case Variant::tdpf1: return "tdpf1";
    case Variant::tdpf2: return "tdpf2";
    case Variant::tdpf3: return "tdpf3";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "gftnn_aec") return Variant::gftnn_aec;
  if (s == "gftnn_pse") return Variant::gftnn_pse;
  if (s == "gftnn_l") return Variant::gftnn_l;
  if (s == "tdpf1") return Variant::tdpf1;
  if (s == "tdpf2") return Variant::tdpf2;
  if (s == "tdpf3") return Variant::tdpf3;
  throw ParamError("unknown variant '" + s +
                   "' (expected gftnn_aec, gftnn_pse, gftnn_l, tdpf1, tdpf2, tdpf3)");
}

ModelVariantConfig default_variant_config(Variant v, int tdpf_width,
                                          int large_width) {
  ModelVariantConfig cfg;
  cfg.variant = v;
  StageConfig base;
  base.width = tdpf_width;
  switch (v) {
    case Variant::gftnn_aec: {
      // Structure of TDPF-3 stage 1: echo + noise suppression, masking head.
      base.in_channels = 3;
      base.speaker_conditioning = false;
      base.output_mode = OutputMode::mask;
      cfg.stages = {base};
      break;
    }
    case Variant::gftnn_pse: {
      // Structure of TDPF-2 stage 2.
      base.in_channels = 4;
      base.speaker_conditioning = true;
      base.output_mode = OutputMode::mask;
      cfg.stages = {base};
      break;
    }
    case Variant::gftnn_l: {
      base.width = large_width;
      base.in_channels = 4;
      base.speaker_conditioning = true;
      base.output_mode = OutputMode::mask;
      cfg.stages = {base};
      break;
    }
    case Variant::tdpf1:
    case Variant::tdpf2:
    case Variant::tdpf3: {
      StageConfig s1 = base;
      s1.in_channels = 3;
      s1.speaker_conditioning = false;
      // TDPF-2 stage 1 maps the echo spectrum directly; speech-producing
      // first stages mask the error spectrum. TDPF-1's intermediate is
      // unconstrained, so it keeps the unbounded mapping head.
      s1.output_mode = v == Variant::tdpf3 ? OutputMode::mask : OutputMode::map;
      StageConfig s2 = base;
      s2.in_channels = 4; // d, e, s1-hat, conditioning channel
      s2.speaker_conditioning = true;
      s2.output_mode = OutputMode::mask;
      cfg.stages = {s1, s2};
      break;
    }
  }
  return cfg;
}

// ---------------------------------------------------------------- params

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

} // namespace

template <class S>
Var<S> ParamStore<S>::make(const std::string& name, std::vector<int> shape,
                           Init init) {
  if (params_.count(name) != 0)
    throw ParamError("param store: duplicate parameter " + name);
  Tensor<S> t(shape);
  std::mt19937_64 rng(fnv1a(name) ^ seed_);
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      for (auto& v : t.v) v = S(1);
      break;
    case Init::lstm_bias: {
      // Forget-gate bias starts at one.
      const int h = shape[0] / 4;
      for (int j = h; j < 2 * h; ++j) t.v[static_cast<std::size_t>(j)] = S(1);
      break;
    }
    case Init::xavier: {
      const int fan_out = shape[0];
      const int fan_in = shape.size() > 1 ? shape[1] : shape[0];
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (auto& v : t.v) v = static_cast<S>(u(rng));
      break;
    }
  }
  auto var = parameter<S>(std::move(t));
  params_[name] = var.n;
  return var;
}

template <class S>
Var<S> ParamStore<S>::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ParamError("param store: missing " + name);
  return Var<S>(it->second);
}

template <class S>
std::size_t ParamStore<S>::total_params() const {
  std::size_t n = 0;
  for (const auto& [name, node] : params_) n += node->val.numel();
  return n;
}

template <class S>
void ParamStore<S>::zero_grads() {
  for (auto& [name, node] : params_)
    if (!node->grad.v.empty())
      std::fill(node->grad.v.begin(), node->grad.v.end(), S(0));
}

// ------------------------------------------------------------ grid utils

template <class S>
ComplexGrid<S> grid_from_spec(const CompressedSpectrogram& c) {
  const int t = c.grid.n_frames;
  const int f = c.grid.n_bins();
  Tensor<S> re({1, t, f}), im({1, t, f});
  for (int tt = 0; tt < t; ++tt)
    for (int k = 0; k < f; ++k) {
      re.at(0, tt, k) = static_cast<S>(c.grid.at(tt, k).real());
      im.at(0, tt, k) = static_cast<S>(c.grid.at(tt, k).imag());
    }
  return {constant<S>(std::move(re)), constant<S>(std::move(im))};
}

template <class S>
CompressedSpectrogram spec_from_grid(const ComplexGrid<S>& g, double exponent,
                                     const StftConfig& cfg) {
  const auto& re = g.re.val();
  const int t = re.shape[1], f = re.shape[2];
  CompressedSpectrogram out;
  out.exponent = exponent;
  out.grid.cfg = cfg;
  out.grid.n_frames = t;
  out.grid.bins.assign(static_cast<std::size_t>(t) * f, {});
  const auto& im = g.im.val();
  for (int tt = 0; tt < t; ++tt)
    for (int k = 0; k < f; ++k)
      out.grid.at(tt, k) = {static_cast<double>(re.at(0, tt, k)),
                            static_cast<double>(im.at(0, tt, k))};
  return out;
}

// ------------------------------------------------------------- the model

namespace {

template <class S>
Var<S> zeros_const(std::vector<int> shape) {
  return constant<S>(Tensor<S>(std::move(shape)));
}

// Complex gated conv parameters for one branch (content or gate).
struct BranchNames {
  std::string wr, wi, br, bi;
};

BranchNames branch(const std::string& prefix) {
  return {prefix + ".wr", prefix + ".wi", prefix + ".br", prefix + ".bi"};
}

template <class S>
ComplexGrid<S> cconv_enc(ParamStore<S>& ps, const std::string& prefix,
                         const ComplexGrid<S>& x) {
  const auto c = branch(prefix);
  auto wr = ps.get(c.wr), wi = ps.get(c.wi), br = ps.get(c.br), bi = ps.get(c.bi);
  const int o = wr.shape()[0];
  auto zb = zeros_const<S>({o});
  auto rr = conv_enc(x.re, wr, br);
  auto ii = conv_enc(x.im, wi, zb);
  auto ri = conv_enc(x.re, wi, bi);
  auto ir = conv_enc(x.im, wr, zb);
  return {sub(rr, ii), add(ri, ir)};
}

template <class S>
ComplexGrid<S> cconv_dec(ParamStore<S>& ps, const std::string& prefix,
                         const ComplexGrid<S>& x, int f_out) {
  const auto c = branch(prefix);
  auto wr = ps.get(c.wr), wi = ps.get(c.wi), br = ps.get(c.br), bi = ps.get(c.bi);
  const int o = wr.shape()[1] / 6;
  auto zb = zeros_const<S>({o});
  auto rr = conv_dec(x.re, wr, br, f_out);
  auto ii = conv_dec(x.im, wi, zb, f_out);
  auto ri = conv_dec(x.re, wi, bi, f_out);
  auto ir = conv_dec(x.im, wr, zb, f_out);
  return {sub(rr, ii), add(ri, ir)};
}

// out = content (*) sigmoid(gate), per plane.
template <class S>
ComplexGrid<S> gated_enc(ParamStore<S>& ps, const std::string& prefix,
                         const ComplexGrid<S>& x) {
  auto content = cconv_enc(ps, prefix + ".c", x);
  auto gate = cconv_enc(ps, prefix + ".g", x);
  return {mul(content.re, sigmoid(gate.re)), mul(content.im, sigmoid(gate.im))};
}

template <class S>
ComplexGrid<S> gated_dec(ParamStore<S>& ps, const std::string& prefix,
                         const ComplexGrid<S>& x, int f_out) {
  auto content = cconv_dec(ps, prefix + ".c", x, f_out);
  auto gate = cconv_dec(ps, prefix + ".g", x, f_out);
  return {mul(content.re, sigmoid(gate.re)), mul(content.im, sigmoid(gate.im))};
}

// (C,T,F) -> (T*F, C) rows.
template <class S>
Var<S> flatten_tf(const Var<S>& x) {
  const int c = x.shape()[0], t = x.shape()[1], f = x.shape()[2];
  return reshape(permute3(x, {1, 2, 0}), {t * f, c});
}

// (T*F, O) rows -> (O,T,F).
template <class S>
Var<S> unflatten_tf(const Var<S>& x, int t, int f) {
  const int o = x.shape()[1];
  return permute3(reshape(x, {t, f, o}), {2, 0, 1});
}

// Complex linear y = x * W^T + b on row-flattened features.
template <class S>
ComplexGrid<S> clinear_rows(ParamStore<S>& ps, const std::string& prefix,
                            const Var<S>& xr, const Var<S>& xi) {
  auto wr = ps.get(prefix + ".wr"), wi = ps.get(prefix + ".wi");
  auto br = ps.get(prefix + ".br"), bi = ps.get(prefix + ".bi");
  auto yr = add_bias_cols(sub(matmul(xr, wr, false, true), matmul(xi, wi, false, true)), br);
  auto yi = add_bias_cols(add(matmul(xr, wi, false, true), matmul(xi, wr, false, true)), bi);
  return {yr, yi};
}

// Complex 1x1 conv over channels (skip paths).
template <class S>
ComplexGrid<S> pointwise_complex(ParamStore<S>& ps, const std::string& prefix,
                                 const ComplexGrid<S>& x) {
  const int t = x.re.shape()[1], f = x.re.shape()[2];
  auto fr = flatten_tf(x.re);
  auto fi = flatten_tf(x.im);
  auto y = clinear_rows(ps, prefix, fr, fi);
  return {unflatten_tf(y.re, t, f), unflatten_tf(y.im, t, f)};
}

// DCCRN complex LSTM: out_r = L_r(x_r) - L_i(x_i), out_i = L_r(x_i) + L_i(x_r).
template <class S>
ComplexGrid<S> clstm(ParamStore<S>& ps, const std::string& prefix,
                     const ComplexGrid<S>& x, bool reverse) {
  auto wih_r = ps.get(prefix + ".re.w_ih"), whh_r = ps.get(prefix + ".re.w_hh"),
       b_r = ps.get(prefix + ".re.b");
  auto wih_i = ps.get(prefix + ".im.w_ih"), whh_i = ps.get(prefix + ".im.w_hh"),
       b_i = ps.get(prefix + ".im.b");
  auto rr = lstm_seq(x.re, wih_r, whh_r, b_r, reverse);
  auto ii = lstm_seq(x.im, wih_i, whh_i, b_i, reverse);
  auto ri = lstm_seq(x.im, wih_r, whh_r, b_r, reverse);
  auto ir = lstm_seq(x.re, wih_i, whh_i, b_i, reverse);
  return {sub(rr, ii), add(ri, ir)};
}

// Concatenate two (B,T,H) tensors along H.
template <class S>
Var<S> cat_last(const Var<S>& a, const Var<S>& b) {
  auto pa = permute3(a, {2, 0, 1});
  auto pb = permute3(b, {2, 0, 1});
  auto c = concat_ch(std::vector<Var<S>>{pa, pb});
  return permute3(c, {1, 2, 0});
}

} // namespace

template <class S>
std::vector<int> TdpfModel<S>::encoder_freq_sizes(const StageConfig& sc) {
  std::vector<int> sizes{sc.n_bins};
  for (int k = 0; k < sc.n_layers; ++k)
    sizes.push_back(conv_enc_f_out(sizes.back()));
  return sizes;
}

template <class S>
TdpfModel<S>::TdpfModel(const ModelVariantConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg), params_(init_seed) {
  if (cfg_.stages.empty() || cfg_.stages.size() > 2)
    throw ParamError("model: expected 1 or 2 stages");
  for (std::size_t si = 0; si < cfg_.stages.size(); ++si) {
    const StageConfig& sc = cfg_.stages[si];
    const std::string sp = "s" + std::to_string(si + 1);
    const int w = sc.width;
    const int h = sc.ftlstm_hidden;
    // Encoder / decoder / skips.
    for (int k = 0; k < sc.n_layers; ++k) {
      const int in_c = k == 0 ? sc.in_channels : w;
      for (const char* br : {".c", ".g"}) {
        const std::string p = sp + ".enc" + std::to_string(k) + br;
        params_.make(p + ".wr", {w, in_c * 6}, Init::xavier);
        params_.make(p + ".wi", {w, in_c * 6}, Init::xavier);
        params_.make(p + ".br", {w}, Init::zeros);
        params_.make(p + ".bi", {w}, Init::zeros);
      }
      const int out_c = k == sc.n_layers - 1 ? 1 : w;
      for (const char* br : {".c", ".g"}) {
        const std::string p = sp + ".dec" + std::to_string(k) + br;
        params_.make(p + ".wr", {w, out_c * 6}, Init::xavier);
        params_.make(p + ".wi", {w, out_c * 6}, Init::xavier);
        params_.make(p + ".br", {out_c}, Init::zeros);
        params_.make(p + ".bi", {out_c}, Init::zeros);
      }
      const std::string p = sp + ".skip" + std::to_string(k);
      params_.make(p + ".wr", {w, w}, Init::xavier);
      params_.make(p + ".wi", {w, w}, Init::xavier);
      params_.make(p + ".br", {w}, Init::zeros);
      params_.make(p + ".bi", {w}, Init::zeros);
    }
    // F-T-LSTM.
    for (const char* dir : {".fwd", ".bwd"})
      for (const char* pl : {".re", ".im"}) {
        const std::string p = sp + ".flstm" + std::string(dir) + pl;
        params_.make(p + ".w_ih", {4 * h, w}, Init::xavier);
        params_.make(p + ".w_hh", {4 * h, h}, Init::xavier);
        params_.make(p + ".b", {4 * h}, Init::lstm_bias);
      }
    params_.make(sp + ".fproj.wr", {w, 2 * h}, Init::xavier);
    params_.make(sp + ".fproj.wi", {w, 2 * h}, Init::xavier);
    params_.make(sp + ".fproj.br", {w}, Init::zeros);
    params_.make(sp + ".fproj.bi", {w}, Init::zeros);
    for (const char* pl : {".re", ".im"}) {
      const std::string p = sp + ".tlstm" + std::string(pl);
      params_.make(p + ".w_ih", {4 * h, w}, Init::xavier);
      params_.make(p + ".w_hh", {4 * h, h}, Init::xavier);
      params_.make(p + ".b", {4 * h}, Init::lstm_bias);
    }
    params_.make(sp + ".tproj.wr", {w, h}, Init::xavier);
    params_.make(sp + ".tproj.wi", {w, h}, Init::xavier);
    params_.make(sp + ".tproj.br", {w}, Init::zeros);
    params_.make(sp + ".tproj.bi", {w}, Init::zeros);

    if (sc.speaker_conditioning) {
      // Parallel speaker encoder mirroring encoder layers 1-4.
      for (int k = 0; k < 4; ++k) {
        const int in_c = k == 0 ? 1 : w;
        for (const char* br : {".c", ".g"}) {
          const std::string p = sp + ".spkenc" + std::to_string(k) + br;
          params_.make(p + ".wr", {w, in_c * 6}, Init::xavier);
          params_.make(p + ".wi", {w, in_c * 6}, Init::xavier);
          params_.make(p + ".br", {w}, Init::zeros);
          params_.make(p + ".bi", {w}, Init::zeros);
        }
      }
      // Enrollment frequency Bi-LSTM (real-valued, input = re/im pair).
      const int sh = sc.spk_bilstm_hidden;
      for (const char* dir : {".fwd", ".bwd"}) {
        const std::string p = sp + ".enroll" + std::string(dir);
        params_.make(p + ".w_ih", {4 * sh, 2}, Init::xavier);
        params_.make(p + ".w_hh", {4 * sh, sh}, Init::xavier);
        params_.make(p + ".b", {4 * sh}, Init::lstm_bias);
      }
      params_.make(sp + ".enroll.fc.w", {1, 2 * sh}, Init::xavier);
      params_.make(sp + ".enroll.fc.b", {1}, Init::zeros);
      // Multi-head cross-attention.
      const int e = sc.mca_dim;
      const auto sizes = encoder_freq_sizes(sc);
      const int f_btl = sizes.back();
      const int dq = 2 * w * f_btl;
      params_.make(sp + ".mca.wq", {e, dq}, Init::xavier);
      params_.make(sp + ".mca.bq", {e}, Init::zeros);
      params_.make(sp + ".mca.wk_f", {e, 160}, Init::xavier);
      params_.make(sp + ".mca.bk_f", {e}, Init::zeros);
      params_.make(sp + ".mca.wk_p", {e, 256}, Init::xavier);
      params_.make(sp + ".mca.bk_p", {e}, Init::zeros);
      params_.make(sp + ".mca.wv_f", {e, 160}, Init::xavier);
      params_.make(sp + ".mca.bv_f", {e}, Init::zeros);
      params_.make(sp + ".mca.wv_p", {e, 256}, Init::xavier);
      params_.make(sp + ".mca.bv_p", {e}, Init::zeros);
      params_.make(sp + ".mca.wo", {w * f_btl, e}, Init::xavier);
      // Unity gain at initialization.
      params_.make(sp + ".mca.bo", {w * f_btl}, Init::ones);
    }
  }
}

template <class S>
LocalSpeakerFeatures<S> TdpfModel<S>::local_speaker_features(
    int stage, const ComplexGrid<S>& enroll, int t_frames) {
  const StageConfig& sc = cfg_.stages[static_cast<std::size_t>(stage)];
  if (!sc.speaker_conditioning)
    throw ConditioningError("local_speaker_features: stage has no speaker path");
  if (enroll.re.shape()[1] < 1)
    throw DurationError("local_speaker_features: empty enrollment");
  const std::string sp = "s" + std::to_string(stage + 1);

  // (2, Te, F) -> sequences over frequency, batch = enrollment frames.
  auto planes = concat_ch(std::vector<Var<S>>{enroll.re, enroll.im});
  auto seq = permute3(planes, {1, 2, 0}); // (Te, F, 2)
  auto fwd = lstm_seq(seq, params_.get(sp + ".enroll.fwd.w_ih"),
                      params_.get(sp + ".enroll.fwd.w_hh"),
                      params_.get(sp + ".enroll.fwd.b"), false);
  auto bwd = lstm_seq(seq, params_.get(sp + ".enroll.bwd.w_ih"),
                      params_.get(sp + ".enroll.bwd.w_hh"),
                      params_.get(sp + ".enroll.bwd.b"), true);
  auto both = cat_last(fwd, bwd);     // (Te, F, 2*sh)
  auto avg = mean_axis0(both);        // (F, 2*sh)
  auto cond2d = add_bias_cols(matmul(avg, params_.get(sp + ".enroll.fc.w"),
                                     false, true),
                              params_.get(sp + ".enroll.fc.b")); // (F,1)
  auto cond = reshape(cond2d, {sc.n_bins});

  // The conditioning grid is constant over time, so the causal conv chain
  // settles after n_layers frames; compute a short prefix and repeat.
  const int t_small = t_frames < 6 ? t_frames : 6;
  ComplexGrid<S> x{tile_time(cond, t_small),
                   zeros_const<S>({1, t_small, sc.n_bins})};
  LocalSpeakerFeatures<S> out;
  out.cond = cond;
  for (int k = 0; k < 4; ++k) {
    x = gated_enc(params_, sp + ".spkenc" + std::to_string(k), x);
    ComplexGrid<S> map = x;
    if (t_frames > t_small)
      map = {repeat_tail_time(map.re, t_frames), repeat_tail_time(map.im, t_frames)};
    out.layer_maps.push_back(map);
  }
  return out;
}

template <class S>
Var<S> TdpfModel<S>::mca_gain(int stage, const ComplexGrid<S>& bottleneck,
                              const Var<S>& fbank, const Var<S>& provider) {
  const StageConfig& sc = cfg_.stages[static_cast<std::size_t>(stage)];
  const std::string sp = "s" + std::to_string(stage + 1);
  const int w = bottleneck.re.shape()[0];
  const int t = bottleneck.re.shape()[1];
  const int f = bottleneck.re.shape()[2];
  const int e = sc.mca_dim;
  const int heads = sc.mca_heads;
  const int hd = e / heads;

  // Queries from the flattened complex bottleneck, one per frame.
  auto qin = reshape(permute3(concat_ch(std::vector<Var<S>>{bottleneck.re,
                                                            bottleneck.im}),
                              {1, 0, 2}),
                     {t, 2 * w * f});
  auto q = add_bias_cols(matmul(qin, params_.get(sp + ".mca.wq"), false, true),
                         params_.get(sp + ".mca.bq")); // (T,E)
  // Two tokens: FBank statistics and the provider embedding.
  auto kf = add_bias_cols(matmul(fbank, params_.get(sp + ".mca.wk_f"), false, true),
                          params_.get(sp + ".mca.bk_f")); // (1,E)
  auto kp = add_bias_cols(matmul(provider, params_.get(sp + ".mca.wk_p"), false, true),
                          params_.get(sp + ".mca.bk_p"));
  auto vf = add_bias_cols(matmul(fbank, params_.get(sp + ".mca.wv_f"), false, true),
                          params_.get(sp + ".mca.bv_f"));
  auto vp = add_bias_cols(matmul(provider, params_.get(sp + ".mca.wv_p"), false, true),
                          params_.get(sp + ".mca.bv_p"));
  auto keys = reshape(concat_ch(std::vector<Var<S>>{reshape(kf, {1, 1, e}),
                                                    reshape(kp, {1, 1, e})}),
                      {2, e});
  auto vals = reshape(concat_ch(std::vector<Var<S>>{reshape(vf, {1, 1, e}),
                                                    reshape(vp, {1, 1, e})}),
                      {2, e});

  std::vector<Var<S>> head_outs;
  const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));
  for (int hh = 0; hh < heads; ++hh) {
    auto qh = slice_cols(q, hh * hd, (hh + 1) * hd);
    auto kh = slice_cols(keys, hh * hd, (hh + 1) * hd);
    auto vh = slice_cols(vals, hh * hd, (hh + 1) * hd);
    auto scores = scale(matmul(qh, kh, false, true), inv_sqrt); // (T,2)
    auto attn = softmax_rows(scores);
    head_outs.push_back(matmul(attn, vh)); // (T,hd)
  }
  auto ctx = concat_cols(head_outs); // (T,E)
  auto gains = add_bias_cols(matmul(ctx, params_.get(sp + ".mca.wo"), false, true),
                             params_.get(sp + ".mca.bo")); // (T, W*F)
  return frames_to_ctf(gains, w, f);
}

template <class S>
ComplexGrid<S> TdpfModel<S>::stage_forward(int stage, const ComplexGrid<S>& input,
                                           const ComplexGrid<S>& err_spec,
                                           const SpeakerInputs<S>* spk,
                                           const LocalSpeakerFeatures<S>* local) {
  const StageConfig& sc = cfg_.stages[static_cast<std::size_t>(stage)];
  const std::string sp = "s" + std::to_string(stage + 1);
  const auto sizes = encoder_freq_sizes(sc);
  const int t = input.re.shape()[1];

  if (sc.speaker_conditioning && (spk == nullptr || local == nullptr))
    throw ConditioningError("stage_forward: speaker conditioning required but "
                            "no enrollment features given");

  ComplexGrid<S> x = input;
  std::vector<ComplexGrid<S>> enc_outs;
  for (int k = 0; k < sc.n_layers; ++k) {
    x = gated_enc(params_, sp + ".enc" + std::to_string(k), x);
    if (sc.speaker_conditioning && k < 4) {
      x = {add(x.re, local->layer_maps[static_cast<std::size_t>(k)].re),
           add(x.im, local->layer_maps[static_cast<std::size_t>(k)].im)};
    }
    enc_outs.push_back(x);
  }

  if (sc.speaker_conditioning) {
    auto gain = mca_gain(stage, x, spk->fbank, spk->provider);
    x = {mul(x.re, gain), mul(x.im, gain)};
  }

  // F-T-LSTM with residual connections around each recurrence.
  {
    auto seq = ComplexGrid<S>{permute3(x.re, {1, 2, 0}), permute3(x.im, {1, 2, 0})};
    auto fwd = clstm(params_, sp + ".flstm.fwd", seq, false);
    auto bwd = clstm(params_, sp + ".flstm.bwd", seq, true);
    auto cr = cat_last(fwd.re, bwd.re); // (T,Fb,2H)
    auto ci = cat_last(fwd.im, bwd.im);
    const int fb = sizes.back();
    auto proj = clinear_rows(params_, sp + ".fproj",
                             reshape(cr, {t * fb, 2 * sc.ftlstm_hidden}),
                             reshape(ci, {t * fb, 2 * sc.ftlstm_hidden}));
    auto pr = permute3(reshape(proj.re, {t, fb, sc.width}), {2, 0, 1});
    auto pi = permute3(reshape(proj.im, {t, fb, sc.width}), {2, 0, 1});
    x = {add(x.re, pr), add(x.im, pi)};

    auto tseq = ComplexGrid<S>{permute3(x.re, {2, 1, 0}), permute3(x.im, {2, 1, 0})};
    auto tl = clstm(params_, sp + ".tlstm", tseq, false); // (Fb,T,H)
    auto tproj = clinear_rows(params_, sp + ".tproj",
                              reshape(tl.re, {fb * t, sc.ftlstm_hidden}),
                              reshape(tl.im, {fb * t, sc.ftlstm_hidden}));
    auto tr = permute3(reshape(tproj.re, {fb, t, sc.width}), {2, 1, 0});
    auto ti = permute3(reshape(tproj.im, {fb, t, sc.width}), {2, 1, 0});
    x = {add(x.re, tr), add(x.im, ti)};
  }

  // Decoder: skip from encoder layer (n-1-j) enters the layer-j input.
  for (int j = 0; j < sc.n_layers; ++j) {
    const int src = sc.n_layers - 1 - j;
    auto skip = pointwise_complex(params_, sp + ".skip" + std::to_string(src),
                                  enc_outs[static_cast<std::size_t>(src)]);
    x = {add(x.re, skip.re), add(x.im, skip.im)};
    const int f_out = sizes[static_cast<std::size_t>(sc.n_layers - 1 - j)];
    x = gated_dec(params_, sp + ".dec" + std::to_string(j), x, f_out);
  }

  if (sc.output_mode == OutputMode::map) return x;

  // Bounded complex mask applied to the error spectrum: magnitude squashed
  // through tanh, phase preserved.
  auto mag = sqrt_eps(add(square(x.re), square(x.im)), S(1e-12));
  auto ratio = div(tanh_op(mag), mag);
  auto mr = mul(x.re, ratio);
  auto mi = mul(x.im, ratio);
  auto out_r = sub(mul(mr, err_spec.re), mul(mi, err_spec.im));
  auto out_i = add(mul(mr, err_spec.im), mul(mi, err_spec.re));
  return {out_r, out_i};
}

template <class S>
typename TdpfModel<S>::Forward TdpfModel<S>::forward(const ComplexGrid<S>& d,
                                                     const ComplexGrid<S>& e,
                                                     const ComplexGrid<S>& y,
                                                     const SpeakerInputs<S>* spk) {
  const auto& shape = d.re.shape();
  for (const auto* g : {&e, &y})
    if (g->re.shape() != shape)
      throw ShapeError("forward: input spectra must share a shape");

  Forward out;
  if (cfg_.two_stage()) {
    auto in1 = ComplexGrid<S>{concat_ch(std::vector<Var<S>>{d.re, e.re, y.re}),
                              concat_ch(std::vector<Var<S>>{d.im, e.im, y.im})};
    out.s1 = stage_forward(0, in1, e, nullptr, nullptr);
    if (spk == nullptr)
      throw ConditioningError("forward: two-stage variants need enrollment");
    const int t = shape[1], f = shape[2];
    auto local = local_speaker_features(1, spk->enrollment, t);
    auto cond_re = tile_time(local.cond, t);
    auto cond_im = zeros_const<S>({1, t, f});
    auto in2 = ComplexGrid<S>{
        concat_ch(std::vector<Var<S>>{d.re, e.re, out.s1.re, cond_re}),
        concat_ch(std::vector<Var<S>>{d.im, e.im, out.s1.im, cond_im})};
    out.s2 = stage_forward(1, in2, e, spk, &local);
  } else {
    const StageConfig& sc = cfg_.stages[0];
    if (sc.speaker_conditioning) {
      if (spk == nullptr)
        throw ConditioningError("forward: personalized variant needs enrollment");
      const int t = shape[1], f = shape[2];
      auto local = local_speaker_features(0, spk->enrollment, t);
      auto cond_re = tile_time(local.cond, t);
      auto cond_im = zeros_const<S>({1, t, f});
      auto in = ComplexGrid<S>{
          concat_ch(std::vector<Var<S>>{d.re, e.re, y.re, cond_re}),
          concat_ch(std::vector<Var<S>>{d.im, e.im, y.im, cond_im})};
      out.s2 = stage_forward(0, in, e, spk, &local);
    } else {
      auto in = ComplexGrid<S>{concat_ch(std::vector<Var<S>>{d.re, e.re, y.re}),
                               concat_ch(std::vector<Var<S>>{d.im, e.im, y.im})};
      out.s2 = stage_forward(0, in, e, nullptr, nullptr);
    }
  }
  return out;
}

std::size_t count_params(const ModelVariantConfig& cfg) {
  TdpfModel<float> probe(cfg, 0);
  return probe.params().total_params();
}

// -------------------------------------------------------------- pipeline

template <class S>
SpeakerInputs<S> make_speaker_inputs(const Waveform& enrollment,
                                     const std::vector<double>& provider_emb) {
  if (provider_emb.size() != 256)
    throw ProviderError("make_speaker_inputs: provider embedding must be 256-d");
  SpeakerInputs<S> out;
  out.enrollment = grid_from_spec<S>(power_compress(stft(enrollment), 0.5));
  const auto stats = compute_fbank_stats(enrollment);
  Tensor<S> fb({1, 160});
  for (int i = 0; i < 160; ++i) fb.v[static_cast<std::size_t>(i)] = static_cast<S>(stats.v[i]);
  Tensor<S> pv({1, 256});
  for (int i = 0; i < 256; ++i) pv.v[static_cast<std::size_t>(i)] = static_cast<S>(provider_emb[i]);
  out.fbank = constant<S>(std::move(fb));
  out.provider = constant<S>(std::move(pv));
  return out;
}

template <class S>
Waveform model_forward(TdpfModel<S>& model, const Waveform& d, const Waveform& e,
                       const Waveform& y, const SpeakerInputs<S>* spk,
                       StageOutput* intermediates) {
  if (d.size() != e.size() || d.size() != y.size())
    throw ShapeError("model_forward: waveform lengths differ");
  const StftConfig cfg{};
  const auto dc = power_compress(stft(d, cfg), 0.5);
  const auto ec = power_compress(stft(e, cfg), 0.5);
  const auto yc = power_compress(stft(y, cfg), 0.5);
  auto fwd = model.forward(grid_from_spec<S>(dc), grid_from_spec<S>(ec),
                           grid_from_spec<S>(yc), spk);
  if (intermediates != nullptr) {
    if (fwd.s1.defined())
      intermediates->s1 = power_decompress(spec_from_grid(fwd.s1, 0.5, cfg));
    intermediates->s2 = power_decompress(spec_from_grid(fwd.s2, 0.5, cfg));
  }
  auto out = istft(power_decompress(spec_from_grid(fwd.s2, 0.5, cfg)));
  return out;
}

// ------------------------------------------------------ instantiation

template class ParamStore<float>;
template class ParamStore<double>;
template class TdpfModel<float>;
template class TdpfModel<double>;
template ComplexGrid<float> grid_from_spec<float>(const CompressedSpectrogram&);
template ComplexGrid<double> grid_from_spec<double>(const CompressedSpectrogram&);
template CompressedSpectrogram spec_from_grid<float>(const ComplexGrid<float>&,
                                                     double, const StftConfig&);
template CompressedSpectrogram spec_from_grid<double>(const ComplexGrid<double>&,
                                                      double, const StftConfig&);
template SpeakerInputs<float> make_speaker_inputs<float>(
    const Waveform&, const std::vector<double>&);
template SpeakerInputs<double> make_speaker_inputs<double>(
    const Waveform&, const std::vector<double>&);
template Waveform model_forward<float>(TdpfModel<float>&, const Waveform&,
                                       const Waveform&, const Waveform&,
                                       const SpeakerInputs<float>*, StageOutput*);
template Waveform model_forward<double>(TdpfModel<double>&, const Waveform&,
                                        const Waveform&, const Waveform&,
                                        const SpeakerInputs<double>*, StageOutput*);

} // namespace paec
