#include "paec/loss.hpp"

#include "paec/errors.hpp"

namespace paec {

template <class S>
Var<S> plcpa_term(const ComplexGrid<S>& target_c, const ComplexGrid<S>& est_c,
                  const LossSpec& spec) {
  if (target_c.re.shape() != est_c.re.shape())
    throw ShapeError("plcpa: target/estimate shape mismatch");
  const S eps = S(1e-12);
  auto mag_t = sqrt_eps(add(square(target_c.re), square(target_c.im)), eps);
  auto mag_e = sqrt_eps(add(square(est_c.re), square(est_c.im)), eps);
  auto mag_term = mean_all(square(sub(mag_t, mag_e)));
  auto phase_term = mean_all(add(square(sub(target_c.re, est_c.re)),
                                 square(sub(target_c.im, est_c.im))));
  return add(scale(mag_term, static_cast<S>(spec.alpha)),
             scale(phase_term, static_cast<S>(1.0 - spec.alpha)));
}

double plcpa_loss(const Spectrogram& target, const Spectrogram& estimate,
                  const LossSpec& spec) {
  if (target.n_frames != estimate.n_frames ||
      target.bins.size() != estimate.bins.size())
    throw ShapeError("plcpa_loss: spectrogram shape mismatch");
  auto tg = grid_from_spec<double>(power_compress(target, spec.p));
  auto eg = grid_from_spec<double>(power_compress(estimate, spec.p));
  return plcpa_term<double>(tg, eg, spec).val().v[0];
}

template <class S>
VariantLoss<S> variant_loss(Variant v, const typename TdpfModel<S>::Forward& fwd,
                            const TrainTargets<S>& targets, const LossSpec& spec) {
  VariantLoss<S> out;
  if (!targets.s_c.defined()) throw TargetError("variant_loss: missing target s");
  switch (v) {
    case Variant::gftnn_aec:
      // Trained on the TDPF-3 stage-1 objective (echo + noise suppression).
      if (!targets.sz_c.defined())
        throw TargetError("variant_loss: gftnn_aec needs the s+z target");
      out.total = plcpa_term<S>(targets.sz_c, fwd.s2, spec);
      break;
    case Variant::gftnn_pse:
    case Variant::gftnn_l:
    case Variant::tdpf1:
      out.total = plcpa_term<S>(targets.s_c, fwd.s2, spec);
      break;
    case Variant::tdpf2: {
      if (!targets.y_c.defined())
        throw TargetError("variant_loss: tdpf2 needs the echo target y");
      out.term1 = plcpa_term<S>(targets.y_c, fwd.s1, spec);
      out.term2 = plcpa_term<S>(targets.s_c, fwd.s2, spec);
      out.total = add(out.term1, out.term2);
      break;
    }
    case Variant::tdpf3: {
      if (!targets.sz_c.defined())
        throw TargetError("variant_loss: tdpf3 needs the s+z target");
      out.term1 = plcpa_term<S>(targets.sz_c, fwd.s1, spec);
      out.term2 = plcpa_term<S>(targets.s_c, fwd.s2, spec);
      out.total = add(out.term1, out.term2);
      break;
    }
  }
  return out;
}

VariantLossValue variant_loss_value(Variant v, const Waveform& s,
                                    const Waveform* y, const Waveform* z,
                                    const StageOutput& out, const LossSpec& spec) {
  VariantLossValue res;
  const StftConfig cfg{};
  const auto s_spec = stft(s, cfg);
  switch (v) {
    case Variant::gftnn_aec: {
      if (z == nullptr) throw TargetError("variant_loss_value: need z for aec_ns");
      Waveform sz = s;
      for (std::size_t i = 0; i < sz.size() && i < z->size(); ++i)
        sz.samples[i] += z->samples[i];
      res.total = plcpa_loss(stft(sz, cfg), out.s2, spec);
      break;
    }
    case Variant::gftnn_pse:
    case Variant::gftnn_l:
    case Variant::tdpf1:
      res.total = plcpa_loss(s_spec, out.s2, spec);
      break;
    case Variant::tdpf2: {
      if (y == nullptr) throw TargetError("variant_loss_value: tdpf2 needs y");
      res.term1 = plcpa_loss(stft(*y, cfg), out.s1, spec);
      res.term2 = plcpa_loss(s_spec, out.s2, spec);
      res.total = res.term1 + res.term2;
      res.two_term = true;
      break;
    }
    case Variant::tdpf3: {
      if (z == nullptr) throw TargetError("variant_loss_value: tdpf3 needs z");
      Waveform sz = s;
      for (std::size_t i = 0; i < sz.size() && i < z->size(); ++i)
        sz.samples[i] += z->samples[i];
      res.term1 = plcpa_loss(stft(sz, cfg), out.s1, spec);
      res.term2 = plcpa_loss(s_spec, out.s2, spec);
      res.total = res.term1 + res.term2;
      res.two_term = true;
      break;
    }
  }
  return res;
}

template Var<float> plcpa_term<float>(const ComplexGrid<float>&,
                                      const ComplexGrid<float>&, const LossSpec&);
template Var<double> plcpa_term<double>(const ComplexGrid<double>&,
                                        const ComplexGrid<double>&,
                                        const LossSpec&);
template VariantLoss<float> variant_loss<float>(
    Variant, const TdpfModel<float>::Forward&, const TrainTargets<float>&,
    const LossSpec&);
template VariantLoss<double> variant_loss<double>(
    Variant, const TdpfModel<double>::Forward&, const TrainTargets<double>&,
    const LossSpec&);

} // namespace paec
