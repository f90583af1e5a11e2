#pragma once
// Power-law compressed phase-aware loss and the per-variant two-term
// bindings: stage-1 targets the echo (TDPF-2) or speech+interference
// (TDPF-3); the final output always targets the near-end speech.

#include <optional>

#include "paec/model.hpp"
#include "paec/spectral.hpp"

namespace paec {

struct LossSpec {
  double p = 0.5;     // compression exponent, matches the input compression
  double alpha = 0.5; // magnitude-term weight
};

// Differentiable loss on compressed-domain complex grids.
template <class S>
Var<S> plcpa_term(const ComplexGrid<S>& target_c, const ComplexGrid<S>& est_c,
                  const LossSpec& spec = {});

// Value-level loss on raw spectrograms (compresses internally).
double plcpa_loss(const Spectrogram& target, const Spectrogram& estimate,
                  const LossSpec& spec = {});

template <class S>
struct TrainTargets {
  ComplexGrid<S> s_c;  // near-end speech, compressed
  ComplexGrid<S> y_c;  // echo component (defined when the variant needs it)
  ComplexGrid<S> sz_c; // s + z (defined for TDPF-3)
};

template <class S>
struct VariantLoss {
  Var<S> total;
  Var<S> term1; // undefined for single-term variants
  Var<S> term2;
};

template <class S>
VariantLoss<S> variant_loss(Variant v, const typename TdpfModel<S>::Forward& fwd,
                            const TrainTargets<S>& targets,
                            const LossSpec& spec = {});

// Value-level wrapper used by tests and reporting. y/z may be null when the
// variant does not need them; TargetError if a required one is missing.
struct VariantLossValue {
  double total = 0.0;
  double term1 = 0.0;
  double term2 = 0.0;
  bool two_term = false;
};
VariantLossValue variant_loss_value(Variant v, const Waveform& s,
                                    const Waveform* y, const Waveform* z,
                                    const StageOutput& out,
                                    const LossSpec& spec = {});

} // namespace paec
