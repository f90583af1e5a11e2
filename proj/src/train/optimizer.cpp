#include <cmath>

#include "paec/kernels.hpp"
#include "paec/trainer.hpp"

namespace paec {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::joint: return "joint";
    case Strategy::joint_freeze: return "joint_freeze";
    case Strategy::finetune: return "finetune";
    case Strategy::finetune_freeze: return "finetune_freeze";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "joint") return Strategy::joint;
  if (s == "joint_freeze") return Strategy::joint_freeze;
  if (s == "finetune") return Strategy::finetune;
  if (s == "finetune_freeze") return Strategy::finetune_freeze;
  throw ParamError("unknown strategy '" + s +
                   "' (expected joint, joint_freeze, finetune, finetune_freeze)");
}

const char* to_string(TrainTask t) {
  switch (t) {
    case TrainTask::echo_map: return "echo_map";
    case TrainTask::aec_ns: return "aec_ns";
    case TrainTask::pse: return "pse";
  }
  return "?";
}

TrainTask task_from_string(const std::string& s) {
  if (s == "echo_map") return TrainTask::echo_map;
  if (s == "aec_ns") return TrainTask::aec_ns;
  if (s == "pse") return TrainTask::pse;
  throw ParamError("unknown task '" + s + "' (expected echo_map, aec_ns, pse)");
}

Adam::Adam(ParamStore<float>& params, AdamConfig cfg,
           std::vector<std::string> freeze_prefixes)
    : params_(params), cfg_(cfg), freeze_(std::move(freeze_prefixes)) {
  for (const auto& [name, node] : params_.all()) {
    if (frozen(name)) continue;
    m_[name].assign(node->val.numel(), 0.f);
    v_[name].assign(node->val.numel(), 0.f);
  }
}

bool Adam::frozen(const std::string& name) const {
  for (const auto& p : freeze_)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}

void Adam::step() {
  ++t_;
  // Global gradient-norm clip over the trainable set.
  double norm_sq = 0.0;
  for (const auto& [name, node] : params_.all()) {
    if (frozen(name) || node->grad.v.empty()) continue;
    norm_sq += kernels::sumsq(node->grad.data(), node->grad.numel());
  }
  const double norm = std::sqrt(norm_sq);
  const float gscale =
      cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm
          ? static_cast<float>(cfg_.clip_norm / norm)
          : 1.f;

  const double b1t = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double b2t = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const float lr_t = static_cast<float>(cfg_.lr * std::sqrt(b2t) / b1t);
  const float b1 = static_cast<float>(cfg_.beta1);
  const float b2 = static_cast<float>(cfg_.beta2);
  const float eps = static_cast<float>(cfg_.eps);

  for (auto& [name, node] : params_.all()) {
    if (frozen(name) || node->grad.v.empty()) continue;
    float* m = m_[name].data();
    float* v = v_[name].data();
    float* w = node->val.data();
    const float* g = node->grad.data();
    const std::size_t n = node->val.numel();
    for (std::size_t i = 0; i < n; ++i) {
      const float gi = g[i] * gscale;
      m[i] = b1 * m[i] + (1.f - b1) * gi;
      v[i] = b2 * v[i] + (1.f - b2) * gi * gi;
      w[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

std::map<std::string, std::vector<float>> Adam::state_m() const { return m_; }
std::map<std::string, std::vector<float>> Adam::state_v() const { return v_; }

void Adam::restore(const std::map<std::string, std::vector<float>>& m,
                   const std::map<std::string, std::vector<float>>& v,
                   std::int64_t t) {
  for (auto& [name, buf] : m_) {
    auto it = m.find(name);
    if (it != m.end() && it->second.size() == buf.size()) buf = it->second;
  }
  for (auto& [name, buf] : v_) {
    auto it = v.find(name);
    if (it != v.end() && it->second.size() == buf.size()) buf = it->second;
  }
  t_ = t;
}

} // namespace paec
