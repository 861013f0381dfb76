#include "lnmt/optimizer.hpp"

#include <cmath>

namespace lnmt {

void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr,
               const AdamConfig& cfg, const ParamStore* layout) {
  if (params.size() != grad.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw Error("adam_step: shape mismatch");
  }
  if (!grad.allFinite()) {
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        const std::string tensor = layout ? layout->name_at(i) : "<unknown>";
        throw Error("adam_step: non-finite gradient in tensor " + tensor);
      }
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square();

  params.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

double clip_global_norm(Vec& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace lnmt
