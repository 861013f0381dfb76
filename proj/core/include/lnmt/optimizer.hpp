#pragma once

#include <cstdint>

#include "lnmt/common.hpp"
#include "lnmt/params.hpp"

namespace lnmt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index n) { return AdamState{Vec::Zero(n), Vec::Zero(n), 0}; }
};

/// Bias-corrected Adam over the flat parameter vector. Throws naming the
/// offending tensor when a gradient is non-finite. `layout` is only used for
/// that error message.
void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr,
               const AdamConfig& cfg, const ParamStore* layout = nullptr);

/// Scales grad in place so its global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_global_norm(Vec& grad, double max_norm);

}  // namespace lnmt
