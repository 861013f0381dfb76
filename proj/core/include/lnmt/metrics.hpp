#pragma once

#include <optional>
#include <span>
#include <string>

#include "lnmt/common.hpp"

namespace lnmt {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty_prediction = false;  // nothing predicted for the class, f1 forced 0
};

/// Accuracy at the 0.5 threshold, exact rank-statistic AUC (ties count one
/// half, absent when only one class is present), and class-wise blocks for
/// fake (label 1) and real (label 0).
struct MetricsReport {
  double accuracy = 0.0;
  std::optional<double> auc_roc;
  ClassMetrics fake;
  ClassMetrics real;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;  // fake treated as positive
  std::size_t n_eval = 0;

  /// Pretty-printed JSON with a fixed key order.
  std::string to_json() const;
};

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels);

}  // namespace lnmt
