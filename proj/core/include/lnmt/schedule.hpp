#pragma once

#include <cstdint>

#include "lnmt/common.hpp"

namespace lnmt {

/// Linear warmup from 0 to peak over warmup_iters, then linear decay to
/// floor at total_iters, constant floor beyond. Iterations are 1-based.
class LrSchedule {
 public:
  LrSchedule(std::int64_t warmup_iters, std::int64_t total_iters, double peak_lr,
             double floor_lr);

  double lr(std::int64_t iter) const;

  std::int64_t warmup_iters() const { return warmup_; }
  std::int64_t total_iters() const { return total_; }

  /// Applies the desk-scale rule: when the configured warmup does not fit the
  /// run (total <= warmup), warmup is rescaled to 20% of total.
  static LrSchedule for_run(std::int64_t configured_warmup, std::int64_t total_iters,
                            double peak_lr, double floor_lr);

 private:
  std::int64_t warmup_;
  std::int64_t total_;
  double peak_;
  double floor_;
};

}  // namespace lnmt
