#include "lnmt/schedule.hpp"

namespace lnmt {

LrSchedule::LrSchedule(std::int64_t warmup_iters, std::int64_t total_iters, double peak_lr,
                       double floor_lr)
    : warmup_(warmup_iters), total_(total_iters), peak_(peak_lr), floor_(floor_lr) {
  if (total_ <= 0) throw Error("lr_schedule: total_iters must be positive");
  if (warmup_ < 0) throw Error("lr_schedule: warmup_iters must be >= 0");
  if (peak_ <= 0.0 || floor_ <= 0.0) throw Error("lr_schedule: rates must be positive");
  if (total_ <= warmup_) {
    throw Error("lr_schedule: total_iters (" + std::to_string(total_) +
                ") must exceed warmup_iters (" + std::to_string(warmup_) +
                "); shrink the warmup for this corpus size");
  }
}

double LrSchedule::lr(std::int64_t iter) const {
  if (iter <= 0) return 0.0;
  if (iter <= warmup_) {
    return peak_ * static_cast<double>(iter) / static_cast<double>(warmup_);
  }
  if (iter >= total_) return floor_;
  const double frac = static_cast<double>(iter - warmup_) / static_cast<double>(total_ - warmup_);
  return peak_ + (floor_ - peak_) * frac;
}

LrSchedule LrSchedule::for_run(std::int64_t configured_warmup, std::int64_t total_iters,
                               double peak_lr, double floor_lr) {
  std::int64_t warmup = configured_warmup;
  if (total_iters <= warmup) {
    warmup = total_iters / 5;  // keep the warmup fraction the defaults imply
  }
  return LrSchedule(warmup, total_iters, peak_lr, floor_lr);
}

}  // namespace lnmt
