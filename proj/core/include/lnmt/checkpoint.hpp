#pragma once

#include <cstdint>
#include <string>

#include "lnmt/common.hpp"

namespace lnmt {

/// Everything needed to resume a run bitwise: parameters, optimizer moments,
/// RNG state, and a JSON config echo describing how to rebuild the model
/// (encoder config, vocabulary, training config). Stage 2 additionally
/// carries the teacher parameters.
struct Checkpoint {
  std::int32_t stage = 1;
  std::string meta_json;
  Vec params;          // student / stage-1 model, flat layout
  Vec best_params;     // best-validation snapshot
  Vec teacher_params;  // empty unless stage == 2
  Vec adam_m, adam_v;
  std::int64_t adam_step = 0;
  std::int32_t epochs_done = 0;
  double best_val = 0.0;
  std::string rng_state;
};

/// Versioned little-endian binary with a trailing checksum. Identical
/// checkpoints serialize to identical bytes.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Throws on version mismatch or corruption; never returns partial state.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lnmt
