#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lnmt/optimizer.hpp"
#include "lnmt/rng.hpp"
#include "lnmt/schedule.hpp"
#include "support/oracles.hpp"

using namespace lnmt;

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Vec params(3);
  params << 1.0, -2.0, 0.5;
  const Vec before = params;
  AdamState state = AdamState::zeros(3);
  const Vec grad = Vec::Zero(3);
  for (int i = 0; i < 5; ++i) adam_step(params, grad, state, 0.1, AdamConfig{});
  CHECK((params - before).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("adam: bias-corrected first step moves by about -lr") {
  Vec params(1);
  params << 0.0;
  AdamState state = AdamState::zeros(1);
  Vec grad(1);
  grad << 1.0;
  adam_step(params, grad, state, 0.1, AdamConfig{});
  CHECK(params[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam matches the scalar reference trace to 1e-12 over 10 steps") {
  Vec params(1);
  params << 0.7;
  double ref_theta = 0.7;
  AdamState state = AdamState::zeros(1);
  oracles::ScalarAdam ref;
  Rng rng(11);
  for (int step = 0; step < 10; ++step) {
    const double g = rng.normal(0.0, 1.0);
    const double lr = 0.05 + 0.01 * step;
    Vec grad(1);
    grad << g;
    adam_step(params, grad, state, lr, AdamConfig{});
    ref_theta = ref.step(ref_theta, g, lr);
    CHECK(params[0] == doctest::Approx(ref_theta).epsilon(1e-12));
  }
}

TEST_CASE("adam: non-finite gradient errors name the tensor") {
  ParamStore layout;
  layout.add("alpha.w", 2, 1);
  layout.add("beta.w", 2, 1);
  layout.finalize();

  Vec params = Vec::Zero(4);
  AdamState state = AdamState::zeros(4);
  Vec grad = Vec::Zero(4);
  grad[2] = std::numeric_limits<double>::quiet_NaN();
  try {
    adam_step(params, grad, state, 0.1, AdamConfig{}, &layout);
    FAIL("expected a non-finite gradient error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("beta.w") != std::string::npos);
  }
}

TEST_CASE("global norm clipping") {
  Vec grad(2);
  grad << 3.0, 4.0;  // norm 5
  const double norm = clip_global_norm(grad, 2.5);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(grad.norm() == doctest::Approx(2.5).epsilon(1e-12));

  Vec small(2);
  small << 0.3, 0.4;
  clip_global_norm(small, 2.5);
  CHECK(small[0] == doctest::Approx(0.3));
}

TEST_CASE("learning-rate schedule follows the published shape") {
  // 200 epochs x 51 batches at batch 48 over 2440 labeled samples
  const std::int64_t total = 200 * 51;
  const LrSchedule s(8000, total, 3e-5, 3e-7);

  CHECK(s.lr(4000) == doctest::Approx(1.5e-5).epsilon(1e-12));
  CHECK(s.lr(8000) == doctest::Approx(3e-5).epsilon(1e-12));
  CHECK(s.lr(total) == doctest::Approx(3e-7).epsilon(1e-12));
  CHECK(s.lr(total + 999) == doctest::Approx(3e-7).epsilon(1e-12));

  SUBCASE("piecewise linear, continuous, max at warmup, min at floor") {
    // largest slope of either linear segment bounds every step
    const double max_step = std::max(3e-5 / 8000.0, (3e-5 - 3e-7) / static_cast<double>(total - 8000));
    double prev = s.lr(1);
    double max_seen = prev, min_seen = prev;
    bool continuous = true;
    for (std::int64_t it = 2; it <= total; ++it) {
      const double cur = s.lr(it);
      if (std::abs(cur - prev) > max_step * (1.0 + 1e-9)) continuous = false;
      max_seen = std::max(max_seen, cur);
      min_seen = std::min(min_seen, cur);
      prev = cur;
    }
    CHECK(continuous);
    CHECK(max_seen == doctest::Approx(3e-5));
    CHECK(min_seen == doctest::Approx(3e-7));
  }
}

TEST_CASE("schedule rejects warmup >= total and the desk rule rescales it") {
  CHECK_THROWS_AS(LrSchedule(8000, 200, 3e-5, 3e-7), Error);
  const LrSchedule rescaled = LrSchedule::for_run(8000, 200, 3e-5, 3e-7);
  CHECK(rescaled.warmup_iters() == 40);  // 20% of the run
  CHECK(rescaled.total_iters() == 200);
  CHECK(rescaled.lr(40) == doctest::Approx(3e-5).epsilon(1e-12));
  // explicit warmups that fit are left alone
  const LrSchedule kept = LrSchedule::for_run(50, 200, 3e-5, 3e-7);
  CHECK(kept.warmup_iters() == 50);
}
