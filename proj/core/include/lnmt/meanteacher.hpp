#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lnmt/common.hpp"
#include "lnmt/encode.hpp"
#include "lnmt/encoder.hpp"

namespace lnmt {

/// Teacher/student pair. Both start as copies of the stage-1 model; only the
/// student sees an optimizer, the teacher follows by exponential moving
/// average.
struct TeacherStudent {
  EncoderParams teacher;
  EncoderParams student;
  double alpha = 0.999;
};

/// theta_t <- alpha * theta_t + (1 - alpha) * theta_s, elementwise.
void ema_update(TeacherStudent& ts);

/// Per-unlabeled-sample state for one generation. Index i follows the order
/// of the unlabeled sample list handed to refresh/prepare.
struct WeakLabelState {
  Vec y_u;           // refined soft weak labels
  Vec p_teacher, p_student;
  std::vector<int> hard_teacher, hard_student;
  Mat feat_teacher, feat_student;  // n x 2*d_model reinforced features
  Mat q_teacher, q_student;        // n x 2 class likelihood vectors
  Vec uncertainty;
  Vec omega;

  Eigen::Index size() const { return y_u.size(); }
};

struct NetworkPredictions {
  Vec p;                   // soft predictions
  std::vector<int> hard;   // 1[p >= 0.5], ties toward fake
  Mat features;            // n x 2*d_model
};

/// Forward pass over a set of encoded samples; no parameter updates.
NetworkPredictions refresh_predictions(const EncoderParams& model,
                                       std::span<const EncodedSample* const> samples);

/// 2x2 IoU agreement between student (rows) and teacher (columns) hard
/// labels, then row normalization. A class missing from both networks yields
/// a zero raw row, replaced by that class's identity row.
struct LabelSimilarityMatrix {
  Eigen::Matrix2d raw;
  Eigen::Matrix2d normalized;
};

LabelSimilarityMatrix label_similarity(std::span<const int> hard_student,
                                       std::span<const int> hard_teacher);

/// One label-propagation step:
/// [1-y', y'] = (1-rate) * [1-y_student, y_student] * C + rate * [1-y_u, y_u].
/// Returns y', clamped into [0,1]. C must be row-stochastic.
double propagate(double y_u, double y_student, const LabelSimilarityMatrix& c, double rate);

struct ClassCenters {
  Mat centers;             // 2 x feature_dim; row 0 = real, row 1 = fake
  bool fallback[2] = {false, false};  // class was empty, global mean used
};

ClassCenters class_centers(const Mat& features, std::span<const int> hard_labels);

/// q = softmax(centers . f): similarity of one feature to both class centers.
Eigen::Vector2d class_likelihood(const Vec& feature, const ClassCenters& centers);

struct UncertaintyResult {
  double u = 0.0;
  double omega = 1.0;
};

/// Gaussian-kernel MMD between two single-sample distributions:
/// u = sqrt(max(0, 2 - 2 exp(-||q_t - q_s||^2 / (2 sigma^2)))), omega = exp(-u).
UncertaintyResult uncertainty(const Eigen::Vector2d& q_teacher, const Eigen::Vector2d& q_student,
                              double sigma);

/// Mean over the batch of -omega * [y log p + (1-y) log(1-p)].
double credibility_loss(std::span<const double> y_u, std::span<const double> p_student,
                        std::span<const double> omega);

struct GenerationOptions {
  bool use_label_propagation = true;
  bool use_label_reliability = true;
  double propagation_rate = 0.9;  // beta
  double mmd_sigma = 1.0;
};

/// Steps (1)-(4) of one generation: refresh both networks on the unlabeled
/// set, build C, refine every weak label, and compute credibility weights.
WeakLabelState prepare_generation(const TeacherStudent& ts,
                                  std::span<const EncodedSample* const> unlabeled,
                                  const GenerationOptions& opts);

/// Full generation: prepare, then hand the refreshed state to the training
/// epoch supplied by the caller.
WeakLabelState generation_step(const TeacherStudent& ts,
                               std::span<const EncodedSample* const> unlabeled,
                               const GenerationOptions& opts,
                               const std::function<void(const WeakLabelState&)>& train_epoch);

}  // namespace lnmt
