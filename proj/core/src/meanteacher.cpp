#include "lnmt/meanteacher.hpp"

#include <cmath>

namespace lnmt {

void ema_update(TeacherStudent& ts) {
  if (!ts.teacher.store.same_layout(ts.student.store)) {
    throw Error("ema_update: teacher/student parameter shapes differ");
  }
  if (ts.alpha < 0.0 || ts.alpha > 1.0) throw Error("ema_update: alpha outside [0,1]");
  // Incremental form of theta_t <- alpha theta_t + (1-alpha) theta_s; equal
  // parameters are an exact fixed point.
  ts.teacher.store.flat() +=
      (1.0 - ts.alpha) * (ts.student.store.flat() - ts.teacher.store.flat());
}

NetworkPredictions refresh_predictions(const EncoderParams& model,
                                       std::span<const EncodedSample* const> samples) {
  NetworkPredictions out;
  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  out.p.resize(n);
  out.hard.resize(static_cast<std::size_t>(n));
  out.features.resize(n, model.cfg.feature_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    ForwardTrace t = forward(*samples[static_cast<std::size_t>(i)], model);
    out.p[i] = t.p;
    out.hard[static_cast<std::size_t>(i)] = t.p >= 0.5 ? 1 : 0;  // tie goes to fake
    out.features.row(i) = t.f_c.transpose();
  }
  return out;
}

LabelSimilarityMatrix label_similarity(std::span<const int> hard_student,
                                       std::span<const int> hard_teacher) {
  if (hard_student.size() != hard_teacher.size()) {
    throw Error("label_similarity: label vectors differ in length");
  }
  if (hard_student.empty()) throw Error("label_similarity: empty label vectors");

  // joint[s][t] counts samples with student label s and teacher label t.
  double joint[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < hard_student.size(); ++i) {
    joint[hard_student[i] & 1][hard_teacher[i] & 1] += 1.0;
  }
  const double student_count[2] = {joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]};
  const double teacher_count[2] = {joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]};

  LabelSimilarityMatrix out;
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      const double inter = joint[m][n];
      const double uni = student_count[m] + teacher_count[n] - inter;
      out.raw(m, n) = uni > 0.0 ? inter / uni : 0.0;
    }
  }
  out.normalized = out.raw;
  for (int m = 0; m < 2; ++m) {
    const double row_sum = out.normalized.row(m).sum();
    if (row_sum <= 0.0) {
      out.normalized.row(m).setZero();
      out.normalized(m, m) = 1.0;  // vacuous class: propagation becomes a no-op
    } else {
      out.normalized.row(m) /= row_sum;
    }
  }
  return out;
}

double propagate(double y_u, double y_student, const LabelSimilarityMatrix& c, double rate) {
  if (y_u < 0.0 || y_u > 1.0 || y_student < 0.0 || y_student > 1.0) {
    throw Error("propagate: soft labels must lie in [0,1]");
  }
  if (rate < 0.0 || rate > 1.0) throw Error("propagate: rate must lie in [0,1]");
  for (int m = 0; m < 2; ++m) {
    if (std::abs(c.normalized.row(m).sum() - 1.0) > 1e-9) {
      throw Error("propagate: similarity matrix is not row-stochastic");
    }
  }

  const Eigen::RowVector2d student(1.0 - y_student, y_student);
  const Eigen::RowVector2d current(1.0 - y_u, y_u);
  const Eigen::RowVector2d refined = (1.0 - rate) * (student * c.normalized) + rate * current;
  return std::min(1.0, std::max(0.0, refined[1]));
}

ClassCenters class_centers(const Mat& features, std::span<const int> hard_labels) {
  if (features.rows() != static_cast<Eigen::Index>(hard_labels.size())) {
    throw Error("class_centers: feature/label count mismatch");
  }
  if (features.rows() == 0) throw Error("class_centers: need at least one sample");

  ClassCenters out;
  out.centers = Mat::Zero(2, features.cols());
  Eigen::Index counts[2] = {0, 0};
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const int cls = hard_labels[static_cast<std::size_t>(i)] & 1;
    out.centers.row(cls) += features.row(i);
    counts[cls] += 1;
  }
  const Vec global = features.colwise().mean().transpose();
  for (int cls = 0; cls < 2; ++cls) {
    if (counts[cls] == 0) {
      out.centers.row(cls) = global.transpose();
      out.fallback[cls] = true;
    } else {
      out.centers.row(cls) /= static_cast<double>(counts[cls]);
    }
  }
  return out;
}

Eigen::Vector2d class_likelihood(const Vec& feature, const ClassCenters& centers) {
  if (feature.size() != centers.centers.cols()) {
    throw Error("class_likelihood: dimension mismatch");
  }
  Eigen::Vector2d logits = centers.centers * feature;
  const double m = logits.maxCoeff();
  Eigen::Vector2d q = (logits.array() - m).exp();
  q /= q.sum();
  return q;
}

UncertaintyResult uncertainty(const Eigen::Vector2d& q_teacher, const Eigen::Vector2d& q_student,
                              double sigma) {
  if (sigma <= 0.0) throw Error("uncertainty: sigma must be positive");
  const double dist2 = (q_teacher - q_student).squaredNorm();
  const double kernel = std::exp(-dist2 / (2.0 * sigma * sigma));
  UncertaintyResult r;
  r.u = std::sqrt(std::max(0.0, 2.0 - 2.0 * kernel));
  r.omega = std::exp(-r.u);
  return r;
}

double credibility_loss(std::span<const double> y_u, std::span<const double> p_student,
                        std::span<const double> omega) {
  if (y_u.size() != p_student.size() || y_u.size() != omega.size()) {
    throw Error("credibility_loss: batch spans differ in length");
  }
  if (y_u.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < y_u.size(); ++i) {
    if (omega[i] <= 0.0 || omega[i] > 1.0) throw Error("credibility_loss: omega outside (0,1]");
    sum += omega[i] * bce_loss(p_student[i], y_u[i]);
  }
  return sum / static_cast<double>(y_u.size());
}

WeakLabelState prepare_generation(const TeacherStudent& ts,
                                  std::span<const EncodedSample* const> unlabeled,
                                  const GenerationOptions& opts) {
  NetworkPredictions teacher = refresh_predictions(ts.teacher, unlabeled);
  NetworkPredictions student = refresh_predictions(ts.student, unlabeled);
  const Eigen::Index n = teacher.p.size();

  WeakLabelState state;
  state.p_teacher = std::move(teacher.p);
  state.p_student = std::move(student.p);
  state.hard_teacher = std::move(teacher.hard);
  state.hard_student = std::move(student.hard);
  state.feat_teacher = std::move(teacher.features);
  state.feat_student = std::move(student.features);

  // The teacher's fresh soft predictions are this generation's weak labels;
  // propagation then blends in the student view through C.
  state.y_u = state.p_teacher;
  if (opts.use_label_propagation) {
    const LabelSimilarityMatrix c = label_similarity(state.hard_student, state.hard_teacher);
    for (Eigen::Index i = 0; i < n; ++i) {
      state.y_u[i] = propagate(state.p_teacher[i], state.p_student[i], c, opts.propagation_rate);
    }
  }

  state.q_teacher.resize(n, 2);
  state.q_student.resize(n, 2);
  state.uncertainty = Vec::Zero(n);
  state.omega = Vec::Ones(n);
  if (opts.use_label_reliability) {
    const ClassCenters centers_t = class_centers(state.feat_teacher, state.hard_teacher);
    const ClassCenters centers_s = class_centers(state.feat_student, state.hard_student);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector2d qt = class_likelihood(state.feat_teacher.row(i).transpose(), centers_t);
      const Eigen::Vector2d qs = class_likelihood(state.feat_student.row(i).transpose(), centers_s);
      state.q_teacher.row(i) = qt.transpose();
      state.q_student.row(i) = qs.transpose();
      const UncertaintyResult r = uncertainty(qt, qs, opts.mmd_sigma);
      state.uncertainty[i] = r.u;
      state.omega[i] = r.omega;
    }
  } else {
    state.q_teacher.setConstant(0.5);
    state.q_student.setConstant(0.5);
  }
  return state;
}

WeakLabelState generation_step(const TeacherStudent& ts,
                               std::span<const EncodedSample* const> unlabeled,
                               const GenerationOptions& opts,
                               const std::function<void(const WeakLabelState&)>& train_epoch) {
  WeakLabelState state = prepare_generation(ts, unlabeled, opts);
  if (train_epoch) train_epoch(state);
  return state;
}

}  // namespace lnmt
