#include "lnmt/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "nlohmann/json.hpp"

namespace lnmt {

namespace {

ClassMetrics class_block(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  const std::size_t predicted = tp + fp;
  const std::size_t actual = tp + fn;
  m.empty_prediction = predicted == 0;
  m.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  m.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

/// Mann-Whitney AUC with midranks for ties.
double rank_auc(std::span<const double> scores, std::span<const int> labels, std::size_t n_pos,
                std::size_t n_neg) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) pos_rank_sum += mid_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace

MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("compute_metrics: length mismatch");
  if (scores.empty()) throw Error("compute_metrics: empty input");

  MetricsReport r;
  r.n_eval = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] >= 0.5 ? 1 : 0;
    const int actual = labels[i];
    if (actual != 0 && actual != 1) throw Error("compute_metrics: label outside {0,1}");
    if (predicted == 1) {
      (actual == 1 ? r.tp : r.fp) += 1;
    } else {
      (actual == 0 ? r.tn : r.fn) += 1;
    }
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.n_eval);
  r.fake = class_block(r.tp, r.fp, r.fn);
  r.real = class_block(r.tn, r.fn, r.fp);

  const std::size_t n_pos = r.tp + r.fn;
  const std::size_t n_neg = r.tn + r.fp;
  if (n_pos > 0 && n_neg > 0) {
    r.auc_roc = rank_auc(scores, labels, n_pos, n_neg);
  }
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  if (auc_roc) {
    j["auc_roc"] = *auc_roc;
  } else {
    j["auc_roc"] = nullptr;
  }
  auto block = [](const ClassMetrics& m) {
    nlohmann::ordered_json b;
    b["precision"] = m.precision;
    b["recall"] = m.recall;
    b["f1"] = m.f1;
    b["empty_prediction"] = m.empty_prediction;
    return b;
  };
  j["fake"] = block(fake);
  j["real"] = block(real);
  j["confusion"] = {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
  j["n_eval"] = n_eval;
  return j.dump(2);
}

}  // namespace lnmt
