#include "autoeval/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace autoeval {

namespace {

// Sums the per-instance scores in sorted value order, so results are exactly
// invariant under instance permutation.
double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

// Scores every instance, then averages the scores overall and within each
// predicted category.
template <typename ScoreFn>
AccuracyVector aggregate_by_prediction(const ConfidenceMatrix& matrix, ScoreFn score) {
  const Eigen::MatrixXd& z = matrix.values();
  const Eigen::Index n = z.rows();
  const Eigen::Index c = z.cols();

  std::vector<double> all;
  std::vector<std::vector<double>> per_cat(c);
  all.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = score(z.row(i));
    all.push_back(s);
    per_cat[argmax_category(z.row(i))].push_back(s);
  }

  AccuracyVector out;
  out.overall = sorted_sum(all) / double(n);
  out.per_category.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    out.per_category(k) = per_cat[k].empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : sorted_sum(per_cat[k]) / double(per_cat[k].size());
  }
  return out;
}

}  // namespace

void BaselineConfig::validate() const {
  if (method == Method::PS && !(tau1 > 0.0 && tau1 < 1.0)) {
    throw std::invalid_argument("tau1 must lie in (0,1)");
  }
  if (method == Method::ES && !(tau2 > 0.0 && tau2 < 1.0)) {
    throw std::invalid_argument("tau2 must lie in (0,1)");
  }
}

BaselineConfig::Method BaselineConfig::parse_method(const std::string& name) {
  if (name == "ps") return Method::PS;
  if (name == "es") return Method::ES;
  if (name == "ac") return Method::AC;
  throw std::invalid_argument("unknown baseline method '" + name + "' (want ps|es|ac)");
}

const char* BaselineConfig::method_name(Method m) {
  switch (m) {
    case Method::PS: return "ps";
    case Method::ES: return "es";
    case Method::AC: return "ac";
  }
  return "?";
}

AccuracyVector prediction_score(const ConfidenceMatrix& matrix, double tau1) {
  return aggregate_by_prediction(matrix, [tau1](const auto& row) {
    return row.maxCoeff() >= tau1 ? 1.0 : 0.0;
  });
}

AccuracyVector entropy_score(const ConfidenceMatrix& matrix, double tau2) {
  const double log_c = std::log(double(matrix.num_categories()));
  return aggregate_by_prediction(matrix, [tau2, log_c](const auto& row) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < row.size(); ++j) {
      const double p = row(j);
      if (p > 0.0) h -= p * std::log(p);
    }
    return h / log_c <= tau2 ? 1.0 : 0.0;
  });
}

AccuracyVector average_confidence(const ConfidenceMatrix& matrix) {
  return aggregate_by_prediction(matrix,
                                 [](const auto& row) { return row.maxCoeff(); });
}

AccuracyVector run_baseline(const ConfidenceMatrix& matrix, const BaselineConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case BaselineConfig::Method::PS: return prediction_score(matrix, cfg.tau1);
    case BaselineConfig::Method::ES: return entropy_score(matrix, cfg.tau2);
    case BaselineConfig::Method::AC: return average_confidence(matrix);
  }
  throw std::logic_error("unreachable");
}

}  // namespace autoeval
