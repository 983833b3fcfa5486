#pragma once

#include <string>

#include "autoeval/data.hpp"

namespace autoeval {

/// Score-threshold accuracy estimators. Per-category estimates condition on
/// the predicted (argmax) category since labels are unavailable; a category
/// nobody is assigned to gets a NaN entry.
struct BaselineConfig {
  enum class Method { PS, ES, AC };
  Method method = Method::AC;
  double tau1 = 0.8;  // PS: count max confidence >= tau1
  double tau2 = 0.2;  // ES: count normalized entropy <= tau2

  void validate() const;
  static Method parse_method(const std::string& name);
  static const char* method_name(Method m);
};

/// Fraction of instances whose top confidence reaches tau1.
AccuracyVector prediction_score(const ConfidenceMatrix& matrix, double tau1);

/// Fraction of instances whose entropy, normalized by ln C, stays below tau2.
AccuracyVector entropy_score(const ConfidenceMatrix& matrix, double tau2);

/// Mean top confidence.
AccuracyVector average_confidence(const ConfidenceMatrix& matrix);

AccuracyVector run_baseline(const ConfidenceMatrix& matrix, const BaselineConfig& cfg);

}  // namespace autoeval
