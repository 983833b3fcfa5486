#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace autoeval {

/// Row-stochastic matrix of softmax outputs, one instance per row.
/// Construction validates (entries in [0,1], row sums within 1e-6 of one,
/// N >= 3, C >= 2) and renormalizes rows whose sum is off by more than
/// floating-point noise. Immutable afterwards.
class ConfidenceMatrix {
 public:
  static constexpr double kRowSumTol = 1e-6;

  /// Validating factory; throws std::invalid_argument naming the offending
  /// row on any invariant breach.
  static ConfidenceMatrix validated(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::Index num_instances() const { return values_.rows(); }
  Eigen::Index num_categories() const { return values_.cols(); }

 private:
  explicit ConfidenceMatrix(Eigen::MatrixXd values)
      : values_(std::move(values)) {}
  Eigen::MatrixXd values_;
};

/// Per-category and overall accuracy, all fractions in [0,1]. A NaN entry in
/// per_category marks a category with no instances (no defined accuracy);
/// such entries are excluded from losses and RMSE.
struct AccuracyVector {
  Eigen::VectorXd per_category;
  double overall = 0.0;
};

inline bool is_defined(double accuracy) { return !std::isnan(accuracy); }

/// One dataset: confidences, optional ground-truth labels (training /
/// synthesis only) and the accuracy derived from them.
struct MetaSet {
  std::string id;
  ConfidenceMatrix matrix;
  std::optional<std::vector<int>> labels;
  std::optional<AccuracyVector> accuracy;
};

/// Index of the largest entry of a confidence row, ties to the lowest index.
Eigen::Index argmax_category(const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Ground-truth accuracy of argmax predictions against labels. Per-category
/// entries are NaN where the label never occurs.
AccuracyVector compute_accuracy(const ConfidenceMatrix& matrix,
                                const std::vector<int>& labels);

/// Reads one confidence CSV (header "label,c0,..." or "c0,..."). The id is
/// the file stem. Throws std::runtime_error naming the line on malformed
/// rows, row-sum violations or out-of-range labels.
MetaSet load_confidence_csv(const std::filesystem::path& path);

/// Writes a meta-set back to CSV with full round-trip precision.
void save_confidence_csv(const MetaSet& set, const std::filesystem::path& path);

/// Writes one CSV per meta-set plus manifest.json into dir. All sets must
/// share the category count.
std::filesystem::path save_corpus(const std::vector<MetaSet>& corpus,
                                  const std::filesystem::path& dir);

/// Loads a corpus from a manifest file or a directory containing
/// manifest.json. Accuracies are recomputed from labels when present.
std::vector<MetaSet> load_corpus(const std::filesystem::path& manifest_or_dir);

/// One manifest row; accuracy absent when the manifest stores null.
struct ManifestEntry {
  std::string id;
  std::string path;
  std::optional<AccuracyVector> accuracy;
};

/// Reads just the manifest, without touching the per-set CSVs.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_or_dir);

}  // namespace autoeval
