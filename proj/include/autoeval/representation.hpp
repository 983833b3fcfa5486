#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "autoeval/data.hpp"

namespace autoeval {

enum class Group { High = 0, Medium = 1, Low = 2 };

const char* group_name(Group g);

/// How instances are bucketed into confidence groups per category. Quantile
/// mode cuts sorted tertiles (always nonempty); fixed mode compares against
/// absolute thresholds and may leave groups empty.
struct GroupConfig {
  enum class Mode { Quantile, Fixed };

  Mode mode = Mode::Quantile;
  double t_low = 1.0 / 3.0;   // fixed mode only
  double t_high = 2.0 / 3.0;  // fixed mode only
  bool high = true;
  bool medium = true;
  bool low = true;

  int num_groups() const { return int(high) + int(medium) + int(low); }
  std::vector<Group> enabled() const;
  void validate() const;  // throws std::invalid_argument
};

/// members[d][g]: instance indices of enabled group g for category d, in the
/// deterministic accumulation order (descending confidence for d, ties by
/// ascending full-row lexicographic order).
struct GroupSplit {
  std::vector<std::vector<std::vector<Eigen::Index>>> members;
};

GroupSplit split_groups(const ConfidenceMatrix& matrix, const GroupConfig& cfg);

/// Mean vector of the group members (rows of `group`). Rejects empty groups.
template <typename Derived>
Eigen::VectorXd group_mean(const Eigen::MatrixBase<Derived>& group) {
  if (group.rows() == 0) throw std::invalid_argument("group_mean: empty group");
  return group.colwise().sum().transpose() / double(group.rows());
}

/// Cross-category covariance against coordinate c:
///   (1/n) * sum_i (z_i - mu) * ((z_i - mu)[c]).
/// Entry [c] of the result is the biased variance of coordinate c.
template <typename Derived>
Eigen::VectorXd group_cov(const Eigen::MatrixBase<Derived>& group, Eigen::Index c) {
  if (group.rows() == 0) throw std::invalid_argument("group_cov: empty group");
  if (c < 0 || c >= group.cols()) throw std::invalid_argument("group_cov: bad category");
  const Eigen::VectorXd mu = group_mean(group);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(group.cols());
  for (Eigen::Index i = 0; i < group.rows(); ++i) {
    const Eigen::VectorXd dev = group.row(i).transpose() - mu;
    out += dev * dev(c);
  }
  return out / double(group.rows());
}

/// Coordinatewise biased variance of the group members.
template <typename Derived>
Eigen::VectorXd group_var(const Eigen::MatrixBase<Derived>& group) {
  if (group.rows() == 0) throw std::invalid_argument("group_var: empty group");
  const Eigen::VectorXd mu = group_mean(group);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(group.cols());
  for (Eigen::Index i = 0; i < group.rows(); ++i) {
    const Eigen::VectorXd dev = group.row(i).transpose() - mu;
    out += dev.cwiseProduct(dev);
  }
  return out / double(group.rows());
}

/// Fixed-shape tensor summary of one dataset.
///   f_mean[g](d, :)    mean vector of group g of category d
///   f_cov[g](d, :)     covariance-against-d vector of group g of category d
///   f_var_all[c](g, d) variance of group g of category d at coordinate c
/// Empty groups (fixed mode) contribute zero rows; group_presence(d, g) is
/// false for them.
struct SetRepresentation {
  std::vector<Eigen::MatrixXd> f_mean;
  std::vector<Eigen::MatrixXd> f_cov;
  std::vector<Eigen::MatrixXd> f_var_all;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> group_presence;

  Eigen::Index num_categories() const { return group_presence.rows(); }
  int num_groups() const { return static_cast<int>(group_presence.cols()); }
};

SetRepresentation extract_representation(const ConfidenceMatrix& matrix,
                                         const GroupConfig& cfg);

/// Debug dump / reload of representations, one JSON file for a whole corpus.
void save_representations(const std::vector<std::string>& ids,
                          const std::vector<SetRepresentation>& reps,
                          const GroupConfig& cfg,
                          const std::filesystem::path& path);

struct RepresentationFile {
  std::vector<std::string> ids;
  std::vector<SetRepresentation> reps;
  GroupConfig config;
  int num_categories = 0;
};

RepresentationFile load_representations(const std::filesystem::path& path);

}  // namespace autoeval
