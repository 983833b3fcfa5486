#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>

#include "autoeval/data.hpp"
#include "autoeval/random.hpp"
#include "autoeval/representation.hpp"

namespace testutil {

/// Random row-stochastic matrix (softmax of gaussian logits).
inline Eigen::MatrixXd random_simplex_matrix(Eigen::Index n, Eigen::Index c,
                                             autoeval::SplitMix64& rng) {
  Eigen::MatrixXd z(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd logits(c);
    for (Eigen::Index j = 0; j < c; ++j) logits(j) = 2.0 * rng.next_normal();
    const Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp();
    z.row(i) = e / e.sum();
  }
  return z;
}

inline autoeval::ConfidenceMatrix random_confidence(Eigen::Index n, Eigen::Index c,
                                                    autoeval::SplitMix64& rng) {
  return autoeval::ConfidenceMatrix::validated(random_simplex_matrix(n, c, rng));
}

/// Random representation tensors with plausible scales; for regressor tests
/// that only care about shapes and numerics.
inline autoeval::SetRepresentation random_representation(int c, int g,
                                                         autoeval::SplitMix64& rng) {
  autoeval::SetRepresentation rep;
  for (int gi = 0; gi < g; ++gi) {
    Eigen::MatrixXd m(c, c), v(c, c);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j) {
        m(i, j) = rng.next_unit();
        v(i, j) = 0.1 * (rng.next_unit() - 0.5);
      }
    }
    rep.f_mean.push_back(m);
    rep.f_cov.push_back(v);
  }
  for (int k = 0; k < c; ++k) {
    Eigen::MatrixXd s(g, c);
    for (int gi = 0; gi < g; ++gi) {
      for (int d = 0; d < c; ++d) s(gi, d) = 0.05 * rng.next_unit();
    }
    rep.f_var_all.push_back(s);
  }
  rep.group_presence.setConstant(c, g, true);
  return rep;
}

inline bool exact_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("autoeval_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
