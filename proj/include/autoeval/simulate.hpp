#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "autoeval/data.hpp"

namespace autoeval {

/// Parametric model of a classifier under distribution shift. Per instance,
/// logits are signal * e_y + confusion * B[y,:] + gaussian noise, squashed
/// through a temperature softmax. Harder shifts (more noise, stronger
/// confusion, weaker signal) lower the resulting accuracy.
struct ShiftParams {
  double signal = 2.0;       // logit mass on the true category
  double noise = 1.0;        // stddev of i.i.d. logit noise
  double temperature = 1.0;  // softmax temperature
  double confusion = 0.0;    // scale of the structured confusion term
  Eigen::MatrixXd confusion_matrix;  // C x C, zero diagonal
  Eigen::VectorXd prior;             // C-simplex class prior

  /// Uniform prior and a ring confusion structure: category y leaks into
  /// (y+1) mod C, giving asymmetric per-category difficulty.
  static ShiftParams defaults(int num_categories);
  void validate() const;
  int num_categories() const { return static_cast<int>(prior.size()); }
};

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CorpusConfig {
  int num_sets = 300;
  int num_instances = 1000;
  int num_categories = 10;
  std::uint64_t seed = 0;
  ParamRange signal{0.5, 4.0};
  ParamRange noise{0.2, 3.0};
  ParamRange temperature{0.5, 3.0};
  ParamRange confusion{0.0, 2.0};
  Eigen::MatrixXd confusion_matrix;  // empty: ring default

  void validate() const;
};

/// Simulates one labeled meta-set. Labels are redrawn until every category
/// appears at least once (requires n >= C when enforced). Deterministic in
/// (params, n, seed).
MetaSet generate_metaset(const ShiftParams& params, int n, std::uint64_t seed,
                         std::string id = "set", bool require_all_categories = true);

/// Samples num_sets independent ShiftParams from the configured ranges and
/// one meta-set each. Per-set streams are forked from the master seed, so
/// the corpus is identical however the sets are scheduled.
std::vector<MetaSet> generate_corpus(const CorpusConfig& cfg);

/// Reads a flat "key = value" config file (# comments allowed). Unknown keys
/// are an error; missing keys keep their defaults.
CorpusConfig load_corpus_config(const std::filesystem::path& path);

}  // namespace autoeval
