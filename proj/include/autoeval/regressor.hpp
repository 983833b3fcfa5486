#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "autoeval/data.hpp"
#include "autoeval/representation.hpp"

namespace autoeval {

/// Architecture switches for the multi-branch accuracy regressor. The mean
/// and covariance branches feed a shared global feature that regresses the
/// overall accuracy; a shared category head regresses per-category accuracy
/// from the global feature plus that category's variance slice.
struct ModelConfig {
  int num_categories = 2;
  int num_groups = 3;
  bool use_mean = true;
  bool use_cov = true;
  bool use_var = true;
  int branch_hidden = 256;
  int branch_out = 64;
  int global_hidden = 64;
  int head_hidden = 64;
  double lambda = 1.0;  // weight of the category loss term

  int branch_input() const { return num_groups * num_categories * num_categories; }
  int var_input() const { return num_groups * num_categories; }
  int global_dim() const { return 2 * branch_out; }
  int head_input() const { return global_dim() + var_input(); }
  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;  // out
};

/// All trainable tensors. The main branch is everything except the category
/// head; the category loss never updates the main branch.
struct Parameters {
  DenseLayer mean1, mean2;
  DenseLayer cov1, cov2;
  DenseLayer global1, global_out;
  DenseLayer head1, head_out;
};

/// Gradients mirror the parameter layout.
using GradientBundle = Parameters;

/// Fixed traversal order (main branch first, category head last); shared by
/// initialization, the optimizer and serialization.
std::vector<std::pair<std::string, DenseLayer*>> layer_refs(Parameters& p);
std::vector<std::pair<std::string, const DenseLayer*>> layer_refs(const Parameters& p);
bool is_category_layer(const std::string& name);

/// Per-feature affine normalization, frozen at training time.
struct Standardization {
  Eigen::VectorXd mean_mu, mean_sd;  // flattened f_mean features
  Eigen::VectorXd cov_mu, cov_sd;    // flattened f_cov features
  Eigen::VectorXd var_mu, var_sd;    // flattened variance slices, pooled
                                     // over all categories
};

struct MultiBranchModel {
  ModelConfig config;
  Standardization standardization;
  Parameters params;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;  // in meta-sets
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct ForwardResult {
  double overall = 0.0;
  Eigen::VectorXd category;        // C predictions, all in (0,1)
  Eigen::VectorXd global_feature;  // 2 * branch_out
};

struct LossTerms {
  double overall_term = 0.0;   // (overall_pred - A)^2
  double category_term = 0.0;  // mean over defined categories, unweighted
  double total = 0.0;          // overall_term + lambda * category_term
};

/// Flattening order used for branch inputs: group slice, then category row,
/// then coordinate.
Eigen::VectorXd flatten_slices(const std::vector<Eigen::MatrixXd>& slices);

Parameters zero_parameters(const ModelConfig& cfg);
Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);
Standardization compute_standardization(const std::vector<SetRepresentation>& reps,
                                        const ModelConfig& cfg);

ForwardResult forward(const MultiBranchModel& model, const SetRepresentation& rep);

LossTerms loss_terms(double overall_pred, const Eigen::VectorXd& category_preds,
                     const AccuracyVector& target, double lambda);

/// Gradients of the loss at (model, rep, target). Main-branch entries are
/// the gradient of the overall term alone; the category term sees the
/// global feature as a constant and only reaches the category head.
GradientBundle backward(const MultiBranchModel& model, const SetRepresentation& rep,
                        const AccuracyVector& target, double lambda,
                        LossTerms* terms = nullptr);

struct TrainResult {
  MultiBranchModel model;
  std::vector<double> loss_trace;  // mean per-set total loss, one per epoch
};

TrainResult train(const std::vector<SetRepresentation>& reps,
                  const std::vector<AccuracyVector>& targets,
                  const TrainConfig& tcfg, const ModelConfig& mcfg);

AccuracyVector predict(const MultiBranchModel& model, const SetRepresentation& rep);

void save_model(const MultiBranchModel& model, const std::filesystem::path& path);
MultiBranchModel load_model(const std::filesystem::path& path);

}  // namespace autoeval
