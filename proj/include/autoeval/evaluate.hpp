#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "autoeval/data.hpp"

namespace autoeval {

/// RMSE report comparing predicted against true accuracies. The category
/// RMSE pools all (set, category) pairs where both sides are defined;
/// skipped pairs are counted so the pooling is auditable.
struct EvalReport {
  double overall_rmse_pct = 0.0;
  double category_rmse_pct = 0.0;
  std::size_t num_sets = 0;
  std::size_t num_category_pairs = 0;
  std::size_t num_skipped_category_pairs = 0;
  std::vector<double> per_category_rmse_pct;  // NaN where no pairs exist

  struct SetRow {
    std::string id;
    double true_overall = 0.0;
    double pred_overall = 0.0;
  };
  std::vector<SetRow> per_set;

  struct BaselineRow {
    std::string name;
    double overall_rmse_pct = 0.0;
    double category_rmse_pct = 0.0;
  };
  std::vector<BaselineRow> baselines;

  nlohmann::ordered_json config_echo;
};

/// ids/predictions/truths are parallel; truths must have defined overall.
EvalReport evaluate(const std::vector<std::string>& ids,
                    const std::vector<AccuracyVector>& predictions,
                    const std::vector<AccuracyVector>& truths);

nlohmann::ordered_json report_to_json(const EvalReport& report);

/// Aligned-column text table, percentages to 2 decimals.
std::string report_table(const EvalReport& report);

/// Predictions CSV: header "id,overall,a0,...,a{C-1}"; undefined entries are
/// written as nan.
void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<AccuracyVector>& predictions,
                           const std::filesystem::path& path);

struct PredictionsFile {
  std::vector<std::string> ids;
  std::vector<AccuracyVector> predictions;
};

PredictionsFile read_predictions_csv(const std::filesystem::path& path);

}  // namespace autoeval
