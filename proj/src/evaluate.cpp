#include "autoeval/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace autoeval {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

EvalReport evaluate(const std::vector<std::string>& ids,
                    const std::vector<AccuracyVector>& predictions,
                    const std::vector<AccuracyVector>& truths) {
  if (predictions.size() != truths.size() || ids.size() != truths.size()) {
    throw std::invalid_argument("prediction/truth counts differ: " +
                                std::to_string(predictions.size()) + " vs " +
                                std::to_string(truths.size()));
  }
  if (truths.empty()) throw std::invalid_argument("nothing to evaluate");

  EvalReport report;
  report.num_sets = truths.size();

  double overall_sq = 0.0;
  const Eigen::Index c = truths.front().per_category.size();
  Eigen::VectorXd cat_sq = Eigen::VectorXd::Zero(c);
  Eigen::VectorXd cat_n = Eigen::VectorXd::Zero(c);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!is_defined(truths[i].overall)) {
      throw std::invalid_argument("truth overall accuracy undefined for set '" +
                                  ids[i] + "'");
    }
    if (truths[i].per_category.size() != c ||
        predictions[i].per_category.size() != c) {
      throw std::invalid_argument("category count mismatch for set '" + ids[i] + "'");
    }
    const double d = predictions[i].overall - truths[i].overall;
    overall_sq += d * d;
    report.per_set.push_back({ids[i], truths[i].overall, predictions[i].overall});

    for (Eigen::Index k = 0; k < c; ++k) {
      if (!is_defined(truths[i].per_category(k))) continue;
      if (!is_defined(predictions[i].per_category(k))) {
        ++report.num_skipped_category_pairs;
        continue;
      }
      const double dc = predictions[i].per_category(k) - truths[i].per_category(k);
      cat_sq(k) += dc * dc;
      cat_n(k) += 1.0;
    }
  }

  report.overall_rmse_pct = 100.0 * std::sqrt(overall_sq / double(truths.size()));
  const double pairs = cat_n.sum();
  report.num_category_pairs = static_cast<std::size_t>(pairs);
  report.category_rmse_pct =
      pairs > 0.0 ? 100.0 * std::sqrt(cat_sq.sum() / pairs) : kNan;
  report.per_category_rmse_pct.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    report.per_category_rmse_pct[k] =
        cat_n(k) > 0.0 ? 100.0 * std::sqrt(cat_sq(k) / cat_n(k)) : kNan;
  }
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["overall_rmse_pct"] = report.overall_rmse_pct;
  doc["category_rmse_pct"] = std::isnan(report.category_rmse_pct)
                                 ? nlohmann::ordered_json(nullptr)
                                 : nlohmann::ordered_json(report.category_rmse_pct);
  doc["num_sets"] = report.num_sets;
  doc["num_category_pairs"] = report.num_category_pairs;
  doc["num_skipped_category_pairs"] = report.num_skipped_category_pairs;
  doc["category_rmse_pooling"] = "all (set, defined category) pairs";

  nlohmann::ordered_json per_cat = nlohmann::ordered_json::array();
  for (double v : report.per_category_rmse_pct) {
    if (std::isnan(v)) {
      per_cat.push_back(nullptr);
    } else {
      per_cat.push_back(v);
    }
  }
  doc["per_category_rmse_pct"] = std::move(per_cat);

  nlohmann::ordered_json sets = nlohmann::ordered_json::array();
  for (const EvalReport::SetRow& row : report.per_set) {
    nlohmann::ordered_json r;
    r["id"] = row.id;
    r["true_overall"] = row.true_overall;
    r["pred_overall"] = row.pred_overall;
    r["residual"] = row.pred_overall - row.true_overall;
    sets.push_back(std::move(r));
  }
  doc["per_set"] = std::move(sets);

  if (!report.baselines.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const EvalReport::BaselineRow& row : report.baselines) {
      nlohmann::ordered_json r;
      r["name"] = row.name;
      r["overall_rmse_pct"] = row.overall_rmse_pct;
      r["category_rmse_pct"] = std::isnan(row.category_rmse_pct)
                                   ? nlohmann::ordered_json(nullptr)
                                   : nlohmann::ordered_json(row.category_rmse_pct);
      rows.push_back(std::move(r));
    }
    doc["baselines"] = std::move(rows);
  }
  if (!report.config_echo.is_null()) doc["config"] = report.config_echo;
  return doc;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-24s %14s %16s\n", "method",
                "overall RMSE%", "category RMSE%");
  out << line;
  std::snprintf(line, sizeof(line), "%-24s %14s %16s\n", "predictions",
                pct(report.overall_rmse_pct).c_str(),
                std::isnan(report.category_rmse_pct)
                    ? "-"
                    : pct(report.category_rmse_pct).c_str());
  out << line;
  for (const EvalReport::BaselineRow& row : report.baselines) {
    std::snprintf(line, sizeof(line), "%-24s %14s %16s\n", row.name.c_str(),
                  pct(row.overall_rmse_pct).c_str(),
                  std::isnan(row.category_rmse_pct) ? "-"
                                                    : pct(row.category_rmse_pct).c_str());
    out << line;
  }
  std::snprintf(line, sizeof(line),
                "sets=%zu  category_pairs=%zu  skipped_pairs=%zu\n",
                report.num_sets, report.num_category_pairs,
                report.num_skipped_category_pairs);
  out << line;
  return out.str();
}

void write_predictions_csv(const std::vector<std::string>& ids,
                           const std::vector<AccuracyVector>& predictions,
                           const std::filesystem::path& path) {
  if (ids.size() != predictions.size()) {
    throw std::invalid_argument("id/prediction count mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("no predictions to write");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Eigen::Index c = predictions.front().per_category.size();
  out << "id,overall";
  for (Eigen::Index k = 0; k < c; ++k) out << ",a" << k;
  out << "\n";
  char buf[40];
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << ids[i];
    std::snprintf(buf, sizeof(buf), "%.17g", predictions[i].overall);
    out << "," << buf;
    for (Eigen::Index k = 0; k < c; ++k) {
      const double v = predictions[i].per_category(k);
      if (is_defined(v)) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << "," << buf;
      } else {
        out << ",nan";
      }
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failure on " + path.string());
}

PredictionsFile read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  if (header.size() < 3 || header[0] != "id" || header[1] != "overall") {
    throw std::runtime_error(path.string() + ": bad predictions header");
  }
  const std::size_t c = header.size() - 2;

  PredictionsFile file;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != header.size()) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) + " fields");
    }
    AccuracyVector acc;
    acc.per_category.resize(c);
    try {
      acc.overall = std::stod(fields[1]);
      for (std::size_t k = 0; k < c; ++k) acc.per_category(k) = std::stod(fields[2 + k]);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": malformed number");
    }
    file.ids.push_back(fields[0]);
    file.predictions.push_back(std::move(acc));
  }
  return file;
}

}  // namespace autoeval
