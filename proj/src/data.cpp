#include "autoeval/data.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace autoeval {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error(msg);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ConfidenceMatrix ConfidenceMatrix::validated(Eigen::MatrixXd values) {
  const Eigen::Index n = values.rows();
  const Eigen::Index c = values.cols();
  if (n < 3) {
    throw std::invalid_argument("confidence matrix needs at least 3 instances, got " +
                                std::to_string(n));
  }
  if (c < 2) {
    throw std::invalid_argument("confidence matrix needs at least 2 categories, got " +
                                std::to_string(c));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw std::invalid_argument("confidence out of [0,1] at row " +
                                    std::to_string(i) + ", column " +
                                    std::to_string(j));
      }
    }
    const double sum = values.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTol) {
      throw std::invalid_argument("row-sum violation at row " + std::to_string(i) +
                                  ": sum " + format_double(sum));
    }
    // Renormalize only when the deviation exceeds floating-point noise, so
    // that reloading a saved matrix reproduces it bit-exactly.
    if (std::abs(sum - 1.0) > 1e-12) values.row(i) /= sum;
  }
  return ConfidenceMatrix(std::move(values));
}

Eigen::Index argmax_category(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) > row(best)) best = j;
  }
  return best;
}

AccuracyVector compute_accuracy(const ConfidenceMatrix& matrix,
                                const std::vector<int>& labels) {
  const Eigen::Index n = matrix.num_instances();
  const Eigen::Index c = matrix.num_categories();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                " does not match instance count " + std::to_string(n));
  }
  std::vector<long> total(c, 0), correct(c, 0);
  long overall_correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) {
      throw std::invalid_argument("label " + std::to_string(y) + " out of range at row " +
                                  std::to_string(i));
    }
    ++total[y];
    if (argmax_category(matrix.values().row(i)) == y) {
      ++correct[y];
      ++overall_correct;
    }
  }
  AccuracyVector acc;
  acc.overall = static_cast<double>(overall_correct) / static_cast<double>(n);
  acc.per_category.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    acc.per_category(k) = total[k] == 0
                              ? std::numeric_limits<double>::quiet_NaN()
                              : static_cast<double>(correct[k]) / static_cast<double>(total[k]);
  }
  return acc;
}

MetaSet load_confidence_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  bool has_labels = false;
  std::size_t first_conf = 0;
  if (!header.empty() && header[0] == "label") {
    has_labels = true;
    first_conf = 1;
  }
  const std::size_t c = header.size() - first_conf;
  if (c < 2) fail(path.string() + ": header must list at least 2 confidence columns");
  for (std::size_t j = 0; j < c; ++j) {
    if (header[first_conf + j] != "c" + std::to_string(j)) {
      fail(path.string() + ": line 1: expected column header c" + std::to_string(j) +
           ", got '" + header[first_conf + j] + "'");
    }
  }

  std::vector<double> flat;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(path.string() + ": line " + std::to_string(line_no) + ": expected " +
           std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    try {
      if (has_labels) {
        std::size_t pos = 0;
        const int y = std::stoi(fields[0], &pos);
        if (pos != fields[0].size()) throw std::invalid_argument(fields[0]);
        if (y < 0 || y >= static_cast<int>(c)) {
          fail(path.string() + ": line " + std::to_string(line_no) + ": label " +
               std::to_string(y) + " out of range [0, " + std::to_string(c) + ")");
        }
        labels.push_back(y);
      }
      for (std::size_t j = 0; j < c; ++j) {
        std::size_t pos = 0;
        flat.push_back(std::stod(fields[first_conf + j], &pos));
        if (pos != fields[first_conf + j].size()) {
          throw std::invalid_argument(fields[first_conf + j]);
        }
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception&) {
      fail(path.string() + ": line " + std::to_string(line_no) + ": malformed row");
    }
  }

  const std::size_t n = flat.size() / c;
  Eigen::MatrixXd values(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) values(i, j) = flat[i * c + j];
  }

  MetaSet set{path.stem().string(),
              [&] {
                try {
                  return ConfidenceMatrix::validated(std::move(values));
                } catch (const std::invalid_argument& e) {
                  fail(path.string() + ": " + e.what());
                }
              }(),
              std::nullopt, std::nullopt};
  if (has_labels) {
    set.labels = std::move(labels);
    set.accuracy = compute_accuracy(set.matrix, *set.labels);
  }
  return set;
}

void save_confidence_csv(const MetaSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path.string());
  const Eigen::Index n = set.matrix.num_instances();
  const Eigen::Index c = set.matrix.num_categories();

  if (set.labels) out << "label,";
  for (Eigen::Index j = 0; j < c; ++j) out << (j ? "," : "") << "c" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    if (set.labels) out << (*set.labels)[i] << ",";
    for (Eigen::Index j = 0; j < c; ++j) {
      out << (j ? "," : "") << format_double(set.matrix.values()(i, j));
    }
    out << "\n";
  }
  if (!out) fail("write failure on " + path.string());
}

std::filesystem::path save_corpus(const std::vector<MetaSet>& corpus,
                                  const std::filesystem::path& dir) {
  if (corpus.empty()) fail("refusing to save an empty corpus");
  const Eigen::Index c = corpus.front().matrix.num_categories();
  for (const MetaSet& set : corpus) {
    if (set.matrix.num_categories() != c) {
      fail("mixed category counts in corpus: " + std::to_string(c) + " vs " +
           std::to_string(set.matrix.num_categories()) + " (set '" + set.id + "')");
    }
  }
  std::filesystem::create_directories(dir);

  ordered_json manifest;
  manifest["format_version"] = 1;
  manifest["num_categories"] = static_cast<int>(c);
  manifest["meta_sets"] = ordered_json::array();
  for (const MetaSet& set : corpus) {
    const std::string filename = set.id + ".csv";
    save_confidence_csv(set, dir / filename);
    ordered_json entry;
    entry["id"] = set.id;
    entry["path"] = filename;
    if (set.accuracy) {
      entry["overall_acc"] = set.accuracy->overall;
      ordered_json cats = ordered_json::array();
      for (Eigen::Index k = 0; k < c; ++k) {
        const double a = set.accuracy->per_category(k);
        if (is_defined(a)) {
          cats.push_back(a);
        } else {
          cats.push_back(nullptr);
        }
      }
      entry["category_acc"] = std::move(cats);
    } else {
      entry["overall_acc"] = nullptr;
      entry["category_acc"] = nullptr;
    }
    manifest["meta_sets"].push_back(std::move(entry));
  }

  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) fail("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  if (!out) fail("write failure on " + manifest_path.string());
  return manifest_path;
}

namespace {

ordered_json read_manifest_json(std::filesystem::path& manifest_path) {
  if (std::filesystem::is_directory(manifest_path)) {
    manifest_path /= "manifest.json";
  }
  std::ifstream in(manifest_path);
  if (!in) fail("cannot open " + manifest_path.string());

  ordered_json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    fail(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != 1) {
    fail(manifest_path.string() + ": unsupported format_version");
  }
  return manifest;
}

}  // namespace

std::vector<MetaSet> load_corpus(const std::filesystem::path& manifest_or_dir) {
  std::filesystem::path manifest_path = manifest_or_dir;
  const ordered_json manifest = read_manifest_json(manifest_path);

  const std::filesystem::path base = manifest_path.parent_path();
  std::vector<MetaSet> corpus;
  for (const auto& entry : manifest.at("meta_sets")) {
    MetaSet set = load_confidence_csv(base / entry.at("path").get<std::string>());
    set.id = entry.at("id").get<std::string>();
    corpus.push_back(std::move(set));
  }
  return corpus;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_or_dir) {
  std::filesystem::path manifest_path = manifest_or_dir;
  const ordered_json manifest = read_manifest_json(manifest_path);
  const Eigen::Index c = manifest.at("num_categories").get<int>();

  std::vector<ManifestEntry> entries;
  for (const auto& entry : manifest.at("meta_sets")) {
    ManifestEntry e;
    e.id = entry.at("id").get<std::string>();
    e.path = entry.at("path").get<std::string>();
    if (!entry.at("overall_acc").is_null()) {
      AccuracyVector acc;
      acc.overall = entry.at("overall_acc").get<double>();
      acc.per_category.resize(c);
      const auto& cats = entry.at("category_acc");
      if (static_cast<Eigen::Index>(cats.size()) != c) {
        fail(manifest_path.string() + ": category_acc length mismatch for '" + e.id + "'");
      }
      for (Eigen::Index k = 0; k < c; ++k) {
        acc.per_category(k) = cats[k].is_null()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : cats[k].get<double>();
      }
      e.accuracy = std::move(acc);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace autoeval
