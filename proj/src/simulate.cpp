#include "autoeval/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "autoeval/random.hpp"

namespace autoeval {

namespace {

int sample_label(const Eigen::VectorXd& prior, SplitMix64& rng) {
  const double u = rng.next_unit();
  double cum = 0.0;
  for (Eigen::Index k = 0; k < prior.size(); ++k) {
    cum += prior(k);
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(prior.size() - 1);
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& logits) {
  const Eigen::RowVectorXd shifted =
      (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

}  // namespace

ShiftParams ShiftParams::defaults(int num_categories) {
  ShiftParams p;
  p.confusion_matrix = Eigen::MatrixXd::Zero(num_categories, num_categories);
  for (int y = 0; y < num_categories; ++y) {
    p.confusion_matrix(y, (y + 1) % num_categories) = 1.0;
  }
  p.prior = Eigen::VectorXd::Constant(num_categories, 1.0 / num_categories);
  return p;
}

void ShiftParams::validate() const {
  if (signal < 0.0) throw std::invalid_argument("signal must be >= 0");
  if (noise < 0.0) throw std::invalid_argument("noise must be >= 0");
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (confusion < 0.0) throw std::invalid_argument("confusion must be >= 0");
  const Eigen::Index c = prior.size();
  if (c < 2) throw std::invalid_argument("need at least 2 categories");
  if (confusion_matrix.rows() != c || confusion_matrix.cols() != c) {
    throw std::invalid_argument("confusion matrix must be C x C");
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    if (confusion_matrix(k, k) != 0.0) {
      throw std::invalid_argument("confusion matrix diagonal must be zero");
    }
    if (prior(k) < 0.0) throw std::invalid_argument("prior entries must be >= 0");
  }
  if (std::abs(prior.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("prior must sum to 1 within 1e-9");
  }
}

void CorpusConfig::validate() const {
  if (num_sets < 1) throw std::invalid_argument("num_sets must be >= 1");
  if (num_instances < 3) throw std::invalid_argument("num_instances must be >= 3");
  if (num_categories < 2) throw std::invalid_argument("num_categories must be >= 2");
  for (const auto* r : {&signal, &noise, &temperature, &confusion}) {
    if (r->lo > r->hi) throw std::invalid_argument("parameter range has lo > hi");
  }
  if (signal.lo < 0 || noise.lo < 0 || confusion.lo < 0 || temperature.lo <= 0) {
    throw std::invalid_argument("parameter range outside the valid domain");
  }
  if (confusion_matrix.size() != 0 &&
      (confusion_matrix.rows() != num_categories ||
       confusion_matrix.cols() != num_categories)) {
    throw std::invalid_argument("confusion matrix must be C x C");
  }
}

MetaSet generate_metaset(const ShiftParams& params, int n, std::uint64_t seed,
                         std::string id, bool require_all_categories) {
  params.validate();
  const int c = params.num_categories();
  if (n < 3) throw std::invalid_argument("need at least 3 instances");
  if (require_all_categories && n < c) {
    throw std::invalid_argument("category presence needs n >= C (n=" +
                                std::to_string(n) + ", C=" + std::to_string(c) + ")");
  }

  SplitMix64 rng(seed);

  std::vector<int> labels(n);
  SplitMix64 label_rng = rng.fork(0);
  for (int attempt = 0;; ++attempt) {
    std::vector<bool> seen(c, false);
    for (int i = 0; i < n; ++i) {
      labels[i] = sample_label(params.prior, label_rng);
      seen[labels[i]] = true;
    }
    if (!require_all_categories ||
        std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      break;
    }
    if (attempt > 100000) {
      throw std::runtime_error("could not draw all categories; prior too skewed");
    }
  }

  Eigen::MatrixXd z(n, c);
  for (int i = 0; i < n; ++i) {
    SplitMix64 inst = rng.fork(static_cast<std::uint64_t>(i) + 1);
    Eigen::RowVectorXd logits = params.confusion * params.confusion_matrix.row(labels[i]);
    logits(labels[i]) += params.signal;
    for (int j = 0; j < c; ++j) logits(j) += params.noise * inst.next_normal();
    z.row(i) = softmax(logits / params.temperature);
  }

  MetaSet set{std::move(id), ConfidenceMatrix::validated(std::move(z)),
              std::move(labels), std::nullopt};
  set.accuracy = compute_accuracy(set.matrix, *set.labels);
  return set;
}

std::vector<MetaSet> generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const SplitMix64 master(cfg.seed);

  std::vector<MetaSet> corpus;
  corpus.reserve(cfg.num_sets);
  for (int i = 0; i < cfg.num_sets; ++i) {
    SplitMix64 param_rng = master.fork(static_cast<std::uint64_t>(i));
    ShiftParams p = ShiftParams::defaults(cfg.num_categories);
    if (cfg.confusion_matrix.size() != 0) p.confusion_matrix = cfg.confusion_matrix;
    p.signal = param_rng.next_in(cfg.signal.lo, cfg.signal.hi);
    p.noise = param_rng.next_in(cfg.noise.lo, cfg.noise.hi);
    p.temperature = param_rng.next_in(cfg.temperature.lo, cfg.temperature.hi);
    p.confusion = param_rng.next_in(cfg.confusion.lo, cfg.confusion.hi);

    char name[32];
    std::snprintf(name, sizeof(name), "set_%04d", i);
    corpus.push_back(
        generate_metaset(p, cfg.num_instances, param_rng.next(), name));
  }
  return corpus;
}

namespace {

// Plain numeric CSV, no header, square.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ": malformed number '" + field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw std::runtime_error(path.string() + ": ragged matrix row");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

CorpusConfig load_corpus_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  CorpusConfig cfg;
  std::map<std::string, double*> scalar_keys{
      {"signal_min", &cfg.signal.lo},       {"signal_max", &cfg.signal.hi},
      {"noise_min", &cfg.noise.lo},         {"noise_max", &cfg.noise.hi},
      {"temperature_min", &cfg.temperature.lo},
      {"temperature_max", &cfg.temperature.hi},
      {"confusion_min", &cfg.confusion.lo}, {"confusion_max", &cfg.confusion.hi},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string key, eq, value;
    std::istringstream ss(line);
    if (!(ss >> key)) continue;
    if (!(ss >> eq >> value) || eq != "=") {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": expected 'key = value'");
    }
    try {
      if (key == "num_sets") cfg.num_sets = std::stoi(value);
      else if (key == "num_instances") cfg.num_instances = std::stoi(value);
      else if (key == "num_categories") cfg.num_categories = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "confusion_matrix_file") {
        std::filesystem::path mpath(value);
        if (mpath.is_relative()) mpath = path.parent_path() / mpath;
        cfg.confusion_matrix = load_matrix_csv(mpath);
      }
      else if (auto it = scalar_keys.find(key); it != scalar_keys.end())
        *it->second = std::stod(value);
      else
        throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                                 ": unknown key '" + key + "'");
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": bad value '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace autoeval
