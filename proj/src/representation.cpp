#include "autoeval/representation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>

namespace autoeval {

namespace {

using ordered_json = nlohmann::ordered_json;

// Orders instances for one category: descending confidence, then ascending
// lexicographic full row, then ascending index. Identical rows contribute
// identical values, so the resulting statistics are invariant under any
// input row permutation, bit for bit.
std::vector<Eigen::Index> sorted_indices(const Eigen::MatrixXd& z, Eigen::Index d) {
  std::vector<Eigen::Index> idx(z.rows());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (z(a, d) != z(b, d)) return z(a, d) > z(b, d);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (z(a, j) != z(b, j)) return z(a, j) < z(b, j);
    }
    return a < b;
  });
  return idx;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& z,
                            const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(rows.size(), z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = z.row(rows[i]);
  return out;
}

std::vector<std::vector<double>> matrix_to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[i].assign(m.row(i).begin(), m.row(i).end());
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows,
                               Eigen::Index cols) {
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
      throw std::runtime_error("representation file: ragged tensor row");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

const char* group_name(Group g) {
  switch (g) {
    case Group::High: return "high";
    case Group::Medium: return "medium";
    case Group::Low: return "low";
  }
  return "?";
}

std::vector<Group> GroupConfig::enabled() const {
  std::vector<Group> out;
  if (high) out.push_back(Group::High);
  if (medium) out.push_back(Group::Medium);
  if (low) out.push_back(Group::Low);
  return out;
}

void GroupConfig::validate() const {
  if (!high && !medium && !low) {
    throw std::invalid_argument("at least one confidence group must be enabled");
  }
  if (mode == Mode::Fixed) {
    if (!(t_low > 0.0 && t_low < 1.0 && t_high > 0.0 && t_high < 1.0)) {
      throw std::invalid_argument("fixed thresholds must lie in (0,1)");
    }
    if (!(t_low < t_high)) {
      throw std::invalid_argument("fixed thresholds must satisfy t_low < t_high");
    }
  }
}

GroupSplit split_groups(const ConfidenceMatrix& matrix, const GroupConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd& z = matrix.values();
  const Eigen::Index n = z.rows();
  const Eigen::Index c = z.cols();
  const std::vector<Group> groups = cfg.enabled();

  GroupSplit split;
  split.members.resize(c);
  for (Eigen::Index d = 0; d < c; ++d) {
    const std::vector<Eigen::Index> order = sorted_indices(z, d);
    split.members[d].resize(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      std::vector<Eigen::Index>& members = split.members[d][gi];
      if (cfg.mode == GroupConfig::Mode::Quantile) {
        // Contiguous blocks of the descending order: h = ceil(n/3),
        // m = ceil((n-h)/2), l = the rest.
        const Eigen::Index h = (n + 2) / 3;
        const Eigen::Index m = (n - h + 1) / 2;
        Eigen::Index begin = 0, end = 0;
        switch (groups[gi]) {
          case Group::High: begin = 0; end = h; break;
          case Group::Medium: begin = h; end = h + m; break;
          case Group::Low: begin = h + m; end = n; break;
        }
        members.assign(order.begin() + begin, order.begin() + end);
      } else {
        for (Eigen::Index i : order) {
          const double v = z(i, d);
          const bool in_group = (groups[gi] == Group::High && v >= cfg.t_high) ||
                                (groups[gi] == Group::Low && v < cfg.t_low) ||
                                (groups[gi] == Group::Medium && v >= cfg.t_low &&
                                 v < cfg.t_high);
          if (in_group) members.push_back(i);
        }
      }
    }
  }
  return split;
}

SetRepresentation extract_representation(const ConfidenceMatrix& matrix,
                                         const GroupConfig& cfg) {
  const GroupSplit split = split_groups(matrix, cfg);
  const Eigen::MatrixXd& z = matrix.values();
  const Eigen::Index c = z.cols();
  const int g = cfg.num_groups();

  SetRepresentation rep;
  rep.f_mean.assign(g, Eigen::MatrixXd::Zero(c, c));
  rep.f_cov.assign(g, Eigen::MatrixXd::Zero(c, c));
  rep.f_var_all.assign(c, Eigen::MatrixXd::Zero(g, c));
  rep.group_presence.setConstant(c, g, false);

  for (Eigen::Index d = 0; d < c; ++d) {
    for (int gi = 0; gi < g; ++gi) {
      const std::vector<Eigen::Index>& members = split.members[d][gi];
      if (members.empty()) continue;
      const Eigen::MatrixXd rows = gather_rows(z, members);
      rep.f_mean[gi].row(d) = group_mean(rows).transpose();
      rep.f_cov[gi].row(d) = group_cov(rows, d).transpose();
      const Eigen::VectorXd var = group_var(rows);
      for (Eigen::Index k = 0; k < c; ++k) rep.f_var_all[k](gi, d) = var(k);
      rep.group_presence(d, gi) = true;
    }
  }
  return rep;
}

void save_representations(const std::vector<std::string>& ids,
                          const std::vector<SetRepresentation>& reps,
                          const GroupConfig& cfg,
                          const std::filesystem::path& path) {
  if (ids.size() != reps.size()) {
    throw std::invalid_argument("save_representations: ids/reps size mismatch");
  }
  if (reps.empty()) throw std::invalid_argument("save_representations: empty corpus");

  ordered_json doc;
  doc["format_version"] = 1;
  doc["num_categories"] = static_cast<int>(reps.front().num_categories());
  doc["num_groups"] = reps.front().num_groups();
  ordered_json jc;
  jc["mode"] = cfg.mode == GroupConfig::Mode::Quantile ? "quantile" : "fixed";
  jc["t_low"] = cfg.t_low;
  jc["t_high"] = cfg.t_high;
  ordered_json names = ordered_json::array();
  for (Group gr : cfg.enabled()) names.push_back(group_name(gr));
  jc["groups"] = std::move(names);
  doc["group_config"] = std::move(jc);

  doc["meta_sets"] = ordered_json::array();
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const SetRepresentation& rep = reps[i];
    ordered_json entry;
    entry["id"] = ids[i];
    ordered_json fm = ordered_json::array(), fc = ordered_json::array(),
                 fv = ordered_json::array(), pr = ordered_json::array();
    for (const Eigen::MatrixXd& slice : rep.f_mean) fm.push_back(matrix_to_rows(slice));
    for (const Eigen::MatrixXd& slice : rep.f_cov) fc.push_back(matrix_to_rows(slice));
    for (const Eigen::MatrixXd& slice : rep.f_var_all) fv.push_back(matrix_to_rows(slice));
    for (Eigen::Index d = 0; d < rep.group_presence.rows(); ++d) {
      std::vector<bool> row(rep.group_presence.cols());
      for (Eigen::Index gi = 0; gi < rep.group_presence.cols(); ++gi) {
        row[gi] = rep.group_presence(d, gi);
      }
      pr.push_back(row);
    }
    entry["f_mean"] = std::move(fm);
    entry["f_cov"] = std::move(fc);
    entry["f_var_all"] = std::move(fv);
    entry["group_presence"] = std::move(pr);
    doc["meta_sets"].push_back(std::move(entry));
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failure on " + path.string());
}

RepresentationFile load_representations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ordered_json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (doc.value("format_version", 0) != 1) {
    throw std::runtime_error(path.string() + ": unsupported format_version");
  }

  RepresentationFile file;
  file.num_categories = doc.at("num_categories").get<int>();
  const int g = doc.at("num_groups").get<int>();

  const auto& jc = doc.at("group_config");
  file.config.mode = jc.at("mode").get<std::string>() == "fixed"
                         ? GroupConfig::Mode::Fixed
                         : GroupConfig::Mode::Quantile;
  file.config.t_low = jc.at("t_low").get<double>();
  file.config.t_high = jc.at("t_high").get<double>();
  file.config.high = file.config.medium = file.config.low = false;
  for (const auto& name : jc.at("groups")) {
    const std::string s = name.get<std::string>();
    if (s == "high") file.config.high = true;
    else if (s == "medium") file.config.medium = true;
    else if (s == "low") file.config.low = true;
    else throw std::runtime_error(path.string() + ": unknown group '" + s + "'");
  }
  if (file.config.num_groups() != g) {
    throw std::runtime_error(path.string() + ": group list disagrees with num_groups");
  }

  const Eigen::Index c = file.num_categories;
  for (const auto& entry : doc.at("meta_sets")) {
    SetRepresentation rep;
    for (const auto& slice : entry.at("f_mean")) {
      rep.f_mean.push_back(rows_to_matrix(slice.get<std::vector<std::vector<double>>>(), c));
    }
    for (const auto& slice : entry.at("f_cov")) {
      rep.f_cov.push_back(rows_to_matrix(slice.get<std::vector<std::vector<double>>>(), c));
    }
    for (const auto& slice : entry.at("f_var_all")) {
      rep.f_var_all.push_back(rows_to_matrix(slice.get<std::vector<std::vector<double>>>(), c));
    }
    if (static_cast<int>(rep.f_mean.size()) != g ||
        static_cast<int>(rep.f_cov.size()) != g ||
        static_cast<Eigen::Index>(rep.f_var_all.size()) != c) {
      throw std::runtime_error(path.string() + ": tensor shape mismatch for set '" +
                               entry.at("id").get<std::string>() + "'");
    }
    const auto presence = entry.at("group_presence").get<std::vector<std::vector<bool>>>();
    rep.group_presence.setConstant(c, g, false);
    for (Eigen::Index d = 0; d < c; ++d) {
      for (int gi = 0; gi < g; ++gi) rep.group_presence(d, gi) = presence.at(d).at(gi);
    }
    file.ids.push_back(entry.at("id").get<std::string>());
    file.reps.push_back(std::move(rep));
  }
  return file;
}

}  // namespace autoeval
