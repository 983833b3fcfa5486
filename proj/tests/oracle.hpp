#pragma once

// Brute-force reference for the set representation, written against plain
// nested vectors with explicit loops. Deliberately independent of the
// library implementation so the two can be checked against each other.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

struct Config {
  bool quantile = true;
  double t_low = 1.0 / 3.0;
  double t_high = 2.0 / 3.0;
  bool high = true, medium = true, low = true;
};

struct Rep {
  // mean[g][d][j], cov[g][d][j], var_all[c][g][d], presence[d][g]
  std::vector<std::vector<std::vector<double>>> mean, cov;
  std::vector<std::vector<std::vector<double>>> var_all;
  std::vector<std::vector<bool>> presence;
};

inline std::vector<std::size_t> order_for_category(const Rows& z, std::size_t d) {
  std::vector<std::size_t> idx(z.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (z[a][d] != z[b][d]) return z[a][d] > z[b][d];
    if (z[a] != z[b]) return z[a] < z[b];
    return a < b;
  });
  return idx;
}

// groups[gi] holds member row indices for each enabled group of category d,
// enabled order high, medium, low.
inline std::vector<std::vector<std::size_t>> groups_for_category(const Rows& z,
                                                                 std::size_t d,
                                                                 const Config& cfg) {
  const std::vector<std::size_t> order = order_for_category(z, d);
  const std::size_t n = z.size();
  std::vector<std::vector<std::size_t>> blocks(3);
  if (cfg.quantile) {
    const std::size_t h = (n + 2) / 3;
    const std::size_t m = (n - h + 1) / 2;
    blocks[0].assign(order.begin(), order.begin() + h);
    blocks[1].assign(order.begin() + h, order.begin() + h + m);
    blocks[2].assign(order.begin() + h + m, order.end());
  } else {
    for (std::size_t i : order) {
      const double v = z[i][d];
      if (v >= cfg.t_high) blocks[0].push_back(i);
      else if (v < cfg.t_low) blocks[2].push_back(i);
      else blocks[1].push_back(i);
    }
  }
  std::vector<std::vector<std::size_t>> out;
  if (cfg.high) out.push_back(blocks[0]);
  if (cfg.medium) out.push_back(blocks[1]);
  if (cfg.low) out.push_back(blocks[2]);
  return out;
}

inline std::vector<double> naive_mean(const Rows& z,
                                      const std::vector<std::size_t>& members) {
  const std::size_t c = z[0].size();
  std::vector<double> mu(c, 0.0);
  for (std::size_t i : members) {
    for (std::size_t j = 0; j < c; ++j) mu[j] += z[i][j];
  }
  for (std::size_t j = 0; j < c; ++j) mu[j] /= double(members.size());
  return mu;
}

inline std::vector<double> naive_cov(const Rows& z,
                                     const std::vector<std::size_t>& members,
                                     std::size_t d) {
  const std::size_t c = z[0].size();
  const std::vector<double> mu = naive_mean(z, members);
  std::vector<double> out(c, 0.0);
  for (std::size_t i : members) {
    const double dev_d = z[i][d] - mu[d];
    for (std::size_t j = 0; j < c; ++j) out[j] += (z[i][j] - mu[j]) * dev_d;
  }
  for (std::size_t j = 0; j < c; ++j) out[j] /= double(members.size());
  return out;
}

inline std::vector<double> naive_var(const Rows& z,
                                     const std::vector<std::size_t>& members) {
  const std::size_t c = z[0].size();
  const std::vector<double> mu = naive_mean(z, members);
  std::vector<double> out(c, 0.0);
  for (std::size_t i : members) {
    for (std::size_t j = 0; j < c; ++j) {
      const double dev = z[i][j] - mu[j];
      out[j] += dev * dev;
    }
  }
  for (std::size_t j = 0; j < c; ++j) out[j] /= double(members.size());
  return out;
}

inline Rep extract(const Rows& z, const Config& cfg) {
  const std::size_t c = z[0].size();
  const std::size_t g = std::size_t(cfg.high) + std::size_t(cfg.medium) +
                        std::size_t(cfg.low);
  Rep rep;
  rep.mean.assign(g, std::vector<std::vector<double>>(c, std::vector<double>(c, 0.0)));
  rep.cov = rep.mean;
  rep.var_all.assign(c, std::vector<std::vector<double>>(g, std::vector<double>(c, 0.0)));
  rep.presence.assign(c, std::vector<bool>(g, false));

  for (std::size_t d = 0; d < c; ++d) {
    const auto groups = groups_for_category(z, d, cfg);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      if (groups[gi].empty()) continue;
      rep.presence[d][gi] = true;
      rep.mean[gi][d] = naive_mean(z, groups[gi]);
      rep.cov[gi][d] = naive_cov(z, groups[gi], d);
      const std::vector<double> var = naive_var(z, groups[gi]);
      for (std::size_t k = 0; k < c; ++k) rep.var_all[k][gi][d] = var[k];
    }
  }
  return rep;
}

}  // namespace oracle
