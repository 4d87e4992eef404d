#include "ttnmf/net_model.hpp"

#include "ttnmf/errors.hpp"
#include "ttnmf/log.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <queue>
#include <random>

namespace ttnmf {

RoutingMatrix::RoutingMatrix(Matrix entries) : entries_(std::move(entries)) {
  for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      const double v = entries_(i, j);
      if (v != 0.0 && v != 1.0)
        throw ParseError(fmt::format("routing entry ({}, {}) = {} is not 0 or 1", i + 1, j + 1, v));
    }
  }
  Eigen::Index empty = 0;
  for (Eigen::Index j = 0; j < entries_.cols(); ++j)
    if (entries_.col(j).sum() == 0.0) ++empty;
  if (empty > 0) logger().warn("routing matrix has {} OD pair(s) that traverse no link", empty);
}

TrafficMatrix::TrafficMatrix(Matrix entries, std::optional<Matrix> mask)
    : entries_(std::move(entries)), mask_(std::move(mask)) {
  if (mask_) {
    if (mask_->rows() != entries_.rows() || mask_->cols() != entries_.cols())
      throw ShapeError(fmt::format("mask is {}x{} but traffic is {}x{}", mask_->rows(),
                                   mask_->cols(), entries_.rows(), entries_.cols()));
    for (Eigen::Index j = 0; j < mask_->cols(); ++j)
      for (Eigen::Index i = 0; i < mask_->rows(); ++i) {
        const double m = (*mask_)(i, j);
        if (m != 0.0 && m != 1.0)
          throw ParseError(fmt::format("mask entry ({}, {}) = {} is not 0 or 1", i + 1, j + 1, m));
      }
  }
  for (Eigen::Index j = 0; j < entries_.cols(); ++j)
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
      if (mask_ && (*mask_)(i, j) == 0.0) continue;
      if (!(entries_(i, j) >= 0.0))
        throw ParseError(fmt::format("traffic entry ({}, {}) = {} is negative or not a number",
                                     i + 1, j + 1, entries_(i, j)));
    }
}

LinkFlowMatrix::LinkFlowMatrix(Matrix entries) : entries_(std::move(entries)) {
  for (Eigen::Index j = 0; j < entries_.cols(); ++j)
    for (Eigen::Index i = 0; i < entries_.rows(); ++i)
      if (!(entries_(i, j) >= 0.0))
        throw ParseError(fmt::format("link flow ({}, {}) = {} is negative or not a number", i + 1,
                                     j + 1, entries_(i, j)));
}

LinkFlowMatrix compute_link_flows(const RoutingMatrix& routing, const TrafficMatrix& traffic) {
  if (routing.od_pairs() != traffic.od_pairs())
    throw ShapeError(fmt::format("routing has {} OD pairs but traffic has {} rows",
                                 routing.od_pairs(), traffic.od_pairs()));
  return LinkFlowMatrix(routing.entries() * traffic.entries());
}

namespace {

using Adjacency = std::vector<std::vector<int>>;

Adjacency random_connected_graph(int routers, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(p);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Adjacency adj(routers);
    for (int u = 0; u < routers; ++u)
      for (int v = u + 1; v < routers; ++v)
        if (edge(rng)) {
          adj[u].push_back(v);
          adj[v].push_back(u);
        }
    std::vector<char> seen(routers, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
    }
    if (reached == routers) return adj;
  }
  throw ConfigError(fmt::format("could not draw a connected graph on {} routers with p = {}",
                                routers, p));
}

// BFS parents from `source`; neighbours are visited in ascending order so the
// first discovery (lowest index) wins ties.
std::vector<int> bfs_parents(const Adjacency& adj, int source) {
  std::vector<int> parent(adj.size(), -1);
  parent[source] = source;
  std::queue<int> q;
  q.push(source);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (parent[v] < 0) {
        parent[v] = u;
        q.push(v);
      }
  }
  return parent;
}

}  // namespace

SyntheticScenario generate_synthetic(int n_routers, int planted_rank, int timestamps,
                                     const LagSet& planted_lags, double noise_level,
                                     std::uint64_t seed, const SynthOptions& options) {
  if (n_routers < 2) throw ConfigError("synthetic scenario needs at least 2 routers");
  if (planted_rank < 1) throw ConfigError("planted rank must be at least 1");
  if (noise_level < 0.0) throw ConfigError("noise level must be nonnegative");
  planted_lags.require_fits(timestamps);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Adjacency adj = random_connected_graph(n_routers, options.edge_probability, rng);
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());

  // Link numbering: directed internal links in (u, v) order, then one
  // ingress and one egress link per router.
  std::vector<std::vector<int>> link_id(n_routers, std::vector<int>(n_routers, -1));
  int links = 0;
  for (int u = 0; u < n_routers; ++u)
    for (int v : adj[u]) link_id[u][v] = links++;
  const int ingress0 = links;
  const int egress0 = links + n_routers;
  links += 2 * n_routers;

  const int od_pairs = n_routers * (n_routers - 1);
  Matrix a = Matrix::Zero(links, od_pairs);
  int j = 0;
  for (int o = 0; o < n_routers; ++o) {
    const std::vector<int> parent = bfs_parents(adj, o);
    for (int d = 0; d < n_routers; ++d) {
      if (d == o) continue;
      a(ingress0 + o, j) = 1.0;
      a(egress0 + d, j) = 1.0;
      for (int v = d; v != o; v = parent[v]) a(link_id[parent[v]][v], j) = 1.0;
      ++j;
    }
  }

  const Eigen::Index k = planted_rank;
  const int max_lag = planted_lags.max_lag();
  const int burn_in = 5 * max_lag + 50;
  Matrix h(k, timestamps);
  for (Eigen::Index p = 0; p < k; ++p) {
    Vector weights(static_cast<Eigen::Index>(planted_lags.size()));
    for (Eigen::Index l = 0; l < weights.size(); ++l) weights(l) = 0.2 + 0.8 * unit(rng);
    if (weights.size() > 0) weights *= options.ar_mass / weights.sum();
    const double level = 1.0 + 4.0 * unit(rng);
    const double drift = level * (1.0 - (weights.size() > 0 ? options.ar_mass : 0.0));

    std::vector<double> series(static_cast<std::size_t>(burn_in + timestamps));
    for (std::size_t t = 0; t < series.size(); ++t) {
      double v = drift + options.innovation * level * gauss(rng);
      if (static_cast<int>(t) < max_lag) {
        v = level * (1.0 + options.innovation * gauss(rng));
      } else {
        for (std::size_t l = 0; l < planted_lags.size(); ++l)
          v += weights(static_cast<Eigen::Index>(l)) * series[t - planted_lags[l]];
      }
      series[t] = std::max(0.0, v);
    }
    for (int t = 0; t < timestamps; ++t) h(p, t) = series[static_cast<std::size_t>(burn_in + t)];
  }

  std::vector<int> order(od_pairs);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Matrix w(od_pairs, k);
  for (int i = 0; i < od_pairs; ++i)
    for (Eigen::Index c = 0; c < k; ++c) w(i, c) = options.leakage * unit(rng);
  for (int pos = 0; pos < od_pairs; ++pos) w(order[pos], pos % k) = 0.5 + unit(rng);

  Matrix x = w * h;
  if (noise_level > 0.0) {
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        x(r, c) = std::max(0.0, x(r, c) * (1.0 + noise_level * gauss(rng)));
  }

  std::optional<Matrix> mask;
  if (options.missing_fraction > 0.0) {
    std::bernoulli_distribution missing(options.missing_fraction);
    Matrix m(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = missing(rng) ? 0.0 : 1.0;
    mask = std::move(m);
  }

  SyntheticScenario s;
  s.routing = RoutingMatrix(std::move(a));
  s.traffic = TrafficMatrix(std::move(x), std::move(mask));
  s.planted_rank = planted_rank;
  s.planted_lags = planted_lags;
  s.noise_level = noise_level;
  s.seed = seed;
  s.w_true = std::move(w);
  s.h_true = std::move(h);
  return s;
}

std::pair<TrafficMatrix, TrafficMatrix> split_train_test(const TrafficMatrix& traffic,
                                                         Eigen::Index train_t) {
  const Eigen::Index total = traffic.timestamps();
  if (train_t <= 0 || train_t >= total)
    throw ConfigError(
        fmt::format("training length {} must lie strictly between 0 and {}", train_t, total));
  const Eigen::Index test_t = total - train_t;
  const auto& x = traffic.entries();
  std::optional<Matrix> train_mask;
  std::optional<Matrix> test_mask;
  if (traffic.mask()) {
    train_mask = traffic.mask()->leftCols(train_t);
    test_mask = traffic.mask()->rightCols(test_t);
  }
  return {TrafficMatrix(x.leftCols(train_t), std::move(train_mask)),
          TrafficMatrix(x.rightCols(test_t), std::move(test_mask))};
}

}  // namespace ttnmf
