#include "advcons/topology.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace advcons {

EdgeIndex::EdgeIndex(int node_count) : n_(node_count) {
  if (node_count <= 0) throw ModelError("node count must be positive");
  size_ = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_ - 1) / 2;
}

std::size_t EdgeIndex::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n_ || i == j) {
    throw ModelError("no slot for pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  const auto ii = static_cast<std::size_t>(i);
  const auto nn = static_cast<std::size_t>(n_);
  return ii * nn - ii * (ii + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

std::pair<int, int> EdgeIndex::pair(std::size_t slot) const {
  if (slot >= size_) throw ModelError("slot out of range");
  int i = 0;
  std::size_t row = static_cast<std::size_t>(n_ - 1);
  while (slot >= row) {
    slot -= row;
    --row;
    ++i;
  }
  return {i, i + 1 + static_cast<int>(slot)};
}

NetworkTopology::NetworkTopology(int node_count, std::vector<Edge> edges)
    : n_(node_count), index_(node_count), edges_(std::move(edges)) {
  for (auto& e : edges_) {
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n_) {
      throw ModelError("edge (" + std::to_string(e.i + 1) + ", " + std::to_string(e.j + 1) +
                       ") references a node outside 1.." + std::to_string(n_));
    }
    if (e.i == e.j) throw ModelError("self-loop at node " + std::to_string(e.i + 1));
    if (!(e.weight > 0.0)) {
      throw ModelError("edge (" + std::to_string(e.i + 1) + ", " + std::to_string(e.j + 1) +
                       ") must have a positive weight");
    }
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
      throw ModelError("duplicate edge (" + std::to_string(edges_[k].i + 1) + ", " +
                       std::to_string(edges_[k].j + 1) + ")");
    }
  }
  slots_.reserve(edges_.size());
  for (const auto& e : edges_) slots_.push_back(index_.slot(e.i, e.j));
}

double NetworkTopology::weight(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{i, j},
                             [](const Edge& e, const std::pair<int, int>& key) {
                               return std::tie(e.i, e.j) < std::tie(key.first, key.second);
                             });
  if (it != edges_.end() && it->i == i && it->j == j) return it->weight;
  return 0.0;
}

bool NetworkTopology::connected() const {
  return connected_components(*this, LinkControl::none(*this)).size() == 1;
}

LinkControl LinkControl::breaking(const NetworkTopology& topology,
                                  std::span<const std::size_t> edge_positions) {
  LinkControl control = none(topology);
  for (auto position : edge_positions) control.set(topology.slot_of(position), true);
  return control;
}

std::size_t LinkControl::broken_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::pair<int, int>> LinkControl::broken_pairs(const EdgeIndex& index) const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t s = 0; s < bits_.size(); ++s) {
    if (bits_[s]) out.push_back(index.pair(s));
  }
  return out;
}

void validate_control(const NetworkTopology& topology, const LinkControl& control,
                      std::size_t budget) {
  if (control.size() != topology.index().size()) {
    throw ModelError("control has " + std::to_string(control.size()) + " entries, expected " +
                     std::to_string(topology.index().size()));
  }
  for (std::size_t s = 0; s < control.size(); ++s) {
    if (!control.broken(s)) continue;
    auto [i, j] = topology.index().pair(s);
    if (topology.weight(i, j) == 0.0) {
      throw ModelError("control breaks non-edge (" + std::to_string(i + 1) + ", " +
                       std::to_string(j + 1) + ")");
    }
  }
  if (control.broken_count() > budget) {
    throw ModelError("control breaks " + std::to_string(control.broken_count()) +
                     " links, budget is " + std::to_string(budget));
  }
}

SystemMatrix SystemMatrix::from_matrix(Eigen::MatrixXd a, double tolerance) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ModelError("system matrix must be square");
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if (std::abs(a.row(r).sum()) > tolerance) throw ModelError("system matrix row sum is not zero");
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (std::abs(a(r, c) - a(c, r)) > tolerance) throw ModelError("system matrix is not symmetric");
      if (r != c && a(r, c) < 0.0) throw ModelError("system matrix has a negative off-diagonal entry");
    }
  }
  return SystemMatrix(std::move(a));
}

SystemMatrix build_system_matrix(const NetworkTopology& topology, const LinkControl& control) {
  if (control.size() != topology.index().size()) {
    throw ModelError("control has " + std::to_string(control.size()) + " entries, expected " +
                     std::to_string(topology.index().size()));
  }
  const int n = topology.node_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < topology.edge_count(); ++k) {
    if (control.broken(topology.slot_of(k))) continue;
    const Edge& e = topology.edge(k);
    a(e.i, e.j) = e.weight;
    a(e.j, e.i) = e.weight;
  }
  // Any bit left over must sit on a non-edge.
  std::size_t on_edges = 0;
  for (std::size_t k = 0; k < topology.edge_count(); ++k) {
    on_edges += control.broken(topology.slot_of(k)) ? 1 : 0;
  }
  if (on_edges != control.broken_count()) throw ModelError("control bit set on a non-edge");
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) off += a(i, j);
    }
    a(i, i) = -off;
  }
  return SystemMatrix(std::move(a));
}

namespace {

int find_root(std::vector<int>& parent, int v) {
  while (parent[static_cast<std::size_t>(v)] != v) {
    auto& p = parent[static_cast<std::size_t>(v)];
    p = parent[static_cast<std::size_t>(p)];
    v = p;
  }
  return v;
}

std::size_t count_components(int n, std::span<const Edge> edges, std::span<const std::uint8_t> removed) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::size_t components = static_cast<std::size_t>(n);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (removed[k]) continue;
    int a = find_root(parent, edges[k].i);
    int b = find_root(parent, edges[k].j);
    if (a != b) {
      parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      --components;
    }
  }
  return components;
}

}  // namespace

std::vector<std::vector<int>> connected_components(const NetworkTopology& topology,
                                                   const LinkControl& control) {
  const int n = topology.node_count();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t k = 0; k < topology.edge_count(); ++k) {
    if (control.size() == topology.index().size() && control.broken(topology.slot_of(k))) continue;
    const Edge& e = topology.edge(k);
    int a = find_root(parent, e.i);
    int b = find_root(parent, e.j);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    int root = find_root(parent, v);
    auto& g = group_of[static_cast<std::size_t>(root)];
    if (g < 0) {
      g = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(g)].push_back(v);
  }
  return groups;
}

std::size_t min_cut_size(const NetworkTopology& topology) {
  const int n = topology.node_count();
  if (n < 2) throw ModelError("min cut needs at least two nodes");
  const auto m = topology.edge_count();
  std::vector<std::uint8_t> removed(m, 0);
  if (count_components(n, topology.edges(), removed) > 1) return 0;
  // Removing all edges always disconnects, so the loop terminates by k = m.
  for (std::size_t k = 1; k <= m; ++k) {
    std::fill(removed.begin(), removed.end(), 0);
    std::fill(removed.end() - static_cast<std::ptrdiff_t>(k), removed.end(), 1);
    do {
      if (count_components(n, topology.edges(), removed) > 1) return k;
    } while (std::next_permutation(removed.begin(), removed.end()));
  }
  return m;
}

}  // namespace advcons
