#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace advcons {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected weighted edge between nodes i < j (0-based).
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Canonical layout of all unordered node pairs:
/// (0,1),(0,2),...,(0,n-1),(1,2),...,(n-2,n-1).
class EdgeIndex {
 public:
  explicit EdgeIndex(int node_count);

  int node_count() const { return n_; }
  std::size_t size() const { return size_; }

  std::size_t slot(int i, int j) const;
  std::pair<int, int> pair(std::size_t slot) const;

 private:
  int n_;
  std::size_t size_;
};

/// Weighted undirected graph. Edges are kept sorted by their EdgeIndex slot,
/// so edge position k and the k-th edge in slot order coincide.
class NetworkTopology {
 public:
  NetworkTopology(int node_count, std::vector<Edge> edges);

  int node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(std::size_t position) const { return edges_[position]; }
  const EdgeIndex& index() const { return index_; }

  /// Slot of the edge at `position` in the full pair layout.
  std::size_t slot_of(std::size_t position) const { return slots_[position]; }
  /// Weight a_ij, zero for non-edges.
  double weight(int i, int j) const;

  /// Connectivity of the base graph (no links broken).
  bool connected() const;

  friend bool operator==(const NetworkTopology& a, const NetworkTopology& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  int n_;
  EdgeIndex index_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> slots_;
};

/// Binary link-breaking control over all n(n-1)/2 pairs in EdgeIndex order.
class LinkControl {
 public:
  LinkControl() = default;
  explicit LinkControl(std::size_t pair_count) : bits_(pair_count, 0) {}
  explicit LinkControl(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  static LinkControl none(const NetworkTopology& topology) {
    return LinkControl(topology.index().size());
  }
  /// Control breaking the edges at the given positions of `topology.edges()`.
  static LinkControl breaking(const NetworkTopology& topology,
                              std::span<const std::size_t> edge_positions);

  std::size_t size() const { return bits_.size(); }
  bool broken(std::size_t slot) const { return bits_[slot] != 0; }
  void set(std::size_t slot, bool value) { bits_[slot] = value ? 1 : 0; }
  std::size_t broken_count() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  /// Broken pairs as (i, j), 0-based, in slot order.
  std::vector<std::pair<int, int>> broken_pairs(const EdgeIndex& index) const;

  friend bool operator==(const LinkControl&, const LinkControl&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

using LinkSchedule = std::vector<LinkControl>;

/// Throws ModelError if `control` does not fit `topology` or exceeds `budget`.
void validate_control(const NetworkTopology& topology, const LinkControl& control,
                      std::size_t budget);

/// Symmetric, zero-row-sum matrix with nonnegative off-diagonal entries.
class SystemMatrix {
 public:
  /// Validates the invariants to `tolerance`.
  static SystemMatrix from_matrix(Eigen::MatrixXd a, double tolerance = 1e-12);

  const Eigen::MatrixXd& matrix() const { return a_; }
  int size() const { return static_cast<int>(a_.rows()); }

 private:
  explicit SystemMatrix(Eigen::MatrixXd a) : a_(std::move(a)) {}
  friend SystemMatrix build_system_matrix(const NetworkTopology&, const LinkControl&);

  Eigen::MatrixXd a_;
};

/// A_ij = a_ij (1 - u_ij), A_ii = -sum_{j != i} A_ij.
SystemMatrix build_system_matrix(const NetworkTopology& topology, const LinkControl& control);

/// Components of the graph that survives `control`, each sorted, ordered by
/// smallest member.
std::vector<std::vector<int>> connected_components(const NetworkTopology& topology,
                                                   const LinkControl& control);

/// Minimum number of edges whose removal disconnects the graph (edge-count
/// cut, weights ignored). Exhaustive over edge subsets of increasing size.
/// Returns 0 for an already disconnected graph.
std::size_t min_cut_size(const NetworkTopology& topology);

}  // namespace advcons
