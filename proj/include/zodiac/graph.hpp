#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "zodiac/rng.hpp"

namespace zodiac {

// Undirected weighted communication graph on agents 0..n-1.
// Edges are stored once with i < j; weights default to 1.
struct Topology {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;

  Topology() = default;
  explicit Topology(int n_agents) : n(n_agents) {}

  void add_edge(int i, int j, double w = 1.0);
  std::size_t edge_count() const { return edges.size(); }
  std::vector<std::vector<int>> adjacency_lists() const;
};

Topology path_topology(int n);
Topology complete_topology(int n);

// One Erdos-Renyi draw: each unordered pair kept with probability `prob`.
// May be disconnected.
Topology sample_erdos_renyi(int n, double prob, Rng& rng);

// Resamples whole graphs until one is connected (at most 10000 attempts,
// each attempt on substream (seed, attempt)). Throws std::runtime_error if
// the retry budget is exhausted.
Topology gen_erdos_renyi(int n, double prob, std::uint64_t seed);

bool is_connected(const Topology& topo);

// Laplacian L = Deg - A together with the spectral quantities the step-size
// schedule and the potential-function diagnostic need:
//   rho    spectral radius of L (largest eigenvalue)
//   rho2   smallest positive eigenvalue (algebraic connectivity when
//          connected; 0 for an edgeless graph)
//   Q_small  pseudo-inverse of L restricted to its range; on connected
//            graphs Q_small * L = L * Q_small = K_small
//   K_small  I - (1/n) * ones * ones^T
struct LaplacianData {
  Eigen::MatrixXd L;
  Eigen::VectorXd eigenvalues;  // ascending
  double rho = 0.0;
  double rho2 = 0.0;
  Eigen::MatrixXd Q_small;
  Eigen::MatrixXd K_small;
  bool connected = false;

  int n() const { return static_cast<int>(L.rows()); }
  double rho_L2() const { return rho * rho; }
};

// Eigenvalues below this count as zero when classifying connectivity.
inline constexpr double kEigZeroTol = 1e-10;

LaplacianData build_laplacian(const Topology& topo);

// Edge-list text format: first line "n <count>", then "i j weight" per edge.
void save_edge_list(const Topology& topo, std::ostream& out);
void save_edge_list(const Topology& topo, const std::string& path);
Topology load_edge_list(std::istream& in);
Topology load_edge_list_file(const std::string& path);

// FNV-1a over the canonical edge list, for run metadata.
std::uint64_t topology_hash(const Topology& topo);

}  // namespace zodiac
