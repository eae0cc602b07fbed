#include "zodiac/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace zodiac {

void Topology::add_edge(int i, int j, double w) {
  if (i == j) throw std::invalid_argument("Topology: self-loop rejected");
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::invalid_argument("Topology: vertex index out of range");
  if (w <= 0.0) throw std::invalid_argument("Topology: edge weight must be > 0");
  if (i > j) std::swap(i, j);
  edges.emplace_back(i, j);
  weights.push_back(w);
}

std::vector<std::vector<int>> Topology::adjacency_lists() const {
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : edges) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  return adj;
}

Topology path_topology(int n) {
  Topology t(n);
  for (int i = 0; i + 1 < n; ++i) t.add_edge(i, i + 1);
  return t;
}

Topology complete_topology(int n) {
  Topology t(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) t.add_edge(i, j);
  return t;
}

Topology sample_erdos_renyi(int n, double prob, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_erdos_renyi: need n >= 2");
  if (prob < 0.0 || prob > 1.0)
    throw std::invalid_argument("sample_erdos_renyi: prob outside [0,1]");
  Topology t(n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unif(rng) < prob) t.add_edge(i, j);
  return t;
}

Topology gen_erdos_renyi(int n, double prob, std::uint64_t seed) {
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng = make_stream(seed, StreamTag::kGraph, static_cast<std::uint64_t>(attempt));
    Topology t = sample_erdos_renyi(n, prob, rng);
    if (is_connected(t)) return t;
  }
  throw std::runtime_error(
      "gen_erdos_renyi: no connected sample in 10000 attempts "
      "(connection probability too small for n=" + std::to_string(n) + ")");
}

bool is_connected(const Topology& topo) {
  if (topo.n <= 0) return false;
  if (topo.n == 1) return true;
  const auto adj = topo.adjacency_lists();
  std::vector<char> seen(topo.n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == topo.n;
}

LaplacianData build_laplacian(const Topology& topo) {
  const int n = topo.n;
  if (n < 2) throw std::invalid_argument("build_laplacian: need n >= 2");

  LaplacianData out;
  out.L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto [i, j] = topo.edges[e];
    const double w = topo.weights[e];
    out.L(i, j) -= w;
    out.L(j, i) -= w;
    out.L(i, i) += w;
    out.L(j, j) += w;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.L);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("build_laplacian: eigendecomposition failed");
  out.eigenvalues = eig.eigenvalues();  // ascending
  out.rho = out.eigenvalues(n - 1);

  // Smallest positive eigenvalue; 0 if the spectrum is all (numerically) zero.
  out.rho2 = 0.0;
  for (int i = 0; i < n; ++i) {
    if (out.eigenvalues(i) > kEigZeroTol) {
      out.rho2 = out.eigenvalues(i);
      break;
    }
  }
  out.connected = out.eigenvalues(1) > kEigZeroTol;

  out.K_small = Eigen::MatrixXd::Identity(n, n) -
                Eigen::MatrixXd::Constant(n, n, 1.0 / n);

  // Q = sum over positive eigenvalues of (1/lambda) v v^T.
  out.Q_small = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double lambda = out.eigenvalues(i);
    if (lambda > kEigZeroTol) {
      const Eigen::VectorXd v = eig.eigenvectors().col(i);
      out.Q_small += (v * v.transpose()) / lambda;
    }
  }
  return out;
}

void save_edge_list(const Topology& topo, std::ostream& out) {
  out << "n " << topo.n << "\n";
  out.precision(17);
  for (std::size_t e = 0; e < topo.edges.size(); ++e)
    out << topo.edges[e].first << " " << topo.edges[e].second << " "
        << topo.weights[e] << "\n";
}

void save_edge_list(const Topology& topo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  save_edge_list(topo, out);
}

Topology load_edge_list(std::istream& in) {
  std::string tag;
  int n = 0;
  if (!(in >> tag >> n) || tag != "n")
    throw std::runtime_error("load_edge_list: expected header line 'n <count>'");
  Topology t(n);
  int i, j;
  double w;
  while (in >> i >> j >> w) t.add_edge(i, j, w);
  return t;
}

Topology load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  return load_edge_list(in);
}

std::uint64_t topology_hash(const Topology& topo) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto absorb = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  absorb(&topo.n, sizeof(topo.n));
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    absorb(&topo.edges[e].first, sizeof(int));
    absorb(&topo.edges[e].second, sizeof(int));
    absorb(&topo.weights[e], sizeof(double));
  }
  return h;
}

}  // namespace zodiac
