#include "zodiac/problems.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace zodiac {

void StochasticOracle::check_dim(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != dim())
    throw std::invalid_argument("oracle: x has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dim()));
}

double StochasticOracle::global_value(const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (int i = 0; i < num_agents(); ++i) sum += local_value(i, x);
  return sum / num_agents();
}

Eigen::VectorXd StochasticOracle::true_global_gradient(
    const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < num_agents(); ++i) g += true_local_gradient(i, x);
  return g / num_agents();
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

ClassificationDataset gen_dataset(int d, int n_train, int n_test,
                                  std::uint64_t seed) {
  if (d < 1 || n_train < 1 || n_test < 1)
    throw std::invalid_argument("gen_dataset: d, n_train, n_test must be >= 1");

  ClassificationDataset ds;
  ds.d = d;
  ds.n_train = n_train;
  ds.n_test = n_test;
  ds.features.resize(n_train + n_test, d);
  ds.labels.resize(n_train + n_test);

  Rng rng = make_stream(seed, StreamTag::kDataset);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int r = 0; r < ds.total(); ++r) {
    double dot = 0.0;
    for (int c = 0; c < d; ++c) {
      const double a = gauss(rng);
      ds.features(r, c) = a;
      dot += a;
    }
    // Planted classifier x_opt = ones: sigmoid(dot) >= 0.5 <=> dot >= 0.
    ds.labels[r] = (dot >= 0.0) ? 1 : 0;
  }
  return ds;
}

void partition_dataset(ClassificationDataset& ds, int n_agents,
                       std::uint64_t seed) {
  if (n_agents < 1)
    throw std::invalid_argument("partition_dataset: need n_agents >= 1");
  if (n_agents > ds.n_train)
    throw std::invalid_argument("partition_dataset: more agents than samples");

  std::vector<int> rows(ds.n_train);
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng = make_stream(seed, StreamTag::kPartition);
  std::shuffle(rows.begin(), rows.end(), rng);

  ds.partition.assign(n_agents, {});
  const int base = ds.n_train / n_agents;
  const int extra = ds.n_train % n_agents;
  int next = 0;
  for (int a = 0; a < n_agents; ++a) {
    const int size = base + (a < extra ? 1 : 0);
    ds.partition[a].assign(rows.begin() + next, rows.begin() + next + size);
    std::sort(ds.partition[a].begin(), ds.partition[a].end());
    next += size;
  }
}

void save_dataset_csv(const ClassificationDataset& ds, std::ostream& out) {
  for (int c = 0; c < ds.d; ++c) out << "f" << c << ",";
  out << "label,split,agent\n";
  // Row-to-agent lookup built once; partition lists are per-agent.
  std::vector<int> owner(ds.total(), -1);
  for (std::size_t a = 0; a < ds.partition.size(); ++a)
    for (int r : ds.partition[a]) owner[r] = static_cast<int>(a);
  char buf[64];
  for (int r = 0; r < ds.total(); ++r) {
    for (int c = 0; c < ds.d; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(r, c));
      out << buf << ",";
    }
    out << ds.labels[r] << "," << (ds.is_train(r) ? "train" : "test") << ","
        << owner[r] << "\n";
  }
}

void save_dataset_csv(const ClassificationDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset_csv: cannot open " + path);
  save_dataset_csv(ds, out);
}

ClassificationDataset load_dataset_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("load_dataset_csv: empty input");
  int d = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ','))
      if (!col.empty() && col[0] == 'f') ++d;
  }
  if (d == 0) throw std::runtime_error("load_dataset_csv: no feature columns");

  std::vector<std::vector<double>> feats;
  std::vector<int> labels, agents;
  std::vector<bool> train_tag;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    for (int c = 0; c < d; ++c) {
      if (!std::getline(ls, cell, ','))
        throw std::runtime_error("load_dataset_csv: short row");
      row.push_back(std::stod(cell));
    }
    std::getline(ls, cell, ',');
    labels.push_back(std::stoi(cell));
    std::getline(ls, cell, ',');
    train_tag.push_back(cell == "train");
    std::getline(ls, cell, ',');
    agents.push_back(std::stoi(cell));
    feats.push_back(std::move(row));
  }

  ClassificationDataset ds;
  ds.d = d;
  ds.n_train = static_cast<int>(std::count(train_tag.begin(), train_tag.end(), true));
  ds.n_test = static_cast<int>(feats.size()) - ds.n_train;
  ds.features.resize(feats.size(), d);
  ds.labels.resize(feats.size());
  // Keep the train-first layout; the file may interleave.
  int n_agents = 0;
  for (int a : agents) n_agents = std::max(n_agents, a + 1);
  ds.partition.assign(n_agents, {});
  int tr = 0, te = ds.n_train;
  for (std::size_t r = 0; r < feats.size(); ++r) {
    const int dst = train_tag[r] ? tr++ : te++;
    for (int c = 0; c < d; ++c) ds.features(dst, c) = feats[r][c];
    ds.labels[dst] = labels[r];
    if (train_tag[r] && agents[r] >= 0) ds.partition[agents[r]].push_back(dst);
  }
  for (auto& shard : ds.partition) std::sort(shard.begin(), shard.end());
  return ds;
}

ClassificationDataset load_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + path);
  return load_dataset_csv(in);
}

std::uint64_t dataset_hash(const ClassificationDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto absorb = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  absorb(&ds.d, sizeof(ds.d));
  absorb(&ds.n_train, sizeof(ds.n_train));
  absorb(ds.features.data(), sizeof(double) * ds.features.size());
  absorb(ds.labels.data(), sizeof(int) * ds.labels.size());
  for (const auto& shard : ds.partition)
    absorb(shard.data(), sizeof(int) * shard.size());
  return h;
}

// ---------------------------------------------------------------------------
// Classification problem
// ---------------------------------------------------------------------------

double squared_sigmoid_loss_curvature() {
  // d^2/dz^2 (y - s(z))^2 = 2 s'(z)^2 - 2 (y - s(z)) s''(z); scanned once.
  static const double c = [] {
    double worst = 0.0;
    for (int y = 0; y <= 1; ++y) {
      for (double z = -20.0; z <= 20.0; z += 1e-3) {
        const double s = sigmoid(z);
        const double s1 = s * (1.0 - s);
        const double s2 = s1 * (1.0 - 2.0 * s);
        const double h = 2.0 * s1 * s1 - 2.0 * (y - s) * s2;
        worst = std::max(worst, std::abs(h));
      }
    }
    return worst;
  }();
  return c;
}

ClassificationProblem::ClassificationProblem(ClassificationDataset dataset,
                                             double noise_var)
    : dataset_(std::move(dataset)),
      noise_var_(noise_var),
      noise_std_(std::sqrt(noise_var)) {
  if (dataset_.partition.empty())
    throw std::invalid_argument(
        "ClassificationProblem: dataset has no agent partition");
  for (const auto& shard : dataset_.partition)
    if (shard.empty())
      throw std::invalid_argument("ClassificationProblem: empty agent shard");
  double max_row_sq = 0.0;
  for (int r = 0; r < dataset_.n_train; ++r)
    max_row_sq = std::max(max_row_sq, dataset_.features.row(r).squaredNorm());
  smoothness_ = squared_sigmoid_loss_curvature() * max_row_sq;
}

Realization ClassificationProblem::draw(int agent, Rng& rng) const {
  const auto& shard = dataset_.partition.at(agent);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(shard.size()) - 1);
  Realization xi;
  xi.sample = shard[pick(rng)];
  xi.noise_key = rng();
  return xi;
}

double ClassificationProblem::sample_loss(int row,
                                          const Eigen::VectorXd& x) const {
  const double z = dataset_.features.row(row).dot(x);
  const double r = dataset_.labels[row] - sigmoid(z);
  return r * r;
}

Eigen::VectorXd ClassificationProblem::sample_gradient(
    int row, const Eigen::VectorXd& x) const {
  const double z = dataset_.features.row(row).dot(x);
  const double s = sigmoid(z);
  const double coef = -2.0 * (dataset_.labels[row] - s) * s * (1.0 - s);
  return coef * dataset_.features.row(row).transpose();
}

double ClassificationProblem::eval(int agent, const Eigen::VectorXd& x,
                                   const Realization& xi) const {
  check_dim(x);
  (void)agent;
  double value = sample_loss(xi.sample, x);
  if (noise_std_ > 0.0) {
    Rng noise_rng(xi.noise_key);
    std::normal_distribution<double> gauss(0.0, noise_std_);
    value += gauss(noise_rng);
  }
  return value;
}

double ClassificationProblem::local_value(int agent,
                                          const Eigen::VectorXd& x) const {
  check_dim(x);
  const auto& shard = dataset_.partition.at(agent);
  double sum = 0.0;
  for (int r : shard) sum += sample_loss(r, x);
  return sum / shard.size();
}

Eigen::VectorXd ClassificationProblem::true_local_gradient(
    int agent, const Eigen::VectorXd& x) const {
  check_dim(x);
  const auto& shard = dataset_.partition.at(agent);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (int r : shard) g += sample_gradient(r, x);
  return g / shard.size();
}

// ---------------------------------------------------------------------------
// Quadratic problem
// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(std::vector<Eigen::MatrixXd> A,
                                   std::vector<Eigen::VectorXd> b, double zeta,
                                   double value_noise_std)
    : A_(std::move(A)),
      b_(std::move(b)),
      zeta_(zeta),
      value_noise_std_(value_noise_std) {
  if (A_.empty() || A_.size() != b_.size())
    throw std::invalid_argument("QuadraticProblem: need matching A_i, b_i");
  smoothness_ = 0.0;
  for (const auto& Ai : A_) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Ai);
    smoothness_ = std::max(smoothness_, eig.eigenvalues().maxCoeff());
  }
}

QuadraticProblem QuadraticProblem::random(int n_agents, int p, double condition,
                                          std::uint64_t seed, double zeta,
                                          double value_noise_std) {
  if (n_agents < 1 || p < 1 || condition < 1.0)
    throw std::invalid_argument("QuadraticProblem::random: bad parameters");
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::VectorXd> b;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int a = 0; a < n_agents; ++a) {
    Rng rng = make_stream(seed, StreamTag::kProblem, a);
    Eigen::MatrixXd G(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) G(i, j) = gauss(rng);
    const Eigen::MatrixXd Q =
        Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
    Eigen::VectorXd spectrum(p);
    for (int i = 0; i < p; ++i) {
      const double t = (p == 1) ? 0.0 : static_cast<double>(i) / (p - 1);
      spectrum(i) = std::pow(condition, t);  // log-spaced in [1, condition]
    }
    A.push_back(Q * spectrum.asDiagonal() * Q.transpose());
    Eigen::VectorXd bi(p);
    for (int i = 0; i < p; ++i) bi(i) = gauss(rng);
    b.push_back(bi);
  }
  return QuadraticProblem(std::move(A), std::move(b), zeta, value_noise_std);
}

Realization QuadraticProblem::draw(int agent, Rng& rng) const {
  (void)agent;
  Realization xi;
  xi.noise_key = rng();
  return xi;
}

double QuadraticProblem::eval(int agent, const Eigen::VectorXd& x,
                              const Realization& xi) const {
  check_dim(x);
  double value = local_value(agent, x);
  if (zeta_ > 0.0 || value_noise_std_ > 0.0) {
    Rng noise_rng(xi.noise_key);
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (zeta_ > 0.0) {
      // Linear term xi . x gives gradient noise N(0, zeta^2 I) exactly.
      double dot = 0.0;
      for (int i = 0; i < dim(); ++i) dot += zeta_ * gauss(noise_rng) * x(i);
      value += dot;
    }
    if (value_noise_std_ > 0.0) value += value_noise_std_ * gauss(noise_rng);
  }
  return value;
}

double QuadraticProblem::local_value(int agent, const Eigen::VectorXd& x) const {
  check_dim(x);
  return 0.5 * x.dot(A_.at(agent) * x) - b_.at(agent).dot(x);
}

Eigen::VectorXd QuadraticProblem::true_local_gradient(
    int agent, const Eigen::VectorXd& x) const {
  check_dim(x);
  return A_.at(agent) * x - b_.at(agent);
}

Eigen::VectorXd QuadraticProblem::exact_minimizer() const {
  Eigen::MatrixXd Abar = Eigen::MatrixXd::Zero(dim(), dim());
  Eigen::VectorXd bbar = Eigen::VectorXd::Zero(dim());
  for (std::size_t i = 0; i < A_.size(); ++i) {
    Abar += A_[i];
    bbar += b_[i];
  }
  Abar /= static_cast<double>(A_.size());
  bbar /= static_cast<double>(A_.size());
  return Abar.ldlt().solve(bbar);
}

double QuadraticProblem::optimal_value() const {
  return global_value(exact_minimizer());
}

QuadraticProblem QuadraticProblem::pooled() const {
  Eigen::MatrixXd Abar = Eigen::MatrixXd::Zero(dim(), dim());
  Eigen::VectorXd bbar = Eigen::VectorXd::Zero(dim());
  for (std::size_t i = 0; i < A_.size(); ++i) {
    Abar += A_[i];
    bbar += b_[i];
  }
  Abar /= static_cast<double>(A_.size());
  bbar /= static_cast<double>(A_.size());
  return QuadraticProblem({std::move(Abar)}, {std::move(bbar)}, zeta_,
                          value_noise_std_);
}

double empirical_sigma2_sq(const StochasticOracle& oracle,
                           const std::vector<Eigen::VectorXd>& points) {
  double worst = 0.0;
  for (const auto& x : points) {
    const Eigen::VectorXd g = oracle.true_global_gradient(x);
    for (int i = 0; i < oracle.num_agents(); ++i)
      worst = std::max(worst,
                       (oracle.true_local_gradient(i, x) - g).squaredNorm());
  }
  return worst;
}

}  // namespace zodiac
