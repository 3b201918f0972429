#include "mcons/costs.hpp"

#include <fstream>
#include <sstream>

namespace mcons {

NodeCost NodeCost::eigvec(const Matrix& samples) {
  if (samples.rows() < 1) throw PreconditionError("eigvec cost needs data");
  NodeCost c;
  c.kind_ = CostKind::Eigvec;
  c.samples_ = samples;
  c.gram_ = samples.transpose() * samples;
  return c;
}

NodeCost NodeCost::pca(const Matrix& samples) {
  if (samples.rows() < 1) throw PreconditionError("pca cost needs data");
  NodeCost c;
  c.kind_ = CostKind::Pca;
  c.samples_ = samples;
  c.gram_ = samples.transpose() * samples;
  return c;
}

NodeCost NodeCost::quadratic(const Matrix& s, const Vector& offset) {
  if (s.rows() != s.cols() || s.rows() != offset.size()) {
    throw PreconditionError("quadratic cost shape mismatch");
  }
  if (!s.isApprox(s.transpose(), 1e-12)) {
    throw PreconditionError("quadratic matrix must be symmetric");
  }
  NodeCost c;
  c.kind_ = CostKind::Quadratic;
  c.gram_ = s;
  c.offset_ = offset;
  return c;
}

void NodeCost::check_dim(const ManifoldDescriptor& d) const {
  if (d.ambient_rows != dim()) {
    throw PreconditionError("cost data dimension " + std::to_string(dim()) +
                            " does not match manifold rows " +
                            std::to_string(d.ambient_rows));
  }
}

double NodeCost::value(const ManifoldDescriptor& d, const Matrix& x) const {
  check_dim(d);
  switch (kind_) {
    case CostKind::Eigvec:
      return -(x.col(0).dot(gram_ * x.col(0)));
    case CostKind::Pca:
      return -0.5 * (x.transpose() * gram_ * x).trace();
    case CostKind::Quadratic: {
      const Vector r = x.col(0) - offset_;
      return 0.5 * r.dot(gram_ * r);
    }
  }
  return 0.0;
}

Matrix NodeCost::euclidean_grad(const ManifoldDescriptor& d,
                                const Matrix& x) const {
  check_dim(d);
  switch (kind_) {
    case CostKind::Eigvec:
      return -2.0 * (gram_ * x) * grad_scale_;
    case CostKind::Pca:
      return -(gram_ * x) * grad_scale_;
    case CostKind::Quadratic:
      return (gram_ * (x.col(0) - offset_)) * grad_scale_;
  }
  return Matrix();
}

Matrix NodeCost::riemannian_grad(const ManifoldDescriptor& d,
                                 const Matrix& x) const {
  return mf::project(d, x, euclidean_grad(d, x));
}

Matrix NodeCost::minibatch_grad(const ManifoldDescriptor& d, const Matrix& x,
                                int sample_index) const {
  check_dim(d);
  if (kind_ == CostKind::Quadratic) return riemannian_grad(d, x);
  if (sample_index < 0 || sample_index >= sample_count()) {
    throw PreconditionError("sample index out of range");
  }
  const Vector z = samples_.row(sample_index).transpose();
  const double scale = static_cast<double>(sample_count()) * grad_scale_;
  Matrix g;
  if (kind_ == CostKind::Eigvec) {
    g = -2.0 * scale * z * (z.transpose() * x);
  } else {
    g = -scale * z * (z.transpose() * x);
  }
  return mf::project(d, x, g);
}

NodeCost NodeCost::merged(const std::vector<NodeCost>& parts) {
  if (parts.empty()) throw PreconditionError("cannot merge zero costs");
  NodeCost out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].kind_ != out.kind_) {
      throw PreconditionError("cannot merge costs of different kinds");
    }
    if (out.kind_ == CostKind::Quadratic) {
      // Sum of quadratics is tracked through the normal equations.
      const Matrix s = out.gram_ + parts[i].gram_;
      const Vector rhs = out.gram_ * out.offset_ + parts[i].gram_ * parts[i].offset_;
      out.gram_ = s;
      out.offset_ = s.ldlt().solve(rhs);
    } else {
      out.gram_ += parts[i].gram_;
      Matrix stacked(out.samples_.rows() + parts[i].samples_.rows(),
                     out.samples_.cols());
      stacked << out.samples_, parts[i].samples_;
      out.samples_ = std::move(stacked);
    }
  }
  return out;
}

NoiseModel::NoiseModel(double sigma_in, int num_nodes,
                       std::uint64_t master_seed)
    : sigma(sigma_in) {
  if (sigma < 0.0) throw PreconditionError("noise sigma must be >= 0");
  streams.reserve(num_nodes);
  for (int i = 0; i < num_nodes; ++i) {
    streams.emplace_back(master_seed, 0x4E6F697365ULL + i);
  }
}

Matrix noisy_grad(const NodeCost& cost, const ManifoldDescriptor& d,
                  const Matrix& x, NoiseModel& noise, int node) {
  if (node < 0 || node >= static_cast<int>(noise.streams.size())) {
    throw PreconditionError("node index out of range");
  }
  Matrix g = cost.riemannian_grad(d, x);
  if (noise.sigma > 0.0) {
    g += mf::random_tangent(d, x, noise.sigma, noise.streams[node]);
  }
  return g;
}

std::vector<NodeCost> partition_dataset(const Matrix& samples, int num_nodes,
                                        std::uint64_t seed, CostKind kind) {
  if (num_nodes < 1) throw PreconditionError("need at least one node");
  if (samples.rows() < 1) throw PreconditionError("need at least one sample");
  if (kind == CostKind::Quadratic) {
    throw PreconditionError("quadratic costs are not data-backed");
  }

  const int n = static_cast<int>(samples.rows());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RngStream stream(seed, 0x706172ULL);
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[i], order[stream.uniform_int(i + 1)]);
  }

  std::vector<NodeCost> costs;
  costs.reserve(num_nodes);
  for (int node = 0; node < num_nodes; ++node) {
    std::vector<int> mine;
    for (int i = node; i < n; i += num_nodes) mine.push_back(order[i]);
    if (mine.empty()) {
      // More nodes than samples: give the node an empty-but-valid block by
      // reusing a zero row so the gram is zero and gradients vanish.
      Matrix zero = Matrix::Zero(1, samples.cols());
      costs.push_back(kind == CostKind::Eigvec ? NodeCost::eigvec(zero)
                                               : NodeCost::pca(zero));
      continue;
    }
    Matrix block(static_cast<int>(mine.size()), samples.cols());
    for (std::size_t r = 0; r < mine.size(); ++r) {
      block.row(static_cast<int>(r)) = samples.row(mine[r]);
    }
    costs.push_back(kind == CostKind::Eigvec ? NodeCost::eigvec(block)
                                             : NodeCost::pca(block));
  }
  return costs;
}

Matrix synthetic_dataset(int dims, int num_samples, double spectrum_decay,
                         std::uint64_t seed) {
  if (dims < 1 || num_samples < 1) {
    throw PreconditionError("synthetic dataset needs positive sizes");
  }
  if (spectrum_decay <= 0.0 || spectrum_decay > 1.0) {
    throw PreconditionError("spectrum_decay must lie in (0, 1]");
  }
  Vector scale(dims);
  for (int j = 0; j < dims; ++j) {
    scale(j) = std::sqrt(std::pow(spectrum_decay, j));
  }
  RngStream stream(seed, 0x64617461ULL);
  Matrix out(num_samples, dims);
  for (int i = 0; i < num_samples; ++i) {
    for (int j = 0; j < dims; ++j) {
      out(i, j) = scale(j) * stream.normal();
    }
  }
  return out;
}

Matrix load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v = 0.0;
    while (ls >> v) row.push_back(v);
    if (row.empty()) continue;
    if (!rows.empty() && rows.front().size() != row.size()) {
      throw Error("ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("no data in " + path);
  Matrix out(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return out;
}

void save_dataset(const Matrix& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  for (int i = 0; i < samples.rows(); ++i) {
    for (int j = 0; j < samples.cols(); ++j) {
      out << (j ? " " : "") << samples(i, j);
    }
    out << "\n";
  }
}

}  // namespace mcons
