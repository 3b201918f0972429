#pragma once

#include <vector>

#include "mcons/manifold.hpp"

namespace mcons {

enum class CostKind { Eigvec, Pca, Quadratic };

/// Local cost held at one network node.
///
/// eigvec:    f(x) = -sum_z (z^T x)^2            on the sphere
/// pca:       f(W) = -1/2 sum_z ||W^T z||^2      on the Grassmann manifold
/// quadratic: f(x) = 1/2 (x - c)^T S (x - c)     on Euclidean space
///
/// Data-backed kinds precompute the Gram matrix sum_z z z^T once.
class NodeCost {
 public:
  NodeCost() = default;

  /// samples: one data vector per row.
  static NodeCost eigvec(const Matrix& samples);
  static NodeCost pca(const Matrix& samples);
  static NodeCost quadratic(const Matrix& s, const Vector& offset);

  CostKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(gram_.rows()); }
  int sample_count() const { return static_cast<int>(samples_.rows()); }
  const Matrix& samples() const { return samples_; }
  const Matrix& gram() const { return gram_; }

  double value(const ManifoldDescriptor& d, const Matrix& x) const;
  Matrix euclidean_grad(const ManifoldDescriptor& d, const Matrix& x) const;
  Matrix riemannian_grad(const ManifoldDescriptor& d, const Matrix& x) const;

  /// Unbiased single-sample gradient estimate, scaled by the block size so
  /// its expectation over a uniform index equals the exact block gradient.
  Matrix minibatch_grad(const ManifoldDescriptor& d, const Matrix& x,
                        int sample_index) const;

  /// Test fixture: scales every gradient by (1 + rel) to break FD checks.
  void set_grad_corruption(double rel) { grad_scale_ = 1.0 + rel; }

  /// Pools the data of several node costs into one cost of the same kind.
  static NodeCost merged(const std::vector<NodeCost>& parts);

 private:
  void check_dim(const ManifoldDescriptor& d) const;

  CostKind kind_ = CostKind::Quadratic;
  Matrix samples_;   // rows are data vectors (eigvec/pca)
  Matrix gram_;      // sum_z z z^T, or S for quadratic
  Vector offset_;    // quadratic only
  double grad_scale_ = 1.0;
};

/// Per-node gradient-noise model: one independent stream per node, all
/// derived from a master seed. Draws are tangent, conditionally zero-mean.
struct NoiseModel {
  double sigma = 0.0;
  std::vector<RngStream> streams;

  NoiseModel() = default;
  NoiseModel(double sigma_in, int num_nodes, std::uint64_t master_seed);
};

Matrix noisy_grad(const NodeCost& cost, const ManifoldDescriptor& d,
                  const Matrix& x, NoiseModel& noise, int node);

/// Seeded shuffle followed by round-robin assignment; the union of the node
/// blocks is exactly the input sample multiset.
std::vector<NodeCost> partition_dataset(const Matrix& samples, int num_nodes,
                                        std::uint64_t seed, CostKind kind);

/// Rows are draws from N(0, diag(spectrum_decay^j)), j = 0..dims-1.
Matrix synthetic_dataset(int dims, int num_samples, double spectrum_decay,
                         std::uint64_t seed);

Matrix load_dataset(const std::string& path);
void save_dataset(const Matrix& samples, const std::string& path);

}  // namespace mcons
