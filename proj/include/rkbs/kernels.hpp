#ifndef RKBS_KERNELS_HPP
#define RKBS_KERNELS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rkbs {

enum class KernelFamily { Gaussian, Min };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// A kernel with a known feature expansion K(x, x') = sum_n phi_n(x) phi_n(x').
///
/// Gaussian: exp(-sigma^2 |x - x'|^2), multi-indices over (N_0)^d.
/// Min: prod_j (min(x_j, x'_j) - x_j x'_j), multi-indices over N^d, inputs
/// restricted to the unit cube.
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  int dimension = 1;
  double sigma = 1.0;  // unused by the min kernel

  static KernelSpec gaussian(int dimension, double sigma) {
    return {KernelFamily::Gaussian, dimension, sigma};
  }
  static KernelSpec min(int dimension) { return {KernelFamily::Min, dimension, 1.0}; }

  // Throws ConfigError on d < 1 or a non-positive Gaussian sigma.
  void validate() const;

  // Smallest admissible multi-index entry (0 for Gaussian, 1 for min).
  int index_base() const { return family == KernelFamily::Gaussian ? 0 : 1; }

  bool operator==(const KernelSpec&) const = default;
};

using MultiIndex = std::vector<int>;

// Points are stored one per row: an N x d matrix.
using PointMatrix = Eigen::MatrixXd;

/// Truncated feature evaluations B(n, i) = phi_n(x_i), M rows by N columns.
/// Immutable once built.
class FeatureMatrix {
 public:
  FeatureMatrix(KernelSpec kernel, std::vector<MultiIndex> indices, Eigen::MatrixXd values);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }

 private:
  KernelSpec kernel_;
  std::vector<MultiIndex> indices_;
  Eigen::MatrixXd values_;
};

// First M multi-indices in graded lexicographic order (ascending entry sum,
// lexicographic tie-break).
std::vector<MultiIndex> enumerate_multi_indices(const KernelSpec& kernel, std::size_t M);

double feature_value(const KernelSpec& kernel, const MultiIndex& n, std::span<const double> x);

// Throws DomainError when x lies outside the kernel's domain.
void check_domain(const KernelSpec& kernel, std::span<const double> x);

// Parallel over columns; bit-identical to serial::build_feature_matrix.
FeatureMatrix build_feature_matrix(const KernelSpec& kernel, std::size_t M, const PointMatrix& points);

double kernel_eval_closed_form(const KernelSpec& kernel, std::span<const double> x,
                               std::span<const double> xp);
double kernel_eval_truncated(const KernelSpec& kernel, std::size_t M, std::span<const double> x,
                             std::span<const double> xp);

struct RankCheck {
  bool satisfied = false;
  // Empty when M < N(N+1)/2 and no decomposition was attempted.
  std::optional<std::size_t> numeric_rank;
  std::size_t required = 0;  // N(N+1)/2
};

// Rank test for the family {Phi_n Phi_n^T}: stacks the vectorized upper
// triangles as rows and counts singular values above tolerance * s_max.
RankCheck check_rank_assumption(const FeatureMatrix& fm, double tolerance = 1e-10);

// max(N(N+1)/2, 64).
std::size_t default_truncation(std::size_t N);

namespace serial {
FeatureMatrix build_feature_matrix(const KernelSpec& kernel, std::size_t M, const PointMatrix& points);
}  // namespace serial

}  // namespace rkbs

#endif  // RKBS_KERNELS_HPP
