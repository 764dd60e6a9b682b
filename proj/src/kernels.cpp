#include "rkbs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rkbs/error.hpp"

namespace rkbs {

std::string to_string(KernelFamily family) {
  return family == KernelFamily::Gaussian ? "gaussian" : "min";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "min") return KernelFamily::Min;
  throw ConfigError("unknown kernel family '" + name + "' (expected gaussian or min)");
}

void KernelSpec::validate() const {
  if (dimension < 1) throw ConfigError("kernel dimension must be >= 1");
  if (family == KernelFamily::Gaussian && !(sigma > 0.0 && std::isfinite(sigma)))
    throw ConfigError("gaussian kernel requires sigma > 0");
}

FeatureMatrix::FeatureMatrix(KernelSpec kernel, std::vector<MultiIndex> indices, Eigen::MatrixXd values)
    : kernel_(kernel), indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.size() != static_cast<std::size_t>(values_.rows()))
    throw DimensionError("feature matrix: index list length differs from row count");
}

namespace {

// Appends every tuple of length d with entries >= 0 summing to `total`, in
// lexicographic order, until `out` holds `limit` entries.
void append_level(int d, int total, std::size_t limit, int base, std::vector<MultiIndex>& out) {
  MultiIndex current(static_cast<std::size_t>(d), 0);
  auto fill = [&](auto&& self, int pos, int remaining) -> void {
    if (out.size() >= limit) return;
    if (pos == d - 1) {
      current[static_cast<std::size_t>(pos)] = remaining;
      MultiIndex shifted = current;
      for (auto& v : shifted) v += base;
      out.push_back(std::move(shifted));
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      current[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, remaining - v);
      if (out.size() >= limit) return;
    }
  };
  fill(fill, 0, total);
}

// One factor of the product formula for a single coordinate.
double factor(const KernelSpec& kernel, int n, double x) {
  if (kernel.family == KernelFamily::Min) {
    const double nd = static_cast<double>(n);
    return std::numbers::sqrt2 / (nd * std::numbers::pi) * std::sin(nd * std::numbers::pi * x);
  }
  const double sx = kernel.sigma * x;
  const double gauss = std::exp(-sx * sx);
  if (n == 0) return gauss;
  if (sx == 0.0) return 0.0;
  if (n <= 20) {
    double coef = 1.0;  // 2^n / n!
    for (int k = 1; k <= n; ++k) coef *= 2.0 / static_cast<double>(k);
    return std::sqrt(coef) * std::pow(sx, n) * gauss;
  }
  // log|(2^n/n!)^{1/2} (sx)^n e^{-sx^2}|, sign applied at the end
  const double nd = static_cast<double>(n);
  const double log_mag =
      0.5 * (nd * std::numbers::ln2 - std::lgamma(nd + 1.0)) + nd * std::log(std::abs(sx)) - sx * sx;
  const double mag = std::exp(log_mag);
  return (sx < 0.0 && (n % 2 == 1)) ? -mag : mag;
}

// Fills one column of the feature matrix; shared by the serial and parallel
// builders so both produce identical bits.
void fill_column(const KernelSpec& kernel, const std::vector<MultiIndex>& indices,
                 std::span<const double> x, double* column) {
  const int d = kernel.dimension;
  int max_index = 0;
  for (const auto& n : indices)
    for (int v : n) max_index = std::max(max_index, v);
  // table[j][v] = factor(v, x_j)
  std::vector<std::vector<double>> table(static_cast<std::size_t>(d),
                                         std::vector<double>(static_cast<std::size_t>(max_index + 1), 0.0));
  for (int j = 0; j < d; ++j)
    for (int v = kernel.index_base(); v <= max_index; ++v)
      table[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)] =
          factor(kernel, v, x[static_cast<std::size_t>(j)]);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    double value = 1.0;
    for (int j = 0; j < d; ++j)
      value *= table[static_cast<std::size_t>(j)][static_cast<std::size_t>(indices[r][static_cast<std::size_t>(j)])];
    column[r] = value;
  }
}

std::vector<double> row_of(const PointMatrix& points, Eigen::Index i) {
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.cols(); ++j) x[static_cast<std::size_t>(j)] = points(i, j);
  return x;
}

void check_points(const KernelSpec& kernel, const PointMatrix& points) {
  kernel.validate();
  if (points.rows() < 1) throw DimensionError("feature matrix needs at least one point");
  if (points.cols() != kernel.dimension) {
    std::ostringstream msg;
    msg << "points have dimension " << points.cols() << " but kernel expects " << kernel.dimension;
    throw DimensionError(msg.str());
  }
  for (Eigen::Index i = 0; i < points.rows(); ++i) check_domain(kernel, row_of(points, i));
}

}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(const KernelSpec& kernel, std::size_t M) {
  kernel.validate();
  std::vector<MultiIndex> out;
  out.reserve(M);
  const int base = kernel.index_base();
  for (int level = 0; out.size() < M; ++level) append_level(kernel.dimension, level, M, base, out);
  return out;
}

void check_domain(const KernelSpec& kernel, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(kernel.dimension))
    throw DimensionError("point dimension does not match kernel dimension");
  for (double v : x) {
    if (!std::isfinite(v)) throw DomainError("non-finite coordinate");
    if (kernel.family == KernelFamily::Min && (v < 0.0 || v > 1.0)) {
      std::ostringstream msg;
      msg << "min kernel requires coordinates in [0,1], got " << v;
      throw DomainError(msg.str());
    }
  }
}

double feature_value(const KernelSpec& kernel, const MultiIndex& n, std::span<const double> x) {
  check_domain(kernel, x);
  if (n.size() != x.size()) throw DimensionError("multi-index length does not match dimension");
  double value = 1.0;
  for (std::size_t j = 0; j < n.size(); ++j) {
    if (n[j] < kernel.index_base()) throw DomainError("multi-index entry below the kernel's base");
    value *= factor(kernel, n[j], x[j]);
  }
  return value;
}

FeatureMatrix build_feature_matrix(const KernelSpec& kernel, std::size_t M, const PointMatrix& points) {
  check_points(kernel, points);
  auto indices = enumerate_multi_indices(kernel, M);
  const Eigen::Index N = points.rows();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(M), N);
#pragma omp parallel for schedule(static) if (N * static_cast<Eigen::Index>(M) > 4096)
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto x = row_of(points, i);
    fill_column(kernel, indices, x, values.col(i).data());
  }
  return FeatureMatrix(kernel, std::move(indices), std::move(values));
}

namespace serial {

FeatureMatrix build_feature_matrix(const KernelSpec& kernel, std::size_t M, const PointMatrix& points) {
  check_points(kernel, points);
  auto indices = enumerate_multi_indices(kernel, M);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(M), points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto x = row_of(points, i);
    fill_column(kernel, indices, x, values.col(i).data());
  }
  return FeatureMatrix(kernel, std::move(indices), std::move(values));
}

}  // namespace serial

double kernel_eval_closed_form(const KernelSpec& kernel, std::span<const double> x,
                               std::span<const double> xp) {
  kernel.validate();
  check_domain(kernel, x);
  check_domain(kernel, xp);
  if (kernel.family == KernelFamily::Gaussian) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - xp[j]) * (x[j] - xp[j]);
    return std::exp(-kernel.sigma * kernel.sigma * sq);
  }
  double value = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) value *= std::min(x[j], xp[j]) - x[j] * xp[j];
  return value;
}

double kernel_eval_truncated(const KernelSpec& kernel, std::size_t M, std::span<const double> x,
                             std::span<const double> xp) {
  double sum = 0.0;
  for (const auto& n : enumerate_multi_indices(kernel, M))
    sum += feature_value(kernel, n, x) * feature_value(kernel, n, xp);
  return sum;
}

RankCheck check_rank_assumption(const FeatureMatrix& fm, double tolerance) {
  const std::size_t M = fm.rows();
  const std::size_t N = fm.cols();
  RankCheck result;
  result.required = N * (N + 1) / 2;
  if (M < result.required) return result;

  const auto& B = fm.values();
  Eigen::MatrixXd stacked(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(result.required));
  for (Eigen::Index n = 0; n < static_cast<Eigen::Index>(M); ++n) {
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(N); ++i)
      for (Eigen::Index j = i; j < static_cast<Eigen::Index>(N); ++j) stacked(n, col++) = B(n, i) * B(n, j);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked);
  const auto& s = svd.singularValues();
  std::size_t rank = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = tolerance * s(0);
    for (Eigen::Index k = 0; k < s.size(); ++k)
      if (s(k) > cutoff) ++rank;
  }
  result.numeric_rank = rank;
  result.satisfied = rank == result.required;
  return result;
}

std::size_t default_truncation(std::size_t N) { return std::max<std::size_t>(N * (N + 1) / 2, 64); }

}  // namespace rkbs
