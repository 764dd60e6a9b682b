#ifndef RKBS_TENSOR_HPP
#define RKBS_TENSOR_HPP

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rkbs/data.hpp"
#include "rkbs/kernels.hpp"
#include "rkbs/losses.hpp"

namespace rkbs {

/// The order-2m symmetric tensor A = sum_n Phi_n^{(x) 2m}, represented by the
/// M x N feature matrix B whose rows are Phi_n^T. Every contraction goes
/// through u = B c; the tensor itself is never formed outside the oracle.
class TensorHandle {
 public:
  TensorHandle(std::shared_ptr<const FeatureMatrix> fm, int m);
  TensorHandle(FeatureMatrix fm, int m);

  const FeatureMatrix& features() const { return *fm_; }
  const Eigen::MatrixXd& B() const { return fm_->values(); }
  int m() const { return m_; }
  std::size_t N() const { return fm_->cols(); }
  std::size_t M() const { return fm_->rows(); }

  // True when M < N; the Newton step then factors an M x M system.
  bool low_rank() const { return M() < N(); }
  // B B^T (M x M), precomputed when low_rank(); empty otherwise.
  const Eigen::MatrixXd& row_gram() const { return *gram_; }

  // Same features, different exponent.
  TensorHandle with_m(int m) const;

 private:
  std::shared_ptr<const FeatureMatrix> fm_;
  int m_;
  std::shared_ptr<const Eigen::MatrixXd> gram_;
};

// x^k by repeated squaring; sign-preserving for odd k, nonnegative for even k.
double int_pow(double x, int k);

// u = B c.
Eigen::VectorXd project(const TensorHandle& t, const Eigen::VectorXd& c);

// A c^{2m} = sum_n (Phi_n^T c)^{2m}.
double contract_full(const TensorHandle& t, const Eigen::VectorXd& c);

// A c^{2m-1} = sum_n (Phi_n^T c)^{2m-1} Phi_n = B^T u^{2m-1}.
Eigen::VectorXd contract_2m_minus_1(const TensorHandle& t, const Eigen::VectorXd& c);

// A c^{2m-2} = B^T diag(u^{2m-2}) B; equals B^T B for m = 1 (including c = 0).
Eigen::MatrixXd contract_2m_minus_2(const TensorHandle& t, const Eigen::VectorXd& c);

/// Dense order-2m tensor, row-major over (i_1, ..., i_2m). Test oracle only.
struct DenseTensor {
  std::size_t N = 0;
  int order = 0;
  std::vector<double> data;

  double at(const std::vector<std::size_t>& idx) const;
};

// Throws DimensionError when N^{2m} exceeds 1e6 entries.
DenseTensor materialize_tensor(const TensorHandle& t);

// (1/N) sum_i L(y_i, (A c^{2m-1})_i) + lambda A c^{2m}.
double objective_value(const TensorHandle& t, const Eigen::VectorXd& c, const LossSpec& loss, const Dataset& data,
                       double lambda);

// F(alpha) + G(c) + gamma^T r + (beta/2) |r|^2 with r = alpha - A c^{2m-1}.
double augmented_lagrangian(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& c,
                            const Eigen::VectorXd& gamma, double beta, const LossSpec& loss, const Dataset& data,
                            double lambda);

// Straight single-threaded loops, kept as the reference the OpenMP kernels
// are tested against. Outputs are bit-identical to the parallel versions.
namespace serial {
Eigen::VectorXd project(const TensorHandle& t, const Eigen::VectorXd& c);
double contract_full(const TensorHandle& t, const Eigen::VectorXd& c);
Eigen::VectorXd contract_2m_minus_1(const TensorHandle& t, const Eigen::VectorXd& c);
Eigen::MatrixXd contract_2m_minus_2(const TensorHandle& t, const Eigen::VectorXd& c);
}  // namespace serial

}  // namespace rkbs

#endif  // RKBS_TENSOR_HPP
