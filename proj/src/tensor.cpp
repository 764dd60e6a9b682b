#include "rkbs/tensor.hpp"

#include <cmath>
#include <sstream>

#include "rkbs/error.hpp"

namespace rkbs {

namespace {

void check_m(int m) {
  if (m < 1) throw ConfigError("tensor exponent m must be >= 1");
}

void check_vector(const TensorHandle& t, const Eigen::VectorXd& c, const char* what) {
  if (static_cast<std::size_t>(c.size()) != t.N()) {
    std::ostringstream msg;
    msg << what << ": expected length " << t.N() << ", got " << c.size();
    throw DimensionError(msg.str());
  }
}

// Work below this many multiply-adds stays on the calling thread.
constexpr Eigen::Index kParallelThreshold = 1 << 14;

}  // namespace

TensorHandle::TensorHandle(std::shared_ptr<const FeatureMatrix> fm, int m) : fm_(std::move(fm)), m_(m) {
  check_m(m);
  if (!fm_) throw DimensionError("tensor handle needs a feature matrix");
  if (low_rank()) {
    const auto& b = fm_->values();
    gram_ = std::make_shared<const Eigen::MatrixXd>(b * b.transpose());
  } else {
    gram_ = std::make_shared<const Eigen::MatrixXd>();
  }
}

TensorHandle::TensorHandle(FeatureMatrix fm, int m)
    : TensorHandle(std::make_shared<const FeatureMatrix>(std::move(fm)), m) {}

TensorHandle TensorHandle::with_m(int m) const {
  check_m(m);
  TensorHandle copy = *this;
  copy.m_ = m;
  return copy;
}

double int_pow(double x, int k) {
  double result = 1.0;
  double base = x;
  while (k > 0) {
    if (k & 1) result *= base;
    base *= base;
    k >>= 1;
  }
  return result;
}

Eigen::VectorXd project(const TensorHandle& t, const Eigen::VectorXd& c) {
  check_vector(t, c, "project");
  const auto& B = t.B();
  const Eigen::Index M = B.rows();
  const Eigen::Index N = B.cols();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(M);
  // Row blocks in parallel; within a row the sum runs over ascending i.
  constexpr Eigen::Index kBlock = 256;
  const Eigen::Index blocks = (M + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (M * N > kParallelThreshold)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index begin = blk * kBlock;
    const Eigen::Index end = std::min(M, begin + kBlock);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double ci = c(i);
      const double* col = B.col(i).data();
      for (Eigen::Index n = begin; n < end; ++n) u(n) += col[n] * ci;
    }
  }
  return u;
}

double contract_full(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = project(t, c);
  const int p = 2 * t.m();
  double sum = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) sum += int_pow(u(n), p);
  return sum;
}

Eigen::VectorXd contract_2m_minus_1(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = project(t, c);
  const int p = 2 * t.m() - 1;
  Eigen::VectorXd w(u.size());
  for (Eigen::Index n = 0; n < u.size(); ++n) w(n) = int_pow(u(n), p);
  const auto& B = t.B();
  const Eigen::Index N = B.cols();
  const Eigen::Index M = B.rows();
  Eigen::VectorXd out(N);
#pragma omp parallel for schedule(static) if (M * N > kParallelThreshold)
  for (Eigen::Index i = 0; i < N; ++i) {
    const double* col = B.col(i).data();
    double sum = 0.0;
    for (Eigen::Index n = 0; n < M; ++n) sum += col[n] * w(n);
    out(i) = sum;
  }
  return out;
}

Eigen::MatrixXd contract_2m_minus_2(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = project(t, c);
  const int p = 2 * t.m() - 2;
  Eigen::VectorXd w(u.size());
  for (Eigen::Index n = 0; n < u.size(); ++n) w(n) = int_pow(u(n), p);
  const auto& B = t.B();
  const Eigen::Index N = B.cols();
  const Eigen::Index M = B.rows();
  Eigen::MatrixXd out(N, N);
#pragma omp parallel for schedule(dynamic, 4) if (M * N * N > kParallelThreshold)
  for (Eigen::Index i = 0; i < N; ++i) {
    const double* ci = B.col(i).data();
    for (Eigen::Index j = i; j < N; ++j) {
      const double* cj = B.col(j).data();
      double sum = 0.0;
      for (Eigen::Index n = 0; n < M; ++n) sum += ci[n] * w(n) * cj[n];
      out(i, j) = sum;
      out(j, i) = sum;
    }
  }
  return out;
}

namespace serial {

Eigen::VectorXd project(const TensorHandle& t, const Eigen::VectorXd& c) {
  check_vector(t, c, "project");
  const auto& B = t.B();
  Eigen::VectorXd u(B.rows());
  for (Eigen::Index n = 0; n < B.rows(); ++n) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < B.cols(); ++i) sum += B(n, i) * c(i);
    u(n) = sum;
  }
  return u;
}

double contract_full(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = serial::project(t, c);
  double sum = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) sum += int_pow(u(n), 2 * t.m());
  return sum;
}

Eigen::VectorXd contract_2m_minus_1(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = serial::project(t, c);
  const auto& B = t.B();
  Eigen::VectorXd out(B.cols());
  for (Eigen::Index i = 0; i < B.cols(); ++i) {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < B.rows(); ++n) sum += B(n, i) * int_pow(u(n), 2 * t.m() - 1);
    out(i) = sum;
  }
  return out;
}

Eigen::MatrixXd contract_2m_minus_2(const TensorHandle& t, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = serial::project(t, c);
  const auto& B = t.B();
  Eigen::MatrixXd out(B.cols(), B.cols());
  for (Eigen::Index i = 0; i < B.cols(); ++i) {
    for (Eigen::Index j = i; j < B.cols(); ++j) {
      double sum = 0.0;
      for (Eigen::Index n = 0; n < B.rows(); ++n) sum += B(n, i) * int_pow(u(n), 2 * t.m() - 2) * B(n, j);
      out(i, j) = sum;
      out(j, i) = sum;
    }
  }
  return out;
}

}  // namespace serial

double DenseTensor::at(const std::vector<std::size_t>& idx) const {
  std::size_t flat = 0;
  for (std::size_t k : idx) flat = flat * N + k;
  return data.at(flat);
}

DenseTensor materialize_tensor(const TensorHandle& t) {
  const std::size_t N = t.N();
  const int order = 2 * t.m();
  double entries = std::pow(static_cast<double>(N), order);
  if (entries > 1e6) throw DimensionError("materialize_tensor: N^{2m} exceeds 1e6 entries");
  DenseTensor dense{N, order, std::vector<double>(static_cast<std::size_t>(entries), 0.0)};
  const auto& B = t.B();
  std::vector<std::size_t> idx(static_cast<std::size_t>(order), 0);
  for (std::size_t flat = 0; flat < dense.data.size(); ++flat) {
    std::size_t rem = flat;
    for (int k = order - 1; k >= 0; --k) {
      idx[static_cast<std::size_t>(k)] = rem % N;
      rem /= N;
    }
    double sum = 0.0;
    for (Eigen::Index n = 0; n < B.rows(); ++n) {
      double prod = 1.0;
      for (std::size_t i : idx) prod *= B(n, static_cast<Eigen::Index>(i));
      sum += prod;
    }
    dense.data[flat] = sum;
  }
  return dense;
}

namespace {

void check_data(const TensorHandle& t, const Dataset& data) {
  if (data.size() != t.N()) throw DimensionError("dataset size does not match tensor dimension");
}

double empirical_risk(const Eigen::VectorXd& values, const LossSpec& loss, const Dataset& data) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += loss_eval(loss, data.labels[i], values(static_cast<Eigen::Index>(i)));
  return sum / static_cast<double>(data.size());
}

}  // namespace

double objective_value(const TensorHandle& t, const Eigen::VectorXd& c, const LossSpec& loss, const Dataset& data,
                       double lambda) {
  check_data(t, data);
  return empirical_risk(contract_2m_minus_1(t, c), loss, data) + lambda * contract_full(t, c);
}

double augmented_lagrangian(const TensorHandle& t, const Eigen::VectorXd& alpha, const Eigen::VectorXd& c,
                            const Eigen::VectorXd& gamma, double beta, const LossSpec& loss, const Dataset& data,
                            double lambda) {
  check_data(t, data);
  check_vector(t, alpha, "augmented_lagrangian alpha");
  check_vector(t, gamma, "augmented_lagrangian gamma");
  const Eigen::VectorXd residual = alpha - contract_2m_minus_1(t, c);
  return empirical_risk(alpha, loss, data) + lambda * contract_full(t, c) + gamma.dot(residual) +
         0.5 * beta * residual.squaredNorm();
}

}  // namespace rkbs
