#ifndef RKBS_MODEL_HPP
#define RKBS_MODEL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rkbs/data.hpp"
#include "rkbs/kernels.hpp"

namespace rkbs {

inline constexpr int kModelFormatVersion = 1;

/// A trained classifier f(x) = sum_{n <= M} (Phi_n^T c)^{2m-1} phi_n(x).
/// The training points are kept so the features can be rebuilt; the weights
/// (Phi_n^T c)^{2m-1} are computed once at construction.
class TrainedModel {
 public:
  TrainedModel(KernelSpec kernel, std::size_t M, int m, Eigen::VectorXd c, Eigen::MatrixXd training_points,
               double lambda = 0.0, double beta = 0.0, double objective = 0.0);

  const KernelSpec& kernel() const { return kernel_; }
  std::size_t M() const { return M_; }
  int m() const { return m_; }
  const Eigen::VectorXd& c() const { return c_; }
  const Eigen::MatrixXd& training_points() const { return training_points_; }
  double lambda() const { return lambda_; }
  double beta() const { return beta_; }
  double objective() const { return objective_; }
  int format_version() const { return kModelFormatVersion; }

  const std::vector<MultiIndex>& indices() const { return indices_; }
  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  KernelSpec kernel_;
  std::size_t M_;
  int m_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd training_points_;
  double lambda_;
  double beta_;
  double objective_;
  std::vector<MultiIndex> indices_;
  Eigen::VectorXd weights_;
};

double decision_value(const TrainedModel& model, std::span<const double> x);

// +1 when decision_value >= 0, else -1.
int classify(const TrainedModel& model, std::span<const double> x);

struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;  // label +1, predicted -1
  std::size_t false_positive = 0;  // label -1, predicted +1
  std::size_t true_negative = 0;

  std::size_t total() const { return true_positive + false_negative + false_positive + true_negative; }
  double accuracy() const {
    return static_cast<double>(true_positive + true_negative) / static_cast<double>(total());
  }
};

ConfusionCounts confusion(const TrainedModel& model, const Dataset& data);

// Throws DataError on an empty dataset.
double evaluate_accuracy(const TrainedModel& model, const Dataset& data);

nlohmann::json model_to_json(const TrainedModel& model);
// Throws VersionMismatch or SchemaViolation.
TrainedModel model_from_json(const nlohmann::json& j);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace rkbs

#endif  // RKBS_MODEL_HPP
