#include "rkbs/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rkbs/error.hpp"
#include "rkbs/tensor.hpp"

namespace rkbs {

TrainedModel::TrainedModel(KernelSpec kernel, std::size_t M, int m, Eigen::VectorXd c,
                           Eigen::MatrixXd training_points, double lambda, double beta, double objective)
    : kernel_(kernel),
      M_(M),
      m_(m),
      c_(std::move(c)),
      training_points_(std::move(training_points)),
      lambda_(lambda),
      beta_(beta),
      objective_(objective) {
  if (m_ < 1) throw SchemaViolation("model exponent m must be >= 1");
  if (M_ < 1) throw SchemaViolation("model truncation M must be >= 1");
  if (c_.size() != training_points_.rows()) throw SchemaViolation("model: len(c) differs from the number of training points");
  FeatureMatrix fm = build_feature_matrix(kernel_, M_, training_points_);
  indices_ = fm.indices();
  const Eigen::VectorXd u = project(TensorHandle(std::move(fm), m_), c_);
  weights_.resize(u.size());
  for (Eigen::Index n = 0; n < u.size(); ++n) weights_(n) = int_pow(u(n), 2 * m_ - 1);
}

double decision_value(const TrainedModel& model, std::span<const double> x) {
  check_domain(model.kernel(), x);
  const auto& w = model.weights();
  double sum = 0.0;
  for (std::size_t n = 0; n < model.indices().size(); ++n)
    sum += feature_value(model.kernel(), model.indices()[n], x) * w(static_cast<Eigen::Index>(n));
  return sum;
}

int classify(const TrainedModel& model, std::span<const double> x) { return decision_value(model, x) >= 0.0 ? 1 : -1; }

ConfusionCounts confusion(const TrainedModel& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("cannot evaluate on an empty dataset");
  ConfusionCounts counts;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int predicted = classify(model, data.point(i));
    const int label = data.labels[i];
    if (label > 0)
      (predicted > 0 ? counts.true_positive : counts.false_negative)++;
    else
      (predicted > 0 ? counts.false_positive : counts.true_negative)++;
  }
  return counts;
}

double evaluate_accuracy(const TrainedModel& model, const Dataset& data) { return confusion(model, data).accuracy(); }

nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j;
  j["format_version"] = model.format_version();
  j["kernel"] = {{"family", to_string(model.kernel().family)},
                 {"d", model.kernel().dimension},
                 {"sigma", model.kernel().sigma}};
  j["M"] = model.M();
  j["m"] = model.m();
  j["lambda"] = model.lambda();
  j["beta"] = model.beta();
  j["objective"] = model.objective();
  auto points = nlohmann::json::array();
  const auto& tp = model.training_points();
  for (Eigen::Index i = 0; i < tp.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < tp.cols(); ++k) row.push_back(tp(i, k));
    points.push_back(row);
  }
  j["training_points"] = points;
  j["c"] = std::vector<double>(model.c().data(), model.c().data() + model.c().size());
  return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      std::ostringstream msg;
      msg << "model format_version " << version << " is not supported (expected " << kModelFormatVersion << ")";
      throw VersionMismatch(msg.str());
    }
    const auto& kj = j.at("kernel");
    KernelSpec kernel{kernel_family_from_string(kj.at("family").get<std::string>()), kj.at("d").get<int>(),
                      kj.at("sigma").get<double>()};
    kernel.validate();
    const auto& pj = j.at("training_points");
    const auto cj = j.at("c").get<std::vector<double>>();
    if (!pj.is_array() || pj.size() != cj.size()) throw SchemaViolation("model: len(c) differs from the number of training points");
    Eigen::MatrixXd points(static_cast<Eigen::Index>(pj.size()), kernel.dimension);
    for (std::size_t i = 0; i < pj.size(); ++i) {
      const auto row = pj[i].get<std::vector<double>>();
      if (row.size() != static_cast<std::size_t>(kernel.dimension))
        throw SchemaViolation("model: training point dimension differs from kernel d");
      for (std::size_t k = 0; k < row.size(); ++k) points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
    }
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cj.data(), static_cast<Eigen::Index>(cj.size()));
    return TrainedModel(kernel, j.at("M").get<std::size_t>(), j.at("m").get<int>(), std::move(c), std::move(points),
                        j.at("lambda").get<double>(), j.at("beta").get<double>(), j.at("objective").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(std::string("model: ") + e.what());
  } catch (const ConfigError& e) {
    throw SchemaViolation(std::string("model: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw DataError("failed writing model to '" + path + "'");
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace rkbs
