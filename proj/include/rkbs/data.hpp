#ifndef RKBS_DATA_HPP
#define RKBS_DATA_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rkbs {

/// Labeled binary-classification samples; points stored one per row.
struct Dataset {
  Eigen::MatrixXd points;   // N x d
  std::vector<int> labels;  // each +1 or -1
  std::string name;

  std::size_t size() const { return labels.size(); }
  int dimension() const { return static_cast<int>(points.cols()); }
  std::vector<double> point(std::size_t i) const;

  // Throws DataError on empty data, non-finite coordinates, labels outside
  // {+1, -1}, or a row/label count mismatch.
  void validate() const;
};

// Axis-aligned box [lo_j, hi_j] per coordinate.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  static Box square(double lo, double hi, int d) {
    return {std::vector<double>(static_cast<std::size_t>(d), lo), std::vector<double>(static_cast<std::size_t>(d), hi)};
  }
  int dimension() const { return static_cast<int>(lo.size()); }
};

using Labeler = std::function<int(std::span<const double>)>;

struct CsvOptions {
  // Column references: a header name, or a zero-based index when the file
  // has no header (or the name is all digits).
  std::string label_column;
  std::vector<std::string> feature_columns;  // empty: every column except the label
  bool has_header = true;
  // Raw label text -> +1/-1. Empty means labels must already read as 1 or -1.
  std::map<std::string, int> label_map;
  // Optional per-coordinate affine map from the observed [min, max] range
  // onto this box.
  std::optional<Box> rescale_to;
};

Dataset load_csv(const std::string& path, const CsvOptions& options);
Dataset read_csv(std::istream& in, const CsvOptions& options, const std::string& name = "csv");

// Feature columns only, for unlabeled input. The label column is skipped if
// the header names it.
Eigen::MatrixXd load_points_csv(const std::string& path, const CsvOptions& options);
Eigen::MatrixXd read_points_csv(std::istream& in, const CsvOptions& options, const std::string& name = "csv");

// Header x0..x{d-1},label; reals written with round-trip precision.
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

/// Balanced samples: +1 uniform on [0.4,1]^2, -1 uniform on [0,0.6]^2.
/// Classes alternate +1, -1 within each split; the test split is drawn after
/// the training split from the same stream.
std::pair<Dataset, Dataset> generate_overlapping_squares(std::size_t n_train, std::size_t n_test,
                                                         std::uint64_t seed);

// resolution^d grid points over the box, labels from `labeler`.
Dataset generate_grid_testset(const Box& box, std::size_t resolution, const Labeler& labeler);

// n uniform points in the box, labels from `labeler`.
Dataset generate_uniform(const Box& box, std::size_t n, const Labeler& labeler, std::uint64_t seed);

// Stand-in labeler for the small synthetic demo: +1 iff x_0 * x_1 >= 0.
int checkerboard_labeler(std::span<const double> x);

/// Projects the points onto their leading principal components (covariance
/// eigenvectors, largest eigenvalue first). Used only for preprocessing.
Dataset pca_project(const Dataset& data, int components);

// Uniform doubles in [0, 1) with 53 random bits from std::mt19937_64.
// Unlike std::uniform_real_distribution the mapping is fixed, so streams are
// identical across standard libraries.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rkbs

#endif  // RKBS_DATA_HPP
