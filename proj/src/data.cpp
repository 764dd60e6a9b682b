#include "rkbs/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rkbs/error.hpp"

namespace rkbs {

std::vector<double> Dataset::point(std::size_t i) const {
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index k = 0; k < points.cols(); ++k) x[static_cast<std::size_t>(k)] = points(static_cast<Eigen::Index>(i), k);
  return x;
}

void Dataset::validate() const {
  if (labels.empty()) throw DataError("dataset '" + name + "' is empty");
  if (static_cast<std::size_t>(points.rows()) != labels.size())
    throw DataError("dataset '" + name + "': point and label counts differ");
  for (int y : labels)
    if (y != 1 && y != -1) throw DataError("dataset '" + name + "': labels must be +1 or -1");
  if (!points.allFinite()) throw DataError("dataset '" + name + "' has non-finite coordinates");
}

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch) != 0; });
}

std::size_t resolve_column(const std::string& ref, const std::vector<std::string>& header, std::size_t width) {
  auto it = std::find(header.begin(), header.end(), ref);
  if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  if (all_digits(ref)) {
    const auto index = static_cast<std::size_t>(std::stoul(ref));
    if (index < width) return index;
  }
  throw DataError("column '" + ref + "' not found");
}

bool parse_double(const std::string& text, double& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

namespace {

// labeled = false: the label column is optional and skipped when present.
Dataset parse_table(std::istream& in, const CsvOptions& options, const std::string& name, bool labeled) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    rows.push_back(split_row(line));
    line_numbers.push_back(line_no);
  }
  std::vector<std::string> header;
  if (options.has_header) {
    if (rows.empty()) throw DataError(name + ": missing header row");
    header = rows.front();
    rows.erase(rows.begin());
    line_numbers.erase(line_numbers.begin());
  }
  if (rows.empty()) throw DataError(name + ": no data rows");
  const std::size_t width = options.has_header ? header.size() : rows.front().size();

  std::optional<std::size_t> label_col;
  if (labeled)
    label_col = resolve_column(options.label_column, header, width);
  else if (auto it = std::find(header.begin(), header.end(), options.label_column); it != header.end())
    label_col = static_cast<std::size_t>(it - header.begin());
  std::vector<std::size_t> feature_cols;
  if (options.feature_columns.empty()) {
    for (std::size_t k = 0; k < width; ++k)
      if (k != label_col) feature_cols.push_back(k);
  } else {
    for (const auto& ref : options.feature_columns) feature_cols.push_back(resolve_column(ref, header, width));
  }
  if (feature_cols.empty()) throw DataError(name + ": no feature columns");

  Dataset data;
  data.name = name;
  data.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  data.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto where = [&](std::size_t col) {
      std::ostringstream msg;
      msg << name << ": line " << line_numbers[r] << ", column " << (options.has_header ? header[col] : std::to_string(col));
      return msg.str();
    };
    if (row.size() != width) {
      std::ostringstream msg;
      msg << name << ": line " << line_numbers[r] << " has " << row.size() << " fields, expected " << width;
      throw DataError(msg.str());
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      double value = 0.0;
      if (!parse_double(row[feature_cols[k]], value) || !std::isfinite(value))
        throw DataError(where(feature_cols[k]) + ": cannot parse '" + row[feature_cols[k]] + "' as a finite number");
      data.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = value;
    }
    if (!labeled) continue;
    const std::string& raw = row[*label_col];
    int label = 0;
    if (!options.label_map.empty()) {
      auto it = options.label_map.find(raw);
      if (it == options.label_map.end()) throw DataError(where(*label_col) + ": label '" + raw + "' is not in the label mapping");
      label = it->second;
    } else {
      double value = 0.0;
      if (!parse_double(raw, value) || (value != 1.0 && value != -1.0))
        throw DataError(where(*label_col) + ": label '" + raw + "' is not +1 or -1");
      label = value > 0 ? 1 : -1;
    }
    data.labels.push_back(label);
  }

  if (options.rescale_to) {
    const Box& box = *options.rescale_to;
    if (box.dimension() != data.dimension()) throw DataError(name + ": rescale box dimension differs from feature count");
    for (Eigen::Index k = 0; k < data.points.cols(); ++k) {
      const double lo = data.points.col(k).minCoeff();
      const double hi = data.points.col(k).maxCoeff();
      const double tlo = box.lo[static_cast<std::size_t>(k)];
      const double thi = box.hi[static_cast<std::size_t>(k)];
      if (hi > lo)
        data.points.col(k) = ((data.points.col(k).array() - lo) / (hi - lo) * (thi - tlo) + tlo).matrix();
      else
        data.points.col(k).setConstant(0.5 * (tlo + thi));
    }
  }
  if (labeled) data.validate();
  return data;
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvOptions& options, const std::string& name) {
  return parse_table(in, options, name, true);
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_csv(in, options, path);
}

Eigen::MatrixXd read_points_csv(std::istream& in, const CsvOptions& options, const std::string& name) {
  return parse_table(in, options, name, false).points;
}

Eigen::MatrixXd load_points_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_points_csv(in, options, path);
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto old_precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int k = 0; k < data.dimension(); ++k) out << 'x' << k << ',';
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int k = 0; k < data.dimension(); ++k) out << data.points(static_cast<Eigen::Index>(i), k) << ',';
    out << data.labels[i] << '\n';
  }
  out.precision(old_precision);
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  write_csv(out, data);
}

std::pair<Dataset, Dataset> generate_overlapping_squares(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
  if (n_train % 2 != 0 || n_test % 2 != 0) throw DataError("overlapping squares: counts must be even");
  if (n_train == 0 || n_test == 0) throw DataError("overlapping squares: counts must be positive");
  UniformSource source(seed);
  auto draw = [&](std::size_t n, const std::string& name) {
    Dataset data;
    data.name = name;
    data.points.resize(static_cast<Eigen::Index>(n), 2);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const bool positive = i % 2 == 0;
      const double lo = positive ? 0.4 : 0.0;
      const double hi = positive ? 1.0 : 0.6;
      data.points(static_cast<Eigen::Index>(i), 0) = source.next(lo, hi);
      data.points(static_cast<Eigen::Index>(i), 1) = source.next(lo, hi);
      data.labels[i] = positive ? 1 : -1;
    }
    return data;
  };
  Dataset train = draw(n_train, "squares-train");
  Dataset test = draw(n_test, "squares-test");
  return {std::move(train), std::move(test)};
}

Dataset generate_grid_testset(const Box& box, std::size_t resolution, const Labeler& labeler) {
  if (resolution < 2) throw DataError("grid resolution must be >= 2");
  const int d = box.dimension();
  if (d < 1 || box.hi.size() != box.lo.size()) throw DataError("grid box is malformed");
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= resolution;
  Dataset data;
  data.name = "grid";
  data.points.resize(static_cast<Eigen::Index>(total), d);
  data.labels.resize(total);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    // Last coordinate varies fastest.
    std::size_t rem = flat;
    for (int k = d - 1; k >= 0; --k) {
      const std::size_t step = rem % resolution;
      rem /= resolution;
      const auto kk = static_cast<std::size_t>(k);
      x[kk] = box.lo[kk] + (box.hi[kk] - box.lo[kk]) * static_cast<double>(step) / static_cast<double>(resolution - 1);
    }
    for (int k = 0; k < d; ++k) data.points(static_cast<Eigen::Index>(flat), k) = x[static_cast<std::size_t>(k)];
    data.labels[flat] = labeler(x);
  }
  data.validate();
  return data;
}

Dataset generate_uniform(const Box& box, std::size_t n, const Labeler& labeler, std::uint64_t seed) {
  if (n == 0) throw DataError("generate_uniform: n must be positive");
  const int d = box.dimension();
  UniformSource source(seed);
  Dataset data;
  data.name = "uniform";
  data.points.resize(static_cast<Eigen::Index>(n), d);
  data.labels.resize(n);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      x[kk] = source.next(box.lo[kk], box.hi[kk]);
      data.points(static_cast<Eigen::Index>(i), k) = x[kk];
    }
    data.labels[i] = labeler(x);
  }
  data.validate();
  return data;
}

int checkerboard_labeler(std::span<const double> x) {
  double product = 1.0;
  for (double v : x.first(std::min<std::size_t>(2, x.size()))) product *= v;
  return product >= 0.0 ? 1 : -1;
}

Dataset pca_project(const Dataset& data, int components) {
  data.validate();
  if (components < 1 || components > data.dimension()) throw DataError("pca: invalid component count");
  const Eigen::RowVectorXd mean = data.points.colwise().mean();
  const Eigen::MatrixXd centered = data.points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(data.size()) - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues ascend; take the last `components` columns in reverse.
  Eigen::MatrixXd basis(data.dimension(), components);
  for (int k = 0; k < components; ++k) basis.col(k) = eig.eigenvectors().col(data.dimension() - 1 - k);
  Dataset out;
  out.name = data.name + "-pca";
  out.points = centered * basis;
  out.labels = data.labels;
  return out;
}

}  // namespace rkbs
