#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rkbs/data.hpp"
#include "rkbs/error.hpp"

using namespace rkbs;

namespace {

CsvOptions labeled(std::string column = "label") {
  CsvOptions o;
  o.label_column = std::move(column);
  return o;
}

Dataset parse(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  return read_csv(in, options, "t.csv");
}

std::string error_of(const std::string& text, const CsvOptions& options) {
  try {
    parse(text, options);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("CSV examples") {
  const auto d = parse("x,y,label\n0.5,1,1\n-2,3.25,-1\n1e-3,0,1\n", labeled());
  CHECK(d.size() == 3);
  CHECK(d.dimension() == 2);
  CHECK(d.labels == std::vector<int>{1, -1, 1});
  CHECK(d.points(1, 0) == -2.0);
  CHECK(d.points(1, 1) == 3.25);
  CHECK(d.points(2, 0) == 1e-3);
  CHECK(d.point(0) == std::vector<double>{0.5, 1.0});

  auto mapped = labeled("class");
  mapped.label_map = {{"2", 1}, {"1", -1}};
  const auto m = parse("class,a\n2,0.1\n1,0.2\n2,0.3\n", mapped);
  CHECK(m.labels == std::vector<int>{1, -1, 1});
  CHECK(m.dimension() == 1);
  CHECK(error_of("class,a\n3,0.1\n", mapped).find("'3'") != std::string::npos);

  auto cols = labeled();
  cols.feature_columns = {"x", "missing"};
  const auto msg = error_of("x,y,label\n1,2,1\n", cols);
  CHECK(msg.find("missing") != std::string::npos);
}

TEST_CASE("CSV column selection and headerless input") {
  auto cols = labeled();
  cols.feature_columns = {"z", "x"};
  const auto d = parse("x,y,z,label\n1,2,3,-1\n4,5,6,1\n", cols);
  CHECK(d.points.row(0) == Eigen::RowVector2d(3, 1));
  CHECK(d.points.row(1) == Eigen::RowVector2d(6, 4));

  CsvOptions bare;
  bare.has_header = false;
  bare.label_column = "0";
  const auto b = parse("1,0.25,0.5\n-1,0.75,1\n", bare);
  CHECK(b.labels == std::vector<int>{1, -1});
  CHECK(b.points.row(1) == Eigen::RowVector2d(0.75, 1));
}

TEST_CASE("CSV parse errors carry locations") {
  CHECK(error_of("x,label\n1,1\nabc,1\n", labeled()).find("line 3") != std::string::npos);
  CHECK(error_of("x,label\n1,1\nabc,1\n", labeled()).find("column x") != std::string::npos);
  CHECK(error_of("x,label\n1,1\n2,0\n", labeled()).find("'0'") != std::string::npos);
  CHECK(error_of("x,label\n1,1,3\n", labeled()).find("fields") != std::string::npos);
  CHECK(error_of("x,label\n", labeled()).find("no data") != std::string::npos);
  CHECK(error_of("x,label\ninf,1\n", labeled()) != "");
  CHECK(error_of("x,y\n1,1\n", labeled()).find("label") != std::string::npos);
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", labeled()), DataError);
}

TEST_CASE("CSV rescaling") {
  auto o = labeled();
  o.rescale_to = Box::square(-20, 20, 2);
  const auto d = parse("a,b,label\n0,5,1\n10,5,-1\n5,5,1\n", o);
  CHECK(d.points.col(0).minCoeff() == -20.0);
  CHECK(d.points.col(0).maxCoeff() == 20.0);
  CHECK(d.points(2, 0) == 0.0);
  CHECK(d.points.col(1).isConstant(0.0));
  o.rescale_to = Box::square(0, 1, 3);
  CHECK_THROWS_AS(parse("a,b,label\n0,5,1\n", o), DataError);
}

TEST_CASE("CSV round-trip") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Dataset d;
  d.points.resize(50, 3);
  for (Eigen::Index i = 0; i < d.points.size(); ++i) d.points.data()[i] = g(rng) * std::pow(10.0, static_cast<double>(i % 7) - 3);
  for (int i = 0; i < 50; ++i) d.labels.push_back(i % 3 == 0 ? -1 : 1);

  const auto path = (std::filesystem::temp_directory_path() / "rkbs_test_data_roundtrip.csv").string();
  save_csv(path, d);
  const auto back = load_csv(path, labeled());
  std::filesystem::remove(path);
  CHECK(back.points == d.points);
  CHECK(back.labels == d.labels);

  std::ostringstream out;
  write_csv(out, d);
  CHECK(out.str().rfind("x0,x1,x2,label\n", 0) == 0);
}

TEST_CASE("unlabeled point files") {
  std::istringstream a("x0,x1\n0.1,0.2\n0.3,0.4\n");
  const auto P = read_points_csv(a, labeled());
  CHECK(P.rows() == 2);
  CHECK(P(1, 1) == 0.4);

  std::istringstream b("x0,x1,label\n0.1,0.2,1\n");
  const auto Q = read_points_csv(b, labeled());
  CHECK(Q.cols() == 2);
}

TEST_CASE("dataset validation") {
  Dataset d;
  CHECK_THROWS_AS(d.validate(), DataError);
  d.points = Eigen::MatrixXd::Zero(2, 1);
  d.labels = {1, 0};
  CHECK_THROWS_AS(d.validate(), DataError);
  d.labels = {1};
  CHECK_THROWS_AS(d.validate(), DataError);
  d.labels = {1, -1};
  CHECK_NOTHROW(d.validate());
  d.points(0, 0) = NAN;
  CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("overlapping squares") {
  const auto [train, test] = generate_overlapping_squares(300, 120, 7);
  CHECK(train.size() == 300);
  CHECK(test.size() == 120);
  for (const auto* d : {&train, &test}) {
    int pos = 0;
    for (std::size_t i = 0; i < d->size(); ++i) {
      const double lo = d->labels[i] > 0 ? 0.4 : 0.0, hi = d->labels[i] > 0 ? 1.0 : 0.6;
      CHECK(d->points.row(static_cast<Eigen::Index>(i)).minCoeff() >= lo);
      CHECK(d->points.row(static_cast<Eigen::Index>(i)).maxCoeff() <= hi);
      pos += d->labels[i] > 0;
    }
    CHECK(2 * pos == static_cast<int>(d->size()));
  }
  const auto [train2, test2] = generate_overlapping_squares(300, 120, 7);
  CHECK(train2.points == train.points);
  CHECK(test2.points == test.points);
  CHECK(generate_overlapping_squares(300, 120, 8).first.points != train.points);

  // Test points are fresh draws, not copies of the training points.
  std::set<double> seen;
  for (Eigen::Index i = 0; i < train.points.rows(); ++i) seen.insert(train.points(i, 0));
  for (Eigen::Index i = 0; i < test.points.rows(); ++i) CHECK(seen.count(test.points(i, 0)) == 0);

  CHECK_THROWS_AS(generate_overlapping_squares(3, 2, 1), DataError);
  CHECK_THROWS_AS(generate_overlapping_squares(2, 5, 1), DataError);
}

TEST_CASE("grid test sets") {
  const auto g = generate_grid_testset(Box::square(-1, 1, 2), 51, checkerboard_labeler);
  CHECK(g.size() == 2601);
  CHECK(g.points.minCoeff() == -1.0);
  CHECK(g.points.maxCoeff() == 1.0);

  const auto c = generate_grid_testset(Box::square(0, 1, 2), 2, [](std::span<const double>) { return 1; });
  CHECK(c.size() == 4);
  std::set<std::pair<double, double>> corners;
  for (Eigen::Index i = 0; i < 4; ++i) corners.insert({c.points(i, 0), c.points(i, 1)});
  CHECK(corners == std::set<std::pair<double, double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(c.labels == std::vector<int>(4, 1));
  CHECK_THROWS_AS(generate_grid_testset(Box::square(0, 1, 2), 1, checkerboard_labeler), DataError);
}

TEST_CASE("checkerboard labeler and uniform draws") {
  const std::vector<double> a{0.5, -0.2}, b{-0.5, -0.2}, z{0.0, -1.0};
  CHECK(checkerboard_labeler(a) == -1);
  CHECK(checkerboard_labeler(b) == 1);
  CHECK(checkerboard_labeler(z) == 1);

  const auto u = generate_uniform(Box::square(-1, 1, 3), 200, checkerboard_labeler, 4);
  CHECK(u.size() == 200);
  CHECK(u.points.minCoeff() >= -1.0);
  CHECK(u.points.maxCoeff() < 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u.labels[i] == checkerboard_labeler(u.point(i)));
  CHECK(generate_uniform(Box::square(-1, 1, 3), 200, checkerboard_labeler, 4).points == u.points);
}

TEST_CASE("uniform source matches the reference generator stream") {
  // First output of mt19937_64 at its default seed.
  UniformSource s(5489);
  CHECK(s.next() == static_cast<double>(14514284786278117030ULL >> 11) * 0x1.0p-53);
  std::mt19937_64 ref(99);
  UniformSource t(99);
  for (int k = 0; k < 1000; ++k) {
    const double x = t.next(-1, 3);
    CHECK(x == -1 + 4 * (static_cast<double>(ref() >> 11) * 0x1.0p-53));
  }
}

TEST_CASE("principal component projection") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Dataset d;
  d.points.resize(400, 3);
  for (Eigen::Index i = 0; i < 400; ++i) {
    const double t = 5 * g(rng);
    d.points.row(i) << t, 0.5 * t + 0.01 * g(rng), 0.1 * g(rng);
    d.labels.push_back(i % 2 ? 1 : -1);
  }
  const auto p = pca_project(d, 2);
  CHECK(p.dimension() == 2);
  CHECK(p.labels == d.labels);
  const Eigen::VectorXd var = (p.points.rowwise() - p.points.colwise().mean()).colwise().squaredNorm();
  CHECK(var(0) > var(1));
  // The leading component carries nearly all the variance of the 3-d cloud.
  const double total = (d.points.rowwise() - d.points.colwise().mean()).squaredNorm();
  CHECK(var(0) / total > 0.99);
  CHECK_THROWS_AS(pca_project(d, 4), DataError);
}
