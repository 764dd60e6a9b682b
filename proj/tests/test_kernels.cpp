#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rkbs/error.hpp"
#include "rkbs/kernels.hpp"

using namespace rkbs;

namespace {

using Pts = std::vector<double>;

Eigen::MatrixXd column_points(std::initializer_list<double> xs) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return p;
}

// Direct product formula in long double, independent of the library's log-domain path.
long double gaussian_factor_ref(int n, double sigma, double x) {
  long double f = std::exp(-static_cast<long double>(sigma) * sigma * x * x);
  for (int k = 1; k <= n; ++k) f *= std::sqrt(2.0L / k) * static_cast<long double>(sigma) * x;
  return f;
}

}  // namespace

TEST_CASE("multi-index enumeration is graded lexicographic") {
  using V = std::vector<MultiIndex>;
  CHECK(enumerate_multi_indices(KernelSpec::gaussian(1, 1.0), 3) == V{{0}, {1}, {2}});
  CHECK(enumerate_multi_indices(KernelSpec::min(1), 3) == V{{1}, {2}, {3}});
  CHECK(enumerate_multi_indices(KernelSpec::gaussian(2, 1.0), 4) == V{{0, 0}, {0, 1}, {1, 0}, {0, 2}});
  CHECK(enumerate_multi_indices(KernelSpec::min(2), 4) == V{{1, 1}, {1, 2}, {2, 1}, {1, 3}});
}

TEST_CASE("enumeration properties") {
  for (int d = 1; d <= 3; ++d) {
    for (auto kernel : {KernelSpec::gaussian(d, 0.7), KernelSpec::min(d)}) {
      const auto a = enumerate_multi_indices(kernel, 200);
      CHECK(a == enumerate_multi_indices(kernel, 200));
      REQUIRE(a.size() == 200);
      for (std::size_t k = 0; k < a.size(); ++k) {
        REQUIRE(a[k].size() == static_cast<std::size_t>(d));
        for (int e : a[k]) CHECK(e >= kernel.index_base());
        if (k == 0) continue;
        int s0 = 0, s1 = 0;
        for (int e : a[k - 1]) s0 += e;
        for (int e : a[k]) s1 += e;
        CHECK((s0 < s1 || (s0 == s1 && a[k - 1] < a[k])));
      }
    }
  }
}

TEST_CASE("feature values") {
  const double x0 = 0.0, x1 = 1.0, xh = 0.5;
  CHECK(feature_value(KernelSpec::gaussian(1, 1.0), {0}, std::span(&x0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(feature_value(KernelSpec::gaussian(1, 1.0), {2}, std::span(&x1, 1)) ==
        doctest::Approx(std::sqrt(2.0) * std::exp(-1.0)).epsilon(1e-14));
  CHECK(feature_value(KernelSpec::min(1), {1}, std::span(&xh, 1)) ==
        doctest::Approx(std::sqrt(2.0) / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("gaussian features match the direct product formula, including large n") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = trial % 60;
    const double sigma = 0.3 + 0.01 * (trial % 100);
    const double x = ux(rng);
    const double got = feature_value(KernelSpec::gaussian(1, sigma), {n}, std::span(&x, 1));
    const long double want = gaussian_factor_ref(n, sigma, x);
    CHECK(std::abs(got - static_cast<double>(want)) <= 1e-13 * (std::abs(static_cast<double>(want)) + 1e-300));
    CHECK(std::isfinite(got));
  }
  // Very large n stays finite (no 2^n / n! overflow).
  const double x = 1.5;
  CHECK(std::isfinite(feature_value(KernelSpec::gaussian(1, 2.0), {400}, std::span(&x, 1))));
}

TEST_CASE("multivariate features are products of univariate factors") {
  const Pts x{0.3, 0.8};
  const double a = x[0], b = x[1];
  const auto g = KernelSpec::gaussian(2, 0.9);
  CHECK(feature_value(g, {2, 3}, x) == doctest::Approx(feature_value(KernelSpec::gaussian(1, 0.9), {2}, std::span(&a, 1)) *
                                                          feature_value(KernelSpec::gaussian(1, 0.9), {3}, std::span(&b, 1))));
  const auto mk = KernelSpec::min(2);
  const double want = (std::sqrt(2.0) / (2 * std::numbers::pi)) * std::sin(2 * std::numbers::pi * 0.3) *
                      (std::sqrt(2.0) / (3 * std::numbers::pi)) * std::sin(3 * std::numbers::pi * 0.8);
  CHECK(feature_value(mk, {2, 3}, x) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("feature matrix examples") {
  auto g1 = build_feature_matrix(KernelSpec::gaussian(1, 1.0), 1, column_points({0.0}));
  REQUIRE(g1.rows() == 1);
  REQUIRE(g1.cols() == 1);
  CHECK(g1.values()(0, 0) == 1.0);

  auto mm = build_feature_matrix(KernelSpec::min(1), 2, column_points({0.5, 0.25}));
  CHECK(mm.values()(0, 0) == doctest::Approx(0.450158).epsilon(1e-6));
  CHECK(mm.values()(0, 1) == doctest::Approx(0.318310).epsilon(1e-6));
  CHECK(std::abs(mm.values()(1, 0)) < 1e-15);
  CHECK(mm.values()(1, 1) == doctest::Approx(0.225079).epsilon(1e-6));

  auto g3 = build_feature_matrix(KernelSpec::gaussian(1, 1.0), 3, column_points({0.0}));
  CHECK(g3.values()(0, 0) == 1.0);
  CHECK(g3.values()(1, 0) == 0.0);
  CHECK(g3.values()(2, 0) == 0.0);
}

TEST_CASE("feature matrix rows follow the index list and serial equals parallel bitwise") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto kernel : {KernelSpec::gaussian(3, 0.8), KernelSpec::min(3)}) {
    Eigen::MatrixXd pts(57, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u01(rng);
    const auto par = build_feature_matrix(kernel, 90, pts);
    const auto ser = serial::build_feature_matrix(kernel, 90, pts);
    CHECK(par.indices() == enumerate_multi_indices(kernel, 90));
    CHECK(par.values() == ser.values());
    CHECK(par.values().allFinite());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const Pts x{pts(i, 0), pts(i, 1), pts(i, 2)};
      for (std::size_t n = 0; n < par.rows(); ++n)
        CHECK(par.values()(static_cast<Eigen::Index>(n), i) == feature_value(kernel, par.indices()[n], x));
    }
  }
}

TEST_CASE("closed-form kernels") {
  const Pts z{0.0, 0.0}, o{1.0, 1.0}, p{0.3, -0.4};
  CHECK(kernel_eval_closed_form(KernelSpec::gaussian(2, 1.0), p, p) == 1.0);
  CHECK(kernel_eval_closed_form(KernelSpec::gaussian(2, 1.0), z, o) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  const Pts h{0.5};
  CHECK(kernel_eval_closed_form(KernelSpec::min(1), h, h) == doctest::Approx(0.25));
}

TEST_CASE("truncated kernels") {
  const Pts z{0.0}, h{0.5}, a{0.3}, b{-0.2};
  CHECK(kernel_eval_truncated(KernelSpec::gaussian(1, 1.0), 1, z, z) == 1.0);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  CHECK(kernel_eval_truncated(KernelSpec::min(1), 4, h, h) == doctest::Approx(2.0 / pi2 * (1.0 + 1.0 / 9.0)).epsilon(1e-14));
  CHECK(std::abs(kernel_eval_truncated(KernelSpec::gaussian(1, 1.0), 30, a, b) - std::exp(-0.25)) <= 1e-6);
}

TEST_CASE("truncation is monotone on the diagonal and symmetric") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto g = KernelSpec::gaussian(2, 1.3);
  for (int trial = 0; trial < 20; ++trial) {
    const Pts x{u(rng), u(rng)}, y{u(rng), u(rng)};
    double prev = 0.0;
    for (std::size_t M = 1; M <= 60; ++M) {
      const double s = kernel_eval_truncated(g, M, x, x);
      CHECK(s >= prev);
      CHECK(s <= kernel_eval_closed_form(g, x, x) + 1e-12);
      prev = s;
      CHECK(kernel_eval_truncated(g, M, x, y) == kernel_eval_truncated(g, M, y, x));
    }
  }
}

TEST_CASE("gram matrix is positive semidefinite") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto kernel : {KernelSpec::gaussian(2, 1.0), KernelSpec::min(2)}) {
    Eigen::MatrixXd pts(20, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = u01(rng);
    const auto fm = build_feature_matrix(kernel, 30, pts);
    const Eigen::MatrixXd G = fm.values().transpose() * fm.values();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff()));
  }
}

TEST_CASE("min kernel domain is enforced") {
  const Pts out{1.2}, neg{-0.01}, edge{1.0};
  CHECK_THROWS_AS(feature_value(KernelSpec::min(1), {1}, out), DomainError);
  CHECK_THROWS_AS(kernel_eval_closed_form(KernelSpec::min(1), neg, edge), DomainError);
  CHECK_NOTHROW(feature_value(KernelSpec::min(1), {1}, edge));
  CHECK_THROWS_AS(build_feature_matrix(KernelSpec::min(1), 3, column_points({0.5, 1.5})), DomainError);
}

TEST_CASE("kernel validation") {
  CHECK_THROWS_AS(KernelSpec::gaussian(0, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(KernelSpec::gaussian(1, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(kernel_family_from_string("rbf"), ConfigError);
  CHECK(kernel_family_from_string("min") == KernelFamily::Min);
  CHECK(to_string(KernelFamily::Gaussian) == "gaussian");
}

TEST_CASE("rank assumption") {
  SUBCASE("N=1") {
    const auto fm = build_feature_matrix(KernelSpec::gaussian(1, 1.0), 4, column_points({0.3}));
    const auto r = check_rank_assumption(fm);
    CHECK(r.satisfied);
    CHECK(r.numeric_rank == std::optional<std::size_t>(1));
  }
  SUBCASE("explicit N=2 example") {
    Eigen::MatrixXd B(3, 2);
    B << 1, 0, 0, 1, 1, 1;
    const FeatureMatrix fm(KernelSpec::gaussian(1, 1.0), {{0}, {1}, {2}}, B);
    const auto r = check_rank_assumption(fm);
    CHECK(r.satisfied);
    CHECK(r.required == 3);
    CHECK(r.numeric_rank == std::optional<std::size_t>(3));
  }
  SUBCASE("M below the bound skips the decomposition") {
    const auto fm = build_feature_matrix(KernelSpec::gaussian(1, 1.0), 5, column_points({0.1, 0.2, 0.3}));
    const auto r = check_rank_assumption(fm);
    CHECK_FALSE(r.satisfied);
    CHECK_FALSE(r.numeric_rank.has_value());
    CHECK(r.required == 6);
  }
  SUBCASE("duplicated point breaks the assumption") {
    const auto ok = check_rank_assumption(build_feature_matrix(KernelSpec::min(1), 40, column_points({0.2, 0.45, 0.7})));
    CHECK(ok.satisfied);
    const auto dup = check_rank_assumption(build_feature_matrix(KernelSpec::min(1), 40, column_points({0.2, 0.45, 0.2})));
    CHECK_FALSE(dup.satisfied);
    REQUIRE(dup.numeric_rank.has_value());
    CHECK(*dup.numeric_rank < dup.required);
  }
}

TEST_CASE("default truncation") {
  CHECK(default_truncation(3) == 64);
  CHECK(default_truncation(25) == 325);
}
