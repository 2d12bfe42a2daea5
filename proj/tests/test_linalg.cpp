#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "sbrrm/linalg.hpp"
#include "sbrrm/rng.hpp"

namespace {

Eigen::MatrixXd random_spd(int n, std::uint64_t seed) {
  sbrrm::RandomStream stream(seed);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = stream.normal();
  Eigen::MatrixXd spd = a * a.transpose();
  spd.diagonal().array() += n;
  return spd;
}

}  // namespace

TEST_CASE("blocked cholesky matches the serial reference") {
  for (const int n : {1, 5, 63, 64, 65, 200, 331}) {
    const Eigen::MatrixXd spd = random_spd(n, 17 + n);
    Eigen::MatrixXd a = spd, b = spd;
    REQUIRE(sbrrm::linalg::cholesky_in_place(a));
    REQUIRE(sbrrm::linalg::cholesky_in_place_reference(b));
    const double diff = (a.triangularView<Eigen::Lower>().toDenseMatrix() -
                         b.triangularView<Eigen::Lower>().toDenseMatrix())
                            .cwiseAbs()
                            .maxCoeff();
    CHECK(diff < 1e-9);
  }
}

TEST_CASE("factorization reproduces the matrix") {
  const int n = 150;
  const Eigen::MatrixXd spd = random_spd(n, 5);
  Eigen::MatrixXd a = spd;
  REQUIRE(sbrrm::linalg::cholesky_in_place(a));
  const Eigen::MatrixXd l = a.triangularView<Eigen::Lower>();
  CHECK(((l * l.transpose()) - spd).cwiseAbs().maxCoeff() < 1e-8 * n);
}

TEST_CASE("cholesky solve") {
  const int n = 97;
  const Eigen::MatrixXd spd = random_spd(n, 23);
  Eigen::MatrixXd a = spd;
  REQUIRE(sbrrm::linalg::cholesky_in_place(a));
  sbrrm::RandomStream stream(3);
  Eigen::VectorXd x_true(n);
  for (int i = 0; i < n; ++i) x_true(i) = stream.normal();
  Eigen::VectorXd b = spd * x_true;
  sbrrm::linalg::cholesky_solve_in_place(a, b);
  CHECK((b - x_true).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("non positive definite input is rejected") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = -2.0;
  a(2, 2) = 1.0;
  CHECK_FALSE(sbrrm::linalg::cholesky_in_place(a));
}

TEST_CASE("sparse rank-1 update matches reference") {
  const int n = 40;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  const std::vector<int> idx{1, 4, 7, 20, 39};
  const std::vector<double> val{0.5, -1.0, 2.0, 0.25, 3.0};
  sbrrm::linalg::rank1_update_lower(a, idx, val, 1.5);
  sbrrm::linalg::rank1_update_lower_reference(b, idx, val, 1.5);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  // Only the lower triangle is touched.
  CHECK(a(1, 4) == 0.0);
  CHECK(a(4, 1) == 1.5 * 0.5 * -1.0);
}
