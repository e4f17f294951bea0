#include <cmath>

#include "catch_amalgamated.hpp"
#include "milogit/logit.hpp"
#include "milogit/rng.hpp"
#include "milogit/solver.hpp"
#include "oracle.hpp"

using namespace milogit;

TEST_CASE("inv_logit pinned values") {
  CHECK(inv_logit(0.0) == 0.5);
  CHECK(inv_logit(std::log(3.0)) == Catch::Approx(0.75).margin(1e-15));
  // exp(-50)/(1+exp(-50)), high-precision reference 1.928749847963918e-22
  CHECK(inv_logit(-50.0) == Catch::Approx(1.928749847963918e-22).epsilon(1e-12));
  CHECK(inv_logit(-50.0) > 0.0);
}

TEST_CASE("inv_logit is stable at extreme arguments") {
  CHECK(std::isfinite(inv_logit(700.0)));
  CHECK(std::isfinite(inv_logit(-700.0)));
  CHECK(inv_logit(700.0) <= 1.0);
  CHECK(inv_logit(-700.0) >= 0.0);
  CHECK(inv_logit(700.0) > 0.999);
  CHECK(inv_logit(-700.0) < 1e-300 + 1e-303);
}

TEST_CASE("inv_logit symmetry property") {
  RngStream rng(314);
  for (int k = 0; k < 300; ++k) {
    double u = (rng.uniform() - 0.5) * 120.0;
    CHECK(inv_logit(u) + inv_logit(-u) == Catch::Approx(1.0).margin(1e-15));
  }
}

TEST_CASE("inv_logit_deriv pinned and symmetric") {
  CHECK(inv_logit_deriv(0.0) == 0.25);
  RngStream rng(7);
  for (int k = 0; k < 50; ++k) {
    double u = (rng.uniform() - 0.5) * 20.0;
    CHECK(inv_logit_deriv(u) == Catch::Approx(inv_logit_deriv(-u)).margin(1e-15));
  }
  // central finite difference at 2.0
  double h = 1e-6;
  double fd = (inv_logit(2.0 + h) - inv_logit(2.0 - h)) / (2.0 * h);
  CHECK(inv_logit_deriv(2.0) == Catch::Approx(fd).margin(1e-8));
}

TEST_CASE("score_contrib pinned values") {
  {
    Vec beta = Vec::Zero(2), x(2);
    x << 1.0, 1.0;
    Vec s = score_contrib(beta, x, 1);
    CHECK(s[0] == 0.5);
    CHECK(s[1] == 0.5);
  }
  {
    Vec beta = Vec::Zero(2), x(2);
    x << 1.0, -1.0;
    Vec s = score_contrib(beta, x, 0);
    CHECK(s[0] == -0.5);
    CHECK(s[1] == 0.5);
  }
  {
    Vec beta(2), x(2);
    beta << 1.0, 2.0;
    x << 1.0, 0.4;
    Vec s = score_contrib(beta, x, 1);
    double r = 1.0 - inv_logit(1.8);
    CHECK(s[0] == Catch::Approx(1.0 * r).margin(1e-15));
    CHECK(s[1] == Catch::Approx(0.4 * r).margin(1e-15));
  }
  Vec beta = Vec::Zero(3), x = Vec::Zero(2);
  CHECK_THROWS_AS(score_contrib(beta, x, 1), error);
}

namespace {

// intercept-only logistic score for a given number of ones out of n
auto intercept_score(int ones, int n) {
  return [ones, n](const Vec& b) {
    Vec s(1);
    s[0] = static_cast<double>(ones) / n - inv_logit(b[0]);
    return s;
  };
}

auto intercept_jac() {
  return [](const Vec& b) {
    Mat j(1, 1);
    j(0, 0) = inv_logit_deriv(b[0]);
    return j;
  };
}

}  // namespace

TEST_CASE("solver: intercept-only closed forms") {
  {
    Vec beta = Vec::Zero(1);
    SolveReport rep = solve_estimating_eq(intercept_score(1, 2), intercept_jac(), beta);
    REQUIRE(rep.converged);
    CHECK(beta[0] == Catch::Approx(0.0).margin(1e-10));
  }
  {
    Vec beta = Vec::Zero(1);
    SolveReport rep = solve_estimating_eq(intercept_score(3, 4), intercept_jac(), beta);
    REQUIRE(rep.converged);
    CHECK(beta[0] == Catch::Approx(std::log(3.0)).margin(1e-8));
    CHECK(rep.final_score_norm <= 1e-8);
  }
}

TEST_CASE("solver matches an independent Newton oracle on random data") {
  RngStream rng(2024);
  Dataset ds = oracle::complete_random(rng, 200);
  const int d = ds.d();
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  std::vector<double> ws;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    xs.push_back(oracle::design_row(ds, i));
    ys.push_back(ds.y(i));
    ws.push_back(1.0);
  }
  auto score = [&](const Vec& b) {
    Vec out = Vec::Zero(d);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Eigen::Map<const Vec> xv(xs[i].data(), d);
      out += (ys[i] - inv_logit(xv.dot(b))) * xv;
    }
    return Vec(out / static_cast<double>(xs.size()));
  };
  auto njac = [&](const Vec& b) {
    Mat out = Mat::Zero(d, d);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      Eigen::Map<const Vec> xv(xs[i].data(), d);
      out += inv_logit_deriv(xv.dot(b)) * xv * xv.transpose();
    }
    return Mat(out / static_cast<double>(xs.size()));
  };
  Vec beta = Vec::Zero(d);
  SolveReport rep = solve_estimating_eq(score, njac, beta);
  REQUIRE(rep.converged);
  oracle::NewtonFit ref = oracle::newton_logit(xs, ys, ws);
  REQUIRE(ref.converged);
  for (int k = 0; k < d; ++k) CHECK(beta[k] == Catch::Approx(ref.beta[k]).margin(1e-6));
}

TEST_CASE("solver reports separation as non-convergence") {
  // y == 1{x > 0} with small |x|: the score cannot fall below tol until
  // |beta| is far past the divergence bound, so the guard must fire
  std::vector<double> x{-0.2, -0.1, 0.1, 0.2};
  std::vector<int> y{0, 0, 1, 1};
  auto score = [&](const Vec& b) {
    Vec s = Vec::Zero(1);
    for (std::size_t i = 0; i < x.size(); ++i)
      s[0] += x[i] * (y[i] - inv_logit(b[0] * x[i]));
    return Vec(s / 4.0);
  };
  auto njac = [&](const Vec& b) {
    Mat j = Mat::Zero(1, 1);
    for (double xi : x) j(0, 0) += xi * xi * inv_logit_deriv(b[0] * xi);
    return Mat(j / 4.0);
  };
  Vec beta = Vec::Zero(1);
  SolveReport rep = solve_estimating_eq(score, njac, beta);
  CHECK_FALSE(rep.converged);
  CHECK(rep.reason.find("diverging") != std::string::npos);
}

TEST_CASE("solver failure paths carry reasons") {
  {
    // singular jacobian that the ridge cannot repair
    auto score = [](const Vec&) { return Vec::Ones(1); };
    auto njac = [](const Vec&) { return Mat::Zero(1, 1); };
    Vec beta = Vec::Zero(1);
    SolveReport rep = solve_estimating_eq(score, njac, beta);
    CHECK_FALSE(rep.converged);
    CHECK(rep.reason == "singular jacobian");
  }
  {
    // constant score: no step can reduce the norm
    auto score = [](const Vec&) { return Vec::Ones(1); };
    auto njac = [](const Vec&) { return Mat::Identity(1, 1); };
    Vec beta = Vec::Zero(1);
    SolveReport rep = solve_estimating_eq(score, njac, beta);
    CHECK_FALSE(rep.converged);
    CHECK(rep.reason == "step halving stalled");
  }
  {
    // non-finite score
    auto score = [](const Vec&) {
      Vec s(1);
      s[0] = std::numeric_limits<double>::quiet_NaN();
      return s;
    };
    auto njac = [](const Vec&) { return Mat::Identity(1, 1); };
    Vec beta = Vec::Zero(1);
    SolveReport rep = solve_estimating_eq(score, njac, beta);
    CHECK_FALSE(rep.converged);
    CHECK(rep.reason == "score not finite");
  }
}
