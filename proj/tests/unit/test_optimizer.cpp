#include <doctest.h>

#include <cmath>
#include <random>

#include "midcap/errors.hpp"
#include "midcap/optimizer.hpp"

using namespace midcap;
using doctest::Approx;

namespace {

Eigen::MatrixXd spd2() {
  Eigen::MatrixXd s(2, 2);
  s << 0.04, 0.01, 0.01, 0.09;
  return s;
}

Eigen::MatrixXd spd3() {
  Eigen::MatrixXd s(3, 3);
  s << 0.05, 0.01, 0.00, 0.01, 0.07, 0.02, 0.00, 0.02, 0.06;
  return s;
}

double kkt_residual(const PortfolioWeights& pw, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& sigma, double a) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(mu.size());
  return (2.0 * a * sigma * pw.w - mu + pw.lambda * ones).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("two-asset portfolio matches the hand closed form") {
  Eigen::VectorXd mu(2);
  mu << 0.02, -0.01;
  PortfolioWeights pw = solve_dollar_neutral(mu, spd2());
  CHECK(pw.lambda == Approx(0.011818181818181818).epsilon(1e-12));
  CHECK(pw.w[0] == Approx(0.06818181818181818).epsilon(1e-12));
  CHECK(pw.w[1] == Approx(-0.06818181818181818).epsilon(1e-12));
  CHECK(pw.neutrality_residual <= 1e-10);
  CHECK(kkt_residual(pw, mu, spd2(), 2.0) <= 1e-8);
}

TEST_CASE("three-asset portfolio matches the hand closed form") {
  Eigen::VectorXd mu(3);
  mu << 0.015, -0.005, 0.01;
  PortfolioWeights pw = solve_dollar_neutral(mu, spd3());
  CHECK(pw.lambda == Approx(0.009459459459459458).epsilon(1e-12));
  CHECK(pw.w[0] == Approx(0.04054054054054054).epsilon(1e-11));
  CHECK(pw.w[1] == Approx(-0.06418918918918919).epsilon(1e-11));
  CHECK(pw.w[2] == Approx(0.02364864864864865).epsilon(1e-11));
  CHECK(pw.neutrality_residual <= 1e-10);
  CHECK(kkt_residual(pw, mu, spd3(), 2.0) <= 1e-8);
}

TEST_CASE("raw weights follow the risk-aversion scaling law") {
  Eigen::VectorXd mu(3);
  mu << 0.015, -0.005, 0.01;
  OptimizerParams a2;
  a2.risk_aversion = 2.0;
  OptimizerParams a4;
  a4.risk_aversion = 4.0;
  PortfolioWeights w2 = solve_dollar_neutral(mu, spd3(), a2);
  PortfolioWeights w4 = solve_dollar_neutral(mu, spd3(), a4);
  for (int i = 0; i < 3; ++i)
    CHECK(w4.w[i] == Approx(0.5 * w2.w[i]).epsilon(1e-12));
  CHECK(w4.lambda == Approx(w2.lambda).epsilon(1e-12));  // lambda is A-free
}

TEST_CASE("a common shift in expected returns changes nothing") {
  Eigen::VectorXd mu(3);
  mu << 0.015, -0.005, 0.01;
  PortfolioWeights base = solve_dollar_neutral(mu, spd3());
  for (double c : {-1.0, -0.037, 0.4, 1.0}) {
    Eigen::VectorXd shifted = mu.array() + c;
    PortfolioWeights pw = solve_dollar_neutral(shifted, spd3());
    for (int i = 0; i < 3; ++i)
      CHECK(pw.w[i] == Approx(base.w[i]).epsilon(1e-9));
    CHECK(pw.lambda == Approx(base.lambda + c).epsilon(1e-9));
  }
}

TEST_CASE("equal expected returns produce the zero portfolio") {
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(3, 0.01);
  PortfolioWeights pw = solve_dollar_neutral(mu, spd3());
  CHECK(pw.w.cwiseAbs().maxCoeff() == 0.0);
  OptimizerParams params;
  PortfolioWeights norm = normalize_gross(pw, params);
  CHECK(norm.zero_portfolio);
}

TEST_CASE("degenerate inputs are rejected") {
  Eigen::VectorXd mu1(1);
  mu1 << 0.01;
  Eigen::MatrixXd s1(1, 1);
  s1 << 0.04;
  CHECK_THROWS_AS(solve_dollar_neutral(mu1, s1), DegenerateUniverseError);

  Eigen::VectorXd mu(2);
  mu << 0.01, 0.02;
  Eigen::MatrixXd indef(2, 2);
  indef << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(solve_dollar_neutral(mu, indef), NotPositiveDefiniteError);

  Eigen::MatrixXd wrong(3, 3);
  wrong.setIdentity();
  CHECK_THROWS_AS(solve_dollar_neutral(mu, wrong), AlignmentError);

  OptimizerParams bad;
  bad.risk_aversion = 0.0;
  CHECK_THROWS_AS(solve_dollar_neutral(mu, spd2(), bad), ValidationError);
}

TEST_CASE("normalization fixes gross exposure at one per side") {
  Eigen::VectorXd mu(3);
  mu << 0.015, -0.005, 0.01;
  OptimizerParams params;
  params.gross_target = 1.0;
  PortfolioWeights pw = normalize_gross(solve_dollar_neutral(mu, spd3(), params), params);
  CHECK(pw.gross == Approx(2.0).epsilon(1e-12));
  CHECK(pw.neutrality_residual <= 1e-10);
  double longs = 0.0;
  for (int i = 0; i < 3; ++i)
    if (pw.w[i] > 0) longs += pw.w[i];
  CHECK(longs == Approx(1.0).epsilon(1e-10));

  params.gross_target = 0.5;
  PortfolioWeights half = normalize_gross(solve_dollar_neutral(mu, spd3(), params), params);
  CHECK(half.gross == Approx(1.0).epsilon(1e-12));
  // Direction is preserved exactly
  CHECK(half.w[0] / pw.w[0] == Approx(0.5).epsilon(1e-12));

  params.gross_target = -1.0;
  CHECK_THROWS_AS(normalize_gross(pw, params), ValidationError);
}

TEST_CASE("the objective is the maximum over the constraint plane (grid oracle)") {
  // Brute-force neighborhood scan in the 1'w = 0 plane around the
  // closed-form optimum; no grid point may beat it.
  Eigen::VectorXd mu(3);
  mu << 0.015, -0.005, 0.01;
  Eigen::MatrixXd sigma = spd3();
  double a = 2.0;
  PortfolioWeights pw = solve_dollar_neutral(mu, sigma);
  double best = pw.objective_value;
  // Parameterize the plane by (t1, t2) -> w + t1*d1 + t2*d2 with d1, d2
  // spanning {x : 1'x = 0}.
  Eigen::VectorXd d1(3), d2(3);
  d1 << 1, -1, 0;
  d2 << 0, 1, -1;
  for (double t1 = -0.02; t1 <= 0.02; t1 += 1e-3) {
    for (double t2 = -0.02; t2 <= 0.02; t2 += 1e-3) {
      Eigen::VectorXd w = pw.w + t1 * d1 + t2 * d2;
      double obj = w.dot(mu) - a * w.dot(sigma * w);
      CHECK(obj <= best + 1e-12);
    }
  }
}

TEST_CASE("random instances satisfy the optimality system") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng() % 20);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
    Eigen::MatrixXd sigma =
        g * g.transpose() / n + 0.05 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = 0.02 * normal(rng);

    PortfolioWeights pw = solve_dollar_neutral(mu, sigma);
    CHECK(pw.neutrality_residual <= 1e-10);
    CHECK(kkt_residual(pw, mu, sigma, 2.0) <= 1e-8);
  }
}

TEST_CASE("weights round to whole shares toward zero") {
  PortfolioWeights pw;
  pw.ids = {10, 11, 12};
  pw.w.resize(3);
  pw.w << 0.5, -0.5, 0.0;
  std::vector<std::optional<double>> prices{30.0, 70.0, std::nullopt};
  PositionSheet sheet = weights_to_positions(pw, prices, 100000.0);
  REQUIRE(sheet.positions.size() == 3);
  CHECK(sheet.positions[0].shares == 1666);   // trunc(50000/30)
  CHECK(sheet.positions[1].shares == -714);   // trunc(-50000/70)
  CHECK(sheet.positions[2].shares == 0);
  CHECK(sheet.long_dollars_pre_round == Approx(50000.0));
  CHECK(sheet.short_dollars_pre_round == Approx(50000.0));
  CHECK(sheet.rounding_imbalance == Approx(1666.0 * 30.0 - 714.0 * 70.0).epsilon(1e-12));

  // A missing price under a nonzero weight names the offender.
  pw.w << 0.5, -0.25, -0.25;
  try {
    weights_to_positions(pw, prices, 100000.0);
    FAIL("expected PositionError");
  } catch (const PositionError& e) {
    CHECK(std::string(e.what()).find("12") != std::string::npos);
  }
  CHECK_THROWS_AS(weights_to_positions(pw, prices, 0.0), ValidationError);
}

TEST_CASE("optional per-name cap clips and re-centers") {
  Eigen::VectorXd mu(4);
  mu << 0.03, -0.02, 0.01, -0.01;
  Eigen::MatrixXd sigma = 0.05 * Eigen::MatrixXd::Identity(4, 4);
  OptimizerParams params;
  PortfolioWeights uncapped = normalize_gross(solve_dollar_neutral(mu, sigma, params), params);
  REQUIRE(uncapped.w.cwiseAbs().maxCoeff() > 0.4);  // the cap must actually bind

  params.max_weight = 0.4;
  PortfolioWeights pw = normalize_gross(solve_dollar_neutral(mu, sigma, params), params);

  // Documented behavior: one clip pass, then the clipped vector's mean is
  // removed to restore neutrality (the re-center may nudge a name past the
  // cap; that is accepted rather than iterated).
  Eigen::VectorXd expected =
      uncapped.w.cwiseMax(-params.max_weight).cwiseMin(params.max_weight);
  expected.array() -= expected.mean();
  CHECK((pw.w - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pw.w.cwiseAbs().maxCoeff() < uncapped.w.cwiseAbs().maxCoeff());
  CHECK(pw.neutrality_residual <= 1e-10);
}
