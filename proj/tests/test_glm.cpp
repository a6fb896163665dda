#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "squarecb/glm.hpp"
#include "squarecb/linalg.hpp"
#include "squarecb/rng.hpp"

using namespace squarecb;

namespace {

Vec random_unit_ball(int dim, SplitRng& rng) {
  Vec x(dim);
  double n2 = 0.0;
  for (double& v : x) {
    v = rng.gaussian();
    n2 += v * v;
  }
  const double r = std::pow(rng.uniform(), 1.0 / dim);
  if (n2 > 0.0) scale(x, r / std::sqrt(n2));
  return x;
}

// independent oracle for the d=2 sigma-norm projection: scan the unit circle,
// then refine around the best angle
Vec circle_grid_projection(const Mat& sigma, const Vec& target) {
  auto objective = [&](double phi) {
    Vec v = {std::cos(phi), std::sin(phi)};
    Vec diff = v;
    axpy(-1.0, target, diff);
    return sigma.quad_form(diff);
  };
  double best_phi = 0.0, best = objective(0.0);
  double lo = 0.0, hi = 2.0 * M_PI;
  int points = 4096;
  for (int round = 0; round < 6; ++round) {
    const double step = (hi - lo) / points;
    for (int i = 0; i <= points; ++i) {
      const double phi = lo + i * step;
      const double v = objective(phi);
      if (v < best) {
        best = v;
        best_phi = phi;
      }
    }
    lo = best_phi - 2.0 * step;
    hi = best_phi + 2.0 * step;
    points = 256;
  }
  return {std::cos(best_phi), std::sin(best_phi)};
}

}  // namespace

TEST_CASE("shipped links satisfy the link contract", "[glm]") {
  REQUIRE_NOTHROW(validate_link(clipped_identity_link()));
  REQUIRE_NOTHROW(validate_link(rescaled_logistic_link()));
  REQUIRE(rescaled_logistic_link().derivative_floor == 0.25);
  const LinkFunction logistic = rescaled_logistic_link();
  REQUIRE(logistic(0.0) == Approx(0.5));
  REQUIRE(logistic(1.0) < 1.0);
  REQUIRE(logistic(-1.0) > 0.0);
}

TEST_CASE("table links are validated on a grid", "[glm]") {
  LinkFunction good = table_link({{-1.0, 0.2}, {0.0, 0.5}, {1.0, 0.8}}, 0.25);
  REQUIRE_NOTHROW(validate_link(good));
  REQUIRE(good(0.5) == Approx(0.65));
  REQUIRE(good(-2.0) == Approx(0.2));  // constant extrapolation

  LinkFunction decreasing = table_link({{-1.0, 0.8}, {1.0, 0.2}});
  REQUIRE_THROWS_AS(validate_link(decreasing), std::invalid_argument);
  LinkFunction steep = table_link({{-1.0, 0.0}, {-0.5, 0.9}, {1.0, 1.0}});
  REQUIRE_THROWS_AS(validate_link(steep), std::invalid_argument);
  REQUIRE_THROWS_AS(table_link({{0.0, 0.5}}), std::invalid_argument);
}

TEST_CASE("glmtron is stationary at zero residual", "[glm]") {
  GlmtronOracle oracle(2, rescaled_logistic_link());
  const Vec x = {0.6, -0.3};
  const double y = oracle.predict(x);  // exactly sigma(<theta,x>)
  const Vec before = oracle.theta();
  oracle.update(x, y);
  REQUIRE(oracle.theta() == before);
}

TEST_CASE("glmtron hand-evaluated step", "[glm]") {
  GlmtronOracle::Options opts;
  opts.step = 0.25;
  GlmtronOracle oracle(1, clipped_identity_link(), opts);
  oracle.update(std::vector<double>{1.0}, 1.0);
  // residual sigma(0)-1 = -1, pseudo-gradient -2, step 0.25 -> theta = 0.5
  REQUIRE(oracle.theta()[0] == Approx(0.5).margin(1e-15));
}

TEST_CASE("glmtron validates feature norms and outcomes", "[glm]") {
  GlmtronOracle oracle(2, clipped_identity_link());
  REQUIRE_THROWS_AS(oracle.update(std::vector<double>{1.0, 1.0}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(oracle.update(std::vector<double>{0.5, 0.0}, 1.2), std::invalid_argument);
  REQUIRE(norm2(oracle.theta()) <= 1.0);
}

TEST_CASE("glmtron cumulative error grows sublinearly on realizable streams", "[glm][slow]") {
  const LinkFunction link = rescaled_logistic_link();
  SplitRng setup(3);
  const Vec theta_star = random_unit_ball(3, setup);

  auto cumulative_error = [&](long long horizon) {
    GlmtronOracle::Options opts;
    opts.horizon = horizon;
    GlmtronOracle oracle(3, link, opts);
    SplitRng rng(17);
    double err = 0.0;
    for (long long t = 0; t < horizon; ++t) {
      const Vec x = random_unit_ball(3, rng);
      const double mean = link(dot(theta_star, x));
      const double pred = oracle.predict(x);
      err += (pred - mean) * (pred - mean);
      oracle.update(x, rng.bernoulli(mean) ? 1.0 : 0.0);
    }
    return err;
  };

  const double e3 = cumulative_error(1000);
  const double e5 = cumulative_error(100000);
  const double slope = std::log(e5 / e3) / std::log(100.0);
  INFO("err(1e3)=" << e3 << " err(1e5)=" << e5 << " slope=" << slope);
  REQUIRE(slope < 0.65);
}

TEST_CASE("sigma-norm projection solves the hand-checkable case", "[glm]") {
  Mat sigma(2);
  sigma(0, 0) = 4.0;
  sigma(1, 1) = 1.0;
  const Vec projected = project_sigma_norm(sigma, {2.0, 0.0});
  REQUIRE(projected[0] == Approx(1.0).margin(1e-9));
  REQUIRE(projected[1] == Approx(0.0).margin(1e-12));
  REQUIRE(norm2(projected) == Approx(1.0).margin(1e-9));
}

TEST_CASE("sigma-norm projection is the identity inside the ball", "[glm]") {
  Mat sigma(2, 1.0);
  sigma(0, 1) = sigma(1, 0) = 0.3;
  sigma(0, 0) = 2.0;
  const Vec target = {0.4, -0.5};
  REQUIRE(project_sigma_norm(sigma, target) == target);
}

TEST_CASE("sigma-norm projection matches a circle grid search", "[glm]") {
  SplitRng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    Mat sigma(2);
    // random SPD: A = B B^T + small identity
    const double b00 = rng.uniform(-2.0, 2.0), b01 = rng.uniform(-2.0, 2.0);
    const double b10 = rng.uniform(-2.0, 2.0), b11 = rng.uniform(-2.0, 2.0);
    sigma(0, 0) = b00 * b00 + b01 * b01 + 0.1;
    sigma(0, 1) = sigma(1, 0) = b00 * b10 + b01 * b11;
    sigma(1, 1) = b10 * b10 + b11 * b11 + 0.1;
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double radius = rng.uniform(1.05, 3.0);
    const Vec target = {radius * std::cos(angle), radius * std::sin(angle)};

    const Vec mine = project_sigma_norm(sigma, target);
    const Vec grid = circle_grid_projection(sigma, target);
    REQUIRE(std::abs(mine[0] - grid[0]) < 1e-4);
    REQUIRE(std::abs(mine[1] - grid[1]) < 1e-4);

    Vec d1 = mine, d2 = grid;
    axpy(-1.0, target, d1);
    axpy(-1.0, target, d2);
    REQUIRE(sigma.quad_form(d1) <= sigma.quad_form(d2) + 1e-6);
  }
}

TEST_CASE("newton glm keeps sigma growing and theta feasible", "[glm]") {
  NewtonGlmOracle oracle(3, rescaled_logistic_link());
  SplitRng rng(23);
  double last_min_eig = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Vec x = random_unit_ball(3, rng);
    oracle.update(x, rng.uniform());
    REQUIRE(norm2(oracle.theta()) <= 1.0 + 1e-9);
    const double eig = min_eigenvalue(oracle.sigma_matrix());
    REQUIRE(eig >= last_min_eig - 1e-9);
    last_min_eig = eig;
  }
}

TEST_CASE("newton glm zero residual leaves theta but increments sigma", "[glm]") {
  NewtonGlmOracle oracle(2, rescaled_logistic_link());
  const Vec x = {0.5, 0.5};
  const double y = oracle.predict(x);
  const Vec theta_before = oracle.theta();
  const double s00 = oracle.sigma_matrix()(0, 0);
  oracle.update(x, y);
  REQUIRE(oracle.theta() == theta_before);
  REQUIRE(oracle.sigma_matrix()(0, 0) == Approx(s00 + 0.25));
}

TEST_CASE("newton glm requires a positive derivative floor", "[glm]") {
  REQUIRE_THROWS_AS(NewtonGlmOracle(2, clipped_identity_link()), std::invalid_argument);
}

TEST_CASE("glm oracles expose realizability-only budgets", "[glm]") {
  // both variants advertise the weaker guarantee and an analytic budget, not
  // an adversarial regret bound
  REQUIRE(GlmtronOracle::guarantee() == OracleGuarantee::realizable_error);
  REQUIRE(NewtonGlmOracle::guarantee() == OracleGuarantee::realizable_error);

  GlmtronOracle g(3, rescaled_logistic_link());
  const auto gb = g.budget(400);
  REQUIRE(gb.provenance == BudgetProvenance::glmtron_sqrtT);
  REQUIRE(gb.bound == Approx(20.0));

  NewtonGlmOracle n(3, rescaled_logistic_link());
  const auto nb = n.budget(400);
  REQUIRE(nb.provenance == BudgetProvenance::newton_glm_dlogT);
  REQUIRE(nb.bound == Approx(3.0 * std::log(400.0) / 0.0625));
}

TEST_CASE("newton glm realizable prediction error stays logarithmic", "[glm][slow]") {
  // Calibration run (d=5, T=1e4, c_sigma=0.25, seeds 101..103): cumulative
  // error peaked at 11.26 = 0.0153 * d ln T / c_sigma^2. Frozen envelope
  // C = 0.05 keeps a 3x margin and sits well below the trivial horizon bound.
  const double frozen_c = 0.05;
  const LinkFunction link = rescaled_logistic_link();
  const int dim = 5;
  const long long horizon = 10000;
  for (std::uint64_t seed : {101, 102, 103}) {
    SplitRng setup(seed);
    const Vec theta_star = random_unit_ball(dim, setup);
    NewtonGlmOracle oracle(dim, link);
    SplitRng rng(seed + 1000);
    double err = 0.0;
    for (long long t = 0; t < horizon; ++t) {
      const Vec x = random_unit_ball(dim, rng);
      const double mean = link(dot(theta_star, x));
      const double pred = oracle.predict(x);
      err += (pred - mean) * (pred - mean);
      oracle.update(x, rng.bernoulli(mean) ? 1.0 : 0.0);
    }
    const double envelope = frozen_c * dim * std::log(static_cast<double>(horizon)) /
                            (link.derivative_floor * link.derivative_floor);
    INFO("seed " << seed << ": cumulative error " << err << " envelope " << envelope);
    REQUIRE(err <= envelope);
  }
}
