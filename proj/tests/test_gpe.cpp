#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gbec/gpe.hpp"

using namespace gbec;

namespace {
const Basis& basis() {
  static Basis b({12, 2});
  return b;
}
}  // namespace

TEST_CASE("noninteracting limit") {
  const auto sol = solve_effective(basis(), 500.0, 0.0, 1.0);
  REQUIRE_THAT(sol.mu, Catch::Matchers::WithinAbs(1.5, 1e-10));
  REQUIRE_THAT(sol.E_per_N, Catch::Matchers::WithinAbs(1.5, 1e-10));
  REQUIRE_THAT(std::abs(sol.mode.coeffs[0]), Catch::Matchers::WithinRel(1.0, 1e-9));
  REQUIRE_THAT(mode_width(basis(), sol.mode),
               Catch::Matchers::WithinRel(std::sqrt(1.5), 1e-9));
}

TEST_CASE("repulsive branch grows in energy and width") {
  const double N = 1e4;
  const auto sol = solve_effective(basis(), N, 0.2 / N, 1.0);
  REQUIRE(sol.E_per_N > 1.5);
  REQUIRE(mode_width(basis(), sol.mode) > std::sqrt(1.5));
  REQUIRE(sol.mu > sol.E_per_N);  // repulsive: mu exceeds energy per particle
}

TEST_CASE("attractive tripled branch converges below the free energy") {
  const double N = 1e4;
  const auto sol = solve_effective(basis(), N, -0.05 / N, 3.0);
  REQUIRE(sol.E_per_N < 1.5);
  REQUIRE(mode_width(basis(), sol.mode) < std::sqrt(1.5));
}

TEST_CASE("stationarity residual vanishes at the solution") {
  const double N = 1e4;
  const auto sol = solve_effective(basis(), N, 0.1 / N, 1.0);
  // rebuild the gradient at the converged mode
  const MatrixXd& R = basis().quart_table(0);
  const VectorXd& W = basis().quart_rule().w;
  const VectorXd d = R * sol.mode.coeffs;
  VectorXd hc = sol.mode.coeffs;
  for (int n = 0; n <= 12; ++n) hc[n] *= eigenenergy(n, 0, 0.0);
  hc += (N * (0.1 / N)) * (R.transpose() * W.cwiseProduct(d.array().cube().matrix()));
  const double mu = sol.mode.coeffs.dot(hc);
  REQUIRE((hc - mu * sol.mode.coeffs).norm() < 1e-6);
}

TEST_CASE("exact rescaling between u_mult=3 and tripled a_s") {
  const double N = 2e3, a = -2e-5;
  const auto s3 = solve_effective(basis(), N, a, 3.0);
  const auto s1 = solve_effective(basis(), N, 3.0 * a, 1.0);
  REQUIRE_THAT(s3.mu, Catch::Matchers::WithinAbs(s1.mu, 1e-10));
  REQUIRE_THAT(s3.E_per_N, Catch::Matchers::WithinAbs(s1.E_per_N, 1e-10));
  REQUIRE((s3.mode.coeffs - s1.mode.coeffs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("collapse detection and threshold scaling") {
  REQUIRE_THROWS_AS(solve_effective(basis(), 1e4, -2.5 / 1e4, 1.0), collapse_error);
  // threshold identity at modest basis size; absolute values are truncation
  // dependent, the rescaling identity is not
  const Basis small({10, 0});
  const double k1 = collapse_threshold(small, 1.0, 1e-3);
  const double k3 = collapse_threshold(small, 3.0, 1e-3 / 3.0);
  REQUIRE(k1 > 0.5);
  REQUIRE_THAT(3.0 * k3, Catch::Matchers::WithinAbs(k1, 1e-3));
}

TEST_CASE("homogeneous fluctuation integrals") {
  const double n0 = 1.0, a_s = 0.01;
  const auto fl = homogeneous_fluctuations(n0, a_s);
  const double dep_closed = (8.0 / 3.0) * std::sqrt(std::pow(n0 * a_s, 3.0) / M_PI);
  const double anom_closed = 8.0 * std::sqrt(std::pow(n0 * a_s, 3.0) / M_PI);
  REQUIRE_THAT(fl.depletion, Catch::Matchers::WithinRel(dep_closed, 1e-6));
  REQUIRE_THAT(fl.anomalous, Catch::Matchers::WithinRel(anom_closed, 1e-6));
  REQUIRE_THAT(fl.anomalous / fl.depletion, Catch::Matchers::WithinRel(3.0, 1e-6));
  REQUIRE_THAT(fl.depletion, Catch::Matchers::WithinRel(1.5045055e-3, 1e-6));
  REQUIRE_THROWS_AS(homogeneous_fluctuations(1.0, -0.1), std::domain_error);
  REQUIRE_THROWS_AS(homogeneous_fluctuations(0.0, 0.1), std::domain_error);
}

TEST_CASE("lhy-corrected equation") {
  const double N = 1e4;
  SECTION("reduces to the plain equation at a_s = 0") {
    const auto plain = solve_effective(basis(), N, 0.0, 1.0);
    const auto lhy = solve_lhy_gpe(basis(), N, 0.0);
    REQUIRE_THAT(lhy.mu, Catch::Matchers::WithinAbs(plain.mu, 1e-10));
    REQUIRE((lhy.mode.coeffs - plain.mode.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  }
  SECTION("positive correction to energy") {
    const double a_s = 0.5 / N;
    const auto plain = solve_effective(basis(), N, a_s, 1.0);
    const auto lhy = solve_lhy_gpe(basis(), N, a_s);
    REQUIRE(lhy.E_per_N > plain.E_per_N);
  }
  SECTION("correction term at the trap center follows the local-density form") {
    const double a_s = 0.5 / N;
    const auto plain = solve_effective(basis(), N, a_s, 1.0);
    const auto lhy = solve_lhy_gpe(basis(), N, a_s);
    auto central_density = [&](const RadialMode& m) {
      double d0 = 0;
      for (int n = 0; n <= 12; ++n) d0 += m.coeffs[n] * radial_eigenfunction(n, 0, 0.0);
      return N * d0 * d0 / (4.0 * M_PI);
    };
    // the implemented operator evaluated on the corrected solution at r=0
    const double lhs = (40.0 / 3.0) * (4.0 * M_PI * a_s) * a_s *
                       std::sqrt(a_s / M_PI) *
                       std::pow(central_density(lhy.mode), 1.5);
    // the same shift assembled from the homogeneous densities of the plain one
    const auto fl = homogeneous_fluctuations(central_density(plain.mode), a_s);
    const double rhs = (4.0 * M_PI * a_s) * (2.0 * fl.depletion + fl.anomalous);
    REQUIRE_THAT(lhs, Catch::Matchers::WithinRel(rhs, 0.05));
  }
}
