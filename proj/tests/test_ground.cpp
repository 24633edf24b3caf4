#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gbec/ground.hpp"

using namespace gbec;

namespace {
const BasisSpec kSpec{10, 2};
const Basis& basis() {
  static Basis b(kSpec);
  return b;
}
const InteractionTensor& tensors() {
  static InteractionTensor t = InteractionTensor::build(basis());
  return t;
}
}  // namespace

TEST_CASE("euler step fixed points") {
  SECTION("free coherent ground state is stationary") {
    GaussianState s = GaussianState::vacuum(kSpec, 1.5);
    s.beta[0] = std::sqrt(100.0);
    const GaussianState s2 = imaginary_step(s, tensors(), 0.0, 1e-2);
    REQUIRE((s2.beta - s.beta).norm() < 1e-14);
    for (int l = 0; l <= kSpec.l_max; ++l) {
      REQUIRE(s2.G[l].norm() < 1e-14);
      REQUIRE(s2.F[l].norm() < 1e-14);
    }
  }
  SECTION("vacuum coherent sector stays empty with interactions on") {
    GaussianState s = GaussianState::vacuum(kSpec, 1.2);
    s.G[0](1, 1) = 0.5;
    s.F[0](1, 1) = std::sqrt(0.5 * 1.5);
    const GaussianState s2 = imaginary_step(s, tensors(), -1e-4, 1e-3);
    REQUIRE(s2.beta.norm() == 0.0);
    REQUIRE((s2.G[0] - s.G[0]).norm() > 0.0);  // covariance does flow
  }
  SECTION("energy decreases from a perturbed free state") {
    GaussianState s = GaussianState::vacuum(kSpec, 1.5);
    s.beta[0] = std::sqrt(50.0);
    s.beta[2] = 1.0;
    const double e0 = total_energy(s, tensors(), 0.0);
    const GaussianState s2 = imaginary_step(s, tensors(), 0.0, 1e-3);
    REQUIRE(total_energy(s2, tensors(), 0.0) < e0);
  }
}

TEST_CASE("symplectic diagonalization") {
  SECTION("free theory spectrum") {
    GaussianState s = GaussianState::vacuum(kSpec, 1.5);
    s.beta[0] = std::sqrt(1000.0);
    const auto mf = build_mean_field(s, tensors(), 0.0);
    const BogoliubovBasis b = symplectic_diagonalize(mf);
    REQUIRE(b.zero_mode);  // condensate mode sits at zero here
    for (int l = 0; l <= kSpec.l_max; ++l)
      for (int n = 0; n <= kSpec.n_cut; ++n) {
        REQUIRE_THAT(b.D[l][n],
                     Catch::Matchers::WithinAbs(eigenenergy(n, l, 1.5), 1e-8));
        REQUIRE_THAT(std::abs(b.u[l].col(n).cwiseAbs().maxCoeff()),
                     Catch::Matchers::WithinRel(1.0, 1e-7));
      }
    for (int l = 0; l <= kSpec.l_max; ++l) REQUIRE(b.v[l].norm() < 1e-6);
  }
  SECTION("symplectic normalization and block diagonalization on random states") {
    GaussianState s = GaussianState::vacuum(kSpec, 0.5);
    s.beta[0] = 4.0;
    s.beta[1] = Complex(0.5, 0.25);
    s.G[1](2, 3) = Complex(0.05, 0.01);
    s.G[1](3, 2) = Complex(0.05, -0.01);
    s.F[1](2, 3) = s.F[1](3, 2) = 0.02;
    const auto mf = build_mean_field(s, tensors(), 2e-3);
    const BogoliubovBasis b = symplectic_diagonalize(mf);
    const int M = kSpec.n_states();
    for (int l = 0; l <= kSpec.l_max; ++l) {
      const MatrixXcd norm_check =
          b.u[l].adjoint() * b.u[l] - b.v[l].adjoint() * b.v[l];
      REQUIRE((norm_check - MatrixXcd::Identity(M, M)).cwiseAbs().maxCoeff() < 1e-8);
      // S^dag H S = diag(D, D)
      MatrixXcd S(2 * M, 2 * M), H(2 * M, 2 * M);
      S.topLeftCorner(M, M) = b.u[l];
      S.topRightCorner(M, M) = b.v[l].conjugate();
      S.bottomLeftCorner(M, M) = b.v[l];
      S.bottomRightCorner(M, M) = b.u[l].conjugate();
      H.topLeftCorner(M, M) = mf.E_blocks[l];
      H.topRightCorner(M, M) = mf.Delta_blocks[l];
      H.bottomLeftCorner(M, M) = mf.Delta_blocks[l].conjugate();
      H.bottomRightCorner(M, M) = mf.E_blocks[l].conjugate();
      MatrixXcd diag = S.adjoint() * H * S;
      for (int i = 0; i < M; ++i) diag(i, i) -= b.D[l][i];
      for (int i = 0; i < M; ++i) diag(M + i, M + i) -= b.D[l][i];
      REQUIRE(diag.cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("solve_ground: free gas") {
  SolverConfig cfg;
  cfg.target_N = 1000.0;
  cfg.max_steps = 4000;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), 0.0);
  REQUIRE(r.report.converged);
  REQUIRE_THAT(r.report.E / 1000.0, Catch::Matchers::WithinAbs(1.5, 1e-6));
  REQUIRE_THAT(r.report.mu, Catch::Matchers::WithinAbs(1.5, 1e-6));
  const auto [nc, nd] = particle_numbers(r.state);
  REQUIRE_THAT(nc / (nc + nd), Catch::Matchers::WithinAbs(1.0, 1e-8));
  REQUIRE(detect_phase(r.state) == Phase::CSC);
}

TEST_CASE("solve_ground: repulsive coherent condensate") {
  SolverConfig cfg;
  cfg.target_N = 1e4;
  cfg.max_steps = 6000;
  const double a_s = 0.1 / cfg.target_N;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), a_s);
  REQUIRE(r.report.converged);
  const auto [nc, nd] = particle_numbers(r.state);
  REQUIRE(nc / (nc + nd) > 0.999);
  const auto gpe = solve_effective(basis(), cfg.target_N, a_s, 1.0);
  REQUIRE_THAT(r.report.E / cfg.target_N,
               Catch::Matchers::WithinRel(gpe.E_per_N, 0.01));
  REQUIRE(detect_phase(r.state) == Phase::CSC);
  SECTION("mean-field operator is gapped") {
    const auto mf = build_mean_field(r.state, tensors(), a_s);
    const BogoliubovBasis b = symplectic_diagonalize(mf);
    for (int l = 0; l <= kSpec.l_max; ++l) REQUIRE(b.D[l].minCoeff() > 0.0);
  }
}

TEST_CASE("solve_ground: attractive squeezed condensate") {
  SolverConfig cfg;
  cfg.target_N = 1e4;
  cfg.max_steps = 6000;
  const double a_s = -0.1 / cfg.target_N;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), a_s);
  REQUIRE(r.report.converged);
  const auto [nc, nd] = particle_numbers(r.state);
  REQUIRE(nc / (nc + nd) < 1e-3);
  REQUIRE(detect_phase(r.state) == Phase::SSC);
  const auto eff = solve_effective(basis(), cfg.target_N, a_s, 3.0, true);
  REQUIRE_THAT(r.report.E / cfg.target_N,
               Catch::Matchers::WithinRel(eff.E_per_N, 0.01));
  SECTION("covariance is a single squeezed mode") {
    const SqueezedMode m = extract_squeezed_mode(r.state);
    REQUIRE(m.residual < 1e-3);
    Eigen::JacobiSVD<MatrixXcd> svd(r.state.F[0]);
    REQUIRE_THAT(svd.singularValues()[0],
                 Catch::Matchers::WithinRel(std::sqrt(nd * (nd + 1.0)), 1e-3));
  }
  SECTION("flow residual identity holds at convergence") {
    REQUIRE(r.report.final_gamma_residual < 10.0 * cfg.tol_gamma);
  }
}

TEST_CASE("solve_ground: collapse signalled for strong attraction") {
  SolverConfig cfg;
  cfg.target_N = 1e3;
  cfg.max_steps = 3000;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), -1.2 / cfg.target_N);
  REQUIRE(r.report.collapsed);
}

TEST_CASE("solve_ground: euler integrator on the free gas") {
  SolverConfig cfg;
  cfg.target_N = 100.0;
  cfg.integrator = Integrator::euler;
  cfg.max_steps = 20000;
  cfg.dtau = 1e-2;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), 0.0);
  REQUIRE(r.report.converged);
  REQUIRE_THAT(r.report.E / 100.0, Catch::Matchers::WithinAbs(1.5, 1e-6));
}

TEST_CASE("detect_phase thresholds") {
  GaussianState s = GaussianState::vacuum(kSpec, 0.0);
  s.beta[0] = 10.0;
  REQUIRE(detect_phase(s) == Phase::CSC);
  GaussianState sq = GaussianState::vacuum(kSpec, 0.0);
  sq.G[0](0, 0) = 50.0;
  REQUIRE(detect_phase(sq) == Phase::SSC);
  GaussianState mix = GaussianState::vacuum(kSpec, 0.0);
  mix.beta[0] = std::sqrt(50.0);
  mix.G[0](0, 0) = 50.0;
  REQUIRE(detect_phase(mix) == Phase::mixed);
}

TEST_CASE("vacuum noise seed converges to the squeezed branch") {
  SolverConfig cfg;
  cfg.target_N = 100.0;
  cfg.seed_mode = SeedMode::vacuum_noise;
  cfg.max_steps = 8000;
  const GroundResult r = solve_ground(cfg, basis(), tensors(), -0.1 / cfg.target_N);
  REQUIRE(r.report.converged);
  REQUIRE(detect_phase(r.state) == Phase::SSC);
}
