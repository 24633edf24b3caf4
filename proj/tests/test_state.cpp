#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "gbec/ground.hpp"
#include "gbec/state.hpp"

using namespace gbec;

namespace {

const BasisSpec kSpec{6, 2};
const Basis& basis() {
  static Basis b(kSpec);
  return b;
}
const InteractionTensor& tensors() {
  static InteractionTensor t = InteractionTensor::build(basis());
  return t;
}

GaussianState coherent_state(double N, double mu = 0.0) {
  GaussianState s = GaussianState::vacuum(kSpec, mu);
  s.beta[0] = std::sqrt(N);
  return s;
}

GaussianState squeezed_state(double Nd, double mu = 0.0) {
  GaussianState s = GaussianState::vacuum(kSpec, mu);
  s.G[0](0, 0) = Nd;
  s.F[0](0, 0) = std::sqrt(Nd * (Nd + 1.0));
  return s;
}

// random pure Gaussian state: quasiparticle vacuum of a random PD block
GaussianState random_physical_state(unsigned seed, double beta_scale = 0.5) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  const int M = kSpec.n_states();
  GaussianState s = GaussianState::vacuum(kSpec, 0.3);
  for (int l = 0; l <= kSpec.l_max; ++l) {
    MatrixXcd A(M, M), B(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        A(i, j) = Complex(dist(rng), dist(rng));
        B(i, j) = Complex(dist(rng), dist(rng));
      }
    MatrixXcd H(2 * M, 2 * M);
    const MatrixXcd E = A * A.adjoint() / double(M) + 2.0 * MatrixXcd::Identity(M, M);
    const MatrixXcd D = 0.1 * (B + B.transpose());
    H.topLeftCorner(M, M) = E;
    H.topRightCorner(M, M) = D;
    H.bottomLeftCorner(M, M) = D.conjugate();
    H.bottomRightCorner(M, M) = E.conjugate();
    const BogoliubovBlock b = colpa_diagonalize(H);
    s.G[l] = b.v.conjugate() * b.v.transpose();
    s.F[l] = b.v.conjugate() * b.u.transpose();
  }
  for (int n = 0; n < M; ++n) s.beta[n] = beta_scale * Complex(dist(rng), dist(rng));
  s.symmetrize();
  return s;
}

}  // namespace

TEST_CASE("energies of reference states") {
  SECTION("vacuum") {
    REQUIRE_THAT(total_energy(GaussianState::vacuum(kSpec), tensors(), 0.3),
                 Catch::Matchers::WithinAbs(0.0, 1e-14));
  }
  SECTION("free coherent ground state") {
    const double N = 50.0;
    REQUIRE_THAT(total_energy(coherent_state(N), tensors(), 0.0) / N,
                 Catch::Matchers::WithinRel(1.5, 1e-13));
  }
  SECTION("coherent ansatz matches the unified functional with U_eff = U") {
    for (double N : {10.0, 100.0}) {
      const double a_s = 1e-3;
      const double I4 = a_s * std::sqrt(2.0 / M_PI);
      const double expected = 1.5 * N + 0.5 * N * N * I4;
      REQUIRE_THAT(total_energy(coherent_state(N), tensors(), a_s),
                   Catch::Matchers::WithinRel(expected, 1e-12));
    }
  }
  SECTION("squeezed ansatz matches the unified functional with U_eff = 3U(1+1/(3N))") {
    for (double N : {10.0, 100.0}) {
      const double a_s = -1e-3;
      const double I4 = a_s * std::sqrt(2.0 / M_PI);
      const double ueff = 3.0 * (1.0 + 1.0 / (3.0 * N));
      const double expected = 1.5 * N + 0.5 * ueff * N * N * I4;
      REQUIRE_THAT(total_energy(squeezed_state(N), tensors(), a_s),
                   Catch::Matchers::WithinRel(expected, 1e-12));
    }
  }
}

TEST_CASE("mean-field blocks") {
  SECTION("free theory blocks are diagonal") {
    const auto mf = build_mean_field(coherent_state(25.0, 0.0), tensors(), 0.0);
    for (int l = 0; l <= kSpec.l_max; ++l) {
      REQUIRE(mf.Delta_blocks[l].norm() == 0.0);
      for (int n = 0; n <= kSpec.n_cut; ++n)
        REQUIRE(mf.E_blocks[l](n, n) == Complex(eigenenergy(n, l, 0.0)));
      REQUIRE_THAT((mf.E_blocks[l] - mf.E_blocks[l].real().cast<Complex>().eval()).norm(),
                   Catch::Matchers::WithinAbs(0.0, 1e-15));
    }
    REQUIRE_THAT((mf.eta - 1.5 * coherent_state(25.0).beta).norm(),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("vacuum is a stationary point of eta") {
    const auto mf = build_mean_field(GaussianState::vacuum(kSpec), tensors(), 0.5);
    REQUIRE(mf.eta.norm() == 0.0);
  }
  SECTION("single-mode coherent driving vector") {
    const double N = 36.0, a_s = 2e-3;
    const auto mf = build_mean_field(coherent_state(N), tensors(), a_s);
    const double expected =
        eigenenergy(0, 0, 0.0) * std::sqrt(N) +
        interaction_element(0, 0, 0, 0, 0, 0, a_s) * N * std::sqrt(N);
    REQUIRE_THAT(mf.eta[0].real(), Catch::Matchers::WithinRel(expected, 1e-12));
  }
  SECTION("blocks keep their symmetry on random states") {
    const GaussianState s = random_physical_state(5);
    const auto mf = build_mean_field(s, tensors(), 0.01);
    for (int l = 0; l <= kSpec.l_max; ++l) {
      REQUIRE((mf.E_blocks[l] - mf.E_blocks[l].adjoint()).norm() < 1e-10);
      REQUIRE((mf.Delta_blocks[l] - mf.Delta_blocks[l].transpose()).norm() < 1e-10);
    }
  }
  SECTION("basis mismatch rejected") {
    GaussianState s = GaussianState::vacuum({4, 1});
    REQUIRE_THROWS_AS(build_mean_field(s, tensors(), 0.1), std::domain_error);
  }
}

TEST_CASE("eta equals the gradient of the energy") {
  const double a_s = 5e-3, h = 1e-5;
  for (unsigned seed : {1u, 2u}) {
    GaussianState s = random_physical_state(seed, 0.4);
    const auto mf = build_mean_field(s, tensors(), a_s);
    for (int n : {0, 2, 5}) {
      GaussianState sp = s, sm = s;
      sp.beta[n] += h;
      sm.beta[n] -= h;
      const double dre =
          (total_energy(sp, tensors(), a_s) - total_energy(sm, tensors(), a_s)) / (2 * h);
      sp = s;
      sm = s;
      sp.beta[n] += Complex(0, h);
      sm.beta[n] -= Complex(0, h);
      const double dim =
          (total_energy(sp, tensors(), a_s) - total_energy(sm, tensors(), a_s)) / (2 * h);
      REQUIRE_THAT(mf.eta[n].real(), Catch::Matchers::WithinAbs(dre / 2.0, 1e-6));
      REQUIRE_THAT(mf.eta[n].imag(), Catch::Matchers::WithinAbs(dim / 2.0, 1e-6));
    }
  }
}

TEST_CASE("particle numbers and number fluctuations") {
  SECTION("trivial counts") {
    const auto [nc1, nd1] = particle_numbers(coherent_state(100.0));
    REQUIRE(nc1 == 100.0);
    REQUIRE(nd1 == 0.0);
    const auto [nc2, nd2] = particle_numbers(GaussianState::vacuum(kSpec));
    REQUIRE(nc2 == 0.0);
    REQUIRE(nd2 == 0.0);
    const auto [nc3, nd3] = particle_numbers(squeezed_state(42.0));
    REQUIRE(nc3 == 0.0);
    REQUIRE_THAT(nd3, Catch::Matchers::WithinRel(42.0, 1e-14));
  }
  SECTION("squeezed-state number variance") {
    for (double Nd : {1.0, 10.0, 250.0}) {
      const double expected = 2.0 * Nd * (Nd + 1.0);
      REQUIRE_THAT(number_variance(squeezed_state(Nd)),
                   Catch::Matchers::WithinRel(expected, 1e-10));
    }
  }
  SECTION("coherent state is Poissonian") {
    REQUIRE_THAT(number_variance(coherent_state(77.0)),
                 Catch::Matchers::WithinRel(77.0, 1e-12));
  }
}

TEST_CASE("width") {
  REQUIRE_THAT(width(coherent_state(10.0), basis()),
               Catch::Matchers::WithinRel(std::sqrt(1.5), 1e-12));
  REQUIRE_THAT(width(squeezed_state(10.0), basis()),
               Catch::Matchers::WithinRel(std::sqrt(1.5), 1e-12));
  // unnormalized convention scales with sqrt(N)
  REQUIRE_THAT(width(coherent_state(10.0), basis(), false),
               Catch::Matchers::WithinRel(std::sqrt(15.0), 1e-12));
  REQUIRE_THROWS_AS(width(GaussianState::vacuum(kSpec), basis()), std::domain_error);
}

TEST_CASE("local g2") {
  SECTION("coherent state is uncorrelated") {
    for (double r : {0.0, 0.7, 1.9})
      REQUIRE_THAT(g2_local(coherent_state(100.0), basis(), r),
                   Catch::Matchers::WithinRel(1.0, 1e-12));
  }
  SECTION("single-mode squeezed value 3 + 1/N") {
    const double N = 100.0;
    for (double r : {0.0, 0.5, 1.5})
      REQUIRE_THAT(g2_local(squeezed_state(N), basis(), r),
                   Catch::Matchers::WithinAbs(3.0 + 1.0 / N, 1e-9));
  }
  SECTION("vacuum has no density") {
    REQUIRE_THROWS_AS(g2_local(GaussianState::vacuum(kSpec), basis(), 1.0),
                      std::domain_error);
  }
}

TEST_CASE("squeezed-mode extraction") {
  SECTION("exact rank-1 covariance") {
    const GaussianState s = squeezed_state(64.0);
    const SqueezedMode m = extract_squeezed_mode(s);
    REQUIRE(m.residual < 1e-12);
    REQUIRE_THAT(m.xi0, Catch::Matchers::WithinRel(std::asinh(8.0), 1e-12));
    Eigen::JacobiSVD<MatrixXcd> svd(s.F[0]);
    REQUIRE_THAT(svd.singularValues()[0],
                 Catch::Matchers::WithinRel(std::sqrt(64.0 * 65.0), 1e-12));
  }
  SECTION("no squeezed component") {
    REQUIRE_THROWS_AS(extract_squeezed_mode(coherent_state(5.0)), std::domain_error);
  }
}

TEST_CASE("physicality check") {
  REQUIRE(is_physical(GaussianState::vacuum(kSpec)));
  REQUIRE(is_physical(squeezed_state(12.0)));
  REQUIRE(is_physical(random_physical_state(9)));
  GaussianState bad = GaussianState::vacuum(kSpec);
  bad.G[0](0, 0) = -0.2;  // below the vacuum bound
  REQUIRE_FALSE(is_physical(bad));
}

TEST_CASE("snapshot round-trip is bit-exact") {
  const GaussianState s = random_physical_state(13);
  const std::string path = "state_snapshot_test.json";
  save_snapshot(s, -3.2e-4, path);
  const auto [loaded, a_s] = load_snapshot(path);
  REQUIRE(a_s == -3.2e-4);
  REQUIRE(loaded.mu == s.mu);
  REQUIRE(loaded.beta == s.beta);
  for (int l = 0; l <= kSpec.l_max; ++l) {
    REQUIRE(loaded.G[l] == s.G[l]);
    REQUIRE(loaded.F[l] == s.F[l]);
  }
  std::remove(path.c_str());
}
