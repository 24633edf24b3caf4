#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "gbec/basis.hpp"
#include "gbec/quadrature.hpp"

namespace gbec {

// Single-mode radial solution of the effective equations, l=0 channel.
struct RadialMode {
  VectorXd coeffs;     // unit-normalized expansion over R_n0
  double norm_N = 0;   // particles carried by the mode
  double u_eff = 1.0;  // interaction multiplier relative to U
};

struct EffectiveSolution {
  RadialMode mode;
  double mu = 0;
  double E_per_N = 0;
};

struct collapse_error : std::runtime_error {
  RadialMode last;
  explicit collapse_error(RadialMode m)
      : std::runtime_error("effective equation collapsed"), last(std::move(m)) {}
};

namespace detail {

// Imaginary-time relaxation of [h0 + kappa*phibar^2 (+ lhy*phibar^3)] c = mu c
// on the unit sphere; kappa and lhy multiply quartic/quintic node sums.
inline EffectiveSolution relax_single_mode(const Basis& basis, double N, double kappa,
                                           double lhy, double u_eff, double tol,
                                           long max_steps) {
  const int M = basis.spec().n_states();
  const MatrixXd& R = basis.quart_table(0);
  const VectorXd& W = basis.quart_rule().w;
  VectorXd eps(M);
  for (int n = 0; n < M; ++n) eps[n] = eigenenergy(n, 0, 0.0);
  VectorXd c = VectorXd::Zero(M);
  c[0] = 1.0;
  double dt = 2e-3;
  auto energy = [&](const VectorXd& cc, const VectorXd& d) {
    double e = cc.dot(eps.cwiseProduct(cc));
    e += 0.5 * kappa * W.dot(d.array().pow(4).matrix());
    if (lhy != 0.0) e += 0.4 * lhy * W.dot(d.array().pow(5).matrix());
    return e;
  };
  long it = 0;
  for (; it < max_steps; ++it) {
    const VectorXd d = R * c;
    VectorXd hc = eps.cwiseProduct(c) + kappa * (R.transpose() * W.cwiseProduct(d.array().cube().matrix()));
    if (lhy != 0.0)
      hc += lhy * (R.transpose() * W.cwiseProduct(d.array().pow(4).matrix()));
    const double mu = c.dot(hc);
    const VectorXd res = hc - mu * c;
    const double e = energy(c, d);
    if (e < -2.0) {
      RadialMode bad{c, N, u_eff};
      throw collapse_error(std::move(bad));
    }
    if (res.norm() < tol && it > 8) {
      EffectiveSolution out;
      out.mode = RadialMode{c, N, u_eff};
      out.mu = mu;
      out.E_per_N = e;
      return out;
    }
    VectorXd c2 = c - dt * res;
    c2.normalize();
    const double e2 = energy(c2, R * c2);
    if (e2 > e + 1e-15) {
      dt *= 0.5;
      if (dt < 1e-10) break;
      continue;
    }
    c = c2;
    if (e - e2 < 1e-16 * std::max(1.0, std::abs(e2)) && res.norm() < 1e-9 && it > 32) {
      // gradient flow stagnated at numerical floor
      EffectiveSolution out;
      out.mode = RadialMode{c, N, u_eff};
      out.mu = mu;
      out.E_per_N = e2;
      return out;
    }
    dt = std::min(dt * 1.05, 0.05);
  }
  const VectorXd d = R * c;
  VectorXd hc = eps.cwiseProduct(c) + kappa * (R.transpose() * W.cwiseProduct(d.array().cube().matrix()));
  if (lhy != 0.0) hc += lhy * (R.transpose() * W.cwiseProduct(d.array().pow(4).matrix()));
  EffectiveSolution out;
  out.mode = RadialMode{c, N, u_eff};
  out.mu = c.dot(hc);
  out.E_per_N = energy(c, d);
  return out;
}

}  // namespace detail

// Ground state of [L + u_mult * U |phibar|^2] phibar = 0 in the l=0 basis.
// exact_correction upgrades u_mult=3 to the full 3(1 + 1/(3N)).
inline EffectiveSolution solve_effective(const Basis& basis, double N, double a_s,
                                         double u_mult, bool exact_correction = false,
                                         double tol = 1e-12, long max_steps = 400000) {
  if (N <= 0) throw std::domain_error("solve_effective: N must be positive");
  double u = u_mult;
  if (exact_correction && u_mult == 3.0) u = 3.0 * (1.0 + 1.0 / (3.0 * N));
  return detail::relax_single_mode(basis, N, u * N * a_s, 0.0, u, tol, max_steps);
}

// Critical k = N|a_s|/a_ho located by upward continuation and bisection.
inline double collapse_threshold(const Basis& basis, double u_mult,
                                 double resolution = 1e-3) {
  const double ref_N = 1e4;
  auto stable = [&](double k) {
    try {
      solve_effective(basis, ref_N, -k / ref_N, u_mult, false, 1e-10, 300000);
      return true;
    } catch (const collapse_error&) {
      return false;
    }
  };
  double lo = 0.30 / u_mult, hi = 0.90 / u_mult;
  if (!stable(lo)) throw std::runtime_error("collapse_threshold: bracket low end unstable");
  while (stable(hi)) hi *= 1.3;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (stable(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Homogeneous Bogoliubov integrals: depletion <dpsi^dag dpsi> and renormalized
// anomalous density <dpsi dpsi> for condensate density n0 and a_s > 0.
struct HomogeneousFluctuations {
  double depletion = 0;
  double anomalous = 0;
};

inline HomogeneousFluctuations homogeneous_fluctuations(double n0, double a_s,
                                                        double tol = 1e-10) {
  if (n0 <= 0 || a_s <= 0)
    throw std::domain_error("homogeneous_fluctuations: requires n0 > 0, a_s > 0");
  const double g = 4.0 * M_PI * n0 * a_s;
  const double pref = std::pow(2.0 * g, 1.5) / (4.0 * M_PI * M_PI);
  // k = sqrt(2 g) x; epsilon/E = (x^2+1)/(x sqrt(x^2+2)). Both integrands are
  // rationalized so the large-x tails evaluate without cancellation.
  auto dep_x = [](double x) {
    if (x < 1e-12) return 0.0;
    const double s = std::sqrt(x * x + 2.0);
    return x / (s * (x * x + 1.0 + x * s));
  };
  auto anom_x = [](double x) {
    const double s = std::sqrt(x * x + 2.0);
    return 2.0 / (s * (s + x));
  };
  const double X = 12.0;
  double dep = adaptive_simpson(dep_x, 0.0, X, tol);
  double anom = adaptive_simpson(anom_x, 0.0, X, tol);
  // tails via u = 1/x
  dep += adaptive_simpson([&](double u) { return u < 1e-14 ? 0.0 : dep_x(1.0 / u) / (u * u); },
                          0.0, 1.0 / X, tol);
  anom += adaptive_simpson([&](double u) { return u < 1e-14 ? 0.0 : anom_x(1.0 / u) / (u * u); },
                           0.0, 1.0 / X, tol);
  HomogeneousFluctuations out;
  out.depletion = pref * dep;
  out.anomalous = pref * anom;
  return out;
}

inline double mode_width(const Basis& basis, const RadialMode& mode) {
  return std::sqrt(mode.coeffs.dot(basis.r2_matrix(0) * mode.coeffs));
}

// GPE with the beyond-mean-field chemical-potential correction,
// [L + U|phi|^2 + (40/3) U a_s sqrt(a_s/pi) |phi|^3] phi = 0.
inline EffectiveSolution solve_lhy_gpe(const Basis& basis, double N, double a_s,
                                       double tol = 1e-12, long max_steps = 400000) {
  if (a_s < 0) throw std::domain_error("solve_lhy_gpe: requires a_s >= 0");
  const double kappa = N * a_s;
  const double lhy = (a_s > 0)
                         ? (40.0 / 3.0) * (4.0 * M_PI) * a_s * a_s *
                               std::sqrt(a_s / M_PI) * std::pow(N / (4.0 * M_PI), 1.5)
                         : 0.0;
  return detail::relax_single_mode(basis, N, kappa, lhy, 1.0, tol, max_steps);
}

}  // namespace gbec
