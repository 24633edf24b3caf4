#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gbec {

// Nodes and weights for ∫_0^∞ u^alpha e^{-u} g(u) du, exact for polynomial g
// of degree <= 2*order - 1.
struct LaguerreRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

namespace detail {

inline Eigen::VectorXd laguerre_nodes(int order, double alpha) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int i = 0; i < order; ++i) {
    J(i, i) = 2.0 * i + alpha + 1.0;
    if (i + 1 < order) {
      const double b = std::sqrt((i + 1.0) * (i + 1.0 + alpha));
      J(i, i + 1) = b;
      J(i + 1, i) = b;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Exponentially rescaled weights w_i * e^{u_i} via the Christoffel function
// of the *weighted* orthonormal Laguerre functions
//   l_k(u) = p_k(u) u^{alpha/2} e^{-u/2},
// which stay bounded, so tail weights keep full relative accuracy. (Squared
// first eigenvector components underflow into noise at the tail nodes and
// cannot be rescaled by e^{u} afterwards.)
inline double laguerre_exp_weight(double u, int order, double alpha) {
  const double l0 = std::exp(0.5 * alpha * std::log(u) - 0.5 * u - 0.5 * std::lgamma(alpha + 1.0));
  double lkm1 = 0.0, lk = l0, s = l0 * l0, bprev = 0.0;
  for (int k = 0; k + 1 < order; ++k) {
    const double a = 2.0 * k + alpha + 1.0;
    const double b = std::sqrt((k + 1.0) * (k + 1.0 + alpha));
    const double lkp1 = ((u - a) * lk - bprev * lkm1) / b;
    lkm1 = lk;
    lk = lkp1;
    bprev = b;
    s += lk * lk;
  }
  if (s < 1e-290) s = 1e-290;
  return std::pow(u, alpha) / s;
}

}  // namespace detail

inline LaguerreRule gauss_laguerre(int order, double alpha) {
  if (order < 1) throw std::domain_error("gauss_laguerre: order must be >= 1");
  LaguerreRule rule;
  rule.nodes = detail::laguerre_nodes(order, alpha);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i)
    rule.weights[i] =
        detail::laguerre_exp_weight(rule.nodes[i], order, alpha) * std::exp(-rule.nodes[i]);
  return rule;
}

// Radial rule: r_q and W_q such that ∫_0^∞ dr r^2 f(r) = Σ_q W_q f(r_q)
// is exact whenever f(r) = (polynomial in r^2) * r^{2p} * e^{-c r^2} within
// the rule's degree budget; the weights carry the inverse Gaussian so f is
// evaluated as-is.
struct RadialRule {
  Eigen::VectorXd r;
  Eigen::VectorXd w;
};

inline RadialRule radial_rule(int order, double c) {
  const double alpha = 0.5;
  const Eigen::VectorXd u = detail::laguerre_nodes(order, alpha);
  RadialRule rule;
  rule.r.resize(order);
  rule.w.resize(order);
  const double scale = 0.5 * std::pow(c, -1.5);
  for (int q = 0; q < order; ++q) {
    rule.r[q] = std::sqrt(u[q] / c);
    rule.w[q] = scale * detail::laguerre_exp_weight(u[q], order, alpha);
  }
  return rule;
}

// Adaptive Simpson on [a,b]; f must be smooth in the interior.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 48) {
  auto simpson = [&](double x0, double x2, double f0, double f1, double f2) {
    return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2);
  };
  struct Frame {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  const double m0 = 0.5 * (a + b);
  double fa = f(a), fm = f(m0), fb = f(b);
  std::vector<Frame> stack{{a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), depth}};
  double total = 0.0;
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    const double m = 0.5 * (fr.a + fr.b);
    const double lm = 0.5 * (fr.a + m), rm = 0.5 * (m + fr.b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fr.a, m, fr.fa, flm, fr.fm);
    const double right = simpson(m, fr.b, fr.fm, frm, fr.fb);
    const double delta = left + right - fr.whole;
    if (fr.depth <= 0 || std::abs(delta) <= 15.0 * tol) {
      total += left + right + delta / 15.0;
    } else {
      stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left, fr.depth - 1});
      stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right, fr.depth - 1});
    }
  }
  return total;
}

}  // namespace gbec
