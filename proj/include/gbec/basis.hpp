#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gbec/cg.hpp"
#include "gbec/linalg.hpp"
#include "gbec/quadrature.hpp"

namespace gbec {

// Truncation of the spherical harmonic-oscillator eigenbasis. Lengths are in
// units of a_ho, energies in units of hbar*omega_ho throughout.
struct BasisSpec {
  int n_cut = 20;
  int l_max = 4;

  void validate() const {
    if (n_cut < 1) throw std::domain_error("BasisSpec: n_cut must be >= 1");
    if (l_max < 0) throw std::domain_error("BasisSpec: l_max must be >= 0");
  }
  int n_states() const { return n_cut + 1; }
  bool operator==(const BasisSpec&) const = default;
};

inline double eigenenergy(int n, int l, double mu) {
  return 2.0 * n + l + 1.5 - mu;
}

// R_nl(r) = sqrt(2 n! / Gamma(n+l+3/2)) r^l e^{-r^2/2} L_n^{(l+1/2)}(r^2).
inline double radial_eigenfunction(int n, int l, double r) {
  if (n < 0 || l < 0) throw std::domain_error("radial_eigenfunction: bad quantum numbers");
  if (r < 0) throw std::domain_error("radial_eigenfunction: r must be >= 0");
  const double lognorm =
      0.5 * (std::log(2.0) + std::lgamma(n + 1.0) - std::lgamma(n + l + 1.5));
  const double x = r * r;
  const double alpha = l + 0.5;
  double lkm1 = 1.0, lk = (n == 0) ? 1.0 : 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double lkp1 = ((2.0 * k + 1.0 + alpha - x) * lk - (k + alpha) * lkm1) / (k + 1.0);
    lkm1 = lk;
    lk = lkp1;
  }
  return std::exp(lognorm - 0.5 * x) * std::pow(r, l) * lk;
}

namespace detail {

// Stable evaluation of the closed-form radial quartic integral
//   I = ∫_0^∞ dr r^2 R_{n l} R_{n' l'} R_{n1 l1} R_{n1' l1'}
// as an alternating series in K = k1+k2+k3+k4. Positive convolutions first,
// then a single alternating sum; `amplification` reports sum|term|/|sum|.
struct ClosedFormResult {
  double value = 0.0;
  double amplification = 1.0;
};

inline ClosedFormResult quartic_integral_closed(int n[4], int l[4]) {
  const int lam = l[0] + l[1] + l[2] + l[3];
  const double A = 0.5 * (3.0 + lam);
  std::vector<double> f[4];
  for (int i = 0; i < 4; ++i) {
    f[i].resize(n[i] + 1);
    const double half = 0.5 * (std::lgamma(n[i] + 1.0) + std::lgamma(n[i] + l[i] + 1.5));
    for (int k = 0; k <= n[i]; ++k)
      f[i][k] = std::exp(half - std::lgamma(n[i] - k + 1.0) -
                         std::lgamma(l[i] + 1.5 + k) - std::lgamma(k + 1.0));
  }
  auto convolve = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
      for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
  };
  const std::vector<double> h = convolve(convolve(f[0], f[1]), convolve(f[2], f[3]));
  double sum = 0.0, asum = 0.0;
  const double ln2 = std::log(2.0);
  for (size_t K = 0; K < h.size(); ++K) {
    const double t = std::exp(std::lgamma(A + K) - double(K) * ln2) * h[K];
    sum += (K % 2 == 0) ? t : -t;
    asum += t;
  }
  ClosedFormResult out;
  out.value = std::exp2(-0.5 * (lam + 1.0)) * sum;
  out.amplification = asum / std::max(std::abs(sum), 1e-300);
  return out;
}

inline double quartic_integral_quad(int n[4], int l[4], int order) {
  // Generalized Gauss-Laguerre in t = r^2 with the full weight t^{(1+lam)/2}
  // in the rule; exact for these polynomial integrands.
  const int lam = l[0] + l[1] + l[2] + l[3];
  const double alpha = 0.5 * (1.0 + lam);
  const Eigen::VectorXd u = gbec::detail::laguerre_nodes(order, alpha);
  double sum = 0.0;
  for (int q = 0; q < order; ++q) {
    const double t = 0.5 * u[q];
    const double r = std::sqrt(t);
    double prod = 1.0;
    for (int i = 0; i < 4; ++i) prod *= radial_eigenfunction(n[i], l[i], r);
    const double w = 0.5 * std::pow(0.5, alpha + 1.0) *
                     gbec::detail::laguerre_exp_weight(u[q], order, alpha) *
                     std::pow(t, -0.5 * lam);
    sum += w * prod;
  }
  return sum;
}

}  // namespace detail

// Number of fallback-triggering closed-form evaluations is tracked so callers
// can report it; threshold per the cancellation budget.
inline constexpr double kCancellationBudget = 1e6;

// Four-l interaction integral times a_s, closed form with quadrature fallback.
inline double four_l_element(int n, int np, int n1, int n1p, int l, int lp, int l1,
                             int l1p, double a_s, bool* used_quadrature = nullptr) {
  int ns[4] = {n, np, n1, n1p};
  int ls[4] = {l, lp, l1, l1p};
  const auto cf = detail::quartic_integral_closed(ns, ls);
  if (cf.amplification <= kCancellationBudget) {
    if (used_quadrature) *used_quadrature = false;
    return a_s * cf.value;
  }
  if (used_quadrature) *used_quadrature = true;
  const int order = (n + np + n1 + n1p) / 2 + l + lp + l1 + l1p + 12;
  return a_s * detail::quartic_integral_quad(ns, ls, order);
}

// SM-form element M^{l,l1}_{n n' n1 n1'}.
inline double interaction_element(int n, int np, int n1, int n1p, int l, int l1,
                                  double a_s, bool* used_quadrature = nullptr) {
  return four_l_element(n, np, n1, n1p, l, l, l1, l1, a_s, used_quadrature);
}

// Direct radial-quadrature evaluation, the reference for tests. Independent
// rule construction per call; `order` <= 0 picks a sufficient order.
inline double interaction_element_quad(int n, int np, int n1, int n1p, int l, int l1,
                                       double a_s, int order = 0) {
  int ns[4] = {n, np, n1, n1p};
  int ls[4] = {l, l, l1, l1};
  if (order <= 0) order = (n + np + n1 + n1p) / 2 + l + l1 + 16;
  const double v = detail::quartic_integral_quad(ns, ls, order);
  if (!std::isfinite(v))
    throw std::runtime_error("interaction_element_quad: quadrature failed");
  return a_s * v;
}

// Shared evaluation grid: tables of R_nl at the quartic (weight e^{-2r^2}) and
// pair (weight e^{-r^2}) radial rules, plus r^2 moment matrices.
class Basis {
 public:
  explicit Basis(const BasisSpec& spec)
      : spec_(spec),
        quart_(radial_rule(2 * spec.n_cut + spec.l_max + 8, 2.0)),
        pair_(radial_rule(spec.n_cut + spec.l_max + 8, 1.0)) {
    spec_.validate();
    const int M = spec_.n_states();
    Rq_.resize(spec_.l_max + 1);
    Rp_.resize(spec_.l_max + 1);
    r2_.resize(spec_.l_max + 1);
    for (int l = 0; l <= spec_.l_max; ++l) {
      Rq_[l] = table(quart_, l, M);
      Rp_[l] = table(pair_, l, M);
      MatrixXd m(M, M);
      for (int a = 0; a < M; ++a)
        for (int b = 0; b <= a; ++b) {
          double s = 0.0;
          for (int q = 0; q < pair_.r.size(); ++q)
            s += pair_.w[q] * pair_.r[q] * pair_.r[q] * Rp_[l](q, a) * Rp_[l](q, b);
          m(a, b) = m(b, a) = s;
        }
      r2_[l] = m;
    }
  }

  const BasisSpec& spec() const { return spec_; }
  const RadialRule& quart_rule() const { return quart_; }
  const RadialRule& pair_rule() const { return pair_; }
  // columns: n, rows: quadrature points
  const MatrixXd& quart_table(int l) const { return Rq_.at(l); }
  const MatrixXd& pair_table(int l) const { return Rp_.at(l); }
  const MatrixXd& r2_matrix(int l) const { return r2_.at(l); }

  double radial(int n, int l, double r) const {
    if (n < 0 || n > spec_.n_cut || l < 0 || l > spec_.l_max)
      throw std::domain_error("radial: quantum numbers out of range");
    return radial_eigenfunction(n, l, r);
  }

 private:
  static MatrixXd table(const RadialRule& rule, int l, int M) {
    MatrixXd t(rule.r.size(), M);
    for (int q = 0; q < rule.r.size(); ++q)
      for (int n = 0; n < M; ++n) t(q, n) = radial_eigenfunction(n, l, rule.r[q]);
    return t;
  }

  BasisSpec spec_;
  RadialRule quart_, pair_;
  std::vector<MatrixXd> Rq_, Rp_, r2_;
};

// Precomputed M^{l,l1} at a_s = 1, symmetry-reduced: pair indices (n<=n') per
// l channel, blocks stored for l <= l1 only, and a_s scaled on read.
class InteractionTensor {
 public:
  InteractionTensor() = default;

  static int pair_index(int n, int np) {
    // requires n <= np
    return np * (np + 1) / 2 + n;
  }
  static int pair_count(int M) { return M * (M + 1) / 2; }

  static InteractionTensor build(const Basis& basis, int threads = 0) {
    InteractionTensor t;
    t.spec_ = basis.spec();
    const int L = t.spec_.l_max, M = t.spec_.n_states();
    const int P = pair_count(M);
    t.blocks_.assign((L + 1) * (L + 1), MatrixXd());
    if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<long> fallbacks{0};
    for (int l = 0; l <= L; ++l)
      for (int l1 = l; l1 <= L; ++l1) {
        MatrixXd& blk = t.blocks_[l * (L + 1) + l1];
        blk.resize(P, P);
        auto worker = [&](int begin, int end) {
          long local = 0;
          for (int p = begin; p < end; ++p) {
            const auto [a, b] = unpair(p);
            const int p1max = (l == l1) ? p : P - 1;
            for (int p1 = 0; p1 <= p1max; ++p1) {
              const auto [c, d] = unpair(p1);
              bool quad = false;
              const double v = four_l_element(a, b, c, d, l, l, l1, l1, 1.0, &quad);
              if (quad) ++local;
              blk(p, p1) = v;
              if (l == l1) blk(p1, p) = v;
            }
          }
          fallbacks += local;
        };
        run_chunked(worker, P, threads);
      }
    t.quad_fallbacks_ = fallbacks.load();
    return t;
  }

  const BasisSpec& spec() const { return spec_; }
  long quad_fallbacks() const { return quad_fallbacks_; }

  // M^{l,l1}_{n n' n1 n1'} * a_s
  double element(int l, int l1, int n, int np, int n1, int n1p, double a_s) const {
    if (l > l1) {
      std::swap(l, l1);
      std::swap(n, n1);
      std::swap(np, n1p);
    }
    if (n > np) std::swap(n, np);
    if (n1 > n1p) std::swap(n1, n1p);
    return a_s * blocks_[l * (spec_.l_max + 1) + l1](pair_index(n, np), pair_index(n1, n1p));
  }

  const MatrixXd& block(int l, int l1) const {
    return blocks_.at(l * (spec_.l_max + 1) + l1);
  }

  // Binary cache: magic "GBEC", version, n_cut, l_max, then f64 entries in
  // lexicographic order of (l, l1 >= l, p, p1) with blocks row-major.
  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor cache: cannot open " + path);
    f.write("GBEC", 4);
    const std::uint32_t vals[3] = {1u, std::uint32_t(spec_.n_cut), std::uint32_t(spec_.l_max)};
    f.write(reinterpret_cast<const char*>(vals), sizeof vals);
    for (int l = 0; l <= spec_.l_max; ++l)
      for (int l1 = l; l1 <= spec_.l_max; ++l1) {
        const MatrixXd& b = blocks_[l * (spec_.l_max + 1) + l1];
        for (int p = 0; p < b.rows(); ++p)
          f.write(reinterpret_cast<const char*>(b.row(p).eval().data()),
                  sizeof(double) * b.cols());
      }
    if (!f) throw std::runtime_error("tensor cache: write failed");
  }

  static InteractionTensor load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("tensor cache: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (std::memcmp(magic, "GBEC", 4) != 0)
      throw std::runtime_error("tensor cache: bad magic");
    std::uint32_t vals[3];
    f.read(reinterpret_cast<char*>(vals), sizeof vals);
    if (vals[0] != 1u) throw std::runtime_error("tensor cache: unknown version");
    InteractionTensor t;
    t.spec_.n_cut = int(vals[1]);
    t.spec_.l_max = int(vals[2]);
    const int P = pair_count(t.spec_.n_states());
    t.blocks_.assign((t.spec_.l_max + 1) * (t.spec_.l_max + 1), MatrixXd());
    Eigen::VectorXd row(P);
    for (int l = 0; l <= t.spec_.l_max; ++l)
      for (int l1 = l; l1 <= t.spec_.l_max; ++l1) {
        MatrixXd& b = t.blocks_[l * (t.spec_.l_max + 1) + l1];
        b.resize(P, P);
        for (int p = 0; p < P; ++p) {
          f.read(reinterpret_cast<char*>(row.data()), sizeof(double) * P);
          b.row(p) = row;
        }
      }
    if (!f) throw std::runtime_error("tensor cache: truncated file");
    return t;
  }

 private:
  static std::pair<int, int> unpair(int p) {
    const int np = int((std::sqrt(8.0 * p + 1.0) - 1.0) / 2.0);
    int b = np;
    while (b * (b + 1) / 2 > p) --b;
    while ((b + 1) * (b + 2) / 2 <= p) ++b;
    return {p - b * (b + 1) / 2, b};
  }

  template <class W>
  static void run_chunked(W&& worker, int total, int threads) {
    if (threads <= 1 || total < 16) {
      worker(0, total);
      return;
    }
    std::vector<std::thread> pool;
    const int chunk = (total + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = t * chunk, e = std::min(total, b + chunk);
      if (b >= e) break;
      pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  BasisSpec spec_;
  std::vector<MatrixXd> blocks_;
  long quad_fallbacks_ = 0;
};

// CG-weighted pair-channel tensor of the fluctuation equations; entries are
// assembled on demand from the four-l integral.
struct CoupledTensor {
  const Basis* basis = nullptr;
  int L = 0;

  static double cg_weight(int l, int lp, int L) {
    return clebsch_gordan(l, 0, lp, 0, L, 0) *
           std::sqrt((2.0 * l + 1.0) * (2.0 * lp + 1.0) / (2.0 * L + 1.0));
  }

  double operator()(int l, int lp, int l1, int l1p, int n, int np, int n1, int n1p,
                    double a_s) const {
    const double w = cg_weight(l, lp, L) * cg_weight(l1, l1p, L);
    if (w == 0.0) return 0.0;
    return w * four_l_element(n, np, n1, n1p, l, lp, l1, l1p, a_s);
  }
};

inline double coupled_element(const Basis& basis, int L, int l, int lp, int l1, int l1p,
                              int n, int np, int n1, int n1p, double a_s) {
  return CoupledTensor{&basis, L}(l, lp, l1, l1p, n, np, n1, n1p, a_s);
}

}  // namespace gbec
