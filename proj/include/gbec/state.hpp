#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbec/basis.hpp"
#include "gbec/linalg.hpp"

namespace gbec {

// Variational Gaussian state in the projected basis: coherent amplitudes in
// the l=0 channel plus per-l covariance blocks. G^l is Hermitian, F^l
// symmetric; blocks are m-independent.
struct GaussianState {
  BasisSpec spec;
  VectorXcd beta;                // size n_cut+1
  std::vector<MatrixXcd> G, F;   // index l = 0..l_max
  double mu = 0.0;

  static GaussianState vacuum(const BasisSpec& spec, double mu = 0.0) {
    GaussianState s;
    s.spec = spec;
    const int M = spec.n_states();
    s.beta = VectorXcd::Zero(M);
    s.G.assign(spec.l_max + 1, MatrixXcd::Zero(M, M));
    s.F.assign(spec.l_max + 1, MatrixXcd::Zero(M, M));
    s.mu = mu;
    return s;
  }

  void validate() const {
    const int M = spec.n_states();
    if (beta.size() != M || int(G.size()) != spec.l_max + 1 || G.size() != F.size())
      throw std::domain_error("GaussianState: inconsistent dimensions");
    for (const auto& g : G)
      if (g.rows() != M || g.cols() != M)
        throw std::domain_error("GaussianState: bad block shape");
  }

  void symmetrize() {
    for (auto& g : G) g = ((g + g.adjoint()) / 2.0).eval();
    for (auto& f : F) f = ((f + f.transpose()) / 2.0).eval();
  }
};

// Covariance block Gamma^l = [[1 + 2G, 2F], [2F*, 1 + 2G^T]].
inline MatrixXcd gamma_block(const GaussianState& s, int l) {
  const int M = s.spec.n_states();
  MatrixXcd g(2 * M, 2 * M);
  g.topLeftCorner(M, M) = MatrixXcd::Identity(M, M) + 2.0 * s.G[l];
  g.topRightCorner(M, M) = 2.0 * s.F[l];
  g.bottomLeftCorner(M, M) = 2.0 * s.F[l].conjugate();
  g.bottomRightCorner(M, M) = MatrixXcd::Identity(M, M) + 2.0 * s.G[l].transpose();
  return g;
}

// |eig(sigma_z Gamma^l)| >= 1 - tol for every l (pure-state covariance bound).
inline bool is_physical(const GaussianState& s, double tol = 1e-8) {
  const int M = s.spec.n_states();
  for (int l = 0; l <= s.spec.l_max; ++l) {
    MatrixXcd sg = gamma_block(s, l);
    sg.bottomRows(M) *= -1.0;
    const EigResult e = eig_dense(sg);
    for (int i = 0; i < e.values.size(); ++i)
      if (std::abs(e.values[i]) < 1.0 - tol) return false;
  }
  return true;
}

namespace detail {

// Fold a matrix onto unordered pair indices so tensor contractions can use
// the symmetry-reduced storage: fold(X)[(c<=d)] = X_cd + X_dc (c<d) or X_cc.
inline VectorXcd fold_pairs(const MatrixXcd& x) {
  const int M = int(x.rows());
  VectorXcd out(InteractionTensor::pair_count(M));
  for (int d = 0; d < M; ++d)
    for (int c = 0; c <= d; ++c)
      out[InteractionTensor::pair_index(c, d)] = (c == d) ? x(c, c) : x(c, d) + x(d, c);
  return out;
}

// Y_{nn'} = sum_{P1} M^{l,l1}[pair(n,n'), P1] src[P1], mirrored to full shape.
inline MatrixXcd contract_block(const InteractionTensor& t, int l, int l1,
                                const VectorXcd& src) {
  const int M = t.spec().n_states();
  const MatrixXd& blk = (l <= l1) ? t.block(l, l1) : t.block(l1, l);
  VectorXcd y;
  if (l <= l1)
    y = blk * src;
  else
    y = blk.transpose() * src;
  MatrixXcd out(M, M);
  for (int d = 0; d < M; ++d)
    for (int c = 0; c <= d; ++c) {
      const Complex v = y[InteractionTensor::pair_index(c, d)];
      out(c, d) = v;
      out(d, c) = v;
    }
  return out;
}

}  // namespace detail

// Mean-field blocks and driving vector of a state.
struct MeanFieldBlocks {
  std::vector<MatrixXcd> E_blocks;      // Hermitian, includes -mu
  std::vector<MatrixXcd> Delta_blocks;  // symmetric
  VectorXcd eta;
  double energy = 0.0;  // grand-canonical value at the state's mu
};

inline MeanFieldBlocks build_mean_field(const GaussianState& s,
                                        const InteractionTensor& tensors,
                                        double a_s) {
  s.validate();
  if (!(tensors.spec() == s.spec))
    throw std::domain_error("build_mean_field: tensor/state basis mismatch");
  const int M = s.spec.n_states();
  const int L = s.spec.l_max;

  const MatrixXcd coh_n = s.beta * s.beta.adjoint();    // beta_n beta*_n'
  const MatrixXcd coh_a = s.beta * s.beta.transpose();  // beta_n beta_n'
  const VectorXcd coh_n_f = detail::fold_pairs(coh_n);
  const VectorXcd coh_a_f = detail::fold_pairs(coh_a);
  std::vector<VectorXcd> g_f(L + 1), f_f(L + 1);
  for (int l1 = 0; l1 <= L; ++l1) {
    g_f[l1] = detail::fold_pairs(s.G[l1]);
    f_f[l1] = detail::fold_pairs(s.F[l1]);
  }

  MeanFieldBlocks mf;
  mf.E_blocks.resize(L + 1);
  mf.Delta_blocks.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    MatrixXcd e_int = MatrixXcd::Zero(M, M), d_int = MatrixXcd::Zero(M, M);
    for (int l1 = 0; l1 <= L; ++l1) {
      const double w = (2.0 * l1 + 1.0) * a_s;
      VectorXcd srcE = w * g_f[l1];
      VectorXcd srcD = w * f_f[l1];
      if (l1 == 0) {
        srcE += a_s * coh_n_f;
        srcD += a_s * coh_a_f;
      }
      e_int += detail::contract_block(tensors, l, l1, srcE);
      d_int += detail::contract_block(tensors, l, l1, srcD);
    }
    mf.E_blocks[l] = 2.0 * e_int;
    for (int n = 0; n < M; ++n) mf.E_blocks[l](n, n) += eigenenergy(n, l, s.mu);
    mf.Delta_blocks[l] = d_int;
  }

  // eta_n = eps_n0 beta_n + sum M^{0,l1}(2l1+1)[(coh delta_{l1,0} + 2G)beta + F beta*];
  // the coherent cubic lives entirely in the normal channel (|phi|^2 phi).
  MatrixXcd h_eta = MatrixXcd::Zero(M, M);
  MatrixXcd f_eta = MatrixXcd::Zero(M, M);
  for (int l1 = 0; l1 <= L; ++l1) {
    VectorXcd src = 2.0 * (2.0 * l1 + 1.0) * a_s * g_f[l1];
    if (l1 == 0) src += a_s * coh_n_f;
    h_eta += detail::contract_block(tensors, 0, l1, src);
    f_eta += detail::contract_block(tensors, 0, l1,
                                    VectorXcd((2.0 * l1 + 1.0) * a_s * f_f[l1]));
  }
  mf.eta = f_eta * s.beta.conjugate() + h_eta * s.beta;
  for (int n = 0; n < M; ++n) mf.eta[n] += eigenenergy(n, 0, s.mu) * s.beta[n];

  // variational energy (grand canonical at the state's mu)
  double E = 0.0;
  for (int n = 0; n < M; ++n) E += eigenenergy(n, 0, s.mu) * std::norm(s.beta[n]);
  for (int l = 0; l <= L; ++l)
    for (int n = 0; n < M; ++n)
      E += (2.0 * l + 1.0) * eigenenergy(n, l, s.mu) * s.G[l](n, n).real();
  auto quad = [&](int l, int l1, const VectorXcd& x, const VectorXcd& y) {
    const MatrixXd& blk = (l <= l1) ? tensors.block(l, l1) : tensors.block(l1, l);
    if (l <= l1) return Complex(x.transpose() * (blk * y));
    return Complex(x.transpose() * (blk.transpose() * y));
  };
  Complex Eint = 0.0;
  Eint += 0.5 * a_s * quad(0, 0, coh_n_f, coh_n_f);
  for (int l1 = 0; l1 <= L; ++l1) {
    const double w1 = 2.0 * l1 + 1.0;
    Eint += 2.0 * a_s * w1 * quad(0, l1, coh_n_f, g_f[l1]);
    Eint += a_s * w1 * quad(0, l1, coh_a_f.conjugate(), f_f[l1]).real();
    for (int l = 0; l <= L; ++l) {
      const double w = 2.0 * l + 1.0;
      Eint += a_s * w * w1 * quad(l, l1, g_f[l], g_f[l1]);
      Eint += 0.5 * a_s * w * w1 * quad(l, l1, f_f[l].conjugate(), f_f[l1]);
    }
  }
  mf.energy = E + Eint.real();
  return mf;
}

inline double total_energy(const GaussianState& s, const InteractionTensor& tensors,
                           double a_s) {
  return build_mean_field(s, tensors, a_s).energy;
}

// (N_c, N_d)
inline std::pair<double, double> particle_numbers(const GaussianState& s) {
  const double nc = s.beta.squaredNorm();
  double nd = 0.0;
  for (int l = 0; l <= s.spec.l_max; ++l)
    nd += (2.0 * l + 1.0) * s.G[l].trace().real();
  return {nc, nd};
}

inline double physical_energy(const GaussianState& s, const InteractionTensor& t,
                              double a_s) {
  const auto [nc, nd] = particle_numbers(s);
  return total_energy(s, t, a_s) + s.mu * (nc + nd);
}

// Var(N) for the Gaussian state (Wick).
inline double number_variance(const GaussianState& s) {
  double var = 0.0;
  const Complex bgb = (s.beta.adjoint() * (MatrixXcd::Identity(s.beta.size(), s.beta.size()) +
                                           2.0 * s.G[0]) * s.beta)(0, 0);
  var += bgb.real();
  const Complex bfb = (s.beta.adjoint() * s.F[0] * s.beta.conjugate())(0, 0);
  var += 2.0 * bfb.real();
  for (int l = 0; l <= s.spec.l_max; ++l) {
    const int M = s.spec.n_states();
    var += (2.0 * l + 1.0) *
           ((s.G[l] * (MatrixXcd::Identity(M, M) + s.G[l])).trace().real() +
            (s.F[l] * s.F[l].adjoint()).trace().real());
  }
  return var;
}

// Condensate width sqrt(<r^2>); per-particle by default so coherent and
// squeezed phases are directly comparable. per_particle=false returns the
// unnormalized sqrt of the r^2-weighted total density.
inline double width(const GaussianState& s, const Basis& basis, bool per_particle = true) {
  double r2 = 0.0;
  r2 += (s.beta.adjoint() * basis.r2_matrix(0).cast<Complex>() * s.beta)(0, 0).real();
  for (int l = 0; l <= s.spec.l_max; ++l)
    r2 += (2.0 * l + 1.0) * (s.G[l].cwiseProduct(basis.r2_matrix(l).cast<Complex>()))
                                .sum()
                                .real();
  if (!per_particle) return std::sqrt(std::max(r2, 0.0));
  const auto [nc, nd] = particle_numbers(s);
  const double N = nc + nd;
  if (N <= 0) throw std::domain_error("width: empty state");
  return std::sqrt(std::max(r2 / N, 0.0));
}

// Local second-order coherence g2(r) from the Wick expansion; throws on
// vanishing density.
inline double g2_local(const GaussianState& s, const Basis& basis, double r) {
  const double y00sq = 1.0 / (4.0 * M_PI);
  Complex phi = 0.0;
  for (int n = 0; n <= s.spec.n_cut; ++n)
    phi += s.beta[n] * basis.radial(n, 0, r);
  phi *= std::sqrt(y00sq);
  double Gd = 0.0;
  Complex Fd = 0.0;
  for (int l = 0; l <= s.spec.l_max; ++l) {
    VectorXd rv(s.spec.n_states());
    for (int n = 0; n <= s.spec.n_cut; ++n) rv[n] = basis.radial(n, l, r);
    const double wl = (2.0 * l + 1.0) * y00sq;
    Gd += wl * (rv.transpose().cast<Complex>() * s.G[l] * rv.cast<Complex>())(0, 0).real();
    Fd += wl * (rv.transpose().cast<Complex>() * s.F[l] * rv.cast<Complex>())(0, 0);
  }
  const double dens = std::norm(phi) + Gd;
  if (dens < 1e-12) throw std::domain_error("g2_local: vanishing density");
  const double num = std::norm(phi) * std::norm(phi) + 4.0 * std::norm(phi) * Gd +
                     2.0 * (std::conj(phi) * std::conj(phi) * Fd).real() + 2.0 * Gd * Gd +
                     std::norm(Fd);
  return num / (dens * dens);
}

struct SqueezedMode {
  VectorXd f;      // real mode amplitudes over n (l=0)
  double xi0 = 0;  // asinh(sqrt(N_d))
  double residual = 0;
};

inline SqueezedMode extract_squeezed_mode(const GaussianState& s) {
  const auto [nc, nd] = particle_numbers(s);
  if (nd < 1e-9) throw std::domain_error("extract_squeezed_mode: no squeezed component");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s.G[0]);
  const int M = s.spec.n_states();
  VectorXcd fc = es.eigenvectors().col(M - 1);
  // rotate the arbitrary eigenvector phase onto the real axis
  int imax = 0;
  fc.cwiseAbs().maxCoeff(&imax);
  fc *= std::abs(fc[imax]) / fc[imax];
  SqueezedMode out;
  out.f = fc.real();
  out.xi0 = std::asinh(std::sqrt(nd));
  out.residual = (s.G[0] - Complex(nd) * fc * fc.adjoint()).norm() / s.G[0].norm();
  return out;
}

// ---- snapshot serialization -------------------------------------------------

inline nlohmann::json state_to_json(const GaussianState& s, double a_s) {
  nlohmann::json j;
  j["n_cut"] = s.spec.n_cut;
  j["l_max"] = s.spec.l_max;
  j["mu"] = s.mu;
  j["a_s"] = a_s;
  auto cvec = [](const VectorXcd& v) {
    std::vector<double> out;
    out.reserve(2 * v.size());
    for (int i = 0; i < v.size(); ++i) {
      out.push_back(v[i].real());
      out.push_back(v[i].imag());
    }
    return out;
  };
  auto cmat = [](const MatrixXcd& m) {
    std::vector<double> out;
    out.reserve(2 * m.size());
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) {
        out.push_back(m(r, c).real());
        out.push_back(m(r, c).imag());
      }
    return out;
  };
  j["beta"] = cvec(s.beta);
  j["G"] = nlohmann::json::array();
  j["F"] = nlohmann::json::array();
  for (int l = 0; l <= s.spec.l_max; ++l) {
    j["G"].push_back(cmat(s.G[l]));
    j["F"].push_back(cmat(s.F[l]));
  }
  return j;
}

inline std::pair<GaussianState, double> state_from_json(const nlohmann::json& j) {
  BasisSpec spec{j.at("n_cut").get<int>(), j.at("l_max").get<int>()};
  GaussianState s = GaussianState::vacuum(spec, j.at("mu").get<double>());
  const double a_s = j.at("a_s").get<double>();
  const int M = spec.n_states();
  const auto b = j.at("beta").get<std::vector<double>>();
  if (int(b.size()) != 2 * M) throw std::runtime_error("snapshot: bad beta length");
  for (int n = 0; n < M; ++n) s.beta[n] = Complex(b[2 * n], b[2 * n + 1]);
  auto fill = [&](std::vector<MatrixXcd>& blocks, const nlohmann::json& arr) {
    for (int l = 0; l <= spec.l_max; ++l) {
      const auto v = arr.at(l).get<std::vector<double>>();
      if (int(v.size()) != 2 * M * M) throw std::runtime_error("snapshot: bad block length");
      for (int r = 0; r < M; ++r)
        for (int c = 0; c < M; ++c)
          blocks[l](r, c) = Complex(v[2 * (r * M + c)], v[2 * (r * M + c) + 1]);
    }
  };
  fill(s.G, j.at("G"));
  fill(s.F, j.at("F"));
  return {s, a_s};
}

inline void save_snapshot(const GaussianState& s, double a_s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path);
  f << state_to_json(s, a_s).dump(1) << "\n";
}

inline std::pair<GaussianState, double> load_snapshot(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path);
  nlohmann::json j;
  f >> j;
  return state_from_json(j);
}

}  // namespace gbec
