#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbec/basis.hpp"
#include "gbec/cg.hpp"
#include "gbec/ground.hpp"
#include "gbec/linalg.hpp"
#include "gbec/state.hpp"

namespace gbec {

// Pair channel (la <= lb) of two Bogoliubov excitations coupled to total L.
struct PairChannel {
  int la = 0, lb = 0;
  int offset = 0;  // first pair index within the 2PE block
  int count = 0;
  double cgw = 0;  // C^{L0}_{la 0 lb 0} sqrt((2la+1)(2lb+1)/(2L+1))
};

// Linear-response operator of one total-angular-momentum sector acting on the
// stacked amplitudes (d_beta, d_beta*, d_xi, d_xi*). Pair amplitudes live on
// the symmetric subspace: unordered channel pairs with multiplicity weights.
struct SectorOperator {
  int L = 0;
  int dim = 0;
  int n1pe = 0;  // per conjugation block
  int n2pe = 0;
  std::vector<PairChannel> channels;
  MatrixXcd matrix;
  VectorXd metric;  // diagonal of the sector metric K

  int nstates = 0;  // n_cut + 1

  // index helpers
  int b_off() const { return 0; }
  int bbar_off() const { return n1pe; }
  int x_off() const { return 2 * n1pe; }
  int xbar_off() const { return 2 * n1pe + n2pe; }

  std::pair<int, int> pair_of(const PairChannel& c, int p) const {
    if (c.la < c.lb) return {p / nstates, p % nstates};
    // triangular (s <= s')
    int sp = int((std::sqrt(8.0 * p + 1.0) - 1.0) / 2.0);
    while (sp * (sp + 1) / 2 > p) --sp;
    while ((sp + 1) * (sp + 2) / 2 <= p) ++sp;
    return {p - sp * (sp + 1) / 2, sp};
  }
  double pair_multiplicity(const PairChannel& c, int p) const {
    if (c.la < c.lb) return 2.0;
    const auto [s, sp] = pair_of(c, p);
    return s == sp ? 1.0 : 2.0;
  }
};

enum class ModeLabel { goldstone, dipole, breathing, other };

inline const char* to_string(ModeLabel l) {
  switch (l) {
    case ModeLabel::goldstone: return "goldstone";
    case ModeLabel::dipole: return "dipole";
    case ModeLabel::breathing: return "breathing";
    default: return "other";
  }
}

struct ModeRecord {
  int L = 0;
  double omega = 0;
  double weight_1pe = 0;
  double weight_2pe = 0;
  int degeneracy = 1;
  ModeLabel label = ModeLabel::other;
  VectorXcd amplitudes;  // full sector vector
};

struct SectorSpectrum {
  std::vector<ModeRecord> modes;       // positive-norm branch, ascending omega
  std::vector<ModeRecord> zero_modes;  // |omega| below the zero threshold
  std::vector<double> zero_mode_overlaps;  // U(1)-generator overlap per zero mode
  bool unstable = false;
  double max_imag = 0;
};

namespace detail {

inline int triangular_count(int n) { return n * (n + 1) / 2; }

}  // namespace detail

inline SectorOperator assemble_sector(int L, const GaussianState& ground,
                                      const MeanFieldBlocks& mf,
                                      const BogoliubovBasis& bogo, const Basis& basis,
                                      double a_s) {
  const BasisSpec& spec = ground.spec;
  const int S = spec.n_states();
  if (L < 0 || L > spec.l_max)
    throw std::domain_error("assemble_sector: L outside the basis l range");

  SectorOperator op;
  op.L = L;
  op.nstates = S;
  const auto [nc, nd] = particle_numbers(ground);
  const bool has_1pe = nc / std::max(nc + nd, 1e-300) > 1e-12;
  op.n1pe = has_1pe ? S : 0;

  // CG-allowed unordered channels
  int off = 0;
  for (int la = 0; la <= spec.l_max; ++la)
    for (int lb = la; lb <= spec.l_max; ++lb) {
      const double cg = clebsch_gordan(la, 0, lb, 0, L, 0);
      if (cg == 0.0) continue;
      PairChannel c;
      c.la = la;
      c.lb = lb;
      c.cgw = cg * std::sqrt((2.0 * la + 1.0) * (2.0 * lb + 1.0) / (2.0 * L + 1.0));
      c.offset = off;
      c.count = (la == lb) ? detail::triangular_count(S) : S * S;
      off += c.count;
      op.channels.push_back(c);
    }
  if (op.channels.empty())
    throw std::runtime_error("assemble_sector: no CG-allowed pair channels");
  op.n2pe = off;
  op.dim = 2 * op.n1pe + 2 * op.n2pe;
  op.matrix = MatrixXcd::Zero(op.dim, op.dim);

  // Bogoliubov mode functions at the quartic quadrature nodes
  const RadialRule& rule = basis.quart_rule();
  const int Q = int(rule.r.size());
  std::vector<MatrixXcd> Uq(spec.l_max + 1), Vq(spec.l_max + 1);
  for (int l = 0; l <= spec.l_max; ++l) {
    Uq[l] = basis.quart_table(l).cast<Complex>() * bogo.u[l];
    Vq[l] = basis.quart_table(l).cast<Complex>() * bogo.v[l];
  }
  const VectorXcd phi0 = basis.quart_table(0).cast<Complex>() * ground.beta;

  // per-channel pair "mode products" over nodes: rows = pairs, cols = nodes
  struct ChannelTables {
    MatrixXcd P, A, B;  // (count x Q)
    VectorXd mult;      // unordered multiplicity per pair
  };
  std::vector<ChannelTables> tabs(op.channels.size());
  for (size_t ci = 0; ci < op.channels.size(); ++ci) {
    const PairChannel& c = op.channels[ci];
    ChannelTables& t = tabs[ci];
    t.P.resize(c.count, Q);
    t.A.resize(c.count, Q);
    t.B.resize(c.count, Q);
    t.mult.resize(c.count);
    for (int p = 0; p < c.count; ++p) {
      const auto [s, sp] = op.pair_of(c, p);
      t.mult[p] = op.pair_multiplicity(c, p);
      for (int q = 0; q < Q; ++q) {
        const Complex ua = Uq[c.la](q, s), ub = Uq[c.lb](q, sp);
        const Complex va = Vq[c.la](q, s), vb = Vq[c.lb](q, sp);
        t.P(p, q) = ua * vb + va * ub;
        t.A(p, q) = ua * ub;
        t.B(p, q) = va * vb;
      }
    }
  }

  const VectorXd& W = rule.w;
  const Complex isqrt2(0.0, std::sqrt(2.0));

  // 1PE block
  if (has_1pe) {
    op.matrix.block(op.b_off(), op.b_off(), S, S) = mf.E_blocks[L];
    op.matrix.block(op.b_off(), op.bbar_off(), S, S) = mf.Delta_blocks[L];
  }

  // 2PE diagonal and quartic couplings
  for (size_t ci = 0; ci < op.channels.size(); ++ci) {
    const PairChannel& cr = op.channels[ci];
    const int ro = op.x_off() + cr.offset;
    for (int p = 0; p < cr.count; ++p) {
      const auto [s, sp] = op.pair_of(cr, p);
      op.matrix(ro + p, ro + p) += bogo.D[cr.la][s] + bogo.D[cr.lb][sp];
    }
    for (size_t cj = 0; cj < op.channels.size(); ++cj) {
      const PairChannel& cc = op.channels[cj];
      const int co = op.x_off() + cc.offset;
      const double pref = a_s * cr.cgw * cc.cgw;
      if (pref == 0.0) continue;
      const MatrixXcd Pr = tabs[ci].P.conjugate();
      const MatrixXcd Ar = tabs[ci].A.conjugate();
      const MatrixXcd Br = tabs[ci].B.conjugate();
      // d_xi columns
      MatrixXcd blk = Pr * W.asDiagonal() * tabs[cj].P.transpose() +
                      Ar * W.asDiagonal() * tabs[cj].A.transpose() +
                      Br * W.asDiagonal() * tabs[cj].B.transpose();
      blk *= pref;
      blk *= tabs[cj].mult.asDiagonal();
      op.matrix.block(ro, co, cr.count, cc.count) += blk;
      // d_xi* columns
      MatrixXcd blk2 = Pr * W.asDiagonal() * tabs[cj].P.adjoint() +
                       Ar * W.asDiagonal() * tabs[cj].B.adjoint() +
                       Br * W.asDiagonal() * tabs[cj].A.adjoint();
      blk2 *= -pref;
      blk2 *= tabs[cj].mult.asDiagonal();
      op.matrix.block(ro, op.xbar_off() + cc.offset, cr.count, cc.count) += blk2;
    }
  }

  // 1PE <-> 2PE couplings
  if (has_1pe) {
    const MatrixXcd RL = basis.quart_table(L).cast<Complex>();  // (Q x S)
    for (size_t ci = 0; ci < op.channels.size(); ++ci) {
      const PairChannel& c = op.channels[ci];
      const double cw = a_s * c.cgw;
      if (cw == 0.0) continue;
      // row-side mode sums weighted by phi0 at nodes
      const VectorXcd wphi = W.cast<Complex>().cwiseProduct(phi0);
      // d_xi rows, d_beta / d_beta* columns
      const MatrixXcd rowPA = (tabs[ci].P + tabs[ci].A).conjugate();
      const MatrixXcd rowPB = (tabs[ci].P + tabs[ci].B).conjugate();
      const MatrixXcd toB = -isqrt2 * cw * (rowPA * wphi.asDiagonal() * RL);
      const MatrixXcd toBbar = -isqrt2 * cw * (rowPB * wphi.asDiagonal() * RL);
      op.matrix.block(op.x_off() + c.offset, op.b_off(), c.count, S) += toB;
      op.matrix.block(op.x_off() + c.offset, op.bbar_off(), c.count, S) += toBbar;
      // d_beta rows, d_xi / d_xi* columns
      const MatrixXcd colPA = tabs[ci].P + tabs[ci].A;
      const MatrixXcd colPB = (tabs[ci].P + tabs[ci].B).conjugate();
      MatrixXcd fromX = isqrt2 * cw * (RL.transpose() * wphi.asDiagonal() * colPA.transpose());
      MatrixXcd fromXbar =
          -isqrt2 * cw * (RL.transpose() * wphi.asDiagonal() * colPB.transpose());
      fromX *= tabs[ci].mult.asDiagonal();
      fromXbar *= tabs[ci].mult.asDiagonal();
      op.matrix.block(op.b_off(), op.x_off() + c.offset, S, c.count) += fromX;
      op.matrix.block(op.b_off(), op.xbar_off() + c.offset, S, c.count) += fromXbar;
    }
  }

  // conjugate rows: i d/dt w* = -conj(row applied with swapped blocks)
  const int nb = op.n1pe, nx = op.n2pe;
  auto fill_conjugate = [&](int row0, int rows, int src0) {
    // A[conj(row), col] = -conj(A[src, conj(col)])
    for (int blk = 0; blk < 4; ++blk) {
      const int offs[4] = {op.b_off(), op.bbar_off(), op.x_off(), op.xbar_off()};
      const int sizes[4] = {nb, nb, nx, nx};
      const int conj_of[4] = {1, 0, 3, 2};
      if (sizes[blk] == 0 || rows == 0) continue;
      op.matrix.block(row0, offs[blk], rows, sizes[blk]) =
          -op.matrix.block(src0, offs[conj_of[blk]], rows, sizes[blk]).conjugate();
    }
  };
  if (has_1pe) fill_conjugate(op.bbar_off(), nb, op.b_off());
  fill_conjugate(op.xbar_off(), nx, op.x_off());

  // sector metric
  op.metric = VectorXd::Zero(op.dim);
  for (int n = 0; n < nb; ++n) {
    op.metric[op.b_off() + n] = 1.0;
    op.metric[op.bbar_off() + n] = -1.0;
  }
  for (size_t ci = 0; ci < op.channels.size(); ++ci)
    for (int p = 0; p < op.channels[ci].count; ++p) {
      const double m = tabs[ci].mult[p];
      op.metric[op.x_off() + op.channels[ci].offset + p] = m;
      op.metric[op.xbar_off() + op.channels[ci].offset + p] = -m;
    }
  return op;
}

// convenience overload: builds the mean field internally
inline SectorOperator assemble_sector(int L, const GaussianState& ground,
                                      const BogoliubovBasis& bogo, const Basis& basis,
                                      const InteractionTensor& tensors, double a_s) {
  const MeanFieldBlocks mf = build_mean_field(ground, tensors, a_s);
  return assemble_sector(L, ground, mf, bogo, basis, a_s);
}

inline ModeRecord classify_mode(const VectorXcd& w, double omega,
                                const SectorOperator& op) {
  ModeRecord rec;
  rec.L = op.L;
  rec.omega = omega;
  rec.degeneracy = 2 * op.L + 1;
  double w1 = 0, wtot = 0;
  for (int i = 0; i < op.dim; ++i) {
    const double m = std::abs(op.metric[i]);
    const double a = m * std::norm(w[i]);
    wtot += a;
    if (i < 2 * op.n1pe) w1 += a;
  }
  rec.weight_1pe = (wtot > 0) ? w1 / wtot : 0.0;
  rec.weight_2pe = 1.0 - rec.weight_1pe;
  rec.amplitudes = w;
  rec.label = ModeLabel::other;
  return rec;
}

// U(1)-generator direction of the sector (phase rotation of beta and of the
// anomalous covariance), used to identify the Goldstone zero mode.
inline VectorXcd u1_generator(const SectorOperator& op, const GaussianState& ground,
                              const BogoliubovBasis& bogo) {
  const int S = op.nstates;
  VectorXcd z = VectorXcd::Zero(op.dim);
  if (op.n1pe > 0) {
    z.segment(op.b_off(), S) = Complex(0, 1) * ground.beta;
    z.segment(op.bbar_off(), S) = Complex(0, -1) * ground.beta.conjugate();
  }
  // covariance part: delta Gamma = i theta [sigma_z, Gamma] corresponds to
  // d_xi = 2 (S0^{-1} [[0, F], [-F*, 0]] S0^{-dag})_{12}; l-diagonal, L=0 only.
  if (op.L == 0) {
    for (const PairChannel& c : op.channels) {
      if (c.la != c.lb) continue;
      const int l = c.la;
      MatrixXcd Smat(2 * S, 2 * S), Zblk = MatrixXcd::Zero(2 * S, 2 * S);
      Smat.topLeftCorner(S, S) = bogo.u[l];
      Smat.topRightCorner(S, S) = bogo.v[l].conjugate();
      Smat.bottomLeftCorner(S, S) = bogo.v[l];
      Smat.bottomRightCorner(S, S) = bogo.u[l].conjugate();
      MatrixXcd Sinv = Smat.adjoint();
      Sinv.topRightCorner(S, S) *= -1.0;
      Sinv.bottomLeftCorner(S, S) *= -1.0;
      Zblk.topRightCorner(S, S) = ground.F[l];
      Zblk.bottomLeftCorner(S, S) = -ground.F[l].conjugate();
      const MatrixXcd xi = 2.0 * (Sinv * Zblk * Sinv.adjoint()).topRightCorner(S, S);
      for (int p = 0; p < c.count; ++p) {
        const auto [s1, s2] = op.pair_of(c, p);
        const Complex v = (xi(s1, s2) + xi(s2, s1)) / 2.0;
        z[op.x_off() + c.offset + p] = v;
        z[op.xbar_off() + c.offset + p] = std::conj(v);
      }
    }
  }
  return z;
}

inline double goldstone_overlap(const VectorXcd& w, const SectorOperator& op,
                                const GaussianState& ground,
                                const BogoliubovBasis& bogo) {
  const VectorXcd z = u1_generator(op, ground, bogo);
  const double zn = z.norm(), wn = w.norm();
  if (zn == 0 || wn == 0) return 0.0;
  return std::abs(z.dot(w)) / (zn * wn);
}

inline SectorSpectrum diagonalize_sector(const SectorOperator& op,
                                         const GaussianState& ground,
                                         const BogoliubovBasis& bogo,
                                         double zero_tol = 1e-3) {
  const EigResult eig = eig_dense(op.matrix);
  SectorSpectrum out;
  for (int i = 0; i < op.dim; ++i) {
    const Complex lam = eig.values[i];
    out.max_imag = std::max(out.max_imag, std::abs(lam.imag()));
    const VectorXcd w = eig.vectors.col(i);
    if (std::abs(lam) < zero_tol) {
      ModeRecord rec = classify_mode(w, lam.real(), op);
      rec.label = ModeLabel::goldstone;
      out.zero_modes.push_back(rec);
      out.zero_mode_overlaps.push_back(goldstone_overlap(w, op, ground, bogo));
      continue;
    }
    double knorm = 0;
    for (int k = 0; k < op.dim; ++k) knorm += op.metric[k] * std::norm(w[k]);
    if (knorm <= 1e-8 * double(op.dim)) continue;  // negative-norm partner
    out.modes.push_back(classify_mode(w, lam.real(), op));
  }
  out.unstable = out.max_imag > 1e-6;
  std::sort(out.modes.begin(), out.modes.end(),
            [](const ModeRecord& a, const ModeRecord& b) { return a.omega < b.omega; });
  if (!out.modes.empty()) {
    if (op.L == 1) out.modes.front().label = ModeLabel::dipole;
    if (op.L == 0) out.modes.front().label = ModeLabel::breathing;
  }
  return out;
}

// delta n(r) profile (coefficient of Y_L0) of one mode on a radial grid.
inline VectorXcd density_fluctuation(const ModeRecord& mode, const SectorOperator& op,
                                     const GaussianState& ground,
                                     const BogoliubovBasis& bogo, const Basis& basis,
                                     const VectorXd& rgrid) {
  const int S = op.nstates;
  const BasisSpec& spec = ground.spec;
  const int nr = int(rgrid.size());
  VectorXcd out = VectorXcd::Zero(nr);
  const double y00 = 1.0 / std::sqrt(4.0 * M_PI);

  // pointwise tables
  std::vector<MatrixXcd> Ur(spec.l_max + 1), Vr(spec.l_max + 1);
  for (int l = 0; l <= spec.l_max; ++l) {
    MatrixXd R(nr, S);
    for (int i = 0; i < nr; ++i)
      for (int n = 0; n < S; ++n) R(i, n) = radial_eigenfunction(n, l, rgrid[i]);
    Ur[l] = R.cast<Complex>() * bogo.u[l];
    Vr[l] = R.cast<Complex>() * bogo.v[l];
  }
  MatrixXd RL(nr, S), R0(nr, S);
  for (int i = 0; i < nr; ++i)
    for (int n = 0; n < S; ++n) {
      RL(i, n) = radial_eigenfunction(n, op.L, rgrid[i]);
      R0(i, n) = radial_eigenfunction(n, 0, rgrid[i]);
    }

  if (op.n1pe > 0) {
    const VectorXcd phi0 = R0.cast<Complex>() * ground.beta;
    const VectorXcd dphi = RL.cast<Complex>() * mode.amplitudes.segment(op.b_off(), S);
    const VectorXcd dphis =
        RL.cast<Complex>() * mode.amplitudes.segment(op.bbar_off(), S);
    out += y00 * y00 * 4.0 * M_PI *
           (phi0.cwiseProduct(dphis) + phi0.conjugate().cwiseProduct(dphi)) /
           std::sqrt(4.0 * M_PI);
  }

  const Complex isqrt2(0.0, std::sqrt(2.0));
  for (const PairChannel& c : op.channels) {
    const double kappa = c.cgw / std::sqrt(4.0 * M_PI);
    for (int p = 0; p < c.count; ++p) {
      const auto [s1, s2] = op.pair_of(c, p);
      const double m = op.pair_multiplicity(c, p);
      const Complex xi = mode.amplitudes[op.x_off() + c.offset + p];
      const Complex xib = mode.amplitudes[op.xbar_off() + c.offset + p];
      for (int i = 0; i < nr; ++i) {
        const Complex uv = Ur[c.la](i, s1) * Vr[c.lb](i, s2) +
                           Ur[c.lb](i, s2) * Vr[c.la](i, s1);
        const Complex vu_conj = std::conj(Vr[c.la](i, s1)) * std::conj(Ur[c.lb](i, s2)) +
                                std::conj(Vr[c.lb](i, s2)) * std::conj(Ur[c.la](i, s1));
        out[i] += Complex(0, 1) * std::sqrt(2.0) * kappa * m *
                  (0.5 * uv * xi - 0.5 * vu_conj * xib);
      }
    }
  }
  return out;
}

}  // namespace gbec
