#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

#ifdef GBEC_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace gbec {

using Complex = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;

struct EigResult {
  VectorXcd values;
  MatrixXcd vectors;  // columns
};

// Dense non-Hermitian eigendecomposition (right eigenvectors).
inline EigResult eig_dense(const MatrixXcd& a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("eig_dense: square matrix required");
  EigResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
#ifdef GBEC_HAVE_LAPACKE
  MatrixXcd work = a;
  const int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', 'V', n,
      reinterpret_cast<lapack_complex_double*>(work.data()), n,
      reinterpret_cast<lapack_complex_double*>(out.values.data()), nullptr, 1,
      reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n);
  if (info != 0) throw std::runtime_error("zgeev failed");
#else
  Eigen::ComplexEigenSolver<MatrixXcd> es(a, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("eig failed");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
#endif
  return out;
}

// Bogoliubov (symplectic) eigenpairs of a positive-definite bosonic block
//   H = [[E, D], [D*, E*]],  E Hermitian, D symmetric,
// via Colpa's Cholesky construction. On success the columns of (u; v) carry
// the positive-norm quasiparticle modes: S = [[u, v*],[v, u*]] satisfies
// S sigma_z S^dag = sigma_z and S^dag H S = diag(d, d).
struct BogoliubovBlock {
  MatrixXcd u, v;
  VectorXd d;  // ascending
};

inline BogoliubovBlock colpa_diagonalize(const MatrixXcd& H) {
  const int twoM = static_cast<int>(H.rows());
  const int M = twoM / 2;
  Eigen::LLT<MatrixXcd> llt(H);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("colpa: block not positive definite");
  MatrixXcd L = llt.matrixL();
  VectorXd sz(twoM);
  sz.head(M).setOnes();
  sz.tail(M).setConstant(-1.0);
  MatrixXcd W = L.adjoint() * sz.asDiagonal() * L;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es((W + W.adjoint()) / 2.0);
  if (es.info() != Eigen::Success) throw std::runtime_error("colpa: eigh failed");

  // Positive half of the spectrum, ascending.
  int npos = 0;
  for (int i = 0; i < twoM; ++i)
    if (es.eigenvalues()[i] > 0) ++npos;
  if (npos != M) throw std::runtime_error("colpa: spectrum not symmetric");
  MatrixXcd Up(twoM, M);
  VectorXd lam(M);
  int j = 0;
  for (int i = 0; i < twoM; ++i) {
    if (es.eigenvalues()[i] > 0) {
      lam[j] = es.eigenvalues()[i];
      Up.col(j) = es.eigenvectors().col(i);
      ++j;
    }
  }
  MatrixXcd Sp = L.adjoint().triangularView<Eigen::Upper>().solve(Up);
  for (int s = 0; s < M; ++s) Sp.col(s) *= std::sqrt(lam[s]);
  BogoliubovBlock out;
  out.u = Sp.topRows(M);
  out.v = Sp.bottomRows(M);
  out.d = lam;
  return out;
}

}  // namespace gbec
