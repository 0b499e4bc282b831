#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "covrate/error.hpp"
#include "covrate/rng.hpp"

namespace covrate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kSymTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kMinTieTol = 1e-12;

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline bool is_symmetric(const Matrix& a, double tol = kSymTol) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.transpose()) <= tol * max_abs(a);
}

inline void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols())
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " is not square");
  if (!is_symmetric(a))
    throw Error(ErrorKind::NonSymmetric, std::string(what) + " is not symmetric");
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::DimensionMismatch, what);
}

/// Eigenvalues of a symmetric matrix in ascending order (no vectors).
inline Vector sym_eigenvalues(const Matrix& a) {
  if (a.size() == 0) return Vector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double spectral_norm_sym(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return sym_eigenvalues(a).cwiseAbs().maxCoeff();
}

/// A = Uᵀ·diag(values)·U with values descending and U row-orthonormal.
struct SymEig {
  Matrix U;
  Vector values;

  Matrix reconstruct() const { return U.transpose() * values.asDiagonal() * U; }
};

/// Sorted eigendecomposition. Each row of U is an eigenvector whose largest
/// magnitude entry is positive; equal eigenvalues keep the solver's order.
inline SymEig sym_eig_desc(const Matrix& a) {
  require_symmetric(a, "sym_eig_desc input");
  const Index n = a.rows();
  SymEig out{Matrix(n, n), Vector(n)};
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  const Vector& vals = es.eigenvalues();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return vals(i) > vals(j); });

  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    Vector v = es.eigenvectors().col(src);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.U.row(k) = v.transpose();
    out.values(k) = vals(src);
  }
  return out;
}

/// Symmetric positive-definite matrix, validated at construction.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m) {
    require_symmetric(m, "SpdMatrix");
    m_ = symmetrize(m);
    if (m_.rows() == 0) throw Error(ErrorKind::NotSpd, "empty matrix");
    const Vector ev = sym_eigenvalues(m_);
    if (!(ev(ev.size() - 1) > 0.0) || !(ev(0) > kPsdTol * ev(ev.size() - 1)))
      throw Error(ErrorKind::NotSpd, "smallest eigenvalue " + std::to_string(ev(0)) +
                                         " not above tolerance (largest " +
                                         std::to_string(ev(ev.size() - 1)) + ")");
  }

  static bool is_spd(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0 || !is_symmetric(m)) return false;
    const Vector ev = sym_eigenvalues(m);
    return ev(ev.size() - 1) > 0.0 && ev(0) > kPsdTol * ev(ev.size() - 1);
  }

  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }
  Index dim() const { return m_.rows(); }
  double log_det() const { return 2.0 * Eigen::LLT<Matrix>(m_).matrixL().toDenseMatrix().diagonal().array().log().sum(); }

 private:
  Matrix m_;
};

/// PSD relaxation: smallest eigenvalue ≥ −ε_psd·largest.
inline bool is_psd(const Matrix& m, double tol = kPsdTol) {
  if (m.rows() != m.cols() || !is_symmetric(m)) return false;
  if (m.size() == 0) return true;
  const Vector ev = sym_eigenvalues(m);
  return ev(0) >= -tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
}

/// log|A| for symmetric positive-definite A via Cholesky.
inline double log_det_spd(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotSpd, "log_det of non-SPD matrix");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotSpd, "inverse of non-SPD matrix");
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

/// Pseudo-inverse of a symmetric PSD matrix; eigenvalues at or below
/// rel_tol·largest are treated as zero.
inline Matrix psd_pinv(const Matrix& a, double rel_tol = kPsdTol) {
  if (a.size() == 0) return a;
  const SymEig e = sym_eig_desc(symmetrize(a));
  const double cut = rel_tol * std::max(e.values.cwiseAbs().maxCoeff(), 0.0);
  Vector inv = Vector::Zero(e.values.size());
  for (Index i = 0; i < inv.size(); ++i)
    if (e.values(i) > cut && e.values(i) > 0.0) inv(i) = 1.0 / e.values(i);
  return symmetrize(e.U.transpose() * inv.asDiagonal() * e.U);
}

inline SpdMatrix principal_sqrt(const SpdMatrix& a) {
  const SymEig e = sym_eig_desc(a.matrix());
  return SpdMatrix(symmetrize(e.U.transpose() * e.values.cwiseSqrt().asDiagonal() * e.U));
}

inline Matrix inverse_principal_sqrt(const SpdMatrix& a) {
  const SymEig e = sym_eig_desc(a.matrix());
  return symmetrize(e.U.transpose() * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.U);
}

/// Joint diagonalizer of an ordered SPD pair (S1, S2):
///   V·S1·Vᵀ = diag(lambda),  V·S2·Vᵀ = diag(lambda_prime),  det V = +1,
/// built as V = diag(lambda)^{1/2}·W·S1^{-1/2}, where W holds the eigenvectors
/// of S1^{-1/2}·S2·S1^{-1/2}. Both spectra come out descending.
struct JointDiag {
  Matrix V;
  Vector lambda;
  Vector lambda_prime;
  Matrix V_inv;  // S1^{1/2}·Wᵀ·diag(lambda)^{-1/2}
  Matrix U;      // eigenvectors of S1: S1 = Uᵀ·diag(lambda)·U

  Vector gamma() const { return lambda_prime.cwiseQuotient(lambda); }

  /// true where min(λᵢ, λ′ᵢ) is taken from the first matrix.
  std::vector<bool> min_is_first() const {
    std::vector<bool> out(static_cast<std::size_t>(lambda.size()));
    for (Index i = 0; i < lambda.size(); ++i)
      out[static_cast<std::size_t>(i)] = lambda(i) <= lambda_prime(i) * (1.0 + kMinTieTol);
    return out;
  }

  Vector min_values() const { return lambda.cwiseMin(lambda_prime); }

  /// V⁻¹·diag(values)·V⁻ᵀ
  Matrix congruence_inverse(const Vector& values) const {
    return symmetrize(V_inv * values.asDiagonal() * V_inv.transpose());
  }
};

/// Same construction on matrices the caller has already validated as positive
/// definite (possibly under a looser threshold than SpdMatrix enforces).
inline JointDiag joint_diagonalize_unchecked(const Matrix& s1, const Matrix& s2) {
  require_same_dim(s1, s2, "joint_diagonalize: dimensions differ");
  const SymEig e1 = sym_eig_desc(s1);
  const Vector sqrt_l = e1.values.cwiseSqrt();
  const Matrix s1_isqrt = symmetrize(e1.U.transpose() * sqrt_l.cwiseInverse().asDiagonal() * e1.U);
  const Matrix s1_sqrt = symmetrize(e1.U.transpose() * sqrt_l.asDiagonal() * e1.U);

  const Matrix whitened = symmetrize(s1_isqrt * symmetrize(s2) * s1_isqrt);
  SymEig e2 = sym_eig_desc(whitened);
  if (e2.U.determinant() < 0) e2.U.row(e2.U.rows() - 1) *= -1.0;

  JointDiag jd;
  jd.lambda = e1.values;
  jd.lambda_prime = e1.values.cwiseProduct(e2.values);
  jd.V = sqrt_l.asDiagonal() * e2.U * s1_isqrt;
  jd.V_inv = s1_sqrt * e2.U.transpose() * sqrt_l.cwiseInverse().asDiagonal();
  jd.U = e1.U;
  return jd;
}

inline JointDiag joint_diagonalize(const SpdMatrix& s1, const SpdMatrix& s2) {
  if (s1.dim() != s2.dim()) throw Error(ErrorKind::DimensionMismatch, "joint_diagonalize: dimensions differ");
  return joint_diagonalize_unchecked(s1.matrix(), s2.matrix());
}

/// min(S1, S2) = V⁻¹·diag(min(λᵢ, λ′ᵢ))·V⁻ᵀ
inline SpdMatrix matrix_min(const SpdMatrix& s1, const SpdMatrix& s2) {
  const JointDiag jd = joint_diagonalize(s1, s2);
  return SpdMatrix(jd.congruence_inverse(jd.min_values()));
}

/// A ⪯ B: smallest eigenvalue of (B − A) ≥ −tol·‖B‖₂.
inline bool psd_leq(const Matrix& a, const Matrix& b, double tol = 1e-9) {
  require_same_dim(a, b, "psd_leq: dimensions differ");
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "psd_leq: not square");
  if (a.size() == 0) return true;
  const double lo = sym_eigenvalues(b - a)(0);
  return lo >= -tol * spectral_norm_sym(b);
}

struct DetSearchResult {
  double best = 0.0;           // max over the search and the min(S1,S2) candidate
  double search_best = 0.0;    // randomized search alone
  double candidate = 0.0;      // |min(S1,S2)| after boundary feasibility scaling
};

/// Randomized feasible search for max |Σ| subject to Σ ⪯ S1 and Σ ⪯ S2.
/// Feasibility is checked in Cholesky-whitened coordinates and never uses
/// joint_diagonalize. The first tenth of the budget scales Wishart draws onto
/// the feasible boundary. The rest is an adaptive local search in the
/// incumbent's Cholesky frame whose probes are repaired by clipping the
/// whitened spectrum at 1, first against S1 and then against S2.
inline DetSearchResult constrained_det_search(const SpdMatrix& s1, const SpdMatrix& s2, std::int64_t trials,
                                              std::uint64_t seed) {
  if (s1.dim() != s2.dim()) throw Error(ErrorKind::DimensionMismatch, "constrained_det_search: dimensions differ");
  const Index n = s1.dim();
  if (n > 4) throw Error(ErrorKind::InvalidParam, "constrained_det_search supports n <= 4");
  if (trials < 0) throw Error(ErrorKind::InvalidParam, "negative trial count");

  using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
  const Small l1 = Eigen::LLT<Matrix>(s1.matrix()).matrixL().toDenseMatrix();
  const Small l2 = Eigen::LLT<Matrix>(s2.matrix()).matrixL().toDenseMatrix();
  const Small l1_inv = l1.inverse(), l2_inv = l2.inverse();
  Eigen::SelfAdjointEigenSolver<Small> es(n);

  auto top_whitened = [&](const Small& li, const Small& p) {
    es.compute(li * p * li.transpose(), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(n - 1);
  };
  auto boundary_scale = [&](const Small& p) { return 1.0 / std::max(top_whitened(l1_inv, p), top_whitened(l2_inv, p)); };
  // L·min(L⁻¹·p·L⁻ᵀ, I)·Lᵀ ⪯ min(p, L·Lᵀ) in the Loewner order.
  auto clip = [&](const Small& l, const Small& li, const Small& p) {
    es.compute(li * p * li.transpose());
    const Small v = es.eigenvectors();
    const Small m = v * es.eigenvalues().cwiseMin(1.0).asDiagonal() * v.transpose();
    const Small out = l * m * l.transpose();
    return Small(0.5 * (out + out.transpose()));
  };
  auto feasible = [&](const Small& p) {
    return top_whitened(l1_inv, p) <= 1.0 + 1e-12 && top_whitened(l2_inv, p) <= 1.0 + 1e-12;
  };

  DetSearchResult out;
  {
    const Small cand = matrix_min(s1, s2).matrix();
    const double t = std::min(1.0, boundary_scale(cand));
    out.candidate = std::pow(t, static_cast<double>(n)) * cand.determinant();
  }

  Rng rng(seed, 0);
  Small best = Small::Identity(n, n);
  best *= boundary_scale(best);
  double best_det = best.determinant();
  auto offer = [&](const Small& p) {
    if (Eigen::LLT<Small>(p).info() != Eigen::Success || !feasible(p)) return false;
    const double d = p.determinant();
    if (!(d > best_det) || !std::isfinite(d)) return false;
    best_det = d;
    best = p;
    return true;
  };

  const std::int64_t explore = trials / 10;
  double step = 0.3;
  for (std::int64_t k = 0; k < trials; ++k) {
    Small g(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    if (k < explore) {
      const Small p = g * g.transpose();
      if (Eigen::LLT<Small>(p).info() == Eigen::Success) offer(Small(boundary_scale(p) * p));
      continue;
    }
    const Small e = 0.5 * (g + g.transpose());
    const Small lb = Eigen::LLT<Small>(best).matrixL().toDenseMatrix();
    // Push outwards so the repair has something to cut back to the boundary.
    const Small p = (1.0 + step) * lb * (Small::Identity(n, n) + step * e) * lb.transpose();
    bool improved = false;
    if (Eigen::LLT<Small>(p).info() == Eigen::Success) {
      improved = offer(clip(l2, l2_inv, clip(l1, l1_inv, p)));
      improved = offer(Small(boundary_scale(p) * p)) || improved;
    }
    if (improved) {
      step = std::min(step * 1.5, 1.0);
    } else {
      step *= 0.97;
      if (step < 1e-9) step = 0.1;
    }
  }
  out.search_best = trials > 0 ? best_det : 0.0;
  out.best = std::max(out.search_best, out.candidate);
  return out;
}

inline double constrained_det_oracle(const SpdMatrix& s1, const SpdMatrix& s2, std::int64_t trials,
                                     std::uint64_t seed) {
  return constrained_det_search(s1, s2, trials, seed).best;
}

}  // namespace covrate
