#pragma once

#include <algorithm>
#include <vector>

#include "covrate/spd.hpp"

namespace covrate {

using IndexSet = std::vector<Index>;

inline IndexSet index_range(Index begin, Index count) {
  IndexSet out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = begin + i;
  return out;
}

inline IndexSet index_union(IndexSet a, const IndexSet& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline Matrix select_block(const Matrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return out;
}

/// Symmetrize and clip negative eigenvalues to zero.
inline Matrix repair_psd(const Matrix& m) {
  Matrix s = symmetrize(m);
  if (s.size() == 0) return s;
  const SymEig e = sym_eig_desc(s);
  if (e.values.minCoeff() >= 0.0) return s;
  return symmetrize(e.U.transpose() * e.values.cwiseMax(0.0).asDiagonal() * e.U);
}

/// Schur complement Σ_t − Σ_tc·Σ_c⁻¹·Σ_ct of a joint covariance. An empty
/// conditioning set returns the unconditional block.
inline Matrix conditional_cov(const Matrix& joint, const IndexSet& target, const IndexSet& cond) {
  const Matrix stt = select_block(joint, target, target);
  if (cond.empty()) return repair_psd(stt);
  const Matrix scc = select_block(joint, cond, cond);
  if (!SpdMatrix::is_spd(symmetrize(scc)))
    throw Error(ErrorKind::SingularConditioningBlock, "conditioning block is not positive definite");
  const Matrix stc = select_block(joint, target, cond);
  Eigen::LLT<Matrix> llt(symmetrize(scc));
  return repair_psd(stt - stc * llt.solve(stc.transpose()));
}

/// Zero-mean jointly Gaussian (x, y, z) given by its covariance blocks.
/// n_z = 0 means no side information.
class JointGaussianModel {
 public:
  JointGaussianModel(Matrix sigma_x, Matrix sigma_y, Matrix sigma_xy, Matrix sigma_z = Matrix(0, 0),
                     Matrix sigma_xz = Matrix(), Matrix sigma_yz = Matrix())
      : sx_(std::move(sigma_x)), sy_(std::move(sigma_y)), sz_(std::move(sigma_z)), sxy_(std::move(sigma_xy)),
        sxz_(std::move(sigma_xz)), syz_(std::move(sigma_yz)) {
    const Index nx = sx_.rows(), ny = sy_.rows(), nz = sz_.rows();
    if (nx == 0 || ny == 0) throw Error(ErrorKind::InvalidModel, "x and y must be non-empty");
    if (sxz_.size() == 0) sxz_ = Matrix::Zero(nx, nz);
    if (syz_.size() == 0) syz_ = Matrix::Zero(ny, nz);
    require_symmetric(sx_, "Sigma_x");
    require_symmetric(sy_, "Sigma_y");
    if (nz > 0) require_symmetric(sz_, "Sigma_z");
    if (sxy_.rows() != nx || sxy_.cols() != ny || sxz_.rows() != nx || sxz_.cols() != nz || syz_.rows() != ny ||
        syz_.cols() != nz)
      throw Error(ErrorKind::DimensionMismatch, "cross-covariance block shapes do not match");
    if (!SpdMatrix::is_spd(sy_)) throw Error(ErrorKind::InvalidModel, "Sigma_y is not positive definite");
    if (nz > 0 && !SpdMatrix::is_spd(sz_)) throw Error(ErrorKind::InvalidModel, "Sigma_z is not positive definite");
    sx_ = symmetrize(sx_);
    sy_ = symmetrize(sy_);
    if (nz > 0) sz_ = symmetrize(sz_);
    if (!is_psd(joint())) throw Error(ErrorKind::InvalidModel, "joint covariance is not positive semidefinite");
  }

  Index n_x() const { return sx_.rows(); }
  Index n_y() const { return sy_.rows(); }
  Index n_z() const { return sz_.rows(); }

  const Matrix& Sigma_x() const { return sx_; }
  const Matrix& Sigma_y() const { return sy_; }
  const Matrix& Sigma_z() const { return sz_; }
  const Matrix& Sigma_xy() const { return sxy_; }
  const Matrix& Sigma_xz() const { return sxz_; }
  const Matrix& Sigma_yz() const { return syz_; }

  IndexSet x_idx() const { return index_range(0, n_x()); }
  IndexSet y_idx() const { return index_range(n_x(), n_y()); }
  IndexSet z_idx() const { return index_range(n_x() + n_y(), n_z()); }

  /// Covariance of the stacked vector (x, y, z).
  Matrix joint() const {
    const Index nx = n_x(), ny = n_y(), nz = n_z();
    Matrix j(nx + ny + nz, nx + ny + nz);
    j.block(0, 0, nx, nx) = sx_;
    j.block(0, nx, nx, ny) = sxy_;
    j.block(nx, 0, ny, nx) = sxy_.transpose();
    j.block(nx, nx, ny, ny) = sy_;
    if (nz > 0) {
      j.block(0, nx + ny, nx, nz) = sxz_;
      j.block(nx + ny, 0, nz, nx) = sxz_.transpose();
      j.block(nx, nx + ny, ny, nz) = syz_;
      j.block(nx + ny, nx, nz, ny) = syz_.transpose();
      j.block(nx + ny, nx + ny, nz, nz) = sz_;
    }
    return j;
  }

 private:
  Matrix sx_, sy_, sz_, sxy_, sxz_, syz_;
};

struct EstimatorMatrices {
  Matrix A;  // n_x × n_y
  Matrix B;  // n_x × n_z
};

/// x = A·y + B·z + n with n uncorrelated with (y, z).
inline EstimatorMatrices estimator_matrices(const JointGaussianModel& m) {
  const Matrix j = m.joint();
  const IndexSet obs = index_union(m.y_idx(), m.z_idx());
  const Matrix so = symmetrize(select_block(j, obs, obs));
  if (!SpdMatrix::is_spd(so))
    throw Error(ErrorKind::SingularObservationCovariance, "stacked (y,z) covariance is not positive definite");
  const Matrix cross = select_block(j, m.x_idx(), obs);
  const Matrix k = Eigen::LLT<Matrix>(so).solve(cross.transpose()).transpose();
  return {k.leftCols(m.n_y()), k.rightCols(m.n_z())};
}

struct ConditionalStats {
  Matrix Sigma_x_given_z;
  Matrix Sigma_x_given_yz;
  Matrix Sigma_y_given_z;
  Matrix A;
  Matrix B;
  Matrix Sigma_yprime_given_z;  // A·Σ_{y|z}·Aᵀ
  Matrix Sigma_xy_given_z;

  Index n_x() const { return Sigma_x_given_z.rows(); }
  Matrix P() const { return symmetrize(Sigma_x_given_z - Sigma_x_given_yz); }
};

/// Conditional statistics of the model. A and B are obtained by first
/// conditioning on z and then regressing on y|z, so a degenerate y|z (for
/// example z = y) yields A = 0 rather than an error.
inline ConditionalStats analyze(const JointGaussianModel& m) {
  const Matrix j = m.joint();
  ConditionalStats s;
  s.Sigma_x_given_z = conditional_cov(j, m.x_idx(), m.z_idx());
  s.Sigma_y_given_z = conditional_cov(j, m.y_idx(), m.z_idx());

  Matrix sxy_z = m.Sigma_xy();
  if (m.n_z() > 0) {
    Eigen::LLT<Matrix> lz(m.Sigma_z());
    sxy_z -= m.Sigma_xz() * lz.solve(m.Sigma_yz().transpose());
  }
  s.Sigma_xy_given_z = sxy_z;
  s.A = sxy_z * psd_pinv(s.Sigma_y_given_z);
  if (m.n_z() > 0) {
    Eigen::LLT<Matrix> lz(m.Sigma_z());
    s.B = lz.solve((m.Sigma_xz() - s.A * m.Sigma_yz()).transpose()).transpose();
  } else {
    s.B = Matrix(m.n_x(), 0);
  }
  s.Sigma_yprime_given_z = repair_psd(s.A * s.Sigma_y_given_z * s.A.transpose());
  s.Sigma_x_given_yz = repair_psd(s.Sigma_x_given_z - s.A * sxy_z.transpose());
  return s;
}

struct RegularityReport {
  Index dim = 0;
  Index rank = 0;
  bool full_rank = false;
};

/// Numerical rank of Σ_{x|z} − Σ_{x|yz} at threshold 1e-10·‖Σ_{x|z}‖₂, so that a
/// difference made only of rounding noise reports rank 0.
inline RegularityReport check_regularity(const ConditionalStats& s) {
  RegularityReport r;
  const Matrix p = s.P();
  r.dim = p.rows();
  const Vector ev = sym_eigenvalues(p);
  const double scale = p.size() ? spectral_norm_sym(s.Sigma_x_given_z) : 0.0;
  if (scale > 0.0)
    for (Index i = 0; i < ev.size(); ++i)
      if (ev(i) > kPsdTol * scale) ++r.rank;
  r.full_rank = r.rank == r.dim;
  return r;
}

inline void require_regular(const ConditionalStats& s) {
  const RegularityReport r = check_regularity(s);
  if (!r.full_rank)
    throw Error(ErrorKind::RankDeficient, "Sigma_x|z - Sigma_x|yz has rank " + std::to_string(r.rank) + " < " +
                                              std::to_string(r.dim));
}

}  // namespace covrate
