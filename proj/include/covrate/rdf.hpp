#pragma once

#include <cmath>
#include <vector>

#include "covrate/gaussian_model.hpp"

namespace covrate {

inline constexpr double kDistortionMargin = 1e-12;

/// Checks D ≻ Σ_{x|yz}: smallest eigenvalue of D − Σ_{x|yz} above 1e-12·‖D‖₂.
inline void validate_distortion(const ConditionalStats& s, const Matrix& d) {
  if (d.rows() != s.n_x() || d.cols() != s.n_x())
    throw Error(ErrorKind::DimensionMismatch, "distortion matrix has wrong dimension");
  require_symmetric(d, "D");
  const double lo = sym_eigenvalues(d - s.Sigma_x_given_yz)(0);
  if (!(lo > kDistortionMargin * spectral_norm_sym(d)))
    throw Error(ErrorKind::InvalidDistortion, "D - Sigma_x|yz is not positive definite (smallest eigenvalue " +
                                                  std::to_string(lo) + ")");
}

struct RdfResult {
  double rate = 0.0;  // nats per source vector
  Matrix min_matrix;
  Matrix error_cov;
};

/// Joint diagonalizer of (Σ_{x|z} − Σ_{x|yz}, D − Σ_{x|yz}) after validation.
inline JointDiag rdf_diagonalizer(const ConditionalStats& s, const Matrix& d) {
  require_regular(s);
  validate_distortion(s, d);
  return joint_diagonalize_unchecked(s.P(), symmetrize(d - s.Sigma_x_given_yz));
}

inline RdfResult rate_distortion(const ConditionalStats& s, const Matrix& d) {
  const JointDiag jd = rdf_diagonalizer(s, d);
  const Vector m = jd.min_values();
  RdfResult r;
  for (Index i = 0; i < m.size(); ++i) r.rate += 0.5 * std::log(jd.lambda(i) / m(i));
  r.rate = std::max(r.rate, 0.0);
  r.min_matrix = jd.congruence_inverse(m);
  r.error_cov = symmetrize(s.Sigma_x_given_yz + r.min_matrix);
  return r;
}

inline Matrix reconstruction_error(const ConditionalStats& s, const Matrix& d) {
  return rate_distortion(s, d).error_cov;
}

/// Achieving encoder written in joint-diagonal coordinates: the transmitted
/// vector is w = encoder_map·y + ν with ν ~ N(0, noise_cov), one entry per
/// active component. w is an invertible transform of U·A·y + ν restricted to
/// the active coordinates.
struct TestChannel {
  Matrix encoder_map;  // k × n_y
  Matrix noise_cov;    // k × k, diagonal
  std::vector<Index> active;
  Matrix U;  // Σ_{y′|z} = Uᵀ·Λ·U
  Matrix V;  // joint diagonalizer of (Σ_{x|z} − Σ_{x|yz}, D − Σ_{x|yz})
  Vector lambda;
  Vector lambda_prime;
  Matrix Sigma_nu;  // coding noise in the U·A·y frame; empty unless every component is active

  Index k() const { return static_cast<Index>(active.size()); }
};

inline TestChannel test_channel(const ConditionalStats& s, const Matrix& d) {
  const JointDiag jd = rdf_diagonalizer(s, d);
  const std::vector<bool> first = jd.min_is_first();
  TestChannel tc;
  tc.U = jd.U;
  tc.V = jd.V;
  tc.lambda = jd.lambda;
  tc.lambda_prime = jd.lambda_prime;
  for (Index i = 0; i < jd.lambda.size(); ++i)
    if (!first[static_cast<std::size_t>(i)]) tc.active.push_back(i);

  const Index k = tc.k();
  const Index ny = s.A.cols();
  tc.encoder_map = Matrix(k, ny);
  Vector noise(k);
  for (Index r = 0; r < k; ++r) {
    const Index i = tc.active[static_cast<std::size_t>(r)];
    const double l = jd.lambda(i), m = jd.lambda_prime(i);
    tc.encoder_map.row(r) = jd.V.row(i) * s.A;
    noise(r) = l * m / (l - m);
  }
  tc.noise_cov = noise.asDiagonal();
  if (k == jd.lambda.size() && k > 0)
    tc.Sigma_nu = symmetrize(jd.U * jd.V_inv * noise.asDiagonal() * jd.V_inv.transpose() * jd.U.transpose());
  return tc;
}

/// ½·(log|outer| − log|inner|) for nested Gaussian conditional covariances.
inline double cond_mutual_info_gaussian(const Matrix& outer, const Matrix& inner) {
  require_same_dim(outer, inner, "cond_mutual_info_gaussian: dimensions differ");
  if (outer.size() == 0) return 0.0;
  if (!psd_leq(inner, outer, 1e-9)) throw Error(ErrorKind::NotNested, "inner covariance is not dominated by outer");
  return 0.5 * (log_det_spd(outer) - log_det_spd(inner));
}

/// I(y; w | z) of a constructed channel from Σ_{w|z} = M·Σ_{y|z}·Mᵀ + N and Σ_{w|yz} = N.
inline double channel_mutual_info(const ConditionalStats& s, const TestChannel& tc) {
  if (tc.k() == 0) return 0.0;
  const Matrix outer = symmetrize(tc.encoder_map * s.Sigma_y_given_z * tc.encoder_map.transpose() + tc.noise_cov);
  return cond_mutual_info_gaussian(outer, tc.noise_cov);
}

/// Covariance of (x, y, z, w) with w produced by the channel from y.
inline Matrix extended_joint(const JointGaussianModel& m, const TestChannel& tc) {
  const Matrix j = m.joint();
  const Index n = j.rows(), k = tc.k();
  Matrix e = Matrix::Zero(n + k, n + k);
  e.topLeftCorner(n, n) = j;
  if (k == 0) return e;
  const Matrix cov_w_all = tc.encoder_map * select_block(j, m.y_idx(), index_range(0, n));
  e.block(n, 0, k, n) = cov_w_all;
  e.block(0, n, n, k) = cov_w_all.transpose();
  e.block(n, n, k, k) = symmetrize(tc.encoder_map * m.Sigma_y() * tc.encoder_map.transpose() + tc.noise_cov);
  return e;
}

struct MmseDecoder {
  Matrix C;  // n_x × k
  Matrix G;  // n_x × n_z
  Matrix error_cov;
};

/// Linear MMSE estimate x̂ = C·w + G·z from the extended joint covariance.
inline MmseDecoder mmse_decoder(const JointGaussianModel& m, const TestChannel& tc) {
  const Matrix e = extended_joint(m, tc);
  const Index n = m.n_x() + m.n_y() + m.n_z();
  const IndexSet w_idx = index_range(n, tc.k());
  const IndexSet obs = index_union(w_idx, m.z_idx());
  MmseDecoder dec;
  if (obs.empty()) {
    dec.C = Matrix(m.n_x(), 0);
    dec.G = Matrix(m.n_x(), 0);
    dec.error_cov = m.Sigma_x();
    return dec;
  }
  const Matrix so = symmetrize(select_block(e, obs, obs));
  const Matrix cross = select_block(e, m.x_idx(), obs);
  const Matrix kmat = Eigen::LLT<Matrix>(so).solve(cross.transpose()).transpose();
  dec.C = kmat.leftCols(tc.k());
  dec.G = kmat.rightCols(m.n_z());
  dec.error_cov = conditional_cov(e, m.x_idx(), obs);
  return dec;
}

}  // namespace covrate
