#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "covrate/fusion.hpp"
#include "covrate/rdf.hpp"
#include "covrate/rng.hpp"

namespace covrate {

/// Σ(i,j) = ν·ρ^{|i−j|}
inline SpdMatrix exp_cov(Index n, double nu, double rho) {
  if (n < 1 || !(nu > 0.0) || !(rho > -1.0 && rho < 1.0))
    throw Error(ErrorKind::InvalidParam, "exp_cov needs n >= 1, nu > 0, |rho| < 1");
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = nu * std::pow(rho, static_cast<double>(std::abs(i - j)));
  return SpdMatrix(m);
}

/// Factor F with F·Fᵀ = Σ for a PSD Σ: Cholesky when possible, else a clipped
/// eigen square root.
inline Matrix covariance_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(symmetrize(sigma));
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const SymEig e = sym_eig_desc(symmetrize(sigma));
  return e.U.transpose() * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// N zero-mean samples with covariance Σ, one per row.
inline Matrix sample_gaussian(const Matrix& sigma, Index N, const RngStream& stream) {
  if (N < 1) throw Error(ErrorKind::InvalidParam, "sample count must be positive");
  Rng rng(stream);
  return rng.normal_matrix(N, sigma.rows()) * covariance_factor(sigma).transpose();
}

/// Second moment XᵀX / N of zero-mean rows.
inline Matrix sample_second_moment(const Matrix& rows) {
  return symmetrize(rows.transpose() * rows / static_cast<double>(rows.rows()));
}

/// Runs fn(i) for i in [0, count) on up to hardware_concurrency threads.
/// Callers write results into slot i, so output order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned max_threads = 0) {
  unsigned hw = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct RdfMonteCarloReport {
  Matrix empirical_error_cov;
  Matrix analytic_error_cov;
  double rel_frobenius_dev = 0.0;
  bool within_distortion = false;  // empirical ⪯ (1 + slack)·D
};

/// Samples (x, y, z), passes y through the test channel with Gaussian coding
/// noise, decodes with the MMSE decoder and compares the error covariance
/// with the analytic value.
inline RdfMonteCarloReport mc_validate_rdf(const JointGaussianModel& model, const Matrix& D, Index N,
                                           const RngStream& stream, double slack = 0.05) {
  const ConditionalStats stats = analyze(model);
  const TestChannel tc = test_channel(stats, D);
  const MmseDecoder dec = mmse_decoder(model, tc);

  const Matrix xyz = sample_gaussian(model.joint(), N, stream.child(0));
  const Matrix x = xyz.leftCols(model.n_x());
  const Matrix y = xyz.middleCols(model.n_x(), model.n_y());
  const Matrix z = xyz.rightCols(model.n_z());
  Matrix est = z * dec.G.transpose();
  if (tc.k() > 0) {
    const Matrix nu = sample_gaussian(tc.noise_cov, N, stream.child(1));
    const Matrix w = y * tc.encoder_map.transpose() + nu;
    est += w * dec.C.transpose();
  }

  RdfMonteCarloReport r;
  r.empirical_error_cov = sample_second_moment(x - est);
  r.analytic_error_cov = reconstruction_error(stats, D);
  r.rel_frobenius_dev =
      (r.empirical_error_cov - r.analytic_error_cov).norm() / r.analytic_error_cov.norm();
  r.within_distortion = psd_leq(r.empirical_error_cov, (1.0 + slack) * D, 0.0);
  return r;
}

struct SnrMonteCarloReport {
  Snr empirical;
  Snr analytic;
  double max_distortionless_error = 0.0;  // max |H·Wᵀ − I|
};

/// Simulates each node's quantizer as ŷ′ = A·y + ν′ with A = (Σ_y − D)·Σ_y⁻¹ and
/// cov(ν′) = D − D·Σ_y⁻¹·D, maps back with A⁻¹ and fuses with the
/// distortionless filter.
inline SnrMonteCarloReport mc_validate_snr(const FusionNetwork& net, const Allocation& alloc, Index N,
                                           const RngStream& stream) {
  validate_allocation(net, alloc);
  const Index n = net.n();
  const std::size_t nodes = net.size();
  const Matrix sv = noise_cov_blockdiag(net, alloc);
  const Matrix H = nld_filter(net, sv);

  SnrMonteCarloReport r;
  r.analytic = output_snr(net, alloc);
  r.max_distortionless_error = max_abs(H * stacked_W(net).transpose() - Matrix::Identity(n, n));

  const Matrix xd = sample_gaussian(net.Sigma_xd(), N, stream.child(0));
  Matrix fused = Matrix::Zero(N, n);
  for (std::size_t i = 0; i < nodes; ++i) {
    const Matrix& sy = net.Sigma_y(i);
    const Matrix& syi = net.Sigma_y_inv(i);
    const Matrix& d = alloc.D[i];
    const Matrix noise = sample_gaussian(net.node(i).Sigma_n, N, stream.child(1 + 2 * i));
    const Matrix y = xd * net.node(i).W + noise;
    const Matrix a = (sy - d) * syi;
    const Matrix nu = sample_gaussian(symmetrize(d - d * syi * d), N, stream.child(2 + 2 * i));
    const Matrix yq = y * a.transpose() + nu;
    const Matrix yhat = a.partialPivLu().solve(yq.transpose()).transpose();
    fused += yhat * H.block(0, static_cast<Index>(i) * n, n, n).transpose();
  }
  const double signal = xd.squaredNorm();
  const double out_noise = (fused - xd).squaredNorm();
  r.empirical = make_snr(signal / out_noise);
  return r;
}

/// Random SPD matrix G·Gᵀ/n + floor·I with standard normal G.
inline Matrix random_spd(Rng& rng, Index n, double floor = 0.1) {
  const Matrix g = rng.normal_matrix(n, n);
  return symmetrize(g * g.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n));
}

/// Random joint model whose stacked (x, y, z) covariance is a random SPD matrix.
inline JointGaussianModel random_joint_model(Rng& rng, Index nx, Index ny, Index nz) {
  const Matrix j = random_spd(rng, nx + ny + nz);
  return JointGaussianModel(j.block(0, 0, nx, nx), j.block(nx, nx, ny, ny), j.block(0, nx, nx, ny),
                            j.block(nx + ny, nx + ny, nz, nz), j.block(0, nx + ny, nx, nz),
                            j.block(nx, nx + ny, ny, nz));
}

/// Σ_{x|yz} + c·R for a random SPD R, with c drawn so that D sometimes
/// exceeds Σ_{x|z} along some directions and sometimes not.
inline Matrix random_distortion(Rng& rng, const ConditionalStats& s) {
  const Index n = s.n_x();
  const Matrix r = random_spd(rng, n, 0.05);
  const double scale = spectral_norm_sym(s.P()) / spectral_norm_sym(r);
  return symmetrize(s.Sigma_x_given_yz + rng.uniform(0.05, 1.5) * scale * r);
}

}  // namespace covrate
