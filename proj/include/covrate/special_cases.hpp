#pragma once

#include <cmath>

#include "covrate/rdf.hpp"
#include "covrate/root_finding.hpp"

namespace covrate {

struct WaterfillResult {
  double rate = 0.0;
  double water_level = 0.0;
  Matrix d_star;
  Vector lambda;  // eigenvalues of Σ_{x|z} − Σ_{x|yz}, descending
};

/// Rate under the trace constraint tr(error) ≤ n_x·D by reverse water-filling
/// over the eigenvalues of Σ_{x|z} − Σ_{x|yz}.
inline WaterfillResult mse_rdf(const ConditionalStats& s, double d_scalar) {
  require_regular(s);
  const Index n = s.n_x();
  const double target = static_cast<double>(n) * d_scalar - s.Sigma_x_given_yz.trace();
  if (!(target > 0.0))
    throw Error(ErrorKind::InfeasibleDistortion, "n_x*D must exceed tr(Sigma_x|yz)");
  const SymEig e = sym_eig_desc(s.P());
  WaterfillResult r;
  r.lambda = e.values;
  const double lmax = e.values(0);
  if (target >= e.values.sum()) {
    r.water_level = lmax;
    r.rate = 0.0;
    r.d_star = s.Sigma_x_given_z;
    return r;
  }
  auto f = [&](double t) { return e.values.cwiseMin(t).sum() - target; };
  r.water_level = bisect(f, 0.0, lmax);
  Vector kept(n);
  for (Index i = 0; i < n; ++i) {
    kept(i) = std::min(r.water_level, e.values(i));
    if (e.values(i) > r.water_level) r.rate += 0.5 * std::log(e.values(i) / r.water_level);
  }
  r.d_star = symmetrize(s.Sigma_x_given_yz + e.U.transpose() * kept.asDiagonal() * e.U);
  return r;
}

struct RelayMu {
  Vector mu;  // descending, in [0, 1)
  Matrix W;   // rows: eigenvectors of I − Σ_{x|z}^{-1/2}·Σ_{x|yz}·Σ_{x|z}^{-1/2}
};

inline RelayMu relay_mu_decomposition(const ConditionalStats& s) {
  require_regular(s);
  const SpdMatrix sxz(s.Sigma_x_given_z);
  const Matrix isq = inverse_principal_sqrt(sxz);
  const Index n = s.n_x();
  const SymEig e = sym_eig_desc(symmetrize(Matrix::Identity(n, n) - isq * s.Sigma_x_given_yz * isq));
  return {e.values.cwiseMax(0.0).cwiseMin(std::nextafter(1.0, 0.0)), e.U};
}

inline Vector relay_mu(const ConditionalStats& s) { return relay_mu_decomposition(s).mu; }

/// Largest admissible information rate, ½·log(|Σ_{x|z}| / |Σ_{x|yz}|).
inline double relay_max_information(const Vector& mu) {
  double r = 0.0;
  for (Index i = 0; i < mu.size(); ++i) r -= 0.5 * std::log1p(-mu(i));
  return r;
}

struct RelayResult {
  double rate = 0.0;
  double gamma = 0.0;
  Vector mu;
  Matrix d_star;
};

inline double relay_information_at(const Vector& mu, double gamma) {
  double g = 0.0;
  for (Index i = 0; i < mu.size(); ++i) g -= 0.5 * std::log(std::min(1.0, (1.0 - mu(i)) / (1.0 - gamma)));
  return g;
}

inline RelayResult relay_solve(const ConditionalStats& s, double r_info) {
  const RelayMu dec = relay_mu_decomposition(s);
  const Vector& mu = dec.mu;
  const double r_max = relay_max_information(mu);
  if (!(r_info >= 0.0) || r_info > r_max)
    throw Error(ErrorKind::OutOfRange, "R_I must lie in [0, " + std::to_string(r_max) + "]");
  if (std::abs(r_info - r_max) <= 1e-12 * std::max(1.0, r_max))
    throw Error(ErrorKind::InfiniteRate, "R_I at its supremum requires infinite rate");

  const double mu_max = mu(0);
  RelayResult r;
  r.mu = mu;
  r.gamma = r_info == 0.0 ? mu_max
                          : bisect([&](double g) { return relay_information_at(mu, g) - r_info; }, 0.0, mu_max);
  const Index n = mu.size();
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    w(i) = std::min(1.0, (1.0 - mu(i)) / (1.0 - r.gamma));
    if (mu(i) > r.gamma) r.rate += 0.5 * std::log(mu(i) * (1.0 - r.gamma) / ((1.0 - mu(i)) * r.gamma));
  }
  const Matrix sq = principal_sqrt(SpdMatrix(s.Sigma_x_given_z)).matrix();
  r.d_star = symmetrize(sq * dec.W.transpose() * w.asDiagonal() * dec.W * sq);
  return r;
}

}  // namespace covrate
