#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "covrate/root_finding.hpp"
#include "covrate/spd.hpp"

namespace covrate {

/// One sensor: y = Wᵀ·x_d + n with n ~ N(0, Sigma_n).
struct SensorNode {
  Matrix W;
  Matrix Sigma_n;
  double alpha = 1.0;
};

class FusionNetwork {
 public:
  FusionNetwork(Matrix sigma_xd, std::vector<SensorNode> nodes, double rate_budget)
      : sxd_(std::move(sigma_xd)), nodes_(std::move(nodes)), R_(rate_budget) {
    if (!SpdMatrix::is_spd(sxd_)) throw Error(ErrorKind::InvalidNetwork, "Sigma_xd is not positive definite");
    sxd_ = symmetrize(sxd_);
    if (nodes_.empty()) throw Error(ErrorKind::InvalidNetwork, "network has no nodes");
    if (!std::isfinite(R_)) throw Error(ErrorKind::InvalidNetwork, "rate budget is not finite");
    const Index n = sxd_.rows();
    double alpha_sum = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      SensorNode& nd = nodes_[i];
      const std::string tag = "node " + std::to_string(i) + ": ";
      if (nd.W.rows() != n || nd.W.cols() != n || nd.Sigma_n.rows() != n || nd.Sigma_n.cols() != n)
        throw Error(ErrorKind::InvalidNetwork, tag + "dimension mismatch");
      if (!(nd.alpha > 0.0 && nd.alpha <= 1.0)) throw Error(ErrorKind::InvalidNetwork, tag + "alpha not in (0,1]");
      const Eigen::JacobiSVD<Matrix> svd(nd.W);
      const Vector sv = svd.singularValues();
      if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > 1e12)
        throw Error(ErrorKind::InvalidNetwork, tag + "W is not invertible");
      if (!SpdMatrix::is_spd(nd.Sigma_n)) throw Error(ErrorKind::InvalidNetwork, tag + "Sigma_n is not SPD");
      nd.Sigma_n = symmetrize(nd.Sigma_n);
      alpha_sum += nd.alpha;
      Matrix sy = symmetrize(nd.W.transpose() * sxd_ * nd.W + nd.Sigma_n);
      if (!SpdMatrix::is_spd(sy)) throw Error(ErrorKind::InvalidNetwork, tag + "Sigma_y is not SPD");
      sy_.push_back(sy);
      sn_inv_.push_back(spd_inverse(nd.Sigma_n));
      sy_inv_.push_back(spd_inverse(sy));
    }
    if (std::abs(alpha_sum - 1.0) > 1e-12) throw Error(ErrorKind::InvalidNetwork, "weights must sum to 1");
  }

  Index n() const { return sxd_.rows(); }
  std::size_t size() const { return nodes_.size(); }
  double R() const { return R_; }
  const Matrix& Sigma_xd() const { return sxd_; }
  const SensorNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<SensorNode>& nodes() const { return nodes_; }
  const Matrix& Sigma_y(std::size_t i) const { return sy_[i]; }
  const Matrix& Sigma_n_inv(std::size_t i) const { return sn_inv_[i]; }
  const Matrix& Sigma_y_inv(std::size_t i) const { return sy_inv_[i]; }

  FusionNetwork with_rate(double r) const { return FusionNetwork(sxd_, nodes_, r); }

  /// log β with β = e^{−2R}·Π|Σ_yᵢ|^{αᵢ}.
  double log_beta() const {
    double lb = -2.0 * R_;
    for (std::size_t i = 0; i < size(); ++i) lb += nodes_[i].alpha * log_det_spd(sy_[i]);
    return lb;
  }
  double beta() const { return std::exp(log_beta()); }

  /// S = Σ Wᵢ·Σ_nᵢ⁻¹·Wᵢᵀ
  Matrix S() const {
    Matrix s = Matrix::Zero(n(), n());
    for (std::size_t i = 0; i < size(); ++i) s += nodes_[i].W * sn_inv_[i] * nodes_[i].W.transpose();
    return symmetrize(s);
  }

 private:
  Matrix sxd_;
  std::vector<SensorNode> nodes_;
  double R_;
  std::vector<Matrix> sy_, sn_inv_, sy_inv_;
};

struct Allocation {
  std::vector<Matrix> D;
};

inline bool is_valid_distortion(const FusionNetwork& net, std::size_t i, const Matrix& d) {
  if (d.rows() != net.n() || d.cols() != net.n() || !d.allFinite()) return false;
  if (!SpdMatrix::is_spd(d)) return false;
  return psd_leq(d, net.Sigma_y(i), 1e-9);
}

inline void validate_allocation(const FusionNetwork& net, const Allocation& a) {
  if (a.D.size() != net.size()) throw Error(ErrorKind::InvalidAllocation, "one distortion matrix per node required");
  for (std::size_t i = 0; i < a.D.size(); ++i)
    if (!is_valid_distortion(net, i, a.D[i]))
      throw Error(ErrorKind::InvalidAllocation, "D[" + std::to_string(i) + "] is not SPD or exceeds Sigma_y");
}

/// ½·log(|Σ_y| / |D|) in nats.
inline double per_node_rate(const FusionNetwork& net, std::size_t i, const Matrix& d) {
  if (!is_valid_distortion(net, i, d)) throw Error(ErrorKind::InvalidAllocation, "D is not SPD or exceeds Sigma_y");
  return 0.5 * (log_det_spd(net.Sigma_y(i)) - log_det_spd(d));
}

inline double weighted_sum_rate(const FusionNetwork& net, const Allocation& a) {
  validate_allocation(net, a);
  double r = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) r += net.node(i).alpha * per_node_rate(net, i, a.D[i]);
  return r;
}

/// Z = W·Σ_n⁻¹·(Σ_n⁻¹ + D⁻¹ − Σ_y⁻¹)⁻¹·Σ_n⁻¹·Wᵀ
inline Matrix z_matrix(const FusionNetwork& net, std::size_t i, const Matrix& d) {
  const Matrix& sni = net.Sigma_n_inv(i);
  const Matrix inner = symmetrize(sni + spd_inverse(d) - net.Sigma_y_inv(i));
  const Matrix& w = net.node(i).W;
  return symmetrize(w * sni * spd_inverse(inner) * sni * w.transpose());
}

/// C = W·Σ_n⁻¹·(Σ_n⁻¹ − Σ_y⁻¹)⁻¹·Σ_n⁻¹·Wᵀ
inline Matrix c_matrix(const FusionNetwork& net, std::size_t i) {
  const Matrix& sni = net.Sigma_n_inv(i);
  const Matrix& w = net.node(i).W;
  return symmetrize(w * sni * spd_inverse(symmetrize(sni - net.Sigma_y_inv(i))) * sni * w.transpose());
}

struct KktTerms {
  Matrix Z;
  Matrix C;
};

inline KktTerms kkt_terms(const FusionNetwork& net, std::size_t i, const Matrix& d) {
  if (!is_valid_distortion(net, i, d)) throw Error(ErrorKind::InvalidAllocation, "D is not SPD or exceeds Sigma_y");
  return {z_matrix(net, i, d), c_matrix(net, i)};
}

/// Inverse of the Z map: D⁻¹ = Σ_n⁻¹·Wᵀ·Z⁻¹·W·Σ_n⁻¹ − Σ_n⁻¹ + Σ_y⁻¹ (not checked for definiteness).
inline Matrix distortion_from_z(const FusionNetwork& net, std::size_t i, const Matrix& z) {
  const Matrix& sni = net.Sigma_n_inv(i);
  const Matrix& w = net.node(i).W;
  const Matrix zinv = symmetrize(z).ldlt().solve(Matrix::Identity(z.rows(), z.cols()));
  const Matrix dinv = symmetrize(sni * w.transpose() * zinv * w * sni - sni + net.Sigma_y_inv(i));
  return symmetrize(dinv.ldlt().solve(Matrix::Identity(dinv.rows(), dinv.cols())));
}

/// Inverse of the Z map once D⁻¹ dominates Σ_n⁻¹ − Σ_y⁻¹: D = Σ_n·W⁻¹·Z·W⁻ᵀ·Σ_n.
/// This is the same approximation that fixes the multiplier, so the
/// resulting allocation meets the weighted sum-rate budget exactly.
inline Matrix distortion_from_z_highrate(const FusionNetwork& net, std::size_t i, const Matrix& z) {
  const Matrix& sn = net.node(i).Sigma_n;
  const Matrix m = net.node(i).W.transpose().partialPivLu().solve(sn);  // W⁻ᵀ·Σ_n
  return symmetrize(m.transpose() * z * m);
}

/// Coding-noise covariance (D⁻¹ − Σ_y⁻¹)⁻¹ seen after the decoder's inverse map.
inline Matrix coding_noise_cov(const FusionNetwork& net, std::size_t i, const Matrix& d) {
  return spd_inverse(symmetrize(spd_inverse(d) - net.Sigma_y_inv(i)));
}

/// Σ_v = blockdiag(Σ_nᵢ + (Dᵢ⁻¹ − Σ_yᵢ⁻¹)⁻¹)
inline Matrix noise_cov_blockdiag(const FusionNetwork& net, const Allocation& a) {
  validate_allocation(net, a);
  const Index n = net.n();
  const Index total = n * static_cast<Index>(net.size());
  Matrix sv = Matrix::Zero(total, total);
  for (std::size_t i = 0; i < net.size(); ++i)
    sv.block(static_cast<Index>(i) * n, static_cast<Index>(i) * n, n, n) =
        net.node(i).Sigma_n + coding_noise_cov(net, i, a.D[i]);
  return symmetrize(sv);
}

/// W = [W₁ … W_N]
inline Matrix stacked_W(const FusionNetwork& net) {
  const Index n = net.n();
  Matrix w(n, n * static_cast<Index>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) w.block(0, static_cast<Index>(i) * n, n, n) = net.node(i).W;
  return w;
}

/// Distortionless fusion filter H = (W·Σ_v⁻¹·Wᵀ)⁻¹·W·Σ_v⁻¹.
inline Matrix nld_filter(const FusionNetwork& net, const Matrix& sigma_v) {
  const Matrix w = stacked_W(net);
  if (sigma_v.rows() != w.cols() || sigma_v.cols() != w.cols())
    throw Error(ErrorKind::DimensionMismatch, "Sigma_v must be (N*n) x (N*n)");
  Eigen::LLT<Matrix> lv(symmetrize(sigma_v));
  if (lv.info() != Eigen::Success) throw Error(ErrorKind::SingularGram, "Sigma_v is not positive definite");
  const Matrix svi_wt = lv.solve(w.transpose());
  const Matrix gram = symmetrize(w * svi_wt);
  if (!SpdMatrix::is_spd(gram)) throw Error(ErrorKind::SingularGram, "W Sigma_v^-1 W^T is singular");
  return Eigen::LLT<Matrix>(gram).solve(svi_wt.transpose());
}

/// W·Σ_v⁻¹·Wᵀ = S − Σ Zᵢ, which stays finite at the zero-rate end Dᵢ = Σ_yᵢ.
inline Matrix fusion_gram(const FusionNetwork& net, const Allocation& a) {
  validate_allocation(net, a);
  Matrix g = net.S();
  for (std::size_t i = 0; i < net.size(); ++i) g -= z_matrix(net, i, a.D[i]);
  return symmetrize(g);
}

struct Snr {
  double linear = 0.0;
  double db = 0.0;
};

inline Snr make_snr(double linear) { return {linear, 10.0 * std::log10(linear)}; }

/// tr(Σ_xd) / tr{(W·Σ_v⁻¹·Wᵀ)⁻¹}
inline Snr output_snr(const FusionNetwork& net, const Allocation& a) {
  const Matrix g = fusion_gram(net, a);
  if (!SpdMatrix::is_spd(g)) throw Error(ErrorKind::SingularGram, "fusion Gram matrix is singular");
  return make_snr(net.Sigma_xd().trace() / spd_inverse(g).trace());
}

/// SNR of the unquantized array: tr(Σ_xd) / tr(S⁻¹).
inline Snr analog_snr(const FusionNetwork& net) {
  return make_snr(net.Sigma_xd().trace() / spd_inverse(net.S()).trace());
}

// ---------------------------------------------------------------------------
// KKT system

struct KktState {
  std::vector<Matrix> Z;
  std::vector<Matrix> C;
  Matrix A_mat;
  double lambda_mult = 0.0;
};

/// Z, C and A = S − ΣZ for an allocation, with a caller-supplied multiplier.
inline KktState kkt_state(const FusionNetwork& net, const Allocation& a, double lambda_mult) {
  validate_allocation(net, a);
  KktState st;
  st.lambda_mult = lambda_mult;
  st.A_mat = net.S();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const KktTerms t = kkt_terms(net, i, a.D[i]);
    st.A_mat -= t.Z;
    st.Z.push_back(t.Z);
    st.C.push_back(t.C);
  }
  st.A_mat = symmetrize(st.A_mat);
  return st;
}

struct KktResiduals {
  std::vector<double> stationarity;  // ‖αᵢλA² − Zᵢ + Zᵢ·Cᵢ⁻¹·Zᵢ‖_F per node
  double coupling = 0.0;             // ‖A − (S − ΣZᵢ)‖_F
  double budget = 0.0;               // |Σ −αᵢ·log|Σ_n⁻¹WᵀZ⁻¹WΣ_n⁻¹ − Σ_n⁻¹ + Σ_y⁻¹| − log β|
  double budget_highrate = 0.0;      // same with the −Σ_n⁻¹ + Σ_y⁻¹ terms dropped
};

inline KktResiduals kkt_residuals(const FusionNetwork& net, const KktState& st) {
  KktResiduals r;
  const Matrix a2 = st.A_mat * st.A_mat;
  Matrix coupled = net.S();
  double lhs = 0.0, lhs_hr = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Matrix& z = st.Z[i];
    const Matrix& c = st.C[i];
    const double alpha = net.node(i).alpha;
    const Matrix zcz = z * c.ldlt().solve(z);
    r.stationarity.push_back((alpha * st.lambda_mult * a2 - z + zcz).norm());
    coupled -= z;
    const Matrix& sni = net.Sigma_n_inv(i);
    const Matrix& w = net.node(i).W;
    const Matrix hr = symmetrize(sni * w.transpose() * symmetrize(z).ldlt().solve(w * sni));
    const Matrix full = symmetrize(hr - sni + net.Sigma_y_inv(i));
    const auto logabsdet = [](const Matrix& m) {
      Eigen::PartialPivLU<Matrix> lu(m);
      return lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
    };
    lhs -= alpha * logabsdet(full);
    lhs_hr -= alpha * logabsdet(hr);
  }
  r.coupling = (st.A_mat - coupled).norm();
  r.budget = std::abs(lhs - net.log_beta());
  r.budget_highrate = std::abs(lhs_hr - net.log_beta());
  return r;
}

// ---------------------------------------------------------------------------
// High-rate allocation

/// Smallest budget for which the high-rate multiplier equation has a root.
inline double highrate_min_rate(const FusionNetwork& net) {
  const double n = static_cast<double>(net.n());
  double acc = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const SensorNode& nd = net.node(i);
    const double logdet_w = nd.W.partialPivLu().matrixLU().diagonal().cwiseAbs().array().log().sum();
    const double log_m = n * std::log(nd.alpha) + 2.0 * log_det_spd(nd.Sigma_n) - 2.0 * logdet_w;
    acc += nd.alpha * (log_det_spd(net.Sigma_y(i)) - log_m);
  }
  return 0.5 * (acc - log_det_spd(net.S()));
}

struct HighRateResult {
  Allocation alloc;
  double lambda = 0.0;
  Matrix A;
  std::vector<Matrix> Z;
  double R_min = 0.0;
  bool valid = false;  // every Dᵢ SPD and ⪯ Σ_yᵢ
  double achieved_rate = std::numeric_limits<double>::quiet_NaN();
  double rate_deviation = std::numeric_limits<double>::quiet_NaN();  // achieved − budget

  // Diagnostic: the same Zᵢ pushed through the exact inverse of the Z map.
  Allocation exact_inversion;
  bool exact_inversion_valid = false;
  double exact_inversion_rate_deviation = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {
// λ·a² with a = (√(1+4λs) − 1)/(2λ), in a form that does not cancel for small λs.
inline double highrate_log_f(double lambda, double s) {
  const double q = std::sqrt(1.0 + 4.0 * lambda * s) + 1.0;
  return std::log(4.0 * lambda) + 2.0 * std::log(s) - 2.0 * std::log(q);
}
}  // namespace detail

inline HighRateResult highrate_allocate(const FusionNetwork& net) {
  HighRateResult out;
  out.R_min = highrate_min_rate(net);
  if (net.R() < out.R_min)
    throw Error(ErrorKind::InfeasibleBudget,
                "rate budget " + std::to_string(net.R()) + " below minimum " + std::to_string(out.R_min));

  const Index n = net.n();
  const double nd = static_cast<double>(n);
  const Matrix S = net.S();
  const SymEig es = sym_eig_desc(S);  // S = Uᵀ·diag(s)·U
  const Vector& s = es.values;

  double log_gamma = net.log_beta();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const SensorNode& node = net.node(i);
    const double logdet_w = node.W.partialPivLu().matrixLU().diagonal().cwiseAbs().array().log().sum();
    log_gamma -= node.alpha * (nd * std::log(node.alpha) + 2.0 * log_det_spd(node.Sigma_n) - 2.0 * logdet_w);
  }
  auto h = [&](double log_lambda) {
    const double lam = std::exp(log_lambda);
    double acc = 0.0;
    for (Index k = 0; k < n; ++k) acc += detail::highrate_log_f(lam, s(k));
    return acc - log_gamma;
  };
  double lo = std::log(1e-18);
  for (int it = 0; h(lo) > 0.0; ++it) {
    if (it > 200) throw Error(ErrorKind::BracketFailure, "no lower bracket for the multiplier");
    lo -= 10.0;
  }
  double hi = lo;
  for (int it = 0; h(hi) <= 0.0; ++it) {
    if (it > 2000) throw Error(ErrorKind::InfeasibleBudget, "multiplier equation has no root");
    hi += std::log(2.0);
  }
  const double log_lambda = bisect(h, hi - std::log(2.0) < lo ? lo : hi - std::log(2.0), hi, {1e-15, 400});
  out.lambda = std::exp(log_lambda);

  Vector a(n);
  for (Index k = 0; k < n; ++k) a(k) = 2.0 * s(k) / (std::sqrt(1.0 + 4.0 * out.lambda * s(k)) + 1.0);
  out.A = symmetrize(es.U.transpose() * a.asDiagonal() * es.U);
  const Matrix a2 = symmetrize(es.U.transpose() * a.cwiseAbs2().asDiagonal() * es.U);

  out.valid = true;
  out.exact_inversion_valid = true;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Matrix z = net.node(i).alpha * out.lambda * a2;
    out.Z.push_back(z);
    const Matrix d = distortion_from_z_highrate(net, i, z);
    out.valid = out.valid && is_valid_distortion(net, i, d);
    out.alloc.D.push_back(d);
    const Matrix d_exact = distortion_from_z(net, i, z);
    out.exact_inversion_valid = out.exact_inversion_valid && is_valid_distortion(net, i, d_exact);
    out.exact_inversion.D.push_back(d_exact);
  }
  if (out.valid) {
    out.achieved_rate = weighted_sum_rate(net, out.alloc);
    out.rate_deviation = out.achieved_rate - net.R();
  }
  if (out.exact_inversion_valid)
    out.exact_inversion_rate_deviation = weighted_sum_rate(net, out.exact_inversion) - net.R();
  return out;
}

/// KKT state of a high-rate solution: its own Z, A and λ, with C from the network.
inline KktState highrate_kkt_state(const FusionNetwork& net, const HighRateResult& r) {
  KktState st{r.Z, {}, r.A, r.lambda};
  for (std::size_t i = 0; i < net.size(); ++i) st.C.push_back(c_matrix(net, i));
  return st;
}

// ---------------------------------------------------------------------------
// Two scalar nodes

enum class ScalarRegime { Maximizer, Boundary, Minimizer };

inline std::string_view to_string(ScalarRegime r) {
  switch (r) {
    case ScalarRegime::Maximizer: return "Maximizer";
    case ScalarRegime::Boundary: return "Boundary";
    case ScalarRegime::Minimizer: return "Minimizer";
  }
  return "Unknown";
}

struct ScalarPoint {
  double D1 = 0.0;
  double D2 = 0.0;
  double snr = 0.0;  // linear
};

struct ScalarResult {
  double D1_star = 0.0;
  double D2_star = 0.0;
  double R_max = 0.0;
  double R_min = 0.0;
  double beta = 0.0;
  ScalarRegime regime = ScalarRegime::Boundary;
  bool stationary_feasible = false;
  double snr_star = std::numeric_limits<double>::quiet_NaN();
  ScalarPoint sweep_best;
  ScalarPoint sweep_worst;
  std::vector<ScalarPoint> sweep;
};

inline double scalar_snr(const FusionNetwork& net, double d1, double d2) {
  return output_snr(net, Allocation{{Matrix::Constant(1, 1, d1), Matrix::Constant(1, 1, d2)}}).linear;
}

/// Closed-form stationary point of the two-node scalar problem with equal
/// weights and equal gains, its regime, and a 10³-point constraint sweep.
inline ScalarResult scalar_allocate(const FusionNetwork& net, int sweep_points = 1000) {
  if (net.size() != 2 || net.n() != 1) throw Error(ErrorKind::AssumptionViolated, "requires two scalar nodes");
  if (std::abs(net.node(0).alpha - 0.5) > 1e-12 || std::abs(net.node(1).alpha - 0.5) > 1e-12)
    throw Error(ErrorKind::AssumptionViolated, "requires alpha1 = alpha2 = 0.5");
  if (std::abs(net.node(0).W(0, 0) - net.node(1).W(0, 0)) > 1e-12 * std::abs(net.node(0).W(0, 0)))
    throw Error(ErrorKind::AssumptionViolated, "requires w1 = w2");
  if (sweep_points < 2) throw Error(ErrorKind::InvalidParam, "sweep needs at least two points");

  const double sn1 = net.node(0).Sigma_n(0, 0), sn2 = net.node(1).Sigma_n(0, 0);
  const double sy1 = net.Sigma_y(0)(0, 0), sy2 = net.Sigma_y(1)(0, 0);
  const double s1 = sn1 - sn1 * sn1 / sy1, s2 = sn2 - sn2 * sn2 / sy2;

  ScalarResult r;
  r.beta = net.beta();
  const double b = r.beta, p = sn1 * sn2;
  r.D1_star = b * (sn1 / sn2) * (p - s2 * b) / (p - s1 * b);
  r.D2_star = b * (sn2 / sn1) * (p - s1 * b) / (p - s2 * b);
  const double denom = (sn1 - s1) * (sn2 - s2);
  r.R_max = 0.25 * std::log(std::pow(std::max(s1, s2), 2) / denom);
  r.R_min = 0.25 * std::log(std::pow(std::min(s1, s2), 2) / denom);
  r.regime = net.R() > r.R_max ? ScalarRegime::Maximizer
                               : (net.R() < r.R_min ? ScalarRegime::Minimizer : ScalarRegime::Boundary);
  r.stationary_feasible = r.D1_star > 0.0 && r.D2_star > 0.0 && r.D1_star <= sy1 * (1 + 1e-12) &&
                          r.D2_star <= sy2 * (1 + 1e-12);
  if (r.stationary_feasible) r.snr_star = scalar_snr(net, std::min(r.D1_star, sy1), std::min(r.D2_star, sy2));

  // D1·D2 = β² with D2 ≤ Σ_y2 gives D1 ∈ [β²/Σ_y2, Σ_y1].
  const double lo = std::log(b * b / sy2), hi = std::log(sy1);
  if (!(lo <= hi)) throw Error(ErrorKind::InfeasibleBudget, "negative rate budget leaves no feasible allocation");
  r.sweep.reserve(static_cast<std::size_t>(sweep_points));
  for (int k = 0; k < sweep_points; ++k) {
    const double d1 = std::min(sy1, std::exp(lo + (hi - lo) * k / (sweep_points - 1)));
    const double d2 = std::min(sy2, b * b / d1);
    r.sweep.push_back({d1, d2, scalar_snr(net, d1, d2)});
  }
  r.sweep_best = r.sweep_worst = r.sweep.front();
  for (const ScalarPoint& pt : r.sweep) {
    if (pt.snr > r.sweep_best.snr) r.sweep_best = pt;
    if (pt.snr < r.sweep_worst.snr) r.sweep_worst = pt;
  }
  return r;
}

/// KKT state at the scalar stationary point; the multiplier is taken from
/// node 1's stationarity equation, so node 2's residual tests stationarity.
inline KktState scalar_kkt_state(const FusionNetwork& net, const ScalarResult& r) {
  const Allocation a{{Matrix::Constant(1, 1, r.D1_star), Matrix::Constant(1, 1, r.D2_star)}};
  KktState st = kkt_state(net, a, 0.0);
  const double z = st.Z[0](0, 0), c = st.C[0](0, 0), am = st.A_mat(0, 0);
  st.lambda_mult = (z - z * z / c) / (net.node(0).alpha * am * am);
  return st;
}

// ---------------------------------------------------------------------------
// Random valid allocations

struct RandomAllocationOptions {
  int last_node_attempts = 1000;  // redraws of the last node before restarting the tuple
  std::int64_t max_consecutive_failures = 1000000;
  // Scale an invalid draw of a non-final node by u/λ_max(Σ_yᵢ⁻¹·Dᵢ), u ~ U(0, 1),
  // instead of redrawing it.
  bool rescale_intermediate = false;
};

/// Allocations Dᵢ = Uᵢ·(βᵢΛᵢ + ηᵢΘᵢ)·Uᵢᵀ around base Dᵢ = Uᵢ·Λᵢ·Uᵢᵀ with Θᵢ
/// diagonal uniform on [0, 5·max Λᵢ]. The last node is rescaled so that the
/// weighted sum-rate equals R exactly. Allocation j uses stream (seed, j).
inline std::vector<Allocation> random_valid_allocations(const FusionNetwork& net, const Allocation& base,
                                                        const std::vector<double>& beta_w,
                                                        const std::vector<double>& eta_w, std::int64_t L,
                                                        std::uint64_t seed, RandomAllocationOptions opt = {}) {
  validate_allocation(net, base);
  const std::size_t N = net.size();
  if (beta_w.size() != N || eta_w.size() != N)
    throw Error(ErrorKind::InvalidParam, "one beta and one eta weight per node required");
  if (L < 1) throw Error(ErrorKind::InvalidParam, "L must be at least 1");
  const Index n = net.n();

  std::vector<SymEig> eig;
  for (const Matrix& d : base.D) eig.push_back(sym_eig_desc(d));

  const double log_beta = net.log_beta();
  const double alpha_last = net.node(N - 1).alpha;

  std::vector<Allocation> out;
  out.reserve(static_cast<std::size_t>(L));
  for (std::int64_t j = 0; j < L; ++j) {
    Rng rng(seed, static_cast<std::uint64_t>(j));
    std::int64_t failures = 0;
    auto fail = [&] {
      if (++failures > opt.max_consecutive_failures)
        throw Error(ErrorKind::GenerationStalled, "too many consecutive invalid draws");
    };
    auto draw = [&](std::size_t i) {
      const double iota = eig[i].values(0);
      Vector diag(n);
      for (Index k = 0; k < n; ++k) diag(k) = beta_w[i] * eig[i].values(k) + eta_w[i] * rng.uniform(0.0, 5.0 * iota);
      return Matrix(symmetrize(eig[i].U.transpose() * diag.asDiagonal() * eig[i].U));
    };
    for (;;) {
      Allocation a;
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < N; ++i) {
        Matrix d = draw(i);
        while (!is_valid_distortion(net, i, d)) {
          fail();
          if (opt.rescale_intermediate && SpdMatrix::is_spd(d)) {
            const Eigen::LLT<Matrix> llt(net.Sigma_y(i));
            const Matrix m = llt.matrixL().solve(Matrix(llt.matrixL().solve(d).transpose()));
            const double top = sym_eigenvalues(symmetrize(m))(n - 1);
            d *= rng.uniform(0.0, 1.0) / top;
          } else {
            d = draw(i);
          }
        }
        acc += net.node(i).alpha * log_det_spd(d);
        a.D.push_back(std::move(d));
      }
      bool done = false;
      for (int t = 0; t < opt.last_node_attempts && !done; ++t) {
        Matrix d = draw(N - 1);
        if (SpdMatrix::is_spd(d)) {
          const double log_c = ((log_beta - acc) / alpha_last - log_det_spd(d)) / static_cast<double>(n);
          d *= std::exp(log_c);
          if (is_valid_distortion(net, N - 1, d)) {
            a.D.push_back(std::move(d));
            done = true;
            break;
          }
        }
        fail();
      }
      if (done) {
        out.push_back(std::move(a));
        break;
      }
    }
  }
  return out;
}

}  // namespace covrate
