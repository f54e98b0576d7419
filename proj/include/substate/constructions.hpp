// Constructive procedures behind the one-shot smoothing bounds: gentle
// projection, the per-measurement substate witness, the smoothing witness
// with its explicit kappa bound, the two-branch purification decomposition,
// the scalar angle bound, and the converse check tying them together.
#pragma once

#include "substate/divergences.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace substate {

struct GentleProjectionResult {
  DensityMatrix rho_prime;
  double delta = 0.0;  // tr(Pi rho), the weight removed
};

// Normalized compression of rho onto the complement of range(Pi). Loses at
// most the removed weight in fidelity: F(rho, rho') >= 1 - delta.
inline GentleProjectionResult gentle_projection(const DensityMatrix& rho,
                                                const Projector& pi) {
  require_same_dim(rho.m(), pi.m(), "gentle_projection");
  const double delta = std::real((pi.m() * rho.m()).trace());
  if (delta >= 1.0 - 1e-9)
    throw domain_error("gentle_projection: removed weight " + std::to_string(delta) +
                       " leaves nothing to normalize");
  const Matrix comp = identity(rho.dim()) - pi.m();
  const Matrix compressed = hermitize(Matrix(comp * rho.m() * comp));
  const double tr = std::real(compressed.trace());
  return GentleProjectionResult{DensityMatrix(Matrix(compressed / tr)), delta};
}

struct MeasurementSubstateResult {
  DensityMatrix rho_prime;
  std::vector<Eigen::Index> b_set;  // indices of the removed eigenvectors
  Projector projector;              // onto the span of the removed eigenvectors
  double d_used = 0.0;
  double trace_pi_rho = 0.0;  // weight removed; < eps when d_used is valid
  double lhs = 0.0;           // (1 - eps) tr(M rho')
  double rhs = 0.0;           // 2^{d/eps} tr(M sigma)
};

// Witness state for a single unnormalized measurement operator M: diagonalize
// M, drop every eigenvector along which rho outweighs sigma by more than
// 2^{d/eps}, and renormalize. The removed weight stays below eps because the
// dropped directions, bundled into one projective outcome, would otherwise
// testify to a divergence above d. Membership uses the strict inequality with
// a small absolute guard so ties cannot flip with rounding.
inline MeasurementSubstateResult substate_for_measurement(
    const DensityMatrix& rho, const DensityMatrix& sigma, const PsdOperator& m,
    double eps, std::optional<double> d = std::nullopt,
    const DivergenceOptions& dopt = {}) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw validation_error("substate_for_measurement: eps must lie in (0, 1)");
  require_same_dim(rho.m(), sigma.m(), "substate_for_measurement");
  require_same_dim(rho.m(), m.m(), "substate_for_measurement");

  double d_used = 0.0;
  if (d.has_value()) {
    d_used = *d;
  } else {
    const ObservationalDivergenceResult dv = observational_divergence(rho, sigma, dopt);
    if (dv.infinite)
      throw domain_error(
          "substate_for_measurement: divergence is infinite (support violation)");
    if (dv.status != SdpStatus::optimal)
      throw solver_error("substate_for_measurement: divergence sweep ended with status " +
                         std::string(to_string(dv.status)));
    d_used = dv.value;
  }

  const double scale = std::exp2(d_used / eps);
  const EigSystem em = hermitian_eig(m.m());
  const Eigen::Index n = rho.dim();
  std::vector<Eigen::Index> b;
  Matrix pi_acc = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector v = em.vectors.col(i);
    const double pr = std::real((v.adjoint() * rho.m() * v)(0, 0));
    const double ps = std::real((v.adjoint() * sigma.m() * v)(0, 0));
    if (pr > scale * ps + 1e-12) {
      b.push_back(i);
      pi_acc += v * v.adjoint();
    }
  }
  Projector pi(hermitize(pi_acc));
  GentleProjectionResult gp = gentle_projection(rho, pi);

  MeasurementSubstateResult out{std::move(gp.rho_prime), std::move(b), std::move(pi),
                                d_used, gp.delta, 0.0, 0.0};
  out.lhs = (1.0 - eps) * std::real((m.m() * out.rho_prime.m()).trace());
  out.rhs = scale * std::real((m.m() * sigma.m()).trace());
  return out;
}

struct SmoothingWithBound {
  SmoothRelMinEntropyResult certificate;
  double divergence_bits = 0.0;
  double theorem_bound_bits = 0.0;  // divergence/eps + log2(1/(1-eps))
};

// Smoothing witness together with the explicit bound it is guaranteed to
// satisfy: value <= D/eps + log2(1/(1-eps)).
inline SmoothingWithBound substate_smoothing(const DensityMatrix& rho,
                                             const DensityMatrix& sigma, double eps,
                                             const DivergenceOptions& dopt = {},
                                             const SdpOptions& sopt = {}) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw validation_error("substate_smoothing: eps must lie in (0, 1)");
  const ObservationalDivergenceResult dv = observational_divergence(rho, sigma, dopt);
  if (dv.infinite)
    throw domain_error("substate_smoothing: divergence is infinite (support violation)");
  if (dv.status != SdpStatus::optimal)
    throw solver_error("substate_smoothing: divergence sweep ended with status " +
                       std::string(to_string(dv.status)));
  SmoothingWithBound out;
  out.certificate = smooth_relative_min_entropy(rho, sigma, eps, sopt);
  out.divergence_bits = dv.value;
  out.theorem_bound_bits = dv.value / eps + std::log2(1.0 / (1.0 - eps));
  return out;
}

// Purification of `target` on K (x) H maximizing overlap with `reference`
// (itself a purification of some state on H with the same ancilla size).
// Closed form: all purifications with ancilla K share a Gram matrix, so they
// differ by a left unitary; the best one comes from the polar part of the
// cross term between the two amplitude matrices, and the achieved overlap is
// the trace norm of that cross term.
inline PureState uhlmann_optimal_purification(const DensityMatrix& target,
                                              const PureState& reference) {
  if (reference.dims().size() != 2)
    throw validation_error("uhlmann_optimal_purification: reference must be bipartite");
  const Eigen::Index k = reference.dims()[0];
  const Eigen::Index n = reference.dims()[1];
  if (target.dim() != n)
    throw validation_error("uhlmann_optimal_purification: system dimension mismatch");
  if (k < n)
    throw validation_error("uhlmann_optimal_purification: ancilla smaller than system");

  Matrix mv(k, n);  // amplitude matrix of the reference, [ancilla, system]
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index h = 0; h < n; ++h) mv(a, h) = reference.amplitudes()(a * n + h);

  const EigSystem es = hermitian_eig(target.m());
  Matrix a0 = Matrix::Zero(k, n);  // spectral amplitude matrix of the target
  for (Eigen::Index j = 0; j < n; ++j)
    a0.row(j) = std::sqrt(std::max(es.values(j), 0.0)) * es.vectors.col(j).transpose();

  const Matrix cross = a0 * mv.adjoint();
  Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix w = svd.matrixV() * svd.matrixU().adjoint();
  const Matrix mvp = w * a0;

  Vector amps(k * n);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index h = 0; h < n; ++h) amps(a * n + h) = mvp(a, h);
  amps /= amps.norm();
  return PureState(amps, {k, n});
}

struct PurificationTriple {
  PureState v_prime;  // purification of rho_prime, Uhlmann-aligned with v
  PureState w_prime;  // purification of theta
  PureState w;        // two-branch purification of sigma on C2 (x) K (x) H
  double alpha = 0.0;
  DensityMatrix theta;
  DensityMatrix rho_prime;
  double d_used = 0.0;
  double theta_floor = 0.0;  // smallest eigenvalue of the raw residual state
  PureState v;               // the reference purification of rho
};

// Two-branch purification of sigma: sigma = alpha rho' + (1-alpha) theta with
// alpha = (1-eps) 2^{-d/eps}, so sqrt(alpha)|0>|v'> + sqrt(1-alpha)|1>|w'>
// purifies sigma while the first branch stays (1-eps)-close to rho's
// purification.
inline PurificationTriple purification_decomposition(const DensityMatrix& rho,
                                                     const DensityMatrix& sigma,
                                                     double eps,
                                                     const DivergenceOptions& dopt = {},
                                                     const SdpOptions& sopt = {}) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw validation_error("purification_decomposition: eps must lie in (0, 1)");
  const SmoothingWithBound sw = substate_smoothing(rho, sigma, eps, dopt, sopt);
  if (sw.certificate.status != SdpStatus::optimal)
    throw solver_error("purification_decomposition: smoothing solve ended with status " +
                       std::string(to_string(sw.certificate.status)));

  const double d = sw.divergence_bits;
  const double alpha = (1.0 - eps) * std::exp2(-d / eps);
  const DensityMatrix rho_prime(sw.certificate.rho_prime);
  const Matrix theta_raw =
      hermitize(Matrix((sigma.m() - alpha * rho_prime.m()) / (1.0 - alpha)));
  const double theta_floor = min_eigenvalue(theta_raw);
  const DensityMatrix theta = project_to_density(theta_raw);

  PureState v = purify(rho);
  PureState v_prime = uhlmann_optimal_purification(rho_prime, v);
  PureState w_prime = purify(theta);

  const Eigen::Index block = v_prime.amplitudes().size();
  Vector w_amps(2 * block);
  w_amps.head(block) = std::sqrt(alpha) * v_prime.amplitudes();
  w_amps.tail(block) = std::sqrt(1.0 - alpha) * w_prime.amplitudes();
  w_amps /= w_amps.norm();
  PureState w(w_amps, {2, rho.dim(), rho.dim()});

  return PurificationTriple{std::move(v_prime), std::move(w_prime), std::move(w),
                            alpha,  theta,      rho_prime,
                            d,      theta_floor, std::move(v)};
}

// Scalar floor on the surviving outcome weight after smoothing: if two
// outcome distributions (delta, 1-delta) and (delta', 1-delta') have squared
// Bhattacharyya overlap at least 1 - beta*delta, then delta' >= (1-sqrt(beta))^2 delta.
inline double angle_fidelity_bound(double delta, double beta) {
  if (!(delta >= 0.0) || !(delta <= 1.0))
    throw domain_error("angle_fidelity_bound: delta must lie in [0, 1]");
  if (!(beta >= 0.0) || !(beta <= 0.25))
    throw domain_error("angle_fidelity_bound: beta must lie in [0, 1/4]");
  const double r = 1.0 - std::sqrt(beta);
  return r * r * delta;
}

struct ConversePoint {
  double eps = 0.0;
  double s_eps_bits = 0.0;  // smoothed value at this eps
  double k_eps = 0.0;       // eps * (s_eps_bits - log2(1/(1-eps)))
  bool solved = false;
  int iterations = 0;
};

struct ConverseReport {
  double divergence = 0.0;
  bool divergence_infinite = false;
  double witness_delta = 0.0;  // tr(M* rho) at the divergence witness
  double epsilon_used = 0.0;   // witness_delta / 4
  double k = 0.0;              // max over solved points, clamped at 0
  double bound = 0.0;          // 4k + 3
  bool forward_ok = false;     // every solved k(eps) <= divergence + 1e-4
  bool all_solved = false;
  bool pass = false;  // divergence <= bound + 1e-4
  std::vector<ConversePoint> points;
};

// Sandwich check around the divergence: the smoothing exponents k(eps) never
// exceed D, and D never exceeds 4k + 3 once eps = delta*/4 joins the grid,
// delta* being the weight of the optimal divergence witness.
inline ConverseReport converse_check(const DensityMatrix& rho, const DensityMatrix& sigma,
                                     std::vector<double> eps_grid,
                                     const DivergenceOptions& dopt = {},
                                     const SdpOptions& sopt = {}) {
  ConverseReport out;
  const ObservationalDivergenceResult dv = observational_divergence(rho, sigma, dopt);
  if (dv.infinite) {
    out.divergence_infinite = true;
    out.divergence = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.divergence = dv.value;
  out.witness_delta = dv.p_star;
  out.epsilon_used = dv.p_star / 4.0;

  std::vector<double> eps_set = std::move(eps_grid);
  eps_set.push_back(out.epsilon_used);
  std::sort(eps_set.begin(), eps_set.end());
  eps_set.erase(std::unique(eps_set.begin(), eps_set.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                eps_set.end());

  out.forward_ok = true;
  out.all_solved = true;
  double kmax = 0.0;
  for (double eps : eps_set) {
    if (!(eps > 0.0) || !(eps < 1.0)) continue;
    ConversePoint pt;
    pt.eps = eps;
    const SmoothRelMinEntropyResult s = smooth_relative_min_entropy(rho, sigma, eps, sopt);
    pt.iterations = s.solution.iterations;
    if (s.status == SdpStatus::optimal) {
      pt.solved = true;
      pt.s_eps_bits = s.value;
      pt.k_eps = eps * (s.value - std::log2(1.0 / (1.0 - eps)));
      kmax = std::max(kmax, pt.k_eps);
      if (pt.k_eps > out.divergence + 1e-4) out.forward_ok = false;
    } else {
      out.all_solved = false;
    }
    out.points.push_back(pt);
  }
  out.k = std::max(kmax, 0.0);
  out.bound = 4.0 * out.k + 3.0;
  out.pass = out.divergence <= out.bound + 1e-4;
  return out;
}

}  // namespace substate
