// One-shot divergence quantities between density matrices: relative entropy,
// relative min-entropy, observational divergence via a measurement sweep, the
// fidelity SDP, and the smoothed relative min-entropy with dual certificates.
//
// Quantities that blow up when supp(rho) escapes supp(sigma) report an
// `infinite` flag and a kernel witness instead of a float infinity.
#pragma once

#include "substate/sdp.hpp"
#include "substate/states.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace substate {

struct RelativeEntropyResult {
  double value = 0.0;  // NaN when infinite
  bool infinite = false;
  SupportCheck support;
};

inline RelativeEntropyResult relative_entropy(const DensityMatrix& rho,
                                              const DensityMatrix& sigma,
                                              double rank_tol = tol::rank_rel) {
  RelativeEntropyResult out;
  out.support = support_check(rho.m(), sigma.m(), rank_tol);
  if (!out.support.contained) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const SupportRestriction sr = restrict_to_support(rho.m(), sigma.m(), rank_tol);
  const EigSystem er = hermitian_eig(sr.rho);
  const double cut = rank_cutoff(er.values, rank_tol);
  double s = 0.0;
  for (Eigen::Index i = 0; i < er.values.size(); ++i)
    if (er.values(i) > cut) s += er.values(i) * std::log2(er.values(i));
  const Matrix log_sigma = log2_on_support(sr.sigma);
  s -= std::real((sr.rho * log_sigma).trace());
  out.value = s;
  return out;
}

struct RelativeMinEntropyResult {
  double value = 0.0;  // log2(kappa), NaN when infinite
  double kappa = 0.0;  // NaN when infinite
  bool infinite = false;
  SupportCheck support;
};

// Smallest kappa with rho <= kappa * sigma, computed as the top eigenvalue of
// sigma^{-1/2} rho sigma^{-1/2} on supp(sigma).
inline RelativeMinEntropyResult relative_min_entropy(const DensityMatrix& rho,
                                                     const DensityMatrix& sigma,
                                                     double rank_tol = tol::rank_rel) {
  RelativeMinEntropyResult out;
  out.support = support_check(rho.m(), sigma.m(), rank_tol);
  if (!out.support.contained) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const SupportRestriction sr = restrict_to_support(rho.m(), sigma.m(), rank_tol);
  const Matrix isq = inv_sqrt_on_support(sr.sigma);
  const Matrix t = hermitize(Matrix(isq * sr.rho * isq));
  out.kappa = hermitian_eig(t).values.maxCoeff();
  out.value = std::log2(out.kappa);
  return out;
}

// max <rho, M> over M >= 0 with <sigma, M> <= 1; equals the dominance factor
// min{kappa : rho <= kappa sigma} when supports are compatible.
inline SdpProblem build_measurement_dominance_problem(const Matrix& rho,
                                                      const Matrix& sigma) {
  SdpProblem p;
  const int mb = p.add_block("M", rho.rows());
  p.add_objective(mb, rho);
  p.add_inequality("sigma_weight", {{mb, sigma}}, 1.0);
  p.sense = SdpSense::maximize;
  return p;
}

struct MeasuredDominanceResult {
  double kappa = 0.0;  // NaN when infinite
  bool infinite = false;
  SupportCheck support;
  Matrix witness;  // optimal M on the full input space
  SdpStatus status = SdpStatus::numerical_failure;
  SdpSolution solution;
};

inline MeasuredDominanceResult kappa_via_measurement(const DensityMatrix& rho,
                                                     const DensityMatrix& sigma,
                                                     const SdpOptions& opt = {}) {
  MeasuredDominanceResult out;
  out.support = support_check(rho.m(), sigma.m());
  if (!out.support.contained) {
    out.infinite = true;
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const SupportRestriction sr = restrict_to_support(rho.m(), sigma.m());
  const SdpProblem p = build_measurement_dominance_problem(sr.rho, sr.sigma);
  out.solution = solve(p, opt);
  out.status = out.solution.status;
  if (out.status == SdpStatus::optimal) {
    out.kappa = out.solution.primal_objective;
    out.witness = sr.isometry * out.solution.X[0] * sr.isometry.adjoint();
  }
  return out;
}

struct KappaPair {
  double direct = 0.0;  // top eigenvalue of sigma^{-1/2} rho' sigma^{-1/2}
  double dual = 0.0;    // optimum of the measurement program
  bool infinite = false;
  RelativeMinEntropyResult eigen_side;
  MeasuredDominanceResult measurement_side;
};

// The dominance factor min{kappa : rho' <= kappa sigma} computed two ways:
// directly from the spectrum and through its dual maximization over
// measurements. The two agree within solver tolerance when supports allow.
inline KappaPair kappa_via_dual(const DensityMatrix& rho_prime,
                                const DensityMatrix& sigma,
                                const SdpOptions& opt = {}) {
  KappaPair out;
  out.eigen_side = relative_min_entropy(rho_prime, sigma);
  out.measurement_side = kappa_via_measurement(rho_prime, sigma, opt);
  out.infinite = out.eigen_side.infinite || out.measurement_side.infinite;
  if (!out.infinite) {
    out.direct = out.eigen_side.kappa;
    out.dual = out.measurement_side.kappa;
  } else {
    out.direct = std::numeric_limits<double>::quiet_NaN();
    out.dual = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// min <sigma, M> over 0 <= M <= I with <rho, M> = p, on the caller's space.
inline SdpProblem build_sigma_weight_problem(const Matrix& rho, const Matrix& sigma,
                                             double p_target) {
  const Eigen::Index n = rho.rows();
  SdpProblem p;
  const int mb = p.add_block("M", n);
  const int nb = p.add_block("complement", n);
  p.add_objective(mb, sigma);
  const auto basis = hermitian_basis_targets(Matrix(Matrix::Identity(n, n)));
  for (std::size_t j = 0; j < basis.size(); ++j)
    p.add_equality("resolution[" + std::to_string(j) + "]",
                   {{mb, basis[j].first}, {nb, basis[j].first}}, basis[j].second);
  p.add_equality("rho_weight", {{mb, rho}}, p_target);
  p.sense = SdpSense::minimize;
  return p;
}

struct SigmaWeightResult {
  double q = 0.0;
  Matrix m;  // achieving operator, caller's space
  SdpStatus status = SdpStatus::numerical_failure;
  int iterations = 0;
};

inline SigmaWeightResult min_sigma_weight(const Matrix& rho, const Matrix& sigma,
                                          double p_target, const SdpOptions& opt = {}) {
  SigmaWeightResult out;
  const SdpProblem p = build_sigma_weight_problem(rho, sigma, p_target);
  const SdpSolution sol = solve(p, opt);
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == SdpStatus::optimal) {
    out.q = sol.primal_objective;
    out.m = sol.X[0];
  }
  return out;
}

struct SweepPoint {
  double p = 0.0;
  double q = 0.0;
  double g = 0.0;  // p * log2(p / q)
  bool ok = true;
};

struct DivergenceOptions {
  int grid_points = 129;
  double refine_tol = 1e-6;  // golden-section bracket width in p
  double rank_tol = tol::rank_rel;
  SdpOptions sdp;
};

struct ObservationalDivergenceResult {
  double value = 0.0;  // NaN when infinite
  bool infinite = false;
  SupportCheck support;
  double p_star = 0.0;
  double q_star = 0.0;
  Matrix witness;  // optimal M lifted to the full input space
  double witness_projector_distance = 0.0;
  std::vector<SweepPoint> sweep;  // grid pass, in p order
  int refinements = 0;            // extra evaluations spent on refinement
  int solver_iterations = 0;      // summed over every weight solve
  SdpStatus status = SdpStatus::numerical_failure;
};

// sup over 0 <= M <= I of tr(M rho) log2(tr(M rho)/tr(M sigma)). The sweep
// walks tr(M rho) = p over a uniform grid, solving the minimal sigma-weight
// SDP at every point, then polishes each grid-local maximum by golden-section.
inline ObservationalDivergenceResult observational_divergence(
    const DensityMatrix& rho, const DensityMatrix& sigma,
    const DivergenceOptions& options = {}) {
  if (options.grid_points < 3)
    throw validation_error("observational_divergence: grid needs at least 3 points");
  if (!(options.refine_tol > 0.0))
    throw validation_error("observational_divergence: refine_tol must be positive");

  ObservationalDivergenceResult out;
  out.support = support_check(rho.m(), sigma.m(), options.rank_tol);
  if (!out.support.contained) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  const SupportRestriction sr = restrict_to_support(rho.m(), sigma.m(), options.rank_tol);
  SdpOptions sdp = options.sdp;
  sdp.record_trace = false;
  sdp.gap_tol = std::min(sdp.gap_tol, 1e-9);

  Matrix best_m;
  double best_g = -1.0, best_p = 0.0, best_q = 0.0;
  bool any_ok = false;

  auto eval = [&](double p) {
    SweepPoint pt;
    pt.p = p;
    if (p <= 0.0) {
      pt.q = 0.0;
      pt.g = 0.0;
      if (best_g < 0.0) {
        best_g = 0.0;
        best_p = 0.0;
        best_q = 0.0;
        best_m = Matrix::Zero(sr.rho.rows(), sr.rho.cols());
      }
      any_ok = true;
      return pt;
    }
    const SigmaWeightResult w = min_sigma_weight(sr.rho, sr.sigma, p, sdp);
    out.solver_iterations += w.iterations;
    if (w.status != SdpStatus::optimal) {
      pt.ok = false;
      pt.g = -std::numeric_limits<double>::infinity();
      return pt;
    }
    any_ok = true;
    pt.q = std::max(w.q, 1e-300);
    pt.g = p * std::log2(p / pt.q);
    if (pt.g > best_g) {
      best_g = pt.g;
      best_p = p;
      best_q = pt.q;
      best_m = w.m;
    }
    return pt;
  };

  const int gp = options.grid_points;
  out.sweep.reserve(static_cast<std::size_t>(gp));
  for (int i = 0; i < gp; ++i)
    out.sweep.push_back(eval(static_cast<double>(i) / (gp - 1)));

  // Golden-section polish around every grid-local maximum.
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < gp; ++i) {
    if (!out.sweep[i].ok) continue;
    const double gi = out.sweep[i].g;
    const bool up = i == 0 || !out.sweep[i - 1].ok || gi >= out.sweep[i - 1].g;
    const bool down = i == gp - 1 || !out.sweep[i + 1].ok || gi >= out.sweep[i + 1].g;
    if (!up || !down) continue;
    double lo = i == 0 ? 0.0 : out.sweep[i - 1].p;
    double hi = i == gp - 1 ? 1.0 : out.sweep[i + 1].p;
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = eval(x1).g;
    double f2 = eval(x2).g;
    out.refinements += 2;
    while (hi - lo > options.refine_tol) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + golden * (hi - lo);
        f2 = eval(x2).g;
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - golden * (hi - lo);
        f1 = eval(x1).g;
      }
      ++out.refinements;
    }
  }

  if (!any_ok) {
    out.status = SdpStatus::numerical_failure;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.status = SdpStatus::optimal;
  out.value = best_g;
  out.p_star = best_p;
  out.q_star = best_q;
  out.witness = sr.isometry * best_m * sr.isometry.adjoint();
  const EigSystem ew = hermitian_eig(hermitize(out.witness));
  double dist = 0.0;
  for (Eigen::Index i = 0; i < ew.values.size(); ++i) {
    const double lam = std::min(1.0, std::max(0.0, ew.values(i)));
    dist = std::max(dist, std::min(lam, 1.0 - lam));
  }
  out.witness_projector_distance = dist;
  return out;
}

// Fidelity as a maximization over the off-diagonal corner of a PSD matrix
// with both diagonal corners pinned; the optimum is sqrt(F).
//
// The corners are pinned on their own supports. A feasible off-diagonal
// corner necessarily has its range inside supp(a) and its corange inside
// supp(b), so the ambient program and the reduced one take the same values;
// the basis change turns the plain trace objective into one weighted by the
// overlap of the two support bases. On the reduced space both corners are
// strictly positive definite, which keeps the central path well conditioned
// even for pure inputs.
inline SdpProblem build_fidelity_problem(const Matrix& a, const Matrix& b) {
  const Matrix va = support_basis(a);
  const Matrix vb = support_basis(b);
  const Matrix ar = hermitize(Matrix(va.adjoint() * a * va));
  const Matrix br = hermitize(Matrix(vb.adjoint() * b * vb));
  const Matrix overlap = va.adjoint() * vb;
  const Eigen::Index na = ar.rows(), nb = br.rows();
  SdpProblem p;
  const int yb = p.add_block("Y", na + nb);
  Matrix f = Matrix::Zero(na + nb, na + nb);
  f.block(0, na, na, nb) = 0.5 * overlap;
  f.block(na, 0, nb, na) = 0.5 * overlap.adjoint();
  p.add_objective(yb, f);
  const auto top = hermitian_basis_targets(ar);
  const auto bottom = hermitian_basis_targets(br);
  for (std::size_t j = 0; j < top.size(); ++j)
    p.add_equality("fix_left[" + std::to_string(j) + "]",
                   {{yb, embed_at(na + nb, 0, top[j].first)}}, top[j].second);
  for (std::size_t j = 0; j < bottom.size(); ++j)
    p.add_equality("fix_right[" + std::to_string(j) + "]",
                   {{yb, embed_at(na + nb, na, bottom[j].first)}}, bottom[j].second);
  p.sense = SdpSense::maximize;
  return p;
}

struct FidelitySdpResult {
  double fidelity = 0.0;       // squared convention, optimum^2
  double root_fidelity = 0.0;  // SDP optimum
  SdpStatus status = SdpStatus::numerical_failure;
  SdpSolution solution;
};

inline FidelitySdpResult fidelity_sdp(const DensityMatrix& rho,
                                      const DensityMatrix& rho_prime,
                                      const SdpOptions& opt = {}) {
  FidelitySdpResult out;
  const SdpProblem p = build_fidelity_problem(rho.m(), rho_prime.m());
  out.solution = solve(p, opt);
  out.status = out.solution.status;
  if (out.status == SdpStatus::optimal) {
    out.root_fidelity = std::max(out.solution.primal_objective, 0.0);
    out.fidelity = out.root_fidelity * out.root_fidelity;
  }
  return out;
}

// Smoothing program: minimize kappa over
//   Y = [[R, X], [X^H, Q]] >= 0,  T >= 0,  kappa >= 0
//   Q = rho,  R + T = kappa * sigma,  tr R = 1,  fidelity corner >= sqrt(1 - eps).
// Feasible R are exactly the unit-trace rho' with F(rho, rho') >= 1 - eps
// and rho' <= kappa sigma. The candidate corner lives on supp(sigma) (it has
// to, being dominated by kappa sigma) and the pinned corner on supp(rho), so
// the program is posed on those subspaces; the off-diagonal coupling picks up
// the overlap matrix between the two bases, as in build_fidelity_problem.
struct SmoothingModel {
  SdpProblem problem;
  Matrix v_sigma, v_rho;  // ambient space -> corner subspace isometries
  Matrix overlap;         // v_sigma^H v_rho
  Matrix rho_reduced;     // rho on supp(rho), strictly positive definite
  Matrix sigma_reduced;   // sigma on supp(sigma), strictly positive definite
};

inline SmoothingModel build_smoothing_model(const Matrix& rho, const Matrix& sigma,
                                            double eps) {
  SmoothingModel m;
  m.v_sigma = support_basis(sigma);
  m.v_rho = support_basis(rho);
  m.overlap = m.v_sigma.adjoint() * m.v_rho;
  m.rho_reduced = hermitize(Matrix(m.v_rho.adjoint() * rho * m.v_rho));
  m.sigma_reduced = hermitize(Matrix(m.v_sigma.adjoint() * sigma * m.v_sigma));
  const Eigen::Index ns = m.sigma_reduced.rows();
  const Eigen::Index nr = m.rho_reduced.rows();

  SdpProblem p;
  const int yb = p.add_block("Y", ns + nr);
  const int tb = p.add_block("T", ns);
  const int kb = p.add_block("kappa", 1);
  p.add_objective(kb, Matrix::Identity(1, 1));

  const auto rho_basis = hermitian_basis_targets(m.rho_reduced);
  const auto sigma_basis = hermitian_basis_targets(m.sigma_reduced);
  for (std::size_t j = 0; j < rho_basis.size(); ++j)
    p.add_equality("fix_rho[" + std::to_string(j) + "]",
                   {{yb, embed_at(ns + nr, ns, rho_basis[j].first)}},
                   rho_basis[j].second);
  for (std::size_t j = 0; j < sigma_basis.size(); ++j)
    p.add_equality("substate[" + std::to_string(j) + "]",
                   {{yb, embed_at(ns + nr, 0, sigma_basis[j].first)},
                    {tb, sigma_basis[j].first},
                    {kb, Matrix::Constant(1, 1, -sigma_basis[j].second)}},
                   0.0);
  p.add_equality("trace_rho_prime",
                 {{yb, embed_at(ns + nr, 0, Matrix(Matrix::Identity(ns, ns)))}}, 1.0);
  Matrix f = Matrix::Zero(ns + nr, ns + nr);
  f.block(0, ns, ns, nr) = 0.5 * m.overlap;
  f.block(ns, 0, nr, ns) = 0.5 * m.overlap.adjoint();
  p.add_inequality("fidelity_floor", {{yb, Matrix(-f)}}, -std::sqrt(1.0 - eps));
  m.problem = p;
  return m;
}

struct SmoothingDual {
  Matrix z1, z2;  // z1 on supp(sigma), z2 on supp(rho)
  double z3 = 0.0, z4 = 0.0;
  double value = 0.0;       // z4 + 2 z3 sqrt(1-eps) + tr(Z2 rho)
  double lmi_margin = 0.0;  // max eigenvalue of [[z4 I - Z1, z3 W], [z3 W^H, Z2]]
  double sigma_weight = 0.0;  // tr(Z1 sigma)
};

struct SmoothRelMinEntropyResult {
  double epsilon = 0.0;
  double value = 0.0;  // log2(kappa), NaN when not solved
  double kappa = 0.0;
  Matrix rho_prime;          // full input space, trace-one PSD within solver tolerance
  Matrix x_block;            // off-diagonal fidelity corner, full input space
  double fidelity_achieved = 0.0;  // closed-form F(rho, rho_prime) after cleanup
  bool feasible = true;
  SdpStatus status = SdpStatus::numerical_failure;
  Matrix isometry;  // full space -> supp(sigma), where the candidate lives
  SmoothingDual dual;
  SdpSolution solution;
  CertificateReport certificate;
};

inline SmoothRelMinEntropyResult smooth_relative_min_entropy(
    const DensityMatrix& rho, const DensityMatrix& sigma, double eps,
    const SdpOptions& opt = {}) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw validation_error("smooth_relative_min_entropy: eps must lie in (0, 1)");
  require_same_dim(rho.m(), sigma.m(), "smooth_relative_min_entropy");

  SmoothRelMinEntropyResult out;
  out.epsilon = eps;
  const SmoothingModel model = build_smoothing_model(rho.m(), sigma.m(), eps);
  const Eigen::Index ns = model.sigma_reduced.rows();
  const Eigen::Index nr = model.rho_reduced.rows();
  out.isometry = model.v_sigma;

  out.solution = solve(model.problem, opt);
  out.status = out.solution.status;
  if (out.status == SdpStatus::infeasible) {
    out.feasible = false;
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  if (out.status != SdpStatus::optimal) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  out.kappa = out.solution.primal_objective;
  out.value = std::log2(out.kappa);
  const Matrix r_corner = out.solution.X[0].topLeftCorner(ns, ns);
  const DensityMatrix cleaned =
      project_to_density(model.v_sigma * r_corner * model.v_sigma.adjoint());
  out.rho_prime = cleaned.m();
  out.x_block = model.v_sigma * out.solution.X[0].topRightCorner(ns, nr) *
                model.v_rho.adjoint();
  out.fidelity_achieved = fidelity(rho, cleaned);
  out.certificate = verify_certificate(model.problem, out.solution, opt);

  // Dual recovery. Multiplier layout follows constraint insertion order:
  // nr^2 fix_rho, ns^2 substate, trace_rho_prime, then the fidelity inequality.
  const auto rho_basis = hermitian_basis_targets(Matrix(Matrix::Zero(nr, nr)));
  const auto sigma_basis = hermitian_basis_targets(Matrix(Matrix::Zero(ns, ns)));
  const Eigen::Index nrsq = static_cast<Eigen::Index>(rho_basis.size());
  const Eigen::Index nssq = static_cast<Eigen::Index>(sigma_basis.size());
  Matrix z2 = Matrix::Zero(nr, nr), z1 = Matrix::Zero(ns, ns);
  for (Eigen::Index j = 0; j < nrsq; ++j) z2 += out.solution.y(j) * rho_basis[j].first;
  for (Eigen::Index j = 0; j < nssq; ++j)
    z1 -= out.solution.y(nrsq + j) * sigma_basis[j].first;
  out.dual.z1 = hermitize(z1);
  out.dual.z2 = hermitize(z2);
  out.dual.z4 = out.solution.y(nrsq + nssq);
  out.dual.z3 = -0.5 * out.solution.y(nrsq + nssq + 1);
  out.dual.value = out.dual.z4 + 2.0 * out.dual.z3 * std::sqrt(1.0 - eps) +
                   std::real((out.dual.z2 * model.rho_reduced).trace());
  out.dual.sigma_weight = std::real((out.dual.z1 * model.sigma_reduced).trace());
  Matrix lmi(ns + nr, ns + nr);
  lmi.topLeftCorner(ns, ns) = out.dual.z4 * Matrix::Identity(ns, ns) - out.dual.z1;
  lmi.topRightCorner(ns, nr) = out.dual.z3 * model.overlap;
  lmi.bottomLeftCorner(nr, ns) = out.dual.z3 * model.overlap.adjoint();
  lmi.bottomRightCorner(nr, nr) = out.dual.z2;
  EigSystem el = hermitian_eig(hermitize(lmi));
  out.dual.lmi_margin = el.values.maxCoeff();
  return out;
}

struct WeightedSmoothedMinResult {
  double value = 0.0;  // min <W, rho'> over the fidelity ball, NaN when unsolved
  SdpStatus status = SdpStatus::numerical_failure;
  SdpSolution solution;
};

// Inner minimization of the smoothing saddle point: min <W, rho'> over states
// rho' on supp(sigma) with F(rho', rho) >= 1 - eps. W must be given in the
// supp(sigma) coordinates produced by build_smoothing_model for the same
// (rho, sigma) — the dual witness z1 of a smoothing run can be passed as is.
// At that witness the optimum reproduces 2^value of the smoothing run.
inline WeightedSmoothedMinResult min_weight_over_smoothed(
    const Matrix& weight, const DensityMatrix& rho, const DensityMatrix& sigma,
    double eps, const SdpOptions& opt = {}) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw validation_error("min_weight_over_smoothed: eps must lie in (0, 1)");
  const SmoothingModel model = build_smoothing_model(rho.m(), sigma.m(), eps);
  const Eigen::Index ns = model.sigma_reduced.rows();
  const Eigen::Index nr = model.rho_reduced.rows();
  if (weight.rows() != ns || weight.cols() != ns)
    throw validation_error("min_weight_over_smoothed: weight must live on supp(sigma)");

  SdpProblem p;
  const int yb = p.add_block("Y", ns + nr);
  p.add_objective(yb, embed_at(ns + nr, 0, weight));
  const auto rho_basis = hermitian_basis_targets(model.rho_reduced);
  for (std::size_t j = 0; j < rho_basis.size(); ++j)
    p.add_equality("fix_rho[" + std::to_string(j) + "]",
                   {{yb, embed_at(ns + nr, ns, rho_basis[j].first)}},
                   rho_basis[j].second);
  p.add_equality("trace_rho_prime",
                 {{yb, embed_at(ns + nr, 0, Matrix(Matrix::Identity(ns, ns)))}}, 1.0);
  Matrix f = Matrix::Zero(ns + nr, ns + nr);
  f.block(0, ns, ns, nr) = 0.5 * model.overlap;
  f.block(ns, 0, nr, ns) = 0.5 * model.overlap.adjoint();
  p.add_inequality("fidelity_floor", {{yb, Matrix(-f)}}, -std::sqrt(1.0 - eps));

  WeightedSmoothedMinResult out;
  out.solution = solve(p, opt);
  out.status = out.solution.status;
  out.value = out.status == SdpStatus::optimal
                  ? out.solution.primal_objective
                  : std::numeric_limits<double>::quiet_NaN();
  return out;
}

}  // namespace substate
