// sdp.hpp — dense semidefinite programming over complex Hermitian blocks.
//
// Problems are stated as min/max sum_b <C_b, X_b> over PSD blocks X_b subject
// to linear equality and <= inequality constraints. The engine canonicalizes
// to a minimization with 1x1 slack blocks, embeds each n x n Hermitian block
// as the 2n x 2n real symmetric [[Re, -Im], [Im, Re]] with coefficients halved
// to compensate the trace doubling, and runs an infeasible-start primal-dual
// path-following method with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector step. Solutions are symmetrized back to complex blocks.
// A direct complex-arithmetic path exists for cross-checking the embedding.
#pragma once

#include "substate/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace substate {

struct SdpBlockSpec {
  std::string name;
  Eigen::Index dim;
};

enum class SdpSense { minimize, maximize };

struct SdpTerm {
  int block;
  Matrix coeff;  // Hermitian
};

struct SdpConstraint {
  std::string label;
  std::vector<SdpTerm> terms;
  double rhs;
};

struct SdpProblem {
  std::vector<SdpBlockSpec> blocks;
  std::vector<SdpTerm> objective;
  std::vector<SdpConstraint> equalities;
  std::vector<SdpConstraint> inequalities;  // sum of terms <= rhs
  SdpSense sense = SdpSense::minimize;

  int add_block(const std::string& name, Eigen::Index dim) {
    blocks.push_back({name, dim});
    return static_cast<int>(blocks.size()) - 1;
  }
  void add_objective(int block, const Matrix& coeff) {
    objective.push_back({block, hermitize(coeff)});
  }
  void add_equality(const std::string& label, std::vector<SdpTerm> terms, double rhs) {
    for (auto& t : terms) t.coeff = hermitize(t.coeff);
    equalities.push_back({label, std::move(terms), rhs});
  }
  void add_inequality(const std::string& label, std::vector<SdpTerm> terms, double rhs) {
    for (auto& t : terms) t.coeff = hermitize(t.coeff);
    inequalities.push_back({label, std::move(terms), rhs});
  }

  int block_index(const std::string& name) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].name == name) return static_cast<int>(i);
    throw validation_error("SdpProblem: unknown block \"" + name + "\"");
  }

  void validate(Eigen::Index max_block_dim = 64) const {
    if (blocks.empty()) throw validation_error("SdpProblem: no blocks");
    for (const auto& b : blocks) {
      if (b.dim < 1) throw validation_error("SdpProblem: block \"" + b.name + "\" has dim < 1");
      if (b.dim > max_block_dim)
        throw validation_error("SdpProblem: block \"" + b.name + "\" exceeds supported dim " +
                               std::to_string(max_block_dim));
    }
    auto check_terms = [&](const std::vector<SdpTerm>& terms, const std::string& where) {
      for (const auto& t : terms) {
        if (t.block < 0 || t.block >= static_cast<int>(blocks.size()))
          throw validation_error("SdpProblem: bad block index in " + where);
        if (t.coeff.rows() != blocks[t.block].dim || t.coeff.cols() != blocks[t.block].dim)
          throw validation_error("SdpProblem: coefficient shape mismatch in " + where);
        if (!is_hermitian(t.coeff))
          throw validation_error("SdpProblem: non-Hermitian coefficient in " + where);
      }
    };
    check_terms(objective, "objective");
    for (const auto& c : equalities) check_terms(c.terms, "equality \"" + c.label + "\"");
    for (const auto& c : inequalities) check_terms(c.terms, "inequality \"" + c.label + "\"");
  }
};

enum class SdpStatus { optimal, infeasible, numerical_failure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    default: return "numerical-failure";
  }
}

struct SdpOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_iter = 200;
  bool use_complex = false;   // skip the real embedding, run complex arithmetic
  bool record_trace = true;
  double infeas_ratio = 1e8;  // residual-normalized duality measure threshold
  int infeas_consecutive = 10;
  Eigen::Index max_block_dim = 64;
};

struct SdpIterateInfo {
  double primal_objective;
  double dual_objective;
  double mu;
  double primal_residual;
  double dual_residual;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  std::vector<Matrix> X;  // per user block, Hermitian
  // Dual data is reported for the canonical minimization: C_min - sum y_i A_i = S
  // with S PSD, where C_min carries a flipped sign for maximize problems.
  std::vector<Matrix> S;
  RealVector y;  // equalities first, then inequality multipliers (<= 0)
  RealVector ineq_slack;  // primal slack value per inequality
  double primal_objective = 0.0;  // user sense
  double dual_objective = 0.0;    // user sense
  double gap = 0.0;               // canonical minimize sense: primal - dual
  double primal_residual = 0.0;   // relative
  double dual_residual = 0.0;     // relative
  double mu = 0.0;
  int iterations = 0;
  std::vector<SdpIterateInfo> trace;  // user-sense objectives per iterate
  std::string message;
};

namespace sdp_detail {

template <typename Mat>
double hdot(const Mat& a, const Mat& b) {
  return std::real(a.conjugate().cwiseProduct(b).sum());
}

template <typename Mat>
Mat sym(const Mat& a) {
  return 0.5 * (a + a.adjoint());
}

template <typename Mat>
struct Coeff {
  Mat dense;
  // (row, col, value) of nonzeros when few enough for outer-product paths.
  std::vector<std::tuple<Eigen::Index, Eigen::Index, typename Mat::Scalar>> entries;
  bool sparse = false;

  void index() {
    const Eigen::Index n = dense.rows();
    entries.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (dense(i, j) != typename Mat::Scalar(0)) {
          entries.emplace_back(i, j, dense(i, j));
          if (static_cast<Eigen::Index>(entries.size()) > n) {
            sparse = false;
            entries.clear();
            return;
          }
        }
    sparse = true;
  }

  double dot(const Mat& x) const {
    if (!sparse) return hdot(dense, x);
    double acc = 0.0;
    for (const auto& [i, j, v] : entries) acc += std::real(std::conj(v) * x(i, j));
    return acc;
  }

  // W * coeff * W for Hermitian W.
  Mat congruence(const Mat& w) const {
    if (!sparse) return Mat(w * dense * w);
    Mat out = Mat::Zero(w.rows(), w.cols());
    for (const auto& [i, j, v] : entries) out += v * (w.col(i) * w.row(j));
    return out;
  }
};

// Canonical form: minimize sum <C_b, X_b> with equality constraints only.
template <typename Mat>
struct Canonical {
  std::vector<Eigen::Index> dims;
  std::vector<Mat> C;
  struct Con {
    std::vector<std::pair<int, Coeff<Mat>>> terms;
    double rhs;
  };
  std::vector<Con> cons;
  Eigen::Index total_dim = 0;
};

template <typename Mat>
struct IpmResult {
  SdpStatus status = SdpStatus::numerical_failure;
  std::vector<Mat> X, S;
  RealVector y;
  double mu = 0.0;
  double primal_residual = 0.0, dual_residual = 0.0;
  int iterations = 0;
  std::vector<SdpIterateInfo> trace;  // canonical minimize sense
  std::string message;
};

template <typename Mat>
struct NtScaling {
  Mat G;            // scaling factor: X = G D G^H, S = G^-H D G^-1
  Mat W;            // G G^H
  Eigen::VectorXd d;  // shared scaled spectrum, positive
};

template <typename Mat>
bool nt_factor(const Mat& x, const Mat& s, NtScaling<Mat>& out) {
  Eigen::LLT<Mat> lx(x);
  if (lx.info() != Eigen::Success) return false;
  Eigen::LLT<Mat> ls(s);
  if (ls.info() != Eigen::Success) return false;
  const Mat lxm = lx.matrixL();
  const Mat lsm = ls.matrixL();
  Eigen::JacobiSVD<Mat> svd(Mat(lsm.adjoint() * lxm),
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.d = svd.singularValues();
  if (!(out.d.minCoeff() > 0.0) || !std::isfinite(out.d.maxCoeff())) return false;
  out.G = lxm * svd.matrixV() *
          out.d.cwiseSqrt().cwiseInverse().template cast<typename Mat::Scalar>().asDiagonal();
  out.W = out.G * out.G.adjoint();
  return true;
}

// Largest alpha with diag(d) + alpha * delta PSD; +inf when delta PSD.
template <typename Mat>
double maxstep_scaled(const Eigen::VectorXd& d, const Mat& delta) {
  const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
  Mat scaled = delta;
  for (Eigen::Index i = 0; i < scaled.rows(); ++i) scaled.row(i) *= inv_sqrt(i);
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) scaled.col(j) *= inv_sqrt(j);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(scaled), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

// Solves L_D(U) = R for U, where L_D(U) = (D U + U D) / 2 with D = diag(d).
template <typename Mat>
Mat lyapunov_diag_solve(const Eigen::VectorXd& d, const Mat& r) {
  Mat out = r;
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) out(i, j) *= 2.0 / (d(i) + d(j));
  return out;
}

template <typename Mat>
IpmResult<Mat> ipm(const Canonical<Mat>& p, const SdpOptions& opt) {
  using RV = Eigen::VectorXd;
  const int nb = static_cast<int>(p.dims.size());
  const int m = static_cast<int>(p.cons.size());
  const double ntotal = static_cast<double>(p.total_dim);

  RV b(m);
  for (int i = 0; i < m; ++i) b(i) = p.cons[i].rhs;
  const double bnorm = b.norm();
  double cnorm = 0.0, anorm_max = 0.0;
  for (const auto& c : p.C) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);
  RV anorm(m);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (const auto& [blk, co] : p.cons[i].terms) acc += co.dense.squaredNorm();
    anorm(i) = std::sqrt(acc);
    anorm_max = std::max(anorm_max, anorm(i));
  }

  // Identity-scaled start sized from the problem data.
  const double nmax = static_cast<double>(
      *std::max_element(p.dims.begin(), p.dims.end()));
  double xi = std::max(10.0, std::sqrt(nmax));
  for (int i = 0; i < m; ++i)
    xi = std::max(xi, nmax * std::abs(b(i)) / (1.0 + anorm(i)));
  const double eta = std::max({10.0, std::sqrt(nmax),
                               (1.0 + std::max(cnorm, anorm_max)) / std::sqrt(nmax)});

  std::vector<Mat> X(nb), S(nb);
  for (int q = 0; q < nb; ++q) {
    X[q] = xi * Mat::Identity(p.dims[q], p.dims[q]);
    S[q] = eta * Mat::Identity(p.dims[q], p.dims[q]);
  }
  RV y = RV::Zero(m);

  IpmResult<Mat> res;
  res.X = X;
  res.S = S;
  res.y = y;
  double best_score = std::numeric_limits<double>::infinity();
  double last_ratio = 0.0;
  int infeas_streak = 0, stall_streak = 0;

  auto pobj_of = [&](const std::vector<Mat>& xs) {
    double v = 0.0;
    for (int q = 0; q < nb; ++q) v += hdot(p.C[q], xs[q]);
    return v;
  };

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    // Residuals and duality measure.
    RV rp(m);
    for (int i = 0; i < m; ++i) {
      double ax = 0.0;
      for (const auto& [blk, co] : p.cons[i].terms) ax += co.dot(X[blk]);
      rp(i) = b(i) - ax;
    }
    std::vector<Mat> Rd(nb);
    for (int q = 0; q < nb; ++q) Rd[q] = p.C[q] - S[q];
    for (int i = 0; i < m; ++i)
      for (const auto& [blk, co] : p.cons[i].terms) Rd[blk] -= y(i) * co.dense;

    double mu = 0.0, rd_norm = 0.0;
    for (int q = 0; q < nb; ++q) {
      mu += hdot(X[q], S[q]);
      rd_norm += Rd[q].squaredNorm();
    }
    mu /= ntotal;
    rd_norm = std::sqrt(rd_norm);

    const double pobj = pobj_of(X);
    const double dobj = b.dot(y);
    const double rel_p = rp.norm() / (1.0 + bnorm);
    const double rel_d = rd_norm / (1.0 + cnorm);
    const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

    if (opt.record_trace)
      res.trace.push_back({pobj, dobj, mu, rel_p, rel_d});

    const double score = std::max({rel_p, rel_d, rel_gap});
    if (score < best_score) {
      best_score = score;
      res.X = X;
      res.S = S;
      res.y = y;
      res.mu = mu;
      res.primal_residual = rel_p;
      res.dual_residual = rel_d;
      res.iterations = iter;
    }

    if (rel_p <= opt.feas_tol && rel_d <= opt.feas_tol && rel_gap <= opt.gap_tol) {
      res.status = SdpStatus::optimal;
      res.X = X;
      res.S = S;
      res.y = y;
      res.mu = mu;
      res.primal_residual = rel_p;
      res.dual_residual = rel_d;
      res.iterations = iter;
      return res;
    }

    // Infeasibility heuristic: residuals refuse to shrink while the relative
    // duality measure collapses. A diverging dual ray shows up here too,
    // through the objective magnitude in the denominator.
    const double mu_rel = mu / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    const double ratio = (rel_p + rel_d) / std::max(mu_rel, 1e-300);
    if (std::isfinite(ratio)) last_ratio = ratio;
    infeas_streak = ratio > opt.infeas_ratio ? infeas_streak + 1 : 0;
    if (infeas_streak >= opt.infeas_consecutive) {
      res.status = SdpStatus::infeasible;
      res.message = "residual-normalized duality measure diverged (heuristic)";
      res.iterations = iter;
      return res;
    }

    if (iter == opt.max_iter || !std::isfinite(mu)) break;

    // A complementarity collapse with residuals or gap still out of tolerance
    // means strict complementarity has failed; further iterations can only
    // destroy the scaling factors. Stop at the best iterate seen.
    if (mu < 1e-14 * (1.0 + std::abs(pobj)) && iter >= 2) {
      res.message = "complementarity underflow before convergence";
      break;
    }

    // Nesterov-Todd scaling per block.
    std::vector<NtScaling<Mat>> nt(nb);
    bool ok = true;
    for (int q = 0; q < nb && ok; ++q) ok = nt_factor(X[q], S[q], nt[q]);
    if (!ok) {
      res.message = "scaling factorization failed";
      break;
    }

    // Schur complement M_ij = sum_b <A_i, W A_j W> via congruences.
    RealMatrix M = RealMatrix::Zero(m, m);
    for (int q = 0; q < nb; ++q) {
      std::vector<int> active;
      for (int i = 0; i < m; ++i)
        for (const auto& [blk, co] : p.cons[i].terms)
          if (blk == q) {
            active.push_back(i);
            break;
          }
      for (int j : active) {
        Mat u;
        for (const auto& [blk, co] : p.cons[j].terms)
          if (blk == q) u = co.congruence(nt[q].W);
        for (int i : active) {
          if (i > j) continue;
          double v = 0.0;
          for (const auto& [blk, co] : p.cons[i].terms)
            if (blk == q) v = co.dot(u);
          M(i, j) += v;
          if (i != j) M(j, i) += v;
        }
      }
    }
    // Factor the Schur matrix; near-degenerate optima need a vanishing
    // diagonal shift, which iterative refinement against the unshifted
    // matrix later corrects.
    Eigen::LDLT<RealMatrix> mfact;
    {
      const double mscale = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
      double shift = 0.0;
      for (int attempt = 0; attempt < 7; ++attempt) {
        if (shift == 0.0)
          mfact.compute(M);
        else
          mfact.compute(RealMatrix(M + shift * RealMatrix::Identity(m, m)));
        if (mfact.info() == Eigen::Success) break;
        shift = shift == 0.0 ? 1e-14 * mscale : shift * 100.0;
      }
      if (mfact.info() != Eigen::Success) {
        res.message = "Schur complement factorization failed";
        break;
      }
    }
    auto schur_solve = [&](const RV& rhs) {
      RV x = mfact.solve(rhs);
      x += mfact.solve(RV(rhs - M * x));
      return x;
    };

    // g_i = <A_i, W Rd W>; reused by predictor and corrector.
    RV g = RV::Zero(m);
    std::vector<Mat> wrdw(nb);
    for (int q = 0; q < nb; ++q) wrdw[q] = nt[q].W * Rd[q] * nt[q].W;
    for (int i = 0; i < m; ++i)
      for (const auto& [blk, co] : p.cons[i].terms) g(i) += co.dot(wrdw[blk]);

    auto solve_direction = [&](const std::vector<Mat>& rc, RV& dy, std::vector<Mat>& ds_out,
                               std::vector<Mat>& dxhat, std::vector<Mat>& dshat) {
      // rc given in scaled space; direction from M dy = rp - h + g.
      RV h = RV::Zero(m);
      std::vector<Mat> lin(nb), glg(nb);
      for (int q = 0; q < nb; ++q) {
        lin[q] = lyapunov_diag_solve(nt[q].d, rc[q]);
        glg[q] = nt[q].G * lin[q] * nt[q].G.adjoint();
      }
      for (int i = 0; i < m; ++i)
        for (const auto& [blk, co] : p.cons[i].terms) h(i) += co.dot(glg[blk]);
      dy = schur_solve(rp - h + g);
      ds_out.assign(nb, Mat());
      dxhat.assign(nb, Mat());
      dshat.assign(nb, Mat());
      for (int q = 0; q < nb; ++q) ds_out[q] = Rd[q];
      for (int i = 0; i < m; ++i)
        for (const auto& [blk, co] : p.cons[i].terms) ds_out[blk] -= dy(i) * co.dense;
      for (int q = 0; q < nb; ++q) {
        dshat[q] = nt[q].G.adjoint() * ds_out[q] * nt[q].G;
        dxhat[q] = lin[q] - dshat[q];
      }
    };

    // Predictor: target XS -> 0.
    std::vector<Mat> rc(nb);
    for (int q = 0; q < nb; ++q) {
      rc[q] = Mat::Zero(p.dims[q], p.dims[q]);
      rc[q].diagonal() =
          (-nt[q].d.cwiseProduct(nt[q].d)).template cast<typename Mat::Scalar>();
    }
    RV dy_aff;
    std::vector<Mat> ds_aff, dxh_aff, dsh_aff;
    solve_direction(rc, dy_aff, ds_aff, dxh_aff, dsh_aff);

    double ap_aff = 1.0, ad_aff = 1.0;
    for (int q = 0; q < nb; ++q) {
      ap_aff = std::min(ap_aff, maxstep_scaled(nt[q].d, dxh_aff[q]));
      ad_aff = std::min(ad_aff, maxstep_scaled(nt[q].d, dsh_aff[q]));
    }
    double mu_aff = 0.0;
    for (int q = 0; q < nb; ++q) {
      Mat xa = Mat::Zero(p.dims[q], p.dims[q]);
      xa.diagonal() = nt[q].d.template cast<typename Mat::Scalar>();
      Mat sa = xa;
      xa += ap_aff * dxh_aff[q];
      sa += ad_aff * dsh_aff[q];
      mu_aff += hdot(xa, sa);
    }
    mu_aff /= ntotal;
    // Conservative centering exponent when the affine step is short.
    const double amin = std::min(ap_aff, ad_aff);
    const double expon = std::max(1.0, 3.0 * std::min(amin, 1.0) * std::min(amin, 1.0));
    double sigma = std::pow(std::max(mu_aff, 0.0) / mu, expon);
    sigma = std::min(std::max(sigma, 0.0), 1.0);

    // Corrector: sigma*mu*I - D^2 - sym(dXhat dShat).
    for (int q = 0; q < nb; ++q) {
      rc[q] = -sym(Mat(dxh_aff[q] * dsh_aff[q]));
      rc[q].diagonal().array() +=
          typename Mat::Scalar(sigma * mu) -
          nt[q].d.array().square().template cast<typename Mat::Scalar>();
    }
    RV dy;
    std::vector<Mat> ds, dxh, dsh;
    solve_direction(rc, dy, ds, dxh, dsh);

    double ap = 1.0, ad = 1.0;
    for (int q = 0; q < nb; ++q) {
      ap = std::min(ap, 0.98 * maxstep_scaled(nt[q].d, dxh[q]));
      ad = std::min(ad, 0.98 * maxstep_scaled(nt[q].d, dsh[q]));
    }
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall_streak >= 3) {
        res.message = "step lengths collapsed";
        break;
      }
    } else {
      stall_streak = 0;
    }

    for (int q = 0; q < nb; ++q) {
      X[q] = sym(Mat(X[q] + ap * nt[q].G * dxh[q] * nt[q].G.adjoint()));
      S[q] = sym(Mat(S[q] + ad * ds[q]));
    }
    y += ad * dy;
    res.iterations = iter + 1;
  }

  if (last_ratio > opt.infeas_ratio) {
    res.status = SdpStatus::infeasible;
    res.message = "residual-normalized duality measure diverged (heuristic)";
    return res;
  }
  res.status = SdpStatus::numerical_failure;
  if (res.message.empty()) res.message = "iteration cap reached before convergence";
  return res;
}

// [[Re, -Im], [Im, Re]] of a complex matrix.
inline RealMatrix embed_complex(const Matrix& a) {
  const Eigen::Index n = a.rows();
  RealMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = a.real();
  out.topRightCorner(n, n) = -a.imag();
  out.bottomLeftCorner(n, n) = a.imag();
  out.bottomRightCorner(n, n) = a.real();
  return out;
}

// Average over the embedding symmetry and read the complex block back.
inline Matrix unembed_symmetric(const RealMatrix& y) {
  const Eigen::Index n = y.rows() / 2;
  const RealMatrix re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
  const RealMatrix im =
      0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  Matrix out(n, n);
  out.real() = re;
  out.imag() = im;
  return hermitize(out);
}

}  // namespace sdp_detail

inline SdpSolution solve(const SdpProblem& problem, const SdpOptions& opt = {}) {
  using namespace sdp_detail;
  problem.validate(opt.max_block_dim);

  const int nb = static_cast<int>(problem.blocks.size());
  const int neq = static_cast<int>(problem.equalities.size());
  const int nineq = static_cast<int>(problem.inequalities.size());
  const double sense_sign = problem.sense == SdpSense::maximize ? -1.0 : 1.0;

  // Canonical complex form: minimize, slack block per inequality.
  Canonical<Matrix> canon;
  for (const auto& b : problem.blocks) canon.dims.push_back(b.dim);
  for (int j = 0; j < nineq; ++j) canon.dims.push_back(1);
  canon.C.assign(canon.dims.size(), Matrix());
  for (std::size_t q = 0; q < canon.dims.size(); ++q)
    canon.C[q] = Matrix::Zero(canon.dims[q], canon.dims[q]);
  for (const auto& t : problem.objective) canon.C[t.block] += sense_sign * t.coeff;
  for (auto& c : canon.C) c = hermitize(c);

  auto push_con = [&](const SdpConstraint& c, int slack) {
    typename Canonical<Matrix>::Con con;
    std::map<int, Matrix> merged;
    for (const auto& t : c.terms) {
      auto it = merged.find(t.block);
      if (it == merged.end())
        merged[t.block] = t.coeff;
      else
        it->second += t.coeff;
    }
    for (auto& [blk, coeff] : merged) {
      Coeff<Matrix> co;
      co.dense = coeff;
      co.index();
      con.terms.emplace_back(blk, std::move(co));
    }
    if (slack >= 0) {
      Coeff<Matrix> co;
      co.dense = Matrix::Constant(1, 1, 1.0);
      co.index();
      con.terms.emplace_back(nb + slack, std::move(co));
    }
    con.rhs = c.rhs;
    canon.cons.push_back(std::move(con));
  };
  for (const auto& c : problem.equalities) push_con(c, -1);
  for (int j = 0; j < nineq; ++j) push_con(problem.inequalities[j], j);
  for (Eigen::Index d : canon.dims) canon.total_dim += d;

  SdpSolution out;
  std::vector<Matrix> xc, sc;
  if (opt.use_complex) {
    IpmResult<Matrix> r = ipm(canon, opt);
    out.status = r.status;
    out.message = r.message;
    out.iterations = r.iterations;
    out.y = r.y;
    out.mu = r.mu;
    out.trace = std::move(r.trace);
    xc = std::move(r.X);
    sc = std::move(r.S);
  } else {
    Canonical<RealMatrix> emb;
    emb.dims.reserve(canon.dims.size());
    for (Eigen::Index d : canon.dims) emb.dims.push_back(2 * d);
    for (const auto& c : canon.C) emb.C.push_back(0.5 * embed_complex(c));
    for (const auto& con : canon.cons) {
      typename Canonical<RealMatrix>::Con rc;
      rc.rhs = con.rhs;
      for (const auto& [blk, co] : con.terms) {
        Coeff<RealMatrix> rco;
        rco.dense = 0.5 * embed_complex(co.dense);
        rco.index();
        rc.terms.emplace_back(blk, std::move(rco));
      }
      emb.cons.push_back(std::move(rc));
    }
    for (Eigen::Index d : emb.dims) emb.total_dim += d;

    IpmResult<RealMatrix> r = ipm(emb, opt);
    out.status = r.status;
    out.message = r.message;
    out.iterations = r.iterations;
    out.y = r.y;
    out.mu = r.mu;
    out.trace = std::move(r.trace);
    xc.resize(canon.dims.size());
    sc.resize(canon.dims.size());
    for (std::size_t q = 0; q < canon.dims.size(); ++q) {
      xc[q] = unembed_symmetric(r.X[q]);
      // Coefficients were halved, so the embedded slack is (1/2) T(S).
      sc[q] = 2.0 * unembed_symmetric(r.S[q]);
    }
  }

  // User-sense objectives and residuals recomputed at the complex level.
  out.X.assign(xc.begin(), xc.begin() + nb);
  out.S.assign(sc.begin(), sc.begin() + nb);
  for (auto& ti : out.trace) {
    ti.primal_objective *= sense_sign;
    ti.dual_objective *= sense_sign;
  }
  out.ineq_slack.resize(nineq);
  for (int j = 0; j < nineq; ++j) out.ineq_slack(j) = std::real(xc[nb + j](0, 0));

  double pobj = 0.0;
  for (const auto& t : problem.objective) pobj += sdp_detail::hdot(t.coeff, out.X[t.block]);
  RealVector b(neq + nineq);
  for (int i = 0; i < neq; ++i) b(i) = problem.equalities[i].rhs;
  for (int j = 0; j < nineq; ++j) b(neq + j) = problem.inequalities[j].rhs;
  const double dobj_canon = out.y.size() ? b.dot(out.y) : 0.0;
  out.primal_objective = pobj;
  out.dual_objective = sense_sign * dobj_canon;
  out.gap = sense_sign * pobj - dobj_canon;

  // Canonical-form residuals against the complex data.
  double rp = 0.0;
  for (std::size_t i = 0; i < canon.cons.size(); ++i) {
    double ax = 0.0;
    for (const auto& [blk, co] : canon.cons[i].terms) ax += co.dot(xc[blk]);
    rp += (canon.cons[i].rhs - ax) * (canon.cons[i].rhs - ax);
  }
  out.primal_residual = std::sqrt(rp) / (1.0 + b.norm());
  double rd = 0.0, cn = 0.0;
  for (std::size_t q = 0; q < canon.dims.size(); ++q) {
    Matrix res_block = canon.C[q] - sc[q];
    for (std::size_t i = 0; i < canon.cons.size(); ++i)
      for (const auto& [blk, co] : canon.cons[i].terms)
        if (blk == static_cast<int>(q)) res_block -= out.y(static_cast<Eigen::Index>(i)) * co.dense;
    rd += res_block.squaredNorm();
    cn += canon.C[q].squaredNorm();
  }
  out.dual_residual = std::sqrt(rd) / (1.0 + std::sqrt(cn));
  return out;
}

// Independent recheck of a returned solution against the problem data.
struct CertificateCheck {
  std::string name;
  double value;
  double bound;
  bool pass;
};

struct CertificateReport {
  std::vector<CertificateCheck> checks;
  bool all_pass = true;

  void add(const std::string& name, double value, double bound, bool pass) {
    checks.push_back({name, value, bound, pass});
    all_pass = all_pass && pass;
  }
  const CertificateCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline CertificateReport verify_certificate(const SdpProblem& problem,
                                            const SdpSolution& sol,
                                            const SdpOptions& opt = {}) {
  using namespace sdp_detail;
  CertificateReport rep;
  const double sense_sign = problem.sense == SdpSense::maximize ? -1.0 : 1.0;
  const int nb = static_cast<int>(problem.blocks.size());
  const int neq = static_cast<int>(problem.equalities.size());
  const int nineq = static_cast<int>(problem.inequalities.size());

  double worst_eq = 0.0;
  for (int i = 0; i < neq; ++i) {
    double ax = 0.0;
    for (const auto& t : problem.equalities[i].terms) ax += hdot(t.coeff, sol.X[t.block]);
    worst_eq = std::max(worst_eq, std::abs(ax - problem.equalities[i].rhs));
  }
  rep.add("equality residual", worst_eq, opt.feas_tol * 10.0, worst_eq <= opt.feas_tol * 10.0);

  double worst_ineq = 0.0;
  for (int j = 0; j < nineq; ++j) {
    double ax = 0.0;
    for (const auto& t : problem.inequalities[j].terms) ax += hdot(t.coeff, sol.X[t.block]);
    worst_ineq = std::max(worst_ineq, ax - problem.inequalities[j].rhs);
  }
  rep.add("inequality violation", worst_ineq, opt.feas_tol * 10.0,
          worst_ineq <= opt.feas_tol * 10.0);

  double worst_psd = 0.0;
  for (int q = 0; q < nb; ++q)
    worst_psd = std::min(worst_psd, min_eigenvalue(sol.X[q]));
  rep.add("primal PSD margin", worst_psd, -tol::psd, worst_psd >= -tol::psd);

  // Dual slack recomputed from multipliers in the canonical minimize sense.
  double worst_dual_psd = 0.0, worst_dual_match = 0.0;
  for (int q = 0; q < nb; ++q) {
    Matrix s = Matrix::Zero(problem.blocks[q].dim, problem.blocks[q].dim);
    for (const auto& t : problem.objective)
      if (t.block == q) s += sense_sign * t.coeff;
    for (int i = 0; i < neq; ++i)
      for (const auto& t : problem.equalities[i].terms)
        if (t.block == q) s -= sol.y(i) * t.coeff;
    for (int j = 0; j < nineq; ++j)
      for (const auto& t : problem.inequalities[j].terms)
        if (t.block == q) s -= sol.y(neq + j) * t.coeff;
    worst_dual_psd = std::min(worst_dual_psd, min_eigenvalue(s));
    worst_dual_match = std::max(worst_dual_match, max_abs(s - sol.S[q]));
  }
  rep.add("dual PSD margin", worst_dual_psd, -opt.feas_tol * 10.0,
          worst_dual_psd >= -opt.feas_tol * 10.0);
  rep.add("dual slack consistency", worst_dual_match, 1e-6, worst_dual_match <= 1e-6);

  double worst_sign = 0.0;
  for (int j = 0; j < nineq; ++j) worst_sign = std::max(worst_sign, sol.y(neq + j));
  rep.add("inequality multiplier sign", worst_sign, opt.feas_tol * 10.0,
          worst_sign <= opt.feas_tol * 10.0);

  const double rel_gap = std::abs(sol.gap) / (1.0 + std::abs(sol.primal_objective));
  rep.add("relative gap", rel_gap, opt.gap_tol * 10.0, rel_gap <= opt.gap_tol * 10.0);
  return rep;
}

// n^2 Hermitian basis elements H with <H, Y> picking out Re Y_kk, Re Y_kl,
// Im Y_kl in a fixed order; used to pin matrix blocks entrywise.
inline std::vector<std::pair<Matrix, double>> hermitian_basis_targets(const Matrix& target) {
  const Eigen::Index n = target.rows();
  std::vector<std::pair<Matrix, double>> out;
  out.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index k = 0; k < n; ++k) {
    Matrix h = Matrix::Zero(n, n);
    h(k, k) = 1.0;
    out.emplace_back(std::move(h), std::real(target(k, k)));
    for (Eigen::Index l = k + 1; l < n; ++l) {
      Matrix hre = Matrix::Zero(n, n);
      hre(k, l) = 0.5;
      hre(l, k) = 0.5;
      out.emplace_back(std::move(hre), std::real(target(k, l)));
      Matrix him = Matrix::Zero(n, n);
      him(k, l) = Complex(0.0, 0.5);
      him(l, k) = Complex(0.0, -0.5);
      out.emplace_back(std::move(him), std::imag(target(k, l)));
    }
  }
  return out;
}

// Places an n x n coefficient at diagonal offset (at, at) of a dim x dim block.
inline Matrix embed_at(Eigen::Index dim, Eigen::Index at, const Matrix& h) {
  Matrix out = Matrix::Zero(dim, dim);
  out.block(at, at, h.rows(), h.cols()) = h;
  return out;
}

}  // namespace substate
