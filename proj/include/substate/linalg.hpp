// linalg.hpp — dense Hermitian linear algebra on raw complex matrices:
// eigensystems, spectral functions, norms, fidelity, supports, partial trace.
#pragma once

#include "substate/common.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace substate {

struct EigSystem {
  RealVector values;  // ascending
  Matrix vectors;     // orthonormal columns, vectors.col(i) <-> values(i)
};

inline EigSystem hermitian_eig(const Matrix& a, double rel_tol = tol::hermitian) {
  require_square(a, "hermitian_eig");
  const double resid = hermiticity_residual(a);
  if (resid > rel_tol * std::max(1.0, max_abs(a)))
    throw validation_error("hermitian_eig: matrix is not Hermitian, residual " +
                           std::to_string(resid));
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(a));
  if (es.info() != Eigen::Success)
    throw solver_error("hermitian_eig: eigensolver did not converge");
  return EigSystem{es.eigenvalues(), es.eigenvectors()};
}

// Threshold below which eigenvalues count as zero, relative to the spectrum.
inline double rank_cutoff(const RealVector& values, double rank_tol = tol::rank_rel) {
  const double top = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  return rank_tol * top;
}

// f applied to the spectrum. With support_only, eigenvalues at or below the
// rank cutoff map to zero; a retained eigenvalue where f is not finite is a
// domain error.
inline Matrix matrix_function(const Matrix& a, const std::function<double(double)>& f,
                              bool support_only = false, double rank_tol = tol::rank_rel) {
  EigSystem es = hermitian_eig(a);
  const double cut = rank_cutoff(es.values, rank_tol);
  RealVector mapped(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double lam = es.values(i);
    if (support_only && std::abs(lam) <= cut) {
      mapped(i) = 0.0;
      continue;
    }
    const double v = f(lam);
    if (!std::isfinite(v))
      throw domain_error("matrix_function: f undefined on retained eigenvalue " +
                         std::to_string(lam));
    mapped(i) = v;
  }
  return es.vectors * mapped.asDiagonal() * es.vectors.adjoint();
}

// Spectral square root tolerant of PSD slack: eigenvalues in [-tol::psd, 0)
// map to zero, anything more negative is a domain error.
inline Matrix sqrt_psd(const Matrix& a, double rank_tol = tol::rank_rel) {
  return matrix_function(
      a,
      [](double lam) {
        if (lam >= 0.0) return std::sqrt(lam);
        return lam >= -tol::psd ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      },
      true, rank_tol);
}

inline Matrix log2_on_support(const Matrix& a, double rank_tol = tol::rank_rel) {
  return matrix_function(
      a,
      [](double lam) {
        if (lam > 0.0) return std::log2(lam);
        return lam >= -tol::psd ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      },
      true, rank_tol);
}

inline Matrix inv_sqrt_on_support(const Matrix& a, double rank_tol = tol::rank_rel) {
  return matrix_function(
      a,
      [](double lam) {
        if (lam > 0.0) return 1.0 / std::sqrt(lam);
        return lam >= -tol::psd ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      },
      true, rank_tol);
}

// Sum of singular values; valid for any square complex matrix.
inline double trace_norm(const Matrix& a) {
  require_square(a, "trace_norm");
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().sum();
}

inline double trace_distance(const Matrix& a, const Matrix& b) {
  require_same_dim(a, b, "trace_distance");
  return 0.5 * trace_norm(a - b);
}

inline double min_eigenvalue(const Matrix& a) {
  return hermitian_eig(a).values.minCoeff();
}

// A <= B in the Loewner order, up to an absolute eigenvalue slack.
inline bool loewner_leq(const Matrix& a, const Matrix& b, double slack = tol::psd) {
  require_same_dim(a, b, "loewner_leq");
  return min_eigenvalue(b - a) >= -slack;
}

// Squared-fidelity convention: F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1^2.
inline double fidelity(const Matrix& rho, const Matrix& sigma) {
  require_same_dim(rho, sigma, "fidelity");
  const double root = trace_norm(sqrt_psd(rho) * sqrt_psd(sigma));
  return root * root;
}

// Orthonormal basis (as columns) of the support of a Hermitian matrix.
inline Matrix support_basis(const Matrix& a, double rank_tol = tol::rank_rel) {
  EigSystem es = hermitian_eig(a);
  const double cut = rank_cutoff(es.values, rank_tol);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values(i)) > cut) kept.push_back(i);
  Matrix v(a.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i)
    v.col(static_cast<Eigen::Index>(i)) = es.vectors.col(kept[i]);
  return v;
}

inline Matrix support_projector_of(const Matrix& a, double rank_tol = tol::rank_rel) {
  EigSystem es = hermitian_eig(a);
  const double cut = rank_cutoff(es.values, rank_tol);
  Matrix p = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values(i)) > cut)
      p += es.vectors.col(i) * es.vectors.col(i).adjoint();
  return p;
}

struct SupportCheck {
  bool contained = false;
  double residual = 0.0;       // trace-norm mass of rho outside supp(sigma)
  double witness_overlap = 0.0;  // <v|rho|v> for the worst kernel vector v
  Eigen::Index witness_index = -1;
  Vector witness;              // kernel eigenvector of sigma, empty if contained
};

// Is supp(rho) inside supp(sigma)? The witness is the kernel direction of
// sigma carrying the most rho mass.
inline SupportCheck support_check(const Matrix& rho, const Matrix& sigma,
                                  double rank_tol = tol::rank_rel,
                                  double containment_tol = tol::containment) {
  require_same_dim(rho, sigma, "support_check");
  EigSystem es = hermitian_eig(sigma);
  const double cut = rank_cutoff(es.values, rank_tol);
  const Matrix p = support_projector_of(sigma, rank_tol);
  const Matrix off = (identity(rho.rows()) - p) * rho * (identity(rho.rows()) - p);
  SupportCheck out;
  out.residual = trace_norm(off);
  out.contained = out.residual <= containment_tol;
  if (!out.contained) {
    for (Eigen::Index i = 0; i < es.values.size(); ++i) {
      if (std::abs(es.values(i)) > cut) continue;
      const double overlap =
          std::real(Complex(es.vectors.col(i).adjoint() * rho * es.vectors.col(i)));
      if (overlap >= out.witness_overlap) {
        out.witness_overlap = overlap;
        out.witness_index = i;
        out.witness = es.vectors.col(i);
      }
    }
  }
  return out;
}

inline double smallest_nonzero_eigenvalue(const Matrix& a, double rank_tol = tol::rank_rel) {
  EigSystem es = hermitian_eig(a);
  const double cut = rank_cutoff(es.values, rank_tol);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values(i)) > cut) best = std::min(best, es.values(i));
  if (!std::isfinite(best))
    throw domain_error("smallest_nonzero_eigenvalue: operator is zero at this rank tolerance");
  return best;
}

// rho and sigma compressed onto supp(sigma): isometry columns are the retained
// eigenvectors, restricted = isometry^dagger A isometry.
struct SupportRestriction {
  Matrix isometry;  // n x r
  Matrix rho;       // r x r
  Matrix sigma;     // r x r
};

inline SupportRestriction restrict_to_support(const Matrix& rho, const Matrix& sigma,
                                              double rank_tol = tol::rank_rel) {
  require_same_dim(rho, sigma, "restrict_to_support");
  EigSystem es = hermitian_eig(sigma);
  const double cut = rank_cutoff(es.values, rank_tol);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values(i)) > cut) kept.push_back(i);
  if (kept.empty()) throw domain_error("restrict_to_support: sigma is zero at this rank tolerance");
  Matrix v(sigma.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = es.vectors.col(kept[j]);
  return SupportRestriction{v, hermitize(v.adjoint() * rho * v), hermitize(v.adjoint() * sigma * v)};
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

namespace detail {

inline void check_factorization(Eigen::Index total, const std::vector<Eigen::Index>& dims,
                                const std::vector<int>& keep) {
  Eigen::Index prod = 1;
  for (Eigen::Index d : dims) {
    if (d <= 0) throw validation_error("partial_trace: factor dimensions must be positive");
    prod *= d;
  }
  if (prod != total)
    throw validation_error("partial_trace: factor dimensions multiply to " +
                           std::to_string(prod) + ", operator lives on dimension " +
                           std::to_string(total));
  if (keep.empty()) throw validation_error("partial_trace: keep set is empty");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= static_cast<int>(dims.size()))
      throw validation_error("partial_trace: keep index out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw validation_error("partial_trace: keep indices must be strictly increasing");
  }
}

// Row-major strides: index = sum_k digit_k * stride_k.
inline std::vector<Eigen::Index> strides_of(const std::vector<Eigen::Index>& dims) {
  std::vector<Eigen::Index> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

}  // namespace detail

// Trace out every factor not in keep; keep is strictly increasing and the kept
// factors retain their relative order.
inline Matrix partial_trace(const Matrix& rho, const std::vector<Eigen::Index>& dims,
                            const std::vector<int>& keep) {
  require_square(rho, "partial_trace");
  detail::check_factorization(rho.rows(), dims, keep);
  const auto strides = detail::strides_of(dims);
  std::vector<int> traced;
  for (int k = 0; k < static_cast<int>(dims.size()); ++k)
    if (std::find(keep.begin(), keep.end(), k) == keep.end()) traced.push_back(k);

  Eigen::Index dim_keep = 1, dim_traced = 1;
  for (int k : keep) dim_keep *= dims[k];
  for (int k : traced) dim_traced *= dims[k];

  // Global index of (kept multi-digit block kq, traced multi-digit block tq).
  auto global = [&](Eigen::Index kq, Eigen::Index tq) {
    Eigen::Index idx = 0;
    for (int k = static_cast<int>(keep.size()) - 1; k >= 0; --k) {
      idx += (kq % dims[keep[k]]) * strides[keep[k]];
      kq /= dims[keep[k]];
    }
    for (int k = static_cast<int>(traced.size()) - 1; k >= 0; --k) {
      idx += (tq % dims[traced[k]]) * strides[traced[k]];
      tq /= dims[traced[k]];
    }
    return idx;
  };

  Matrix out = Matrix::Zero(dim_keep, dim_keep);
  for (Eigen::Index r = 0; r < dim_keep; ++r)
    for (Eigen::Index c = 0; c < dim_keep; ++c) {
      Complex acc = 0.0;
      for (Eigen::Index t = 0; t < dim_traced; ++t) acc += rho(global(r, t), global(c, t));
      out(r, c) = acc;
    }
  return out;
}

inline Matrix partial_trace_pure(const Vector& psi, const std::vector<Eigen::Index>& dims,
                                 const std::vector<int>& keep) {
  Matrix rho = psi * psi.adjoint();
  return partial_trace(rho, dims, keep);
}

}  // namespace substate
