// states.hpp — validated operator and state types. Constructors check the
// declared invariants and store the symmetrized matrix.
#pragma once

#include "substate/linalg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace substate {

class HermitianOperator {
 public:
  explicit HermitianOperator(Matrix a, double rel_tol = tol::hermitian) {
    require_square(a, "HermitianOperator");
    const double resid = hermiticity_residual(a);
    if (resid > rel_tol * std::max(1.0, max_abs(a)))
      throw validation_error("HermitianOperator: hermiticity residual " +
                             std::to_string(resid) + " exceeds tolerance");
    m_ = hermitize(a);
  }
  const Matrix& m() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 protected:
  Matrix m_;
};

class PsdOperator : public HermitianOperator {
 public:
  explicit PsdOperator(Matrix a, double psd_tol = tol::psd)
      : HermitianOperator(std::move(a)) {
    const double lo = min_eigenvalue(m_);
    if (lo < -psd_tol)
      throw validation_error("PsdOperator: eigenvalue " + std::to_string(lo) +
                             " below -psd tolerance");
  }
};

class DensityMatrix : public PsdOperator {
 public:
  explicit DensityMatrix(Matrix a, double trace_tol = tol::trace)
      : PsdOperator(std::move(a)) {
    const double tr = std::real(m_.trace());
    if (std::abs(tr - 1.0) > trace_tol)
      throw validation_error("DensityMatrix: trace " + std::to_string(tr) +
                             " deviates from 1 beyond tolerance");
  }
};

// 0 <= M <= I within PSD tolerance.
class PovmElement : public PsdOperator {
 public:
  explicit PovmElement(Matrix a, double psd_tol = tol::psd)
      : PsdOperator(std::move(a), psd_tol) {
    const double hi = hermitian_eig(m_).values.maxCoeff();
    if (hi > 1.0 + psd_tol)
      throw validation_error("PovmElement: eigenvalue " + std::to_string(hi) +
                             " exceeds 1 beyond tolerance");
  }
};

class Projector : public PsdOperator {
 public:
  explicit Projector(Matrix a, double idem_tol = tol::projector)
      : PsdOperator(std::move(a)) {
    const double resid = max_abs(m_ * m_ - m_);
    if (resid > idem_tol)
      throw validation_error("Projector: idempotency residual " + std::to_string(resid));
  }
};

// Unit vector on a declared tensor factorization.
class PureState {
 public:
  PureState(Vector amplitudes, std::vector<Eigen::Index> dims,
            double norm_tol = tol::trace)
      : v_(std::move(amplitudes)), dims_(std::move(dims)) {
    Eigen::Index prod = 1;
    for (Eigen::Index d : dims_) {
      if (d <= 0) throw validation_error("PureState: factor dimensions must be positive");
      prod *= d;
    }
    if (prod != v_.size())
      throw validation_error("PureState: amplitudes length " + std::to_string(v_.size()) +
                             " does not match factor product " + std::to_string(prod));
    const double n = v_.norm();
    if (std::abs(n - 1.0) > norm_tol)
      throw validation_error("PureState: norm " + std::to_string(n) +
                             " deviates from 1 beyond tolerance");
  }

  const Vector& amplitudes() const { return v_; }
  const std::vector<Eigen::Index>& dims() const { return dims_; }
  Matrix density() const { return v_ * v_.adjoint(); }
  Matrix reduce(const std::vector<int>& keep) const {
    return partial_trace_pure(v_, dims_, keep);
  }

 private:
  Vector v_;
  std::vector<Eigen::Index> dims_;
};

inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  return fidelity(a.m(), b.m());
}

// Nearest valid density matrix: clamps negative eigenvalues, renormalizes.
// Cleans up solver output whose PSD/trace drift sits below solver tolerance
// but above the strict wrapper tolerances.
inline DensityMatrix project_to_density(const Matrix& a) {
  EigSystem es = hermitian_eig(hermitize(a));
  const RealVector clamped = es.values.cwiseMax(0.0);
  const double tr = clamped.sum();
  if (tr <= 0.0) throw domain_error("project_to_density: nonpositive spectrum");
  const Matrix out = es.vectors * (clamped / tr).cast<Complex>().asDiagonal() *
                     es.vectors.adjoint();
  return DensityMatrix(hermitize(out));
}

inline bool support_contained(const DensityMatrix& rho, const DensityMatrix& sigma,
                              double rank_tol = tol::rank_rel,
                              double containment_tol = tol::containment) {
  return support_check(rho.m(), sigma.m(), rank_tol, containment_tol).contained;
}

// Purification on K (x) H with K the first factor: |v> = sum_i sqrt(lam_i) |i>|u_i>.
// Default ancilla matches dim(H); min_ancilla shrinks K to rank(rho).
inline PureState purify(const DensityMatrix& rho, bool min_ancilla = false,
                        double rank_tol = tol::rank_rel) {
  EigSystem es = hermitian_eig(rho.m());
  const double cut = rank_cutoff(es.values, rank_tol);
  const Eigen::Index n = rho.dim();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < n; ++i)
    if (es.values(i) > cut) kept.push_back(i);
  const Eigen::Index k = min_ancilla ? static_cast<Eigen::Index>(kept.size()) : n;
  Vector v = Vector::Zero(k * n);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    const Eigen::Index i = kept[a];
    const double w = std::sqrt(std::max(es.values(i), 0.0));
    v.segment(static_cast<Eigen::Index>(a) * n, n) = w * es.vectors.col(i);
  }
  v /= v.norm();  // absorbs the cut-off tail, which is at most rank_tol sized
  return PureState(v, {k, n});
}

}  // namespace substate
