// common.hpp — scalar aliases, shared tolerances, error taxonomy.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace substate {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Schema version stamped on every JSON document this library emits.
inline constexpr int schema_version = 1;

namespace tol {
// Hermiticity residual, relative to the max absolute entry (floored at 1).
inline constexpr double hermitian = 1e-12;
// Smallest eigenvalue allowed below zero for PSD acceptance.
inline constexpr double psd = 1e-10;
// |tr - 1| allowed for density matrices; also unit-norm slack for pure states.
inline constexpr double trace = 1e-10;
// Eigenvalues with |lambda| <= rank_rel * max|lambda| count as zero.
inline constexpr double rank_rel = 1e-9;
// Trace-norm mass allowed outside a support for containment checks.
inline constexpr double containment = 1e-9;
// Idempotency slack for projectors.
inline constexpr double projector = 1e-10;
}  // namespace tol

// Malformed or ill-typed input: wrong shape, non-Hermitian beyond tolerance,
// bad trace, negative eigenvalues beyond tolerance, unparsable JSON.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structurally valid input outside an operation's domain: support violation,
// epsilon at an excluded endpoint, function undefined on a retained eigenvalue.
class domain_error : public std::domain_error {
 public:
  explicit domain_error(const std::string& msg) : std::domain_error(msg) {}
};

// The SDP engine failed to produce a usable answer (divergence, iteration cap,
// loss of positive definiteness that step control could not recover).
class solver_error : public std::runtime_error {
 public:
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline double max_abs(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

// Worst-entry deviation from A = A^dagger.
inline double hermiticity_residual(const Matrix& a) {
  return max_abs(a - a.adjoint());
}

inline bool is_hermitian(const Matrix& a, double rel_tol = tol::hermitian) {
  if (a.rows() != a.cols()) return false;
  return hermiticity_residual(a) <= rel_tol * std::max(1.0, max_abs(a));
}

// (A + A^dagger)/2; applied after validation so downstream code sees an
// exactly Hermitian matrix.
inline Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline void require_square(const Matrix& a, const std::string& name) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw validation_error(name + ": expected a nonempty square matrix, got " +
                           std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const std::string& ctx) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw validation_error(ctx + ": dimension mismatch, " + std::to_string(a.rows()) +
                           "x" + std::to_string(a.cols()) + " vs " +
                           std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace substate
