#include "substate/linalg.hpp"
#include "substate/random.hpp"
#include "substate/states.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace substate;
using Catch::Matchers::WithinAbs;

namespace {
Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}
}  // namespace

TEST_CASE("hermitian_eig on fixed matrices") {
  SECTION("identity") {
    EigSystem es = hermitian_eig(identity(3));
    for (int i = 0; i < 3; ++i) REQUIRE_THAT(es.values(i), WithinAbs(1.0, 1e-14));
  }
  SECTION("diagonal is sorted ascending") {
    EigSystem es = hermitian_eig(diag2(3.0, 1.0));
    REQUIRE_THAT(es.values(0), WithinAbs(1.0, 1e-14));
    REQUIRE_THAT(es.values(1), WithinAbs(3.0, 1e-14));
  }
  SECTION("pauli x") {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    EigSystem es = hermitian_eig(x);
    REQUIRE_THAT(es.values(0), WithinAbs(-1.0, 1e-14));
    REQUIRE_THAT(es.values(1), WithinAbs(1.0, 1e-14));
    Vector minus(2), plus(2);
    minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    // eigenvectors defined up to phase
    REQUIRE_THAT(std::abs(Complex(minus.adjoint() * es.vectors.col(0))), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(std::abs(Complex(plus.adjoint() * es.vectors.col(1))), WithinAbs(1.0, 1e-12));
  }
  SECTION("rejects non-hermitian") {
    Matrix a(2, 2);
    a << 0, 1, 0, 0;
    REQUIRE_THROWS_AS(hermitian_eig(a), validation_error);
  }
}

TEST_CASE("hermitian_eig reconstruction and orthonormality, dims 2..16") {
  RandomStream rs(7001);
  for (Eigen::Index n : {2, 3, 5, 8, 12, 16}) {
    const Matrix g = random_ginibre(n, n, rs);
    const Matrix a = hermitize(g + 2.0 * Matrix::Identity(n, n));
    EigSystem es = hermitian_eig(a);
    const Matrix back = es.vectors * es.values.asDiagonal().toDenseMatrix().cast<Complex>() *
                        es.vectors.adjoint();
    REQUIRE(max_abs(back - a) <= 1e-12 * std::max(1.0, max_abs(a)));
    REQUIRE(max_abs(es.vectors.adjoint() * es.vectors - identity(n)) <= 1e-12);
  }
}

TEST_CASE("matrix_function") {
  SECTION("sqrt on a PD diagonal") {
    const Matrix r = matrix_function(diag2(4.0, 9.0), [](double x) { return std::sqrt(x); });
    REQUIRE_THAT(std::real(r(0, 0)), WithinAbs(2.0, 1e-13));
    REQUIRE_THAT(std::real(r(1, 1)), WithinAbs(3.0, 1e-13));
  }
  SECTION("log2 on support maps kernel to zero") {
    const Matrix r = log2_on_support(diag2(0.5, 0.0));
    REQUIRE_THAT(std::real(r(0, 0)), WithinAbs(-1.0, 1e-13));
    REQUIRE_THAT(std::real(r(1, 1)), WithinAbs(0.0, 1e-13));
  }
  SECTION("inverse sqrt on support") {
    const Matrix r = inv_sqrt_on_support(diag2(4.0, 0.0));
    REQUIRE_THAT(std::real(r(0, 0)), WithinAbs(0.5, 1e-13));
    REQUIRE_THAT(std::real(r(1, 1)), WithinAbs(0.0, 1e-13));
  }
  SECTION("undefined on retained eigenvalue is a domain error") {
    REQUIRE_THROWS_AS(sqrt_psd(diag2(1.0, -0.5)), domain_error);
    REQUIRE_THROWS_AS(
        matrix_function(diag2(1.0, 0.0), [](double x) { return std::log2(x); }),
        domain_error);
  }
  SECTION("psd slack below tolerance maps to zero") {
    const Matrix r = sqrt_psd(diag2(1.0, -0.5 * tol::psd));
    REQUIRE_THAT(std::real(r(1, 1)), WithinAbs(0.0, 1e-13));
  }
}

TEST_CASE("trace norm and trace distance") {
  REQUIRE_THAT(trace_norm(diag2(1.0, -1.0)), WithinAbs(2.0, 1e-13));
  REQUIRE_THAT(trace_norm(Matrix::Zero(3, 3)), WithinAbs(0.0, 1e-13));
  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;  // non-normal: eigenvalues all zero, trace norm 1
  REQUIRE_THAT(trace_norm(nil), WithinAbs(1.0, 1e-13));
  REQUIRE_THAT(trace_distance(diag2(1.0, 0.0), diag2(0.0, 1.0)), WithinAbs(1.0, 1e-13));
}

TEST_CASE("fidelity fixed values") {
  const Matrix zero_state = diag2(1.0, 0.0);
  Matrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  REQUIRE_THAT(fidelity(zero_state, zero_state), WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(fidelity(zero_state, diag2(0.0, 1.0)), WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(fidelity(zero_state, plus), WithinAbs(0.5, 1e-10));
  // pure vs mixed: F = <psi|rho|psi>
  REQUIRE_THAT(fidelity(zero_state, diag2(0.25, 0.75)), WithinAbs(0.25, 1e-10));
}

TEST_CASE("fidelity properties on random pairs") {
  RandomStream rs(7002);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 2 + t % 5;
    auto a = random_density(n, 1 + t % n, rs);
    auto b = random_density(n, n, rs);
    const double f_ab = fidelity(a, b);
    const double f_ba = fidelity(b, a);
    REQUIRE_THAT(f_ab - f_ba, WithinAbs(0.0, 1e-10));
    REQUIRE(f_ab >= -1e-12);
    REQUIRE(f_ab <= 1.0 + 1e-10);
    REQUIRE_THAT(fidelity(a, a), WithinAbs(1.0, 1e-10));
    // Fuchs - van de Graaf in the squared convention: (1-T)^2 <= F <= 1-T^2
    const double tdist = trace_distance(a.m(), b.m());
    REQUIRE(f_ab >= (1.0 - tdist) * (1.0 - tdist) - 1e-9);
    REQUIRE(f_ab <= 1.0 - tdist * tdist + 1e-9);
  }
}

TEST_CASE("pure state fidelity is squared overlap") {
  RandomStream rs(7003);
  for (int t = 0; t < 10; ++t) {
    const Vector u = random_pure_vector(4, rs);
    const Vector v = random_pure_vector(4, rs);
    const double want = std::norm(Complex(u.adjoint() * v));
    REQUIRE_THAT(fidelity(u * u.adjoint(), v * v.adjoint()), WithinAbs(want, 1e-10));
  }
}

TEST_CASE("fidelity monotone under partial trace") {
  RandomStream rs(7004);
  for (int t = 0; t < 10; ++t) {
    const Vector psi = random_pure_vector(6, rs);
    const Vector phi = random_pure_vector(6, rs);
    const double joint = fidelity(psi * psi.adjoint(), phi * phi.adjoint());
    const Matrix ra = partial_trace_pure(psi, {2, 3}, {1});
    const Matrix rb = partial_trace_pure(phi, {2, 3}, {1});
    REQUIRE(fidelity(ra, rb) >= joint - 1e-9);
  }
}

TEST_CASE("support projector and containment") {
  REQUIRE(max_abs(support_projector_of(diag2(1.0, 0.0)) - diag2(1.0, 0.0)) <= 1e-12);
  REQUIRE(max_abs(support_projector_of(identity(3)) - identity(3)) <= 1e-12);
  // below the relative rank cutoff the tiny eigenvalue is kernel
  REQUIRE(max_abs(support_projector_of(diag2(1.0, 1e-14)) - diag2(1.0, 0.0)) <= 1e-12);

  SECTION("containment verdicts") {
    REQUIRE(support_check(diag2(0.5, 0.5), diag2(0.5, 0.5)).contained);
    REQUIRE(support_check(diag2(1.0, 0.0), diag2(0.5, 0.5)).contained);
    const SupportCheck bad = support_check(diag2(1.0, 0.0), diag2(0.0, 1.0));
    REQUIRE_FALSE(bad.contained);
    REQUIRE_THAT(bad.residual, WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(bad.witness_overlap, WithinAbs(1.0, 1e-12));
    REQUIRE(bad.witness.size() == 2);
    REQUIRE_THAT(std::abs(bad.witness(0)), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("loewner order") {
  REQUIRE(loewner_leq(Matrix::Zero(2, 2), diag2(0.5, 0.5)));
  REQUIRE(loewner_leq(diag2(1.0, 0.0), diag2(2.0, 1.0)));
  REQUIRE_FALSE(loewner_leq(diag2(1.0, 0.0), diag2(0.5, 1.0)));
  RandomStream rs(7005);
  const auto a = random_density(3, 3, rs);
  REQUIRE(loewner_leq(a.m(), a.m()));
}

TEST_CASE("restrict_to_support") {
  Matrix sigma = Matrix::Zero(3, 3);
  sigma(0, 0) = 0.5;
  sigma(1, 1) = 0.5;
  Matrix rho = Matrix::Zero(3, 3);
  rho(0, 0) = 1.0;
  const SupportRestriction r = restrict_to_support(rho, sigma);
  REQUIRE(r.rho.rows() == 2);
  REQUIRE_THAT(std::real(r.rho.trace()), WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(std::real(r.sigma.trace()), WithinAbs(1.0, 1e-12));
  REQUIRE(min_eigenvalue(r.sigma) > 0.4);
  REQUIRE_THROWS_AS(restrict_to_support(rho, Matrix::Zero(3, 3)), domain_error);
}

TEST_CASE("kron") {
  RandomStream rs(7006);
  const Matrix a = random_ginibre(2, 2, rs), b = random_ginibre(3, 3, rs);
  const Matrix c = random_ginibre(2, 2, rs), d = random_ginibre(3, 3, rs);
  REQUIRE(max_abs(kron(a, b) * kron(c, d) - kron(Matrix(a * c), Matrix(b * d))) <= 1e-12);
}

TEST_CASE("partial trace") {
  RandomStream rs(7007);
  SECTION("product state factors") {
    const auto a = random_density(2, 2, rs);
    const auto b = random_density(3, 3, rs);
    const Matrix ab = kron(a.m(), b.m());
    REQUIRE(max_abs(partial_trace(ab, {2, 3}, {0}) - a.m()) <= 1e-12);
    REQUIRE(max_abs(partial_trace(ab, {2, 3}, {1}) - b.m()) <= 1e-12);
  }
  SECTION("bell state reduces to maximally mixed") {
    Vector bell = Vector::Zero(4);
    bell(0) = 1.0 / std::sqrt(2.0);
    bell(3) = 1.0 / std::sqrt(2.0);
    REQUIRE(max_abs(partial_trace_pure(bell, {2, 2}, {0}) - 0.5 * identity(2)) <= 1e-12);
    REQUIRE(max_abs(partial_trace_pure(bell, {2, 2}, {1}) - 0.5 * identity(2)) <= 1e-12);
  }
  SECTION("dimension-one factor is a no-op") {
    const auto a = random_density(3, 3, rs);
    const Matrix lifted = kron(Matrix::Identity(1, 1), a.m());
    REQUIRE(max_abs(partial_trace(lifted, {1, 3}, {1}) - a.m()) <= 1e-12);
  }
  SECTION("trace preserved on three factors") {
    const auto a = random_density(8, 8, rs);
    const Matrix red = partial_trace(a.m(), {2, 2, 2}, {0, 2});
    REQUIRE_THAT(std::real(red.trace()), WithinAbs(1.0, 1e-12));
    REQUIRE(red.rows() == 4);
  }
  SECTION("validation") {
    const auto a = random_density(4, 4, rs);
    REQUIRE_THROWS_AS(partial_trace(a.m(), {3, 2}, {0}), validation_error);
    REQUIRE_THROWS_AS(partial_trace(a.m(), {2, 2}, {2}), validation_error);
    REQUIRE_THROWS_AS(partial_trace(a.m(), {2, 2}, {}), validation_error);
  }
}

TEST_CASE("smallest nonzero eigenvalue") {
  REQUIRE_THAT(smallest_nonzero_eigenvalue(diag2(0.5, 0.5)), WithinAbs(0.5, 1e-13));
  REQUIRE_THAT(smallest_nonzero_eigenvalue(diag2(1.0, 0.0)), WithinAbs(1.0, 1e-13));
  REQUIRE_THROWS_AS(smallest_nonzero_eigenvalue(Matrix::Zero(2, 2)), domain_error);
}

TEST_CASE("purify") {
  RandomStream rs(7008);
  SECTION("round trip, default ancilla") {
    for (Eigen::Index n : {2, 3, 5}) {
      const auto rho = random_density(n, std::min<Eigen::Index>(n, 1 + n % 3), rs);
      const PureState v = purify(rho);
      REQUIRE(v.dims() == std::vector<Eigen::Index>{n, n});
      REQUIRE(max_abs(v.reduce({1}) - rho.m()) <= 1e-9);
    }
  }
  SECTION("min ancilla matches rank") {
    const auto rho = random_density(4, 2, rs);
    const PureState v = purify(rho, true);
    REQUIRE(v.dims() == std::vector<Eigen::Index>{2, 4});
    REQUIRE(max_abs(v.reduce({1}) - rho.m()) <= 1e-9);
  }
  SECTION("maximally mixed gives a maximally entangled vector") {
    const PureState v = purify(DensityMatrix(0.5 * identity(2)));
    const Matrix anc = v.reduce({0});
    REQUIRE(max_abs(anc - 0.5 * identity(2)) <= 1e-9);
  }
}
