// random.hpp — deterministic seeded randomness. Streams split by counter so
// parallel trials draw from independent substreams reproducibly.
#pragma once

#include "substate/states.hpp"

#include <cstdint>
#include <random>

namespace substate {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Splittable counter stream: substream(i) derives an independent child key
// without consuming any draws from this stream.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key), eng_(detail::splitmix64(key)) {}

  RandomStream substream(std::uint64_t index) const {
    return RandomStream(detail::splitmix64(key_ ^ (0x9e3779b97f4a7c15ULL * (index + 1))));
  }

  std::uint64_t key() const { return key_; }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  // Inclusive bounds.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
  }
  Complex complex_normal() { return Complex(normal(), normal()) / std::sqrt(2.0); }

 private:
  std::uint64_t key_;
  std::mt19937_64 eng_;
};

inline Matrix random_ginibre(Eigen::Index rows, Eigen::Index cols, RandomStream& rs) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rs.complex_normal();
  return g;
}

// G G^dagger / tr(G G^dagger) with G a dim x rank Ginibre draw.
inline DensityMatrix random_density(Eigen::Index dim, Eigen::Index rank, RandomStream& rs) {
  if (rank < 1 || rank > dim)
    throw validation_error("random_density: rank must lie in [1, dim]");
  const Matrix g = random_ginibre(dim, rank, rs);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(hermitize(rho));
}

// Haar-distributed via QR of a Ginibre draw with phase correction.
inline Matrix random_unitary(Eigen::Index dim, RandomStream& rs) {
  const Matrix g = random_ginibre(dim, dim, rs);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Complex d = r(i, i);
    q.col(i) *= std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return q;
}

inline Vector random_pure_vector(Eigen::Index dim, RandomStream& rs) {
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = rs.complex_normal();
  v /= v.norm();
  return v;
}

// Random measurement operator with spectrum uniform on [0, 1].
inline PovmElement random_povm_element(Eigen::Index dim, RandomStream& rs) {
  const Matrix u = random_unitary(dim, rs);
  RealVector spec(dim);
  for (Eigen::Index i = 0; i < dim; ++i) spec(i) = rs.uniform();
  return PovmElement(hermitize(u * spec.asDiagonal() * u.adjoint()));
}

inline Projector random_projector(Eigen::Index dim, Eigen::Index rank, RandomStream& rs) {
  if (rank < 0 || rank > dim) throw validation_error("random_projector: bad rank");
  const Matrix u = random_unitary(dim, rs);
  Matrix p = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < rank; ++i) p += u.col(i) * u.col(i).adjoint();
  return Projector(hermitize(p));
}

}  // namespace substate
