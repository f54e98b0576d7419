#include <catch2/catch_amalgamated.hpp>

#include <substate/constructions.hpp>
#include <substate/random.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace substate;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Exact classical divergence for diagonal pairs: q*(p) is the fractional
// knapsack envelope (include indices by decreasing rho/sigma ratio), and the
// objective p*log2(p/q*(p)) is maximized over a fine grid plus breakpoints.
double classical_divergence_oracle(std::vector<double> pr, std::vector<double> qr) {
  std::vector<std::size_t> order(pr.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pr[a] * qr[b] > pr[b] * qr[a];
  });
  auto qstar = [&](double p) {
    double q = 0.0, have = 0.0;
    for (std::size_t i : order) {
      if (have + pr[i] <= p) {
        have += pr[i];
        q += qr[i];
      } else {
        if (pr[i] > 0.0) q += qr[i] * (p - have) / pr[i];
        have = p;
        break;
      }
    }
    return q;
  };
  auto g = [&](double p) {
    if (p <= 0.0) return 0.0;
    const double q = std::max(qstar(p), 1e-300);
    return p * std::log2(p / q);
  };
  double best = 0.0;
  double acc = 0.0;
  std::vector<double> probes;
  for (std::size_t i : order) {
    acc += pr[i];
    probes.push_back(acc);
  }
  for (int i = 0; i <= 20000; ++i) probes.push_back(i / 20000.0);
  for (double p : probes) best = std::max(best, g(std::min(p, 1.0)));
  return best;
}

}  // namespace

TEST_CASE("gentle projection compresses away the flagged subspace") {
  SECTION("zero projector changes nothing") {
    RandomStream rs(11);
    const DensityMatrix rho = random_density(3, 3, rs);
    const Projector none{Matrix(Matrix::Zero(3, 3))};
    const auto g = gentle_projection(rho, none);
    REQUIRE(g.delta == 0.0);
    REQUIRE(max_abs(Matrix(g.rho_prime.m() - rho.m())) <= 1e-12);
  }

  SECTION("half the maximally mixed state, fidelity bound tight") {
    const DensityMatrix rho{diag2(0.5, 0.5)};
    const Projector pi{diag2(0.0, 1.0)};
    const auto g = gentle_projection(rho, pi);
    REQUIRE(g.delta == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(max_abs(Matrix(g.rho_prime.m() - diag2(1.0, 0.0))) <= 1e-12);
    REQUIRE(fidelity(rho, g.rho_prime) == Catch::Approx(0.5).margin(1e-10));
  }

  SECTION("projecting onto small eigenvectors keeps fidelity above 1 - delta") {
    RandomStream rs(12);
    for (int trial = 0; trial < 6; ++trial) {
      auto sub = rs.substream(trial);
      const DensityMatrix rho = random_density(4, 4, sub);
      const EigSystem es = hermitian_eig(rho.m());
      Matrix pim = es.vectors.col(0) * es.vectors.col(0).adjoint() +
                   es.vectors.col(1) * es.vectors.col(1).adjoint();
      const Projector pi{hermitize(pim)};
      const auto g = gentle_projection(rho, pi);
      REQUIRE(fidelity(rho, g.rho_prime) >= 1.0 - g.delta - 1e-8);
      // The survivor never gains support, and avoids the removed subspace.
      const EigSystem ep = hermitian_eig(g.rho_prime.m());
      const double cut = rank_cutoff(ep.values);
      int rank_prime = 0;
      for (Eigen::Index i = 0; i < 4; ++i)
        if (ep.values(i) > cut) ++rank_prime;
      REQUIRE(rank_prime <= 4);
      REQUIRE(max_abs(Matrix(pi.m() * g.rho_prime.m())) <= 1e-10);
      REQUIRE(rank_prime <= 2);  // two directions were removed from a rank-4 state
    }
  }

  SECTION("removing all the weight is an error") {
    const DensityMatrix rho{diag2(1.0, 0.0)};
    const Projector pi{diag2(1.0, 0.0)};
    REQUIRE_THROWS_AS(gentle_projection(rho, pi), domain_error);
  }
}

TEST_CASE("substate witness for a fixed measurement") {
  SECTION("identical states never drop anything") {
    RandomStream rs(21);
    const DensityMatrix rho = random_density(3, 3, rs);
    const Matrix g = random_ginibre(3, 3, rs);
    const PsdOperator m{Matrix(g * g.adjoint())};
    const auto r = substate_for_measurement(rho, rho, m, 0.4);
    REQUIRE(r.b_set.empty());
    REQUIRE(max_abs(Matrix(r.rho_prime.m() - rho.m())) <= 1e-12);
    REQUIRE(r.lhs <= r.rhs + 1e-9);
  }

  SECTION("classical fixture drops exactly the overweight direction") {
    const DensityMatrix rho{diag2(0.5, 0.5)};
    const DensityMatrix sigma{diag2(0.99, 0.01)};
    const PsdOperator m{diag2(0.0, 1.0)};
    const double d_oracle = classical_divergence_oracle({0.5, 0.5}, {0.99, 0.01});
    REQUIRE(d_oracle == Catch::Approx(0.5 * std::log2(50.0)).margin(1e-6));
    const double d = 2.8219280948873623;  // 0.5 * log2(50), pinned from the oracle

    const auto r = substate_for_measurement(rho, sigma, m, 0.9, d);
    REQUIRE(r.b_set == std::vector<Eigen::Index>{1});
    REQUIRE(max_abs(Matrix(r.projector.m() - diag2(0.0, 1.0))) <= 1e-12);
    REQUIRE(max_abs(Matrix(r.rho_prime.m() - diag2(1.0, 0.0))) <= 1e-12);
    REQUIRE(r.trace_pi_rho == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(r.trace_pi_rho < 0.9);
    REQUIRE(fidelity(rho, r.rho_prime) >= 1.0 - 0.9 - 1e-8);
    REQUIRE(r.lhs == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(r.rhs == Catch::Approx(std::exp2(d / 0.9) * 0.01).margin(1e-9));
  }

  SECTION("random instances satisfy all three guarantees with computed d") {
    RandomStream rs(22);
    const int dims[] = {2, 3, 4};
    for (int trial = 0; trial < 9; ++trial) {
      auto sub = rs.substream(trial);
      const int n = dims[trial % 3];
      const DensityMatrix rho = random_density(n, 1 + trial % n, sub);
      const DensityMatrix sigma = random_density(n, n, sub);
      const Matrix g = random_ginibre(n, n, sub);
      const PsdOperator m{Matrix(g * g.adjoint())};
      const double eps = trial % 2 == 0 ? 0.3 : 0.7;

      const auto r = substate_for_measurement(rho, sigma, m, eps);
      REQUIRE(r.trace_pi_rho < eps + 1e-8);
      REQUIRE(fidelity(rho, r.rho_prime) >= 1.0 - eps - 1e-8);
      const double slack = 1e-7 * std::max(1.0, std::real(m.m().trace()));
      REQUIRE(r.lhs <= r.rhs + slack);
    }
  }
}

TEST_CASE("smoothing witness stays under the explicit bound") {
  SECTION("identical states") {
    RandomStream rs(31);
    const DensityMatrix rho = random_density(3, 3, rs);
    const auto sw = substate_smoothing(rho, rho, 0.3);
    REQUIRE(sw.certificate.status == SdpStatus::optimal);
    REQUIRE(sw.certificate.value <= std::log2(1.0 / 0.7) + 1e-4);
    REQUIRE(sw.certificate.value >= -1e-7);
    REQUIRE(sw.certificate.kappa >= 1.0 - 1e-9);
  }

  SECTION("pure state against the maximally mixed state") {
    const DensityMatrix rho{diag2(1.0, 0.0)};
    const DensityMatrix sigma{diag2(0.5, 0.5)};
    const auto sw = substate_smoothing(rho, sigma, 0.5);
    REQUIRE(sw.divergence_bits == Catch::Approx(1.0).margin(1e-5));
    REQUIRE(sw.theorem_bound_bits == Catch::Approx(3.0).margin(1e-4));
    REQUIRE(sw.certificate.value == Catch::Approx(0.0).margin(1e-6));
  }

  SECTION("random pairs") {
    RandomStream rs(32);
    for (int trial = 0; trial < 6; ++trial) {
      auto sub = rs.substream(trial);
      const int n = 2 + trial % 3;
      const DensityMatrix rho = random_density(n, n, sub);
      const DensityMatrix sigma = random_density(n, n, sub);
      const double eps = trial % 2 == 0 ? 0.1 : 0.5;
      const auto sw = substate_smoothing(rho, sigma, eps);
      REQUIRE(sw.certificate.status == SdpStatus::optimal);
      REQUIRE(sw.certificate.value <= sw.theorem_bound_bits + 1e-4);
      REQUIRE(sw.certificate.kappa >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("optimal purification alignment reaches the state fidelity") {
  RandomStream rs(41);
  for (int trial = 0; trial < 6; ++trial) {
    auto sub = rs.substream(trial);
    const int n = 2 + trial % 3;
    const DensityMatrix rho = random_density(n, n, sub);
    const DensityMatrix tau = random_density(n, 1 + trial % n, sub);
    const PureState v = purify(rho);
    const PureState vp = uhlmann_optimal_purification(tau, v);
    REQUIRE(max_abs(Matrix(vp.reduce({1}) - tau.m())) <= 1e-9);
    const double overlap = std::norm(v.amplitudes().dot(vp.amplitudes()));
    REQUIRE(overlap == Catch::Approx(fidelity(rho, tau)).margin(1e-9));
    // Purification fidelity can never beat the state fidelity.
    REQUIRE(overlap <= fidelity(rho, tau) + 1e-8);
  }

  SECTION("same state gives unit overlap") {
    RandomStream rs2(42);
    const DensityMatrix rho = random_density(3, 3, rs2);
    const PureState v = purify(rho);
    const PureState vp = uhlmann_optimal_purification(rho, v);
    REQUIRE(std::norm(v.amplitudes().dot(vp.amplitudes())) ==
            Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("two-branch purification decomposes sigma") {
  SECTION("identical maximally mixed states") {
    const DensityMatrix half{diag2(0.5, 0.5)};
    const auto t = purification_decomposition(half, half, 0.5);
    REQUIRE(t.alpha == Catch::Approx(0.5).margin(1e-5));
    REQUIRE(max_abs(Matrix(t.theta.m() - half.m())) <= 1e-5);
    REQUIRE(t.w.dims() == std::vector<Eigen::Index>{2, 2, 2});
    REQUIRE(max_abs(Matrix(t.w.reduce({2}) - half.m())) <= 1e-8);
  }

  SECTION("pure against maximally mixed pins alpha to an eighth") {
    const DensityMatrix rho{diag2(1.0, 0.0)};
    const DensityMatrix sigma{diag2(0.5, 0.5)};
    const auto t = purification_decomposition(rho, sigma, 0.5);
    REQUIRE(t.d_used == Catch::Approx(1.0).margin(1e-5));
    REQUIRE(t.alpha == Catch::Approx(0.125).margin(1e-4));
    REQUIRE(t.theta_floor >= -1e-7);
    REQUIRE(max_abs(Matrix(t.w.reduce({2}) - sigma.m())) <= 1e-8);
  }

  SECTION("random pairs satisfy every decomposition invariant") {
    RandomStream rs(51);
    for (int trial = 0; trial < 4; ++trial) {
      auto sub = rs.substream(trial);
      const DensityMatrix rho = random_density(3, 3, sub);
      const DensityMatrix sigma = random_density(3, 3, sub);
      const double eps = 0.25;
      const auto t = purification_decomposition(rho, sigma, eps);

      // Branch structure of the assembled vector.
      const Eigen::Index block = t.v_prime.amplitudes().size();
      Vector rebuilt(2 * block);
      rebuilt.head(block) = std::sqrt(t.alpha) * t.v_prime.amplitudes();
      rebuilt.tail(block) = std::sqrt(1.0 - t.alpha) * t.w_prime.amplitudes();
      REQUIRE((rebuilt - t.w.amplitudes()).cwiseAbs().maxCoeff() <= 1e-9);

      // The two branches recombine to sigma.
      REQUIRE(max_abs(Matrix(t.w.reduce({2}) - sigma.m())) <= 1e-8);
      const Matrix resid =
          sigma.m() - t.alpha * t.v_prime.reduce({1}) - (1.0 - t.alpha) * t.theta.m();
      REQUIRE(max_abs(resid) <= 1e-7);
      REQUIRE(t.theta_floor >= -1e-7);

      // The aligned branch stays close to rho's purification.
      const double pure_overlap = std::norm(t.v.amplitudes().dot(t.v_prime.amplitudes()));
      REQUIRE(pure_overlap >= 1.0 - eps - 1e-6);
      REQUIRE(pure_overlap <= fidelity(rho, t.rho_prime) + 1e-8);
    }
  }
}

TEST_CASE("scalar angle bound") {
  REQUIRE(angle_fidelity_bound(0.5, 0.0) == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(angle_fidelity_bound(0.5, 0.25) == Catch::Approx(0.125).margin(1e-15));
  REQUIRE(angle_fidelity_bound(1.0, 0.25) == Catch::Approx(0.25).margin(1e-15));
  REQUIRE_THROWS_AS(angle_fidelity_bound(0.5, 0.3), domain_error);
  REQUIRE_THROWS_AS(angle_fidelity_bound(-0.1, 0.1), domain_error);
  REQUIRE_THROWS_AS(angle_fidelity_bound(1.1, 0.1), domain_error);

  SECTION("no overlap-compatible delta-prime undercuts the bound") {
    for (int di = 1; di <= 20; ++di) {
      const double delta = di / 20.0;
      for (int bi = 0; bi <= 5; ++bi) {
        const double beta = bi * 0.05;
        const double floor_val = angle_fidelity_bound(delta, beta);
        for (int k = 0; k <= 1000; ++k) {
          const double dp = k / 1000.0;
          const double overlap = std::sqrt(delta * dp) +
                                 std::sqrt((1.0 - delta) * (1.0 - dp));
          if (overlap * overlap >= 1.0 - beta * delta)
            REQUIRE(dp >= floor_val - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("converse sandwich around the divergence") {
  SECTION("identical states sit far inside the bound") {
    RandomStream rs(61);
    const DensityMatrix rho = random_density(2, 2, rs);
    const auto r = converse_check(rho, rho, {0.25, 0.5});
    REQUIRE_FALSE(r.divergence_infinite);
    REQUIRE(std::abs(r.divergence) <= 1e-6);
    REQUIRE(r.k == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(r.bound == Catch::Approx(3.0).margin(1e-5));
    REQUIRE(r.pass);
    REQUIRE(r.forward_ok);
  }

  SECTION("pure state against maximally mixed") {
    const DensityMatrix rho{diag2(1.0, 0.0)};
    const DensityMatrix sigma{diag2(0.5, 0.5)};
    const auto r = converse_check(rho, sigma, {0.1, 0.25, 0.5, 0.75});
    REQUIRE(r.divergence == Catch::Approx(1.0).margin(1e-5));
    REQUIRE(r.witness_delta == Catch::Approx(1.0).margin(1e-5));
    REQUIRE(r.epsilon_used == Catch::Approx(0.25).margin(1e-5));
    // Largest exponent over the grid appears at eps = 0.1:
    // 0.1 * (log2(1.8) - log2(10/9)).
    REQUIRE(r.k == Catch::Approx(0.0695994).margin(1e-4));
    REQUIRE(r.all_solved);
    REQUIRE(r.pass);
    REQUIRE(r.forward_ok);
  }

  SECTION("random pairs pass both directions") {
    RandomStream rs(62);
    for (int trial = 0; trial < 3; ++trial) {
      auto sub = rs.substream(trial);
      const DensityMatrix rho = random_density(3, 1 + trial % 3, sub);
      const DensityMatrix sigma = random_density(3, 3, sub);
      const auto r = converse_check(rho, sigma, {0.25, 0.5});
      REQUIRE(r.all_solved);
      REQUIRE(r.pass);
      REQUIRE(r.forward_ok);
      REQUIRE(r.k <= r.divergence + 1e-4);
    }
  }

  SECTION("support escape is flagged, not thrown") {
    const DensityMatrix rho{diag2(0.0, 1.0)};
    const DensityMatrix sigma{diag2(1.0, 0.0)};
    const auto r = converse_check(rho, sigma, {0.5});
    REQUIRE(r.divergence_infinite);
    REQUIRE_FALSE(r.pass);
  }
}
