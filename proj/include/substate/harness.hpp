// harness.hpp — randomized verification campaigns over generated state pairs,
// with reproducible seeding and machine-readable reports.
#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "substate/constructions.hpp"
#include "substate/random.hpp"

namespace substate {

enum class RankPolicy { full, random, fixed };

inline const char* to_string(RankPolicy p) {
  switch (p) {
    case RankPolicy::full: return "full";
    case RankPolicy::random: return "random";
    default: return "fixed";
  }
}

inline RankPolicy rank_policy_from_string(const std::string& s) {
  if (s == "full") return RankPolicy::full;
  if (s == "random") return RankPolicy::random;
  if (s == "fixed") return RankPolicy::fixed;
  throw validation_error("rank policy must be full, random or fixed, got \"" + s + "\"");
}

struct TrialConfig {
  std::vector<Eigen::Index> dims = {2, 3, 4, 6, 8};
  RankPolicy ranks = RankPolicy::full;
  Eigen::Index fixed_rank = 1;  // rho rank under RankPolicy::fixed
  std::vector<double> epsilons = {0.1, 0.3, 0.5, 0.7};
  int trials = 50;  // per cell
  std::uint64_t master_seed = 1;
  std::map<std::string, double> tolerances;  // overrides for named defaults
  DivergenceOptions divergence;
  SdpOptions sdp;
};

inline void validate(const TrialConfig& c) {
  if (c.dims.empty()) throw validation_error("TrialConfig: dims must be non-empty");
  for (const Eigen::Index d : c.dims)
    if (d < 2) throw validation_error("TrialConfig: dims must be >= 2");
  if (c.epsilons.empty()) throw validation_error("TrialConfig: epsilons must be non-empty");
  for (const double e : c.epsilons)
    if (!(e > 0.0) || !(e < 1.0))
      throw validation_error("TrialConfig: epsilons must lie in (0, 1)");
  if (c.trials < 1) throw validation_error("TrialConfig: trials must be >= 1");
  if (c.ranks == RankPolicy::fixed && c.fixed_rank < 1)
    throw validation_error("TrialConfig: fixed rank must be >= 1");
}

inline double tolerance(const TrialConfig& c, const std::string& name, double fallback) {
  const auto it = c.tolerances.find(name);
  return it == c.tolerances.end() ? fallback : it->second;
}

struct Instance {
  DensityMatrix rho;
  DensityMatrix sigma;
  Eigen::Index support_dim = 0;  // dimension of supp(sigma)
  Eigen::Index rho_rank = 0;
};

// Draw a pair with supp(rho) inside supp(sigma) by construction: sigma is
// full-rank on its subspace and rho is built inside it. The draw order is
// fixed, so a given substream always produces the same pair.
inline Instance gen_instance(Eigen::Index dim, RankPolicy policy, RandomStream& rs,
                             Eigen::Index fixed_rank = 1) {
  if (dim < 2) throw validation_error("gen_instance: dim must be >= 2");
  Eigen::Index s = dim, r = dim;
  switch (policy) {
    case RankPolicy::full:
      break;
    case RankPolicy::random:
      s = rs.uniform_int(1, dim);
      r = rs.uniform_int(1, s);
      break;
    case RankPolicy::fixed:
      if (fixed_rank < 1) throw validation_error("gen_instance: fixed rank must be >= 1");
      r = std::min(fixed_rank, dim);
      break;
  }
  const DensityMatrix sigma_sub = random_density(s, s, rs);
  const DensityMatrix rho_sub = random_density(s, r, rs);
  if (s == dim) return Instance{rho_sub, sigma_sub, s, r};
  const Matrix v = random_unitary(dim, rs).leftCols(s);
  return Instance{DensityMatrix(hermitize(Matrix(v * rho_sub.m() * v.adjoint()))),
                  DensityMatrix(hermitize(Matrix(v * sigma_sub.m() * v.adjoint()))), s, r};
}

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// Order-sensitive hash of both operators, row-major, raw double bits.
inline std::uint64_t instance_hash(const Matrix& rho, const Matrix& sigma) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Matrix* m : {&rho, &sigma}) {
    const std::int64_t n = m->rows();
    h = fnv1a_bytes(&n, sizeof n, h);
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        const double parts[2] = {std::real((*m)(i, j)), std::imag((*m)(i, j))};
        h = fnv1a_bytes(parts, sizeof parts, h);
      }
  }
  return h;
}

struct TrialRecord {
  std::string suite;
  Eigen::Index dim = 0;
  int trial = 0;  // index within the cell
  double epsilon = std::numeric_limits<double>::quiet_NaN();  // NaN when not per-eps
  std::uint64_t instance_hash = 0;
  bool solved = false;
  bool pass = false;
  std::string failure;  // empty when solved
  std::map<std::string, double> quantities;
  std::map<std::string, double> residuals;  // signed violations, positive = violated
  int solver_iterations = 0;
  double seconds = 0.0;
};

struct ReportAggregate {
  int records = 0;
  int passes = 0;
  int failures = 0;
  int solver_failures = 0;
  std::map<std::string, double> max_violation;  // per residual key
  std::int64_t solver_iterations_total = 0;
  int solver_iterations_max = 0;
  double seconds_total = 0.0;
};

inline ReportAggregate aggregate_records(const std::vector<TrialRecord>& records) {
  ReportAggregate a;
  a.records = static_cast<int>(records.size());
  for (const TrialRecord& r : records) {
    r.pass ? ++a.passes : ++a.failures;
    if (!r.solved) ++a.solver_failures;
    for (const auto& [key, v] : r.residuals) {
      const auto it = a.max_violation.find(key);
      if (it == a.max_violation.end())
        a.max_violation.emplace(key, v);
      else
        it->second = std::max(it->second, v);
    }
    a.solver_iterations_total += r.solver_iterations;
    a.solver_iterations_max = std::max(a.solver_iterations_max, r.solver_iterations);
    a.seconds_total += r.seconds;
  }
  return a;
}

struct Report {
  std::string suite;
  TrialConfig config;
  std::vector<TrialRecord> records;
  ReportAggregate aggregate;  // always recomputable from records
};

// ---- Single-pair checks, reused by the suites and by fixtures. ----

struct Thm1Check {
  double divergence = std::numeric_limits<double>::quiet_NaN();
  double s_eps = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();  // bound - s_eps
  bool solved = false;
  std::string failure;
  int iterations = 0;  // smoothing solve only; the sweep reports its own
};

inline Thm1Check check_thm1(const DensityMatrix& rho, const DensityMatrix& sigma,
                            double eps,
                            std::optional<double> divergence_bits = std::nullopt,
                            const DivergenceOptions& dopt = {},
                            const SdpOptions& sopt = {}) {
  Thm1Check c;
  if (divergence_bits) {
    c.divergence = *divergence_bits;
  } else {
    const ObservationalDivergenceResult dv = observational_divergence(rho, sigma, dopt);
    if (dv.infinite) {
      c.failure = "observational divergence is infinite";
      return c;
    }
    if (dv.status != SdpStatus::optimal) {
      c.failure = std::string("divergence sweep: ") + to_string(dv.status);
      return c;
    }
    c.divergence = dv.value;
  }
  const SmoothRelMinEntropyResult s = smooth_relative_min_entropy(rho, sigma, eps, sopt);
  c.iterations = s.solution.iterations;
  if (s.status != SdpStatus::optimal) {
    c.failure = std::string("smoothing: ") + to_string(s.status);
    return c;
  }
  c.s_eps = s.value;
  c.bound = c.divergence / eps + std::log2(1.0 / (1.0 - eps));
  c.margin = c.bound - c.s_eps;
  c.solved = true;
  return c;
}

struct RelationCheck {
  double divergence = std::numeric_limits<double>::quiet_NaN();
  double entropy = std::numeric_limits<double>::quiet_NaN();
  double min_entropy = std::numeric_limits<double>::quiet_NaN();
  bool solved = false;
  std::string failure;
  int iterations = 0;
};

inline RelationCheck check_relations(const DensityMatrix& rho, const DensityMatrix& sigma,
                                     const DivergenceOptions& dopt = {}) {
  RelationCheck c;
  const ObservationalDivergenceResult dv = observational_divergence(rho, sigma, dopt);
  c.iterations = dv.solver_iterations;
  if (dv.infinite) {
    c.failure = "supports escape, all three quantities infinite";
    return c;
  }
  if (dv.status != SdpStatus::optimal) {
    c.failure = std::string("divergence sweep: ") + to_string(dv.status);
    return c;
  }
  c.divergence = dv.value;
  c.entropy = relative_entropy(rho, sigma).value;
  c.min_entropy = relative_min_entropy(rho, sigma).value;
  c.solved = true;
  return c;
}

struct MinimaxCheck {
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double inner = std::numeric_limits<double>::quiet_NaN();  // min <Z1, rho'>
  double gap_rel = std::numeric_limits<double>::quiet_NaN();
  bool solved = false;
  std::string failure;
  int iterations = 0;
};

// Saddle equality: the smoothed dominance factor must coincide with the inner
// minimization evaluated at the recovered dual weight.
inline MinimaxCheck check_minimax(const DensityMatrix& rho, const DensityMatrix& sigma,
                                  double eps, const SdpOptions& sopt = {}) {
  MinimaxCheck c;
  const SmoothRelMinEntropyResult s = smooth_relative_min_entropy(rho, sigma, eps, sopt);
  c.iterations = s.solution.iterations;
  if (s.status != SdpStatus::optimal) {
    c.failure = std::string("smoothing: ") + to_string(s.status);
    return c;
  }
  const WeightedSmoothedMinResult inner =
      min_weight_over_smoothed(s.dual.z1, rho, sigma, eps, sopt);
  c.iterations += inner.solution.iterations;
  if (inner.status != SdpStatus::optimal) {
    c.failure = std::string("inner minimization: ") + to_string(inner.status);
    return c;
  }
  c.kappa = s.kappa;
  c.inner = inner.value;
  c.gap_rel = std::abs(c.kappa - c.inner) / (1.0 + c.kappa);
  c.solved = true;
  return c;
}

// ---- Suite runners. ----

namespace harness_detail {

inline double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Cells are (dim index) x (trial index); each trial gets its own substream so
// execution order cannot change what is drawn.
template <typename PerTrial>
void for_each_trial(const TrialConfig& c, PerTrial&& body) {
  const RandomStream master(c.master_seed);
  for (std::size_t ci = 0; ci < c.dims.size(); ++ci) {
    const RandomStream cell = master.substream(ci);
    for (int t = 0; t < c.trials; ++t) {
      RandomStream ts = cell.substream(static_cast<std::uint64_t>(t));
      body(c.dims[ci], t, ts);
    }
  }
}

}  // namespace harness_detail

inline Report run_thm1_suite(const TrialConfig& config) {
  validate(config);
  Report rep;
  rep.suite = "thm1";
  rep.config = config;
  const double tol = tolerance(config, "thm1_margin", 1e-4);
  harness_detail::for_each_trial(config, [&](Eigen::Index dim, int trial, RandomStream& ts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = gen_instance(dim, config.ranks, ts, config.fixed_rank);
    const std::uint64_t hash = instance_hash(inst.rho.m(), inst.sigma.m());

    // The divergence is a property of the pair; solve it once and share it
    // across the epsilon records. Its cost is amortized over them and its
    // iterations attributed to the first.
    std::optional<double> shared_d;
    std::string d_failure;
    int d_iterations = 0;
    try {
      const ObservationalDivergenceResult dv =
          observational_divergence(inst.rho, inst.sigma, config.divergence);
      d_iterations = dv.solver_iterations;
      if (dv.infinite)
        d_failure = "observational divergence is infinite";
      else if (dv.status != SdpStatus::optimal)
        d_failure = std::string("divergence sweep: ") + to_string(dv.status);
      else
        shared_d = dv.value;
    } catch (const std::exception& e) {
      d_failure = e.what();
    }
    const double d_seconds = harness_detail::elapsed(t0);

    for (std::size_t ei = 0; ei < config.epsilons.size(); ++ei) {
      const double eps = config.epsilons[ei];
      TrialRecord r;
      r.suite = rep.suite;
      r.dim = dim;
      r.trial = trial;
      r.epsilon = eps;
      r.instance_hash = hash;
      const auto e0 = std::chrono::steady_clock::now();
      if (!shared_d) {
        r.failure = d_failure;
      } else {
        try {
          const Thm1Check c = check_thm1(inst.rho, inst.sigma, eps, shared_d,
                                         config.divergence, config.sdp);
          r.solved = c.solved;
          r.failure = c.failure;
          r.solver_iterations = c.iterations;
          if (c.solved) {
            r.quantities["divergence"] = c.divergence;
            r.quantities["s_eps"] = c.s_eps;
            r.quantities["bound"] = c.bound;
            r.quantities["margin"] = c.margin;
            r.residuals["margin_deficit"] = -c.margin;
            r.pass = c.margin >= -tol;
          }
        } catch (const std::exception& e) {
          r.failure = e.what();
        }
      }
      if (ei == 0) r.solver_iterations += d_iterations;
      r.seconds = harness_detail::elapsed(e0) +
                  d_seconds / static_cast<double>(config.epsilons.size());
      rep.records.push_back(std::move(r));
    }
  });
  rep.aggregate = aggregate_records(rep.records);
  return rep;
}

inline Report run_converse_suite(const TrialConfig& config) {
  validate(config);
  Report rep;
  rep.suite = "converse";
  rep.config = config;
  harness_detail::for_each_trial(config, [&](Eigen::Index dim, int trial, RandomStream& ts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = gen_instance(dim, config.ranks, ts, config.fixed_rank);
    TrialRecord r;
    r.suite = rep.suite;
    r.dim = dim;
    r.trial = trial;
    r.instance_hash = instance_hash(inst.rho.m(), inst.sigma.m());
    try {
      const ConverseReport cr = converse_check(inst.rho, inst.sigma, config.epsilons,
                                               config.divergence, config.sdp);
      if (cr.divergence_infinite) {
        r.failure = "observational divergence is infinite";
      } else {
        r.solved = cr.all_solved;
        if (!cr.all_solved) r.failure = "a smoothing point failed to solve";
        r.quantities["divergence"] = cr.divergence;
        r.quantities["witness_delta"] = cr.witness_delta;
        r.quantities["epsilon_used"] = cr.epsilon_used;
        r.quantities["k"] = cr.k;
        r.quantities["bound"] = cr.bound;
        double forward_excess = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cr.points.size(); ++i) {
          const ConversePoint& pt = cr.points[i];
          const std::string tag = "point" + std::to_string(i) + ".";
          r.quantities[tag + "eps"] = pt.eps;
          r.quantities[tag + "solved"] = pt.solved ? 1.0 : 0.0;
          if (pt.solved) {
            r.quantities[tag + "s_eps"] = pt.s_eps_bits;
            r.quantities[tag + "k_eps"] = pt.k_eps;
            forward_excess = std::max(forward_excess, pt.k_eps - cr.divergence);
          }
          r.solver_iterations += pt.iterations;
        }
        r.residuals["divergence_minus_bound"] = cr.divergence - cr.bound;
        if (std::isfinite(forward_excess)) r.residuals["forward_excess"] = forward_excess;
        r.pass = r.solved && cr.pass && cr.forward_ok;
      }
    } catch (const std::exception& e) {
      r.failure = e.what();
    }
    r.seconds = harness_detail::elapsed(t0);
    rep.records.push_back(std::move(r));
  });
  rep.aggregate = aggregate_records(rep.records);
  return rep;
}

inline Report run_relation_suite(const TrialConfig& config) {
  validate(config);
  Report rep;
  rep.suite = "relations";
  rep.config = config;
  const double tol_bits = tolerance(config, "relation_bits", 1e-4);
  const double tol_entropy = tolerance(config, "relation_entropy", 1e-6);
  const double tol_nonneg = tolerance(config, "nonnegativity", 1e-9);
  harness_detail::for_each_trial(config, [&](Eigen::Index dim, int trial, RandomStream& ts) {
    const auto t0 = std::chrono::steady_clock::now();
    const Instance inst = gen_instance(dim, config.ranks, ts, config.fixed_rank);
    TrialRecord r;
    r.suite = rep.suite;
    r.dim = dim;
    r.trial = trial;
    r.instance_hash = instance_hash(inst.rho.m(), inst.sigma.m());
    try {
      const RelationCheck c = check_relations(inst.rho, inst.sigma, config.divergence);
      r.solved = c.solved;
      r.failure = c.failure;
      r.solver_iterations = c.iterations;
      if (c.solved) {
        r.quantities["divergence"] = c.divergence;
        r.quantities["entropy"] = c.entropy;
        r.quantities["min_entropy"] = c.min_entropy;
        r.residuals["divergence_minus_entropy_bound"] = c.divergence - (c.entropy + 1.0);
        r.residuals["entropy_minus_min_entropy"] = c.entropy - c.min_entropy;
        r.residuals["negative_divergence"] = -c.divergence;
        r.residuals["negative_min_entropy"] = -c.min_entropy;
        r.pass = r.residuals["divergence_minus_entropy_bound"] <= tol_bits &&
                 r.residuals["entropy_minus_min_entropy"] <= tol_entropy &&
                 r.residuals["negative_divergence"] <= tol_nonneg &&
                 r.residuals["negative_min_entropy"] <= tol_nonneg;
      }
    } catch (const std::exception& e) {
      r.failure = e.what();
    }
    r.seconds = harness_detail::elapsed(t0);
    rep.records.push_back(std::move(r));
  });
  rep.aggregate = aggregate_records(rep.records);
  return rep;
}

inline Report run_minimax_check(const TrialConfig& config) {
  validate(config);
  Report rep;
  rep.suite = "minimax";
  rep.config = config;
  const double tol = tolerance(config, "minimax_rel", 1e-5);
  harness_detail::for_each_trial(config, [&](Eigen::Index dim, int trial, RandomStream& ts) {
    const Instance inst = gen_instance(dim, config.ranks, ts, config.fixed_rank);
    const std::uint64_t hash = instance_hash(inst.rho.m(), inst.sigma.m());
    for (const double eps : config.epsilons) {
      TrialRecord r;
      r.suite = rep.suite;
      r.dim = dim;
      r.trial = trial;
      r.epsilon = eps;
      r.instance_hash = hash;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const MinimaxCheck c = check_minimax(inst.rho, inst.sigma, eps, config.sdp);
        r.solved = c.solved;
        r.failure = c.failure;
        r.solver_iterations = c.iterations;
        if (c.solved) {
          r.quantities["kappa"] = c.kappa;
          r.quantities["inner"] = c.inner;
          r.residuals["saddle_gap_rel"] = c.gap_rel;
          r.pass = c.gap_rel <= tol;
        }
      } catch (const std::exception& e) {
        r.failure = e.what();
      }
      r.seconds = harness_detail::elapsed(t0);
      rep.records.push_back(std::move(r));
    }
  });
  rep.aggregate = aggregate_records(rep.records);
  return rep;
}

// ---- Serialization. ----

enum class ReportFormat { json, csv };

// JSON numbers cannot carry NaN or infinities; encode them as strings so
// reports round-trip losslessly.
inline nlohmann::json json_real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw validation_error("report parse: bad real value \"" + s + "\"");
  }
  return j.get<double>();
}

inline nlohmann::json config_to_json(const TrialConfig& c) {
  nlohmann::json j;
  j["dims"] = c.dims;
  j["ranks"] = to_string(c.ranks);
  j["fixed_rank"] = c.fixed_rank;
  nlohmann::json eps = nlohmann::json::array();
  for (const double e : c.epsilons) eps.push_back(json_real(e));
  j["epsilons"] = eps;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  nlohmann::json tols = nlohmann::json::object();
  for (const auto& [k, v] : c.tolerances) tols[k] = json_real(v);
  j["tolerances"] = tols;
  j["grid_points"] = c.divergence.grid_points;
  return j;
}

inline TrialConfig config_from_json(const nlohmann::json& j) {
  TrialConfig c;
  c.dims = j.at("dims").get<std::vector<Eigen::Index>>();
  c.ranks = rank_policy_from_string(j.at("ranks").get<std::string>());
  c.fixed_rank = j.at("fixed_rank").get<Eigen::Index>();
  c.epsilons.clear();
  for (const auto& e : j.at("epsilons")) c.epsilons.push_back(real_from_json(e));
  c.trials = j.at("trials").get<int>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.tolerances.clear();
  for (const auto& [k, v] : j.at("tolerances").items()) c.tolerances[k] = real_from_json(v);
  if (j.contains("grid_points")) c.divergence.grid_points = j.at("grid_points").get<int>();
  return c;
}

inline nlohmann::json record_to_json(const TrialRecord& r) {
  nlohmann::json j;
  j["suite"] = r.suite;
  j["dim"] = r.dim;
  j["trial"] = r.trial;
  j["epsilon"] = json_real(r.epsilon);
  j["instance_hash"] = r.instance_hash;
  j["solved"] = r.solved;
  j["pass"] = r.pass;
  j["failure"] = r.failure;
  nlohmann::json q = nlohmann::json::object(), res = nlohmann::json::object();
  for (const auto& [k, v] : r.quantities) q[k] = json_real(v);
  for (const auto& [k, v] : r.residuals) res[k] = json_real(v);
  j["quantities"] = q;
  j["residuals"] = res;
  j["solver_iterations"] = r.solver_iterations;
  j["seconds"] = json_real(r.seconds);
  return j;
}

inline TrialRecord record_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.suite = j.at("suite").get<std::string>();
  r.dim = j.at("dim").get<Eigen::Index>();
  r.trial = j.at("trial").get<int>();
  r.epsilon = real_from_json(j.at("epsilon"));
  r.instance_hash = j.at("instance_hash").get<std::uint64_t>();
  r.solved = j.at("solved").get<bool>();
  r.pass = j.at("pass").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  for (const auto& [k, v] : j.at("quantities").items()) r.quantities[k] = real_from_json(v);
  for (const auto& [k, v] : j.at("residuals").items()) r.residuals[k] = real_from_json(v);
  r.solver_iterations = j.at("solver_iterations").get<int>();
  r.seconds = real_from_json(j.at("seconds"));
  return r;
}

inline nlohmann::json aggregate_to_json(const ReportAggregate& a) {
  nlohmann::json j;
  j["records"] = a.records;
  j["passes"] = a.passes;
  j["failures"] = a.failures;
  j["solver_failures"] = a.solver_failures;
  nlohmann::json mv = nlohmann::json::object();
  for (const auto& [k, v] : a.max_violation) mv[k] = json_real(v);
  j["max_violation"] = mv;
  j["solver_iterations_total"] = a.solver_iterations_total;
  j["solver_iterations_max"] = a.solver_iterations_max;
  j["seconds_total"] = json_real(a.seconds_total);
  return j;
}

inline ReportAggregate aggregate_from_json(const nlohmann::json& j) {
  ReportAggregate a;
  a.records = j.at("records").get<int>();
  a.passes = j.at("passes").get<int>();
  a.failures = j.at("failures").get<int>();
  a.solver_failures = j.at("solver_failures").get<int>();
  for (const auto& [k, v] : j.at("max_violation").items())
    a.max_violation[k] = real_from_json(v);
  a.solver_iterations_total = j.at("solver_iterations_total").get<std::int64_t>();
  a.solver_iterations_max = j.at("solver_iterations_max").get<int>();
  a.seconds_total = real_from_json(j.at("seconds_total"));
  return a;
}

inline nlohmann::json report_to_json(const Report& rep) {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["suite"] = rep.suite;
  j["config"] = config_to_json(rep.config);
  nlohmann::json recs = nlohmann::json::array();
  for (const TrialRecord& r : rep.records) recs.push_back(record_to_json(r));
  j["records"] = recs;
  j["aggregate"] = aggregate_to_json(rep.aggregate);
  return j;
}

inline Report report_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != schema_version)
    throw validation_error("report parse: unsupported schema version");
  Report rep;
  rep.suite = j.at("suite").get<std::string>();
  rep.config = config_from_json(j.at("config"));
  for (const auto& r : j.at("records")) rep.records.push_back(record_from_json(r));
  rep.aggregate = aggregate_from_json(j.at("aggregate"));
  return rep;
}

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Flat record table. Quantity and residual columns are the sorted union of
// keys over all records, prefixed q: and r:; cells without a value stay empty.
inline void write_report_csv(std::ostream& os, const Report& rep) {
  std::set<std::string> qkeys, rkeys;
  for (const TrialRecord& r : rep.records) {
    for (const auto& [k, v] : r.quantities) qkeys.insert(k);
    for (const auto& [k, v] : r.residuals) rkeys.insert(k);
  }
  os << "schema_version,suite,dim,trial,epsilon,instance_hash,solved,pass,"
        "solver_iterations,seconds,failure";
  for (const std::string& k : qkeys) os << ",q:" << csv_field(k);
  for (const std::string& k : rkeys) os << ",r:" << csv_field(k);
  os << '\n';
  for (const TrialRecord& r : rep.records) {
    os << schema_version << ',' << csv_field(r.suite) << ',' << r.dim << ',' << r.trial
       << ',' << format_real(r.epsilon) << ',' << r.instance_hash << ','
       << (r.solved ? 1 : 0) << ',' << (r.pass ? 1 : 0) << ',' << r.solver_iterations
       << ',' << format_real(r.seconds) << ',' << csv_field(r.failure);
    for (const std::string& k : qkeys) {
      const auto it = r.quantities.find(k);
      os << ',' << (it == r.quantities.end() ? std::string() : format_real(it->second));
    }
    for (const std::string& k : rkeys) {
      const auto it = r.residuals.find(k);
      os << ',' << (it == r.residuals.end() ? std::string() : format_real(it->second));
    }
    os << '\n';
  }
}

inline void write_report(const Report& rep, const std::string& path, ReportFormat format) {
  std::ostringstream body;
  if (format == ReportFormat::json)
    body << report_to_json(rep).dump(2) << '\n';
  else
    write_report_csv(body, rep);
  if (path == "-") {
    std::cout << body.str();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw validation_error("write_report: cannot open \"" + path + "\"");
  f << body.str();
  f.flush();
  if (!f) throw validation_error("write_report: write failed for \"" + path + "\"");
}

inline Report read_report(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw validation_error("read_report: cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("read_report: \"" + path + "\": " + e.what());
  }
  return report_from_json(j);
}

}  // namespace substate
