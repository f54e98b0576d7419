// cli.hpp — command layer: argument parsing, matrix file IO, dispatch.
// Every command writes one JSON document on success; errors go to stderr as
// {"schema_version", "error": {"kind", "message", "exit_code"}}.
// Exit codes: 0 success, 1 validation or domain error, 2 solver failure,
// 3 verification campaign with failed trials.
#pragma once

#include "substate/constructions.hpp"
#include "substate/harness.hpp"
#include "substate/matrix_json.hpp"
#include "substate/sdp_json.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

namespace substate {
namespace cli_detail {

inline std::string label_of(const std::string& path) {
  return path == "-" ? std::string("stdin") : path;
}

// Reads one JSON document from a file, or from `in` when path is "-".
// Parse errors keep nlohmann's line/column context, prefixed with the source.
inline nlohmann::json load_json(const std::string& path, std::istream& in) {
  try {
    nlohmann::json j;
    if (path == "-") {
      in >> j;
    } else {
      std::ifstream f(path);
      if (!f) throw validation_error("cannot open \"" + path + "\"");
      f >> j;
    }
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw validation_error(label_of(path) + ": " + e.what());
  }
}

inline Matrix load_matrix(const std::string& path, std::istream& in) {
  const nlohmann::json j = load_json(path, in);
  try {
    return matrix_from_json(j);
  } catch (const validation_error& e) {
    throw validation_error(label_of(path) + ": " + e.what());
  }
}

// Validates a density matrix read from disk, naming the violated invariant
// and its residual. A --tol override loosens all three checks at once; inputs
// accepted under a loosened tolerance are projected back onto valid states so
// downstream code still sees exact wrappers.
inline DensityMatrix parse_state(const std::string& path, std::istream& in,
                                 std::optional<double> tol_override) {
  const std::string label = label_of(path);
  const Matrix m = load_matrix(path, in);
  const double scale = std::max(1.0, max_abs(m));
  const double herm = hermiticity_residual(m);
  if (herm > tol_override.value_or(tol::hermitian) * scale)
    throw validation_error(label + ": hermiticity violated, residual " +
                           std::to_string(herm));
  const Matrix h = hermitize(m);
  const double lo = min_eigenvalue(h);
  if (lo < -tol_override.value_or(tol::psd))
    throw validation_error(label + ": positive semidefiniteness violated, residual " +
                           std::to_string(std::max(0.0, -lo)));
  const double tr = std::real(h.trace());
  if (std::abs(tr - 1.0) > tol_override.value_or(tol::trace))
    throw validation_error(label + ": unit trace violated, trace " + std::to_string(tr) +
                           ", residual " + std::to_string(std::abs(tr - 1.0)));
  if (lo >= -tol::psd && std::abs(tr - 1.0) <= tol::trace) return DensityMatrix(h);
  return project_to_density(h);
}

// Measurement operators only need hermiticity and positivity; no trace or
// sub-identity constraint, matching the unnormalized-operator convention.
inline PsdOperator parse_measurement(const std::string& path, std::istream& in,
                                     std::optional<double> tol_override) {
  const std::string label = label_of(path);
  const Matrix m = load_matrix(path, in);
  const double scale = std::max(1.0, max_abs(m));
  const double herm = hermiticity_residual(m);
  if (herm > tol_override.value_or(tol::hermitian) * scale)
    throw validation_error(label + ": hermiticity violated, residual " +
                           std::to_string(herm));
  const Matrix h = hermitize(m);
  const double lo = min_eigenvalue(h);
  if (lo < -tol_override.value_or(tol::psd))
    throw validation_error(label + ": positive semidefiniteness violated, residual " +
                           std::to_string(std::max(0.0, -lo)));
  if (lo >= -tol::psd) return PsdOperator(h);
  EigSystem es = hermitian_eig(h);
  const RealVector clamped = es.values.cwiseMax(0.0);
  return PsdOperator(hermitize(
      Matrix(es.vectors * clamped.cast<Complex>().asDiagonal() * es.vectors.adjoint())));
}

inline void emit(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (out_path.empty() || out_path == "-") {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw validation_error("cannot open output file \"" + out_path + "\"");
  f << text;
  if (!f.good()) throw validation_error("write failed for \"" + out_path + "\"");
}

inline void emit_error(std::ostream& err, const std::string& kind,
                       const std::string& message, int exit_code) {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", exit_code}};
  err << j.dump(2) << "\n";
}

inline nlohmann::json support_json(const SupportCheck& s) {
  return nlohmann::json{{"contained", s.contained},
                        {"residual", json_real(s.residual)},
                        {"witness_overlap", json_real(s.witness_overlap)}};
}

inline nlohmann::json certificate_json(const CertificateReport& c) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& ck : c.checks)
    checks.push_back({{"name", ck.name},
                      {"value", json_real(ck.value)},
                      {"bound", json_real(ck.bound)},
                      {"pass", ck.pass}});
  return nlohmann::json{{"all_pass", c.all_pass}, {"checks", checks}};
}

inline nlohmann::json pure_state_json(const PureState& v) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.amplitudes().size(); ++i)
    amps.push_back({v.amplitudes()(i).real(), v.amplitudes()(i).imag()});
  nlohmann::json dims = nlohmann::json::array();
  for (const auto d : v.dims()) dims.push_back(d);
  return nlohmann::json{{"dims", dims}, {"amplitudes", amps}};
}

inline nlohmann::json result_header(const std::string& command) {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["command"] = command;
  return j;
}

constexpr double inf = std::numeric_limits<double>::infinity();

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

inline int cmd_relent(Io io, const std::string& rho_path, const std::string& sigma_path,
                      std::optional<double> tol_override, double rank_tol,
                      const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const RelativeEntropyResult r = relative_entropy(rho, sigma, rank_tol);
  nlohmann::json j = result_header("compute relent");
  j["value_bits"] = json_real(r.infinite ? inf : r.value);
  j["infinite"] = r.infinite;
  j["support"] = support_json(r.support);
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_dmax(Io io, const std::string& rho_path, const std::string& sigma_path,
                    std::optional<double> tol_override, double rank_tol,
                    const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const RelativeMinEntropyResult r = relative_min_entropy(rho, sigma, rank_tol);
  nlohmann::json j = result_header("compute dmax");
  j["value_bits"] = json_real(r.infinite ? inf : r.value);
  j["infinite"] = r.infinite;
  j["support"] = support_json(r.support);
  if (!r.infinite) {
    j["kappa"] = json_real(r.kappa);
    const double neg = -min_eigenvalue(Matrix(r.kappa * sigma.m() - rho.m()));
    j["residuals"] = {{"dominance_negativity", json_real(std::max(0.0, neg))}};
  }
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_dobs(Io io, const std::string& rho_path, const std::string& sigma_path,
                    std::optional<double> tol_override, const DivergenceOptions& dopt,
                    const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const ObservationalDivergenceResult r = observational_divergence(rho, sigma, dopt);
  if (!r.infinite && r.status != SdpStatus::optimal)
    throw solver_error("divergence sweep ended with status " +
                       std::string(to_string(r.status)));
  nlohmann::json j = result_header("compute dobs");
  j["value_bits"] = json_real(r.infinite ? inf : r.value);
  j["infinite"] = r.infinite;
  j["support"] = support_json(r.support);
  if (!r.infinite) {
    j["witness"] = matrix_to_json(r.witness);
    j["p_star"] = json_real(r.p_star);
    j["q_star"] = json_real(r.q_star);
    j["residuals"] = {
        {"witness_projector_distance", json_real(r.witness_projector_distance)}};
    j["refinements"] = r.refinements;
    j["solver_iterations"] = r.solver_iterations;
  }
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_smooth(Io io, const std::string& rho_path, const std::string& sigma_path,
                      double eps, std::optional<double> tol_override,
                      const std::string& dump_path, const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  if (dump_path == "-") throw validation_error("--dump-sdp needs a file path, not \"-\"");
  if (!dump_path.empty()) {
    const SmoothingModel model = build_smoothing_model(rho.m(), sigma.m(), eps);
    emit(sdp_problem_to_json(model.problem), dump_path, io.out);
  }
  const SmoothRelMinEntropyResult s = smooth_relative_min_entropy(rho, sigma, eps);
  if (s.status == SdpStatus::numerical_failure)
    throw solver_error("smoothing solve failed: " + s.solution.message);
  nlohmann::json j = result_header("compute smooth");
  j["epsilon"] = json_real(eps);
  j["feasible"] = s.feasible;
  if (!dump_path.empty()) j["sdp_dump"] = dump_path;
  if (!s.feasible) {
    // no state on supp(sigma) reaches fidelity 1-eps with rho
    j["value_bits"] = json_real(inf);
    emit(j, out_path, io.out);
    return 0;
  }
  j["value_bits"] = json_real(s.value);
  j["kappa"] = json_real(s.kappa);
  j["fidelity_achieved"] = json_real(s.fidelity_achieved);
  j["witness"] = matrix_to_json(s.rho_prime);
  j["certificate"] = certificate_json(s.certificate);
  j["dual"] = {{"value_bits_equivalent", json_real(std::log2(std::max(
                    s.dual.value, std::numeric_limits<double>::min())))},
               {"value", json_real(s.dual.value)},
               {"z3", json_real(s.dual.z3)},
               {"z4", json_real(s.dual.z4)},
               {"sigma_weight", json_real(s.dual.sigma_weight)},
               {"lmi_margin", json_real(s.dual.lmi_margin)}};
  const double neg = -min_eigenvalue(Matrix(s.kappa * sigma.m() - s.rho_prime));
  j["residuals"] = {
      {"duality_gap_rel",
       json_real(std::abs(s.kappa - s.dual.value) / (1.0 + std::abs(s.kappa)))},
      {"fidelity_deficit", json_real((1.0 - eps) - s.fidelity_achieved)},
      {"witness_trace_error",
       json_real(std::abs(std::real(s.rho_prime.trace()) - 1.0))},
      {"dominance_negativity", json_real(std::max(0.0, neg))}};
  j["solver_iterations"] = s.solution.iterations;
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_fidelity(Io io, const std::string& a_path, const std::string& b_path,
                        std::optional<double> tol_override, const std::string& dump_path,
                        const std::string& out_path) {
  const DensityMatrix a = parse_state(a_path, io.in, tol_override);
  const DensityMatrix b = parse_state(b_path, io.in, tol_override);
  if (dump_path == "-") throw validation_error("--dump-sdp needs a file path, not \"-\"");
  if (!dump_path.empty())
    emit(sdp_problem_to_json(build_fidelity_problem(a.m(), b.m())), dump_path, io.out);
  const FidelitySdpResult r = fidelity_sdp(a, b);
  if (r.status != SdpStatus::optimal)
    throw solver_error("fidelity solve ended with status " +
                       std::string(to_string(r.status)));
  const double closed = fidelity(a, b);
  nlohmann::json j = result_header("compute fidelity");
  j["value"] = json_real(r.fidelity);
  j["root_value"] = json_real(r.root_fidelity);
  j["closed_form"] = json_real(closed);
  j["residuals"] = {{"sdp_vs_closed_form", json_real(std::abs(r.fidelity - closed))}};
  j["solver_iterations"] = r.solution.iterations;
  if (!dump_path.empty()) j["sdp_dump"] = dump_path;
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_construct_substate(Io io, const std::string& rho_path,
                                  const std::string& sigma_path, const std::string& m_path,
                                  double eps, std::optional<double> tol_override,
                                  const DivergenceOptions& dopt,
                                  const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const PsdOperator m = parse_measurement(m_path, io.in, tol_override);
  const MeasurementSubstateResult r =
      substate_for_measurement(rho, sigma, m, eps, std::nullopt, dopt);
  const double fid = fidelity(rho, r.rho_prime);
  nlohmann::json j = result_header("construct substate");
  j["epsilon"] = json_real(eps);
  j["divergence_bits_used"] = json_real(r.d_used);
  j["witness"] = matrix_to_json(r.rho_prime.m());
  j["projector"] = matrix_to_json(r.projector.m());
  nlohmann::json b = nlohmann::json::array();
  for (const auto i : r.b_set) b.push_back(i);
  j["removed_outcomes"] = b;
  j["removed_weight"] = json_real(r.trace_pi_rho);
  j["lhs"] = json_real(r.lhs);
  j["rhs"] = json_real(r.rhs);
  j["fidelity"] = json_real(fid);
  j["residuals"] = {
      {"removed_weight_excess", json_real(r.trace_pi_rho - eps)},
      {"fidelity_deficit", json_real((1.0 - eps) - fid)},
      {"dominance_excess", json_real(r.lhs - r.rhs)}};
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_construct_purify(Io io, const std::string& rho_path,
                                const std::string& sigma_path, double eps,
                                std::optional<double> tol_override,
                                const DivergenceOptions& dopt,
                                const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const PurificationTriple t = purification_decomposition(rho, sigma, eps, dopt);
  const double fid = fidelity(rho, t.rho_prime);
  const Matrix sigma_back = t.w.reduce({2});
  nlohmann::json j = result_header("construct purify-decompose");
  j["epsilon"] = json_real(eps);
  j["divergence_bits_used"] = json_real(t.d_used);
  j["alpha"] = json_real(t.alpha);
  j["witness"] = matrix_to_json(t.rho_prime.m());
  j["theta"] = matrix_to_json(t.theta.m());
  j["v"] = pure_state_json(t.v);
  j["v_prime"] = pure_state_json(t.v_prime);
  j["w_prime"] = pure_state_json(t.w_prime);
  j["w"] = pure_state_json(t.w);
  const double overlap = std::norm(t.v.amplitudes().dot(t.v_prime.amplitudes()));
  j["branch_overlap"] = json_real(overlap);
  j["residuals"] = {
      {"theta_negativity", json_real(std::max(0.0, -t.theta_floor))},
      {"sigma_reconstruction", json_real(max_abs(Matrix(sigma_back - sigma.m())))},
      {"fidelity_deficit", json_real((1.0 - eps) - fid)},
      {"overlap_deficit", json_real((1.0 - eps) - overlap)}};
  emit(j, out_path, io.out);
  return 0;
}

inline int cmd_check_converse(Io io, const std::string& rho_path,
                              const std::string& sigma_path, std::vector<double> eps_grid,
                              std::optional<double> tol_override,
                              const DivergenceOptions& dopt, const std::string& out_path) {
  const DensityMatrix rho = parse_state(rho_path, io.in, tol_override);
  const DensityMatrix sigma = parse_state(sigma_path, io.in, tol_override);
  const ConverseReport r = converse_check(rho, sigma, std::move(eps_grid), dopt);
  nlohmann::json j = result_header("check converse");
  j["divergence_bits"] = json_real(r.divergence_infinite ? inf : r.divergence);
  j["infinite"] = r.divergence_infinite;
  if (!r.divergence_infinite) {
    j["witness_delta"] = json_real(r.witness_delta);
    j["epsilon_used"] = json_real(r.epsilon_used);
    j["k_bits"] = json_real(r.k);
    j["bound_bits"] = json_real(r.bound);
    j["forward_ok"] = r.forward_ok;
    j["all_solved"] = r.all_solved;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points)
      pts.push_back({{"eps", json_real(p.eps)},
                     {"s_eps_bits", json_real(p.s_eps_bits)},
                     {"k_eps_bits", json_real(p.k_eps)},
                     {"solved", p.solved},
                     {"solver_iterations", p.iterations}});
    j["points"] = pts;
    j["residuals"] = {{"divergence_minus_bound", json_real(r.divergence - r.bound)}};
  }
  j["pass"] = r.divergence_infinite ? false : r.pass;
  emit(j, out_path, io.out);
  if (!r.divergence_infinite && !r.all_solved) {
    emit_error(io.err, "solver", "a smoothing point failed to solve", 2);
    return 2;
  }
  return 0;
}

inline int cmd_verify(Io io, const std::string& which, const TrialConfig& config,
                      const std::string& out_path, const std::string& format) {
  Report rep;
  if (which == "all") {
    rep.suite = "all";
    rep.config = config;
    for (const auto* name : {"thm1", "converse", "relations", "minimax"}) {
      Report part = std::string(name) == "thm1"        ? run_thm1_suite(config)
                    : std::string(name) == "converse"  ? run_converse_suite(config)
                    : std::string(name) == "relations" ? run_relation_suite(config)
                                                       : run_minimax_check(config);
      for (auto& rec : part.records) rep.records.push_back(std::move(rec));
    }
    rep.aggregate = aggregate_records(rep.records);
  } else if (which == "thm1") {
    rep = run_thm1_suite(config);
  } else if (which == "converse") {
    rep = run_converse_suite(config);
  } else if (which == "relations") {
    rep = run_relation_suite(config);
  } else {
    rep = run_minimax_check(config);
  }
  const ReportFormat fmt = format == "csv" ? ReportFormat::csv : ReportFormat::json;
  if (out_path.empty() || out_path == "-") {
    if (fmt == ReportFormat::json) {
      io.out << report_to_json(rep).dump(2) << "\n";
    } else {
      write_report_csv(io.out, rep);
    }
  } else {
    write_report(rep, out_path, fmt);
    nlohmann::json j = result_header("verify " + which);
    j["suite"] = rep.suite;
    j["records"] = rep.aggregate.records;
    j["passes"] = rep.aggregate.passes;
    j["failures"] = rep.aggregate.failures;
    j["solver_failures"] = rep.aggregate.solver_failures;
    j["out"] = out_path;
    emit(j, "", io.out);
  }
  return rep.aggregate.failures == 0 ? 0 : 3;
}

}  // namespace cli_detail

// Runs one command line (without argv[0]) against the given streams and
// returns the process exit code. Kept stream-parameterized so tests can drive
// it in-process; main() passes std::cin/cout/cerr.
inline int run_cli(const std::vector<std::string>& args, std::istream& in,
                   std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  Io io{in, out, err};

  // decimal-only numeric flags; hex/inf/nan spellings are rejected up front
  const CLI::Validator decimal_real(
      [](std::string& s) -> std::string {
        static const std::regex re(R"(^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$)");
        return std::regex_match(s, re) ? std::string{}
                                       : "\"" + s + "\" is not a decimal number";
      },
      "DECIMAL");
  const CLI::Validator decimal_int(
      [](std::string& s) -> std::string {
        static const std::regex re(R"(^[+-]?\d+$)");
        return std::regex_match(s, re) ? std::string{}
                                       : "\"" + s + "\" is not a decimal integer";
      },
      "INT");

  CLI::App app{"one-shot divergences, substate witnesses and theorem campaigns"};
  app.name("substate");
  app.require_subcommand(1);
  app.fallthrough();

  double tol_val = 0.0;
  CLI::Option* tol_opt = app.add_option("--tol", tol_val, "input validation tolerance override")
                             ->check(decimal_real);
  double rank_tol = tol::rank_rel;
  app.add_option("--rank-tol", rank_tol, "support detection tolerance")->check(decimal_real);
  std::string out_path;
  app.add_option("--out", out_path, "write the result to this path instead of stdout");
  int grid = 0;
  CLI::Option* grid_opt =
      app.add_option("--grid", grid, "grid points for the divergence sweep")
          ->check(decimal_int);

  auto tol_of = [&]() -> std::optional<double> {
    if (tol_opt->count() == 0) return std::nullopt;
    if (!(tol_val >= 0.0)) throw validation_error("--tol must be nonnegative");
    return tol_val;
  };
  auto dopt_of = [&]() {
    DivergenceOptions d;
    if (grid_opt->count()) d.grid_points = grid;
    d.rank_tol = rank_tol;
    return d;
  };

  std::string rho_path, sigma_path, m_path;
  double eps = 0.0;
  std::string dump_path;
  int code = 0;

  auto* compute = app.add_subcommand("compute", "evaluate a quantity for a state pair");
  compute->require_subcommand(1);
  compute->fallthrough();

  auto add_pair = [&](CLI::App* cmd, const char* first, const char* second) {
    cmd->fallthrough();
    cmd->add_option(first, rho_path, "density matrix JSON file (\"-\" for stdin)")
        ->required();
    cmd->add_option(second, sigma_path, "density matrix JSON file (\"-\" for stdin)")
        ->required();
  };

  auto* relent = compute->add_subcommand("relent", "relative entropy in bits");
  add_pair(relent, "rho", "sigma");
  relent->callback(
      [&] { code = cmd_relent(io, rho_path, sigma_path, tol_of(), rank_tol, out_path); });

  auto* dmax = compute->add_subcommand("dmax", "relative min-entropy in bits");
  add_pair(dmax, "rho", "sigma");
  dmax->callback(
      [&] { code = cmd_dmax(io, rho_path, sigma_path, tol_of(), rank_tol, out_path); });

  auto* dobs = compute->add_subcommand("dobs", "observational divergence in bits");
  add_pair(dobs, "rho", "sigma");
  dobs->callback(
      [&] { code = cmd_dobs(io, rho_path, sigma_path, tol_of(), dopt_of(), out_path); });

  auto* smooth =
      compute->add_subcommand("smooth", "epsilon-smoothed relative min-entropy in bits");
  add_pair(smooth, "rho", "sigma");
  smooth->add_option("--eps", eps, "smoothing parameter in (0,1)")
      ->required()
      ->check(decimal_real);
  smooth->add_option("--dump-sdp", dump_path,
                     "write the exact solved conic program to this path");
  smooth->callback([&] {
    code = cmd_smooth(io, rho_path, sigma_path, eps, tol_of(), dump_path, out_path);
  });

  auto* fid = compute->add_subcommand("fidelity", "Uhlmann fidelity (squared convention)");
  add_pair(fid, "a", "b");
  fid->add_option("--dump-sdp", dump_path,
                  "write the exact solved conic program to this path");
  fid->callback(
      [&] { code = cmd_fidelity(io, rho_path, sigma_path, tol_of(), dump_path, out_path); });

  auto* construct = app.add_subcommand("construct", "build explicit witness states");
  construct->require_subcommand(1);
  construct->fallthrough();

  auto* sub = construct->add_subcommand(
      "substate", "witness for a single measurement operator");
  sub->fallthrough();
  sub->add_option("rho", rho_path, "density matrix JSON file")->required();
  sub->add_option("sigma", sigma_path, "density matrix JSON file")->required();
  sub->add_option("M", m_path, "measurement operator JSON file")->required();
  sub->add_option("--eps", eps, "removed-weight budget in (0,1)")
      ->required()
      ->check(decimal_real);
  sub->callback([&] {
    code = cmd_construct_substate(io, rho_path, sigma_path, m_path, eps, tol_of(),
                                  dopt_of(), out_path);
  });

  auto* pur = construct->add_subcommand(
      "purify-decompose", "two-branch purification with a near branch");
  add_pair(pur, "rho", "sigma");
  pur->add_option("--eps", eps, "closeness parameter in (0,1)")
      ->required()
      ->check(decimal_real);
  pur->callback([&] {
    code = cmd_construct_purify(io, rho_path, sigma_path, eps, tol_of(), dopt_of(),
                                out_path);
  });

  auto* check = app.add_subcommand("check", "theorem checks on explicit states");
  check->require_subcommand(1);
  check->fallthrough();

  std::vector<double> conv_eps = {0.1, 0.3, 0.5, 0.7};
  auto* conv = check->add_subcommand("converse", "sandwich the divergence by smoothing exponents");
  add_pair(conv, "rho", "sigma");
  conv->add_option("--eps", conv_eps, "epsilon grid")->delimiter(',')->check(decimal_real);
  conv->callback([&] {
    code = cmd_check_converse(io, rho_path, sigma_path, conv_eps, tol_of(), dopt_of(),
                              out_path);
  });

  auto* verify = app.add_subcommand("verify", "randomized verification campaigns");
  verify->require_subcommand(1);
  verify->fallthrough();

  std::vector<double> eps_list;
  std::vector<Eigen::Index> dims_list;
  std::uint64_t seed = 0;
  int trials = 0;
  std::string format = "json";
  CLI::Option* eps_opt =
      verify->add_option("--eps", eps_list, "epsilon grid")->delimiter(',')->check(decimal_real);
  CLI::Option* dims_opt =
      verify->add_option("--dims", dims_list, "ambient dimensions")->delimiter(',')->check(decimal_int);
  CLI::Option* seed_opt = verify->add_option("--seed", seed, "master seed")->check(decimal_int);
  CLI::Option* trials_opt =
      verify->add_option("--trials", trials, "trials per cell")->check(decimal_int);
  verify->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));

  // Defaults come from SUBSTATE_CONFIG (a JSON config file) when set; explicit
  // flags override individual fields on top.
  auto make_config = [&]() {
    TrialConfig c;
    if (const char* env = std::getenv("SUBSTATE_CONFIG"); env != nullptr && *env != '\0') {
      const nlohmann::json j = load_json(env, io.in);
      try {
        c = config_from_json(j);
      } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string(env) + ": " + e.what());
      }
    }
    if (eps_opt->count()) c.epsilons = eps_list;
    if (dims_opt->count()) c.dims = dims_list;
    if (seed_opt->count()) c.master_seed = seed;
    if (trials_opt->count()) c.trials = trials;
    if (grid_opt->count()) c.divergence.grid_points = grid;
    c.divergence.rank_tol = rank_tol;
    validate(c);
    return c;
  };

  for (const char* name : {"thm1", "converse", "relations", "minimax", "all"}) {
    auto* leaf = verify->add_subcommand(name, std::string("run the ") + name + " suite");
    leaf->fallthrough();
    leaf->callback([&, name] { code = cmd_verify(io, name, make_config(), out_path, format); });
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("substate");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    return code;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", e.what(), 1);
    return 1;
  } catch (const validation_error& e) {
    emit_error(err, "validation", e.what(), 1);
    return 1;
  } catch (const domain_error& e) {
    emit_error(err, "domain", e.what(), 1);
    return 1;
  } catch (const solver_error& e) {
    emit_error(err, "solver", e.what(), 2);
    return 2;
  } catch (const nlohmann::json::exception& e) {
    emit_error(err, "validation", e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what(), 2);
    return 2;
  }
}

}  // namespace substate
