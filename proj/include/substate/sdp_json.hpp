// JSON forms of SDP problems and solutions, for --dump-sdp and tooling.
#pragma once

#include "substate/matrix_json.hpp"
#include "substate/sdp.hpp"

namespace substate {

inline nlohmann::json sdp_terms_to_json(const std::vector<SdpTerm>& terms) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : terms)
    arr.push_back({{"block", t.block}, {"coeff", matrix_to_json(t.coeff)}});
  return arr;
}

inline std::vector<SdpTerm> sdp_terms_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw validation_error("sdp terms: expected array");
  std::vector<SdpTerm> out;
  for (const auto& e : j) {
    if (!e.contains("block") || !e.contains("coeff"))
      throw validation_error("sdp term: missing block or coeff");
    out.push_back({e.at("block").get<int>(), matrix_from_json(e.at("coeff"))});
  }
  return out;
}

inline nlohmann::json sdp_problem_to_json(const SdpProblem& p) {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["sense"] = p.sense == SdpSense::maximize ? "maximize" : "minimize";
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : p.blocks)
    j["blocks"].push_back({{"name", b.name}, {"dim", b.dim}});
  j["objective"] = sdp_terms_to_json(p.objective);
  auto cons_json = [&](const std::vector<SdpConstraint>& cs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cs)
      arr.push_back({{"label", c.label}, {"rhs", c.rhs}, {"terms", sdp_terms_to_json(c.terms)}});
    return arr;
  };
  j["equalities"] = cons_json(p.equalities);
  j["inequalities"] = cons_json(p.inequalities);
  return j;
}

inline SdpProblem sdp_problem_from_json(const nlohmann::json& j) {
  SdpProblem p;
  if (!j.contains("blocks") || !j.at("blocks").is_array())
    throw validation_error("sdp problem: missing blocks array");
  const std::string sense = j.value("sense", "minimize");
  if (sense == "maximize")
    p.sense = SdpSense::maximize;
  else if (sense == "minimize")
    p.sense = SdpSense::minimize;
  else
    throw validation_error("sdp problem: sense must be minimize or maximize");
  for (const auto& b : j.at("blocks")) {
    if (!b.contains("name") || !b.contains("dim"))
      throw validation_error("sdp problem: block needs name and dim");
    p.blocks.push_back({b.at("name").get<std::string>(), b.at("dim").get<Eigen::Index>()});
  }
  if (j.contains("objective")) p.objective = sdp_terms_from_json(j.at("objective"));
  auto cons_from = [&](const nlohmann::json& arr, std::vector<SdpConstraint>& out) {
    if (!arr.is_array()) throw validation_error("sdp problem: constraints must be an array");
    for (const auto& c : arr) {
      if (!c.contains("rhs") || !c.contains("terms"))
        throw validation_error("sdp constraint: missing rhs or terms");
      out.push_back({c.value("label", std::string{}), sdp_terms_from_json(c.at("terms")),
                     c.at("rhs").get<double>()});
    }
  };
  if (j.contains("equalities")) cons_from(j.at("equalities"), p.equalities);
  if (j.contains("inequalities")) cons_from(j.at("inequalities"), p.inequalities);
  p.validate();
  return p;
}

inline nlohmann::json sdp_solution_to_json(const SdpSolution& s) {
  nlohmann::json j;
  j["schema_version"] = schema_version;
  j["status"] = to_string(s.status);
  j["primal_objective"] = s.primal_objective;
  j["dual_objective"] = s.dual_objective;
  j["gap"] = s.gap;
  j["primal_residual"] = s.primal_residual;
  j["dual_residual"] = s.dual_residual;
  j["mu"] = s.mu;
  j["iterations"] = s.iterations;
  j["message"] = s.message;
  j["X"] = nlohmann::json::array();
  for (const auto& x : s.X) j["X"].push_back(matrix_to_json(x));
  j["S"] = nlohmann::json::array();
  for (const auto& x : s.S) j["S"].push_back(matrix_to_json(x));
  j["y"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.y.size(); ++i) j["y"].push_back(s.y(i));
  j["ineq_slack"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < s.ineq_slack.size(); ++i)
    j["ineq_slack"].push_back(s.ineq_slack(i));
  return j;
}

}  // namespace substate
