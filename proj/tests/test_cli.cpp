#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "substate/cli.hpp"

using namespace substate;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return CliResult{code, out.str(), err.str()};
}

nlohmann::json out_json(const CliResult& r) { return nlohmann::json::parse(r.out); }
nlohmann::json err_json(const CliResult& r) { return nlohmann::json::parse(r.err); }

fs::path scratch() {
  const fs::path p = fs::temp_directory_path() / "substate_cli_tests";
  fs::create_directories(p);
  return p;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream f(p);
  f << text;
  return p.string();
}

std::string write_matrix(const std::string& name, const Matrix& m) {
  return write_file(name, matrix_to_json(m).dump());
}

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

const std::string& pure_path() {
  static const std::string p = write_matrix("pure.json", diag2(1.0, 0.0));
  return p;
}

const std::string& half_path() {
  static const std::string p = write_matrix("half.json", diag2(0.5, 0.5));
  return p;
}

const std::string& skew_path() {
  static const std::string p = write_matrix("skew.json", diag2(0.25, 0.75));
  return p;
}

}  // namespace

TEST_CASE("fidelity of identical states is one") {
  const CliResult r = run({"compute", "fidelity", half_path(), half_path()});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("schema_version").get<int>() == schema_version);
  REQUIRE(std::abs(j.at("value").get<double>() - 1.0) <= 1e-6);
  REQUIRE(j.at("residuals").at("sdp_vs_closed_form").get<double>() <= 1e-6);
}

TEST_CASE("observational divergence of the classical example pair") {
  const CliResult r = run({"compute", "dobs", pure_path(), skew_path()});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(std::abs(j.at("value_bits").get<double>() - 2.0) <= 1e-5);
  REQUIRE_FALSE(j.at("infinite").get<bool>());
  REQUIRE(j.at("witness").at("dim").get<int>() == 2);
  REQUIRE(std::abs(j.at("p_star").get<double>() - 1.0) <= 1e-6);
}

TEST_CASE("entropy commands report the known diagonal values") {
  const CliResult rel = run({"compute", "relent", half_path(), skew_path()});
  REQUIRE(rel.code == 0);
  REQUIRE(std::abs(out_json(rel).at("value_bits").get<double>() - 0.2075187496394219) <=
          1e-9);

  const CliResult dm = run({"compute", "dmax", half_path(), skew_path()});
  REQUIRE(dm.code == 0);
  const nlohmann::json j = out_json(dm);
  REQUIRE(std::abs(j.at("value_bits").get<double>() - 1.0) <= 1e-7);
  REQUIRE(std::abs(j.at("kappa").get<double>() - 2.0) <= 1e-7);
  REQUIRE(j.at("residuals").at("dominance_negativity").get<double>() <= 1e-9);
}

TEST_CASE("smoothing reports the known optimum and the dump re-solves to it") {
  const std::string dump = (scratch() / "dump_p3.json").string();
  const CliResult r = run({"compute", "smooth", pure_path(), skew_path(), "--eps", "0.1",
                           "--dump-sdp", dump});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("feasible").get<bool>());
  const double value = j.at("value_bits").get<double>();
  REQUIRE(std::abs(value - 1.84799690655495) <= 1e-5);
  REQUIRE(std::abs(j.at("kappa").get<double>() - 3.6) <= 1e-6);
  REQUIRE(j.at("certificate").at("all_pass").get<bool>());

  // the dumped program is the exact instance: an independent solve reproduces it
  std::ifstream f(dump);
  REQUIRE(f.good());
  nlohmann::json pj;
  f >> pj;
  const SdpProblem p = sdp_problem_from_json(pj);
  const SdpSolution sol = solve(p);
  REQUIRE(sol.status == SdpStatus::optimal);
  REQUIRE(std::abs(std::log2(sol.primal_objective) - value) <= 1e-8);
}

TEST_CASE("stdin supplies operands when the path is a dash") {
  const std::string feed =
      matrix_to_json(diag2(0.5, 0.5)).dump() + matrix_to_json(diag2(0.25, 0.75)).dump();
  const CliResult r = run({"compute", "relent", "-", "-"}, feed);
  REQUIRE(r.code == 0);
  REQUIRE(std::abs(out_json(r).at("value_bits").get<double>() - 0.2075187496394219) <=
          1e-9);
}

TEST_CASE("validation errors name the violated invariant with its residual") {
  SECTION("trace deficit") {
    const std::string bad = write_matrix("bad_trace.json", diag2(0.5, 0.4));
    const CliResult r = run({"compute", "fidelity", bad, half_path()});
    REQUIRE(r.code == 1);
    REQUIRE(r.out.empty());
    const nlohmann::json e = err_json(r);
    REQUIRE(e.at("error").at("kind").get<std::string>() == "validation");
    REQUIRE(e.at("error").at("exit_code").get<int>() == 1);
    const std::string msg = e.at("error").at("message").get<std::string>();
    REQUIRE(msg.find("unit trace violated") != std::string::npos);
    REQUIRE(msg.find("residual 0.100000") != std::string::npos);
  }
  SECTION("negative eigenvalue") {
    const std::string bad = write_matrix("bad_psd.json", diag2(1.2, -0.2));
    const CliResult r = run({"compute", "relent", bad, half_path()});
    REQUIRE(r.code == 1);
    const std::string msg = err_json(r).at("error").at("message").get<std::string>();
    REQUIRE(msg.find("positive semidefiniteness violated") != std::string::npos);
    REQUIRE(msg.find("residual 0.200000") != std::string::npos);
  }
  SECTION("non-hermitian input") {
    Matrix m = diag2(0.5, 0.5);
    m(0, 1) = 0.3;
    m(1, 0) = 0.1;
    const std::string bad = write_matrix("bad_herm.json", m);
    const CliResult r = run({"compute", "relent", bad, half_path()});
    REQUIRE(r.code == 1);
    const std::string msg = err_json(r).at("error").at("message").get<std::string>();
    REQUIRE(msg.find("hermiticity violated") != std::string::npos);
  }
  SECTION("shape mismatch") {
    const std::string bad = write_file(
        "bad_shape.json", R"({"dim":3,"entries":[[1,0],[0,0],[0,0],[0,0],[1,0],[0,0]]})");
    const CliResult r = run({"compute", "relent", bad, half_path()});
    REQUIRE(r.code == 1);
    const std::string msg = err_json(r).at("error").at("message").get<std::string>();
    REQUIRE(msg.find("expected dim^2 = 9") != std::string::npos);
  }
  SECTION("malformed json carries line context") {
    const std::string bad = write_file("bad_syntax.json", "{\"dim\": 2,\n  oops}");
    const CliResult r = run({"compute", "relent", bad, half_path()});
    REQUIRE(r.code == 1);
    const std::string msg = err_json(r).at("error").at("message").get<std::string>();
    REQUIRE(msg.find("parse error at line 2") != std::string::npos);
    REQUIRE(msg.find(bad) != std::string::npos);
  }
  SECTION("missing file") {
    const CliResult r = run({"compute", "relent", "/nonexistent_dir/xyz.json", half_path()});
    REQUIRE(r.code == 1);
    REQUIRE(err_json(r).at("error").at("message").get<std::string>().find("cannot open") !=
            std::string::npos);
  }
}

TEST_CASE("tolerance override accepts and cleans loose input") {
  const std::string loose = write_matrix("loose_trace.json", diag2(0.475, 0.475));
  const CliResult strict = run({"compute", "relent", loose, skew_path()});
  REQUIRE(strict.code == 1);
  const CliResult r = run({"compute", "relent", loose, skew_path(), "--tol", "0.1"});
  REQUIRE(r.code == 0);
  // cleanup renormalizes to the maximally mixed state before computing
  REQUIRE(std::abs(out_json(r).at("value_bits").get<double>() - 0.2075187496394219) <=
          1e-9);
}

TEST_CASE("usage errors exit with code one") {
  REQUIRE(run({"compute", "relent", half_path(), skew_path(), "--bogus"}).code == 1);
  REQUIRE(run({"compute", "nonsense"}).code == 1);
  REQUIRE(run({}).code == 1);
  REQUIRE(run({"compute", "smooth", half_path(), skew_path()}).code == 1);  // --eps missing
  REQUIRE(run({"compute", "smooth", half_path(), skew_path(), "--eps", "abc"}).code == 1);
  REQUIRE(run({"compute", "smooth", half_path(), skew_path(), "--eps", "0x1p-1"}).code == 1);
  const CliResult r = run({"compute", "relent", half_path(), skew_path(), "--bogus"});
  REQUIRE(err_json(r).at("error").at("kind").get<std::string>() == "usage");
  REQUIRE(run({"--help"}).code == 0);
}

TEST_CASE("domain boundaries map to exit one") {
  // eps outside (0,1) is a validation failure inside the library
  REQUIRE(run({"compute", "smooth", half_path(), skew_path(), "--eps", "1.0"}).code == 1);
  REQUIRE(run({"compute", "smooth", half_path(), skew_path(), "--eps", "0"}).code == 1);
}

TEST_CASE("support escapes surface as infinite values, not errors") {
  const std::string perp = write_matrix("perp.json", diag2(0.0, 1.0));
  for (const char* cmd : {"relent", "dmax", "dobs"}) {
    const CliResult r = run({"compute", cmd, pure_path(), perp});
    REQUIRE(r.code == 0);
    const nlohmann::json j = out_json(r);
    REQUIRE(j.at("infinite").get<bool>());
    REQUIRE(j.at("value_bits").is_string());
    REQUIRE(j.at("value_bits").get<std::string>() == "inf");
  }
  const CliResult s = run({"compute", "smooth", pure_path(), perp, "--eps", "0.3"});
  REQUIRE(s.code == 0);
  const nlohmann::json js = out_json(s);
  REQUIRE_FALSE(js.at("feasible").get<bool>());
  REQUIRE(js.at("value_bits").get<std::string>() == "inf");
}

TEST_CASE("construct substate emits the witness and its residuals") {
  const std::string mop = write_matrix("mop_identity.json", Matrix::Identity(2, 2));
  const CliResult r =
      run({"construct", "substate", half_path(), half_path(), mop, "--eps", "0.2"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(std::abs(j.at("divergence_bits_used").get<double>()) <= 1e-6);
  REQUIRE(j.at("removed_outcomes").empty());
  REQUIRE(std::abs(j.at("removed_weight").get<double>()) <= 1e-12);
  REQUIRE(j.at("residuals").at("removed_weight_excess").get<double>() < 0.0);
  REQUIRE(j.at("residuals").at("dominance_excess").get<double>() <= 1e-9);
  REQUIRE(std::abs(j.at("fidelity").get<double>() - 1.0) <= 1e-9);
}

TEST_CASE("construct purify-decompose reconstructs sigma from the two branches") {
  const CliResult r =
      run({"construct", "purify-decompose", pure_path(), skew_path(), "--eps", "0.25"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  // alpha = (1-eps) 2^{-d/eps} with d = 2 bits for this pair
  REQUIRE(std::abs(j.at("alpha").get<double>() - 0.75 / 256.0) <= 1e-6);
  REQUIRE(j.at("residuals").at("sigma_reconstruction").get<double>() <= 1e-8);
  REQUIRE(j.at("residuals").at("theta_negativity").get<double>() <= 1e-7);
  REQUIRE(j.at("residuals").at("fidelity_deficit").get<double>() <= 1e-7);
  REQUIRE(j.at("w").at("dims") == nlohmann::json({2, 2, 2}));
}

TEST_CASE("check converse sandwiches the divergence") {
  const CliResult r = run({"check", "converse", pure_path(), skew_path(), "--eps",
                           "0.1,0.25,0.5,0.75"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("pass").get<bool>());
  REQUIRE(j.at("all_solved").get<bool>());
  REQUIRE(std::abs(j.at("divergence_bits").get<double>() - 2.0) <= 1e-5);
  REQUIRE(j.at("points").size() >= 4);
  REQUIRE(j.at("residuals").at("divergence_minus_bound").get<double>() <= 1e-4);
}

TEST_CASE("verify thm1 runs a small campaign and reports success") {
  const CliResult r = run({"verify", "thm1", "--trials", "5", "--dims", "2", "--eps",
                           "0.5", "--seed", "7"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("schema_version").get<int>() == schema_version);
  REQUIRE(j.at("suite").get<std::string>() == "thm1");
  REQUIRE(j.at("aggregate").at("records").get<int>() == 5);
  REQUIRE(j.at("aggregate").at("failures").get<int>() == 0);
  REQUIRE(j.at("config").at("master_seed").get<std::uint64_t>() == 7);
}

TEST_CASE("verify writes report files with a stdout summary") {
  const std::string out_file = (scratch() / "rep.json").string();
  const CliResult r = run({"verify", "relations", "--trials", "2", "--dims", "2",
                           "--eps", "0.3", "--seed", "3", "--out", out_file});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("out").get<std::string>() == out_file);
  REQUIRE(j.at("failures").get<int>() == 0);
  const Report back = read_report(out_file);
  REQUIRE(back.records.size() == 2);
  REQUIRE(back.suite == "relations");

  const std::string csv_file = (scratch() / "rep.csv").string();
  const CliResult c = run({"verify", "relations", "--trials", "1", "--dims", "2",
                           "--eps", "0.3", "--seed", "3", "--out", csv_file, "--format",
                           "csv"});
  REQUIRE(c.code == 0);
  std::ifstream f(csv_file);
  std::string header;
  std::getline(f, header);
  REQUIRE(header.rfind("schema_version,suite,dim,trial,epsilon", 0) == 0);
}

TEST_CASE("verify streams csv to stdout when asked") {
  const CliResult r = run({"verify", "minimax", "--trials", "1", "--dims", "2", "--eps",
                           "0.3", "--seed", "11", "--format", "csv"});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.rfind("schema_version,suite", 0) == 0);
}

TEST_CASE("environment config supplies verify defaults and flags override it") {
  const std::string cfg = write_file(
      "env_cfg.json",
      R"({"schema_version":1,"dims":[2],"ranks":"full","fixed_rank":1,)"
      R"("epsilons":[0.3],"trials":1,"master_seed":5,"tolerances":{},"grid_points":33})");
  setenv("SUBSTATE_CONFIG", cfg.c_str(), 1);
  const CliResult r = run({"verify", "minimax"});
  REQUIRE(r.code == 0);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("config").at("trials").get<int>() == 1);
  REQUIRE(j.at("config").at("grid_points").get<int>() == 33);
  REQUIRE(j.at("aggregate").at("records").get<int>() == 1);

  const CliResult o = run({"verify", "minimax", "--trials", "2"});
  REQUIRE(o.code == 0);
  REQUIRE(out_json(o).at("aggregate").at("records").get<int>() == 2);

  setenv("SUBSTATE_CONFIG", "/nonexistent_dir/cfg.json", 1);
  const CliResult bad = run({"verify", "minimax"});
  REQUIRE(bad.code == 1);
  REQUIRE(err_json(bad).at("error").at("message").get<std::string>().find(
              "/nonexistent_dir/cfg.json") != std::string::npos);
  unsetenv("SUBSTATE_CONFIG");
}

TEST_CASE("failed trials drive the verification exit code to three") {
  const std::string cfg = write_file(
      "env_cfg_strict.json",
      R"({"schema_version":1,"dims":[2],"ranks":"full","fixed_rank":1,)"
      R"("epsilons":[0.3],"trials":1,"master_seed":5,)"
      R"("tolerances":{"thm1_margin":-1e9},"grid_points":33})");
  setenv("SUBSTATE_CONFIG", cfg.c_str(), 1);
  const CliResult r = run({"verify", "thm1"});
  unsetenv("SUBSTATE_CONFIG");
  REQUIRE(r.code == 3);
  const nlohmann::json j = out_json(r);
  REQUIRE(j.at("aggregate").at("failures").get<int>() == 1);
}

TEST_CASE("results honor the out flag") {
  const std::string out_file = (scratch() / "result.json").string();
  const CliResult r =
      run({"compute", "relent", half_path(), skew_path(), "--out", out_file});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.empty());
  std::ifstream f(out_file);
  nlohmann::json j;
  f >> j;
  REQUIRE(std::abs(j.at("value_bits").get<double>() - 0.2075187496394219) <= 1e-9);

  const CliResult bad = run(
      {"compute", "relent", half_path(), skew_path(), "--out", "/nonexistent_dir/r.json"});
  REQUIRE(bad.code == 1);
}
