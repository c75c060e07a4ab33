#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "risklat/claim_expr.hpp"
#include "risklat/config.hpp"

using namespace risklat;
using nlohmann::json;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("risklat_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* kBaseConfig = R"({
  "schema_version": 1,
  "model": {"T": 1.0, "steps": 2, "layout": "path"},
  "driver": {"type": "entropic", "gamma": 1.0},
  "claims": {"aggregate": "-B_T", "sub_units": ["-B_T/2", "-B_T/2"]},
  "rules": [{"tag": "sub"}, {"tag": "marginal"}, {"tag": "aumann_shapley", "nodes": 16}],
  "output": {"format": "json", "path": "risklat_test_report.json", "report_times": [0]},
  "seed": 42,
  "deterministic": true
})";

} // namespace

TEST_CASE("claim expressions") {
    CHECK(ClaimExpr::parse("-B_T").evaluate(0.7) == doctest::Approx(-0.7).epsilon(1e-15));
    CHECK(ClaimExpr::parse("2*B_T + 1").evaluate(0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(ClaimExpr::parse("min(B_T, 0.25)").evaluate(0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(ClaimExpr::parse("max(abs(B_T), exp(B_T))").evaluate(0.0) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ClaimExpr::parse("(B_T - 1) / 4").evaluate(3.0) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(ClaimExpr::parse("B_S"), ConfigError);
    CHECK_THROWS_AS(ClaimExpr::parse("min(B_T)"), ConfigError);
    CHECK_THROWS_AS(ClaimExpr::parse("1 +"), ConfigError);
    CHECK_THROWS_AS(ClaimExpr::parse("2 2"), ConfigError);

    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const TerminalClaim claim = ClaimExpr::parse("-B_T").build(model);
    CHECK(claim.values[0b11] == doctest::Approx(-2.0 * model.sqrt_delta()).epsilon(1e-15));
}

TEST_CASE("run_config executes the hand instance and reports hand values") {
    const TempFile config("config.json", kBaseConfig);
    std::ostringstream log;
    const int code = run_config(config.path, {}, log);
    INFO(log.str());
    REQUIRE(code == 0);

    std::ifstream in("risklat_test_report.json");
    REQUIRE(in.good());
    const json report = json::parse(in);
    in.close();
    std::remove("risklat_test_report.json");

    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("config").at("seed") == 42);

    double sub_value = 1e9, marginal_value = 1e9, as_sum = 0.0;
    for (const auto& row : report.at("results")) {
        if (row.at("t") != 0) continue;
        const double value = row.at("states")[0].at("value").get<double>();
        if (row.at("rule") == "sub" && row.at("sub_unit") == 0) sub_value = value;
        if (row.at("rule") == "marginal" && row.at("sub_unit") == 0) marginal_value = value;
        if (row.at("rule") == "aumann_shapley") as_sum += value;
    }
    CHECK(sub_value == doctest::Approx(0.0).epsilon(1e-12));          // Lambda^sub(Y/2, Y)
    CHECK(marginal_value == doctest::Approx(0.375).epsilon(1e-12));   // rho(Y) - rho(Y/2)
    CHECK(as_sum == doctest::Approx(0.5).epsilon(1e-9));              // full allocation to rho
}

TEST_CASE("run_config rejects bad configurations with exit 2") {
    SUBCASE("path layout beyond the cap") {
        const TempFile config("big.json", R"({
          "schema_version": 1,
          "model": {"T": 1.0, "steps": 25, "layout": "path"},
          "driver": {"type": "zero"},
          "claims": {"aggregate": "-B_T"},
          "rules": [{"tag": "marginal"}]
        })");
        std::ostringstream log;
        CHECK(run_config(config.path, {}, log) == 2);
    }

    SUBCASE("partition mismatch with a full-allocation rule") {
        const TempFile config("mismatch.json", R"({
          "schema_version": 1,
          "model": {"T": 1.0, "steps": 2, "layout": "path"},
          "driver": {"type": "entropic", "gamma": 1.0},
          "claims": {"aggregate": "-B_T", "sub_units": ["-B_T/2", "-B_T/4"]},
          "rules": [{"tag": "aumann_shapley"}]
        })");
        std::ostringstream log;
        CHECK(run_config(config.path, {}, log) == 2);
        CHECK(log.str().find("mismatch norm") != std::string::npos);
    }

    SUBCASE("missing file and malformed json") {
        std::ostringstream log;
        CHECK(run_config("does_not_exist.json", {}, log) == 2);
        const TempFile config("broken.json", "{not json");
        CHECK(run_config(config.path, {}, log) == 2);
    }

    SUBCASE("contraction violation is a numeric error with exit 3") {
        const TempFile config("contraction.json", R"({
          "schema_version": 1,
          "model": {"T": 1.0, "steps": 2, "layout": "path"},
          "driver": {"type": "linear_ambiguous", "r": 0.0, "R": 2.5},
          "claims": {"aggregate": "-1"},
          "rules": [{"tag": "marginal"}]
        })");
        std::ostringstream log;
        CHECK(run_config(config.path, {}, log) == 3);
        CHECK(log.str().find("numeric error") != std::string::npos);
    }

    SUBCASE("gradient rule with a non-differentiable driver") {
        const TempFile config("grad.json", R"({
          "schema_version": 1,
          "model": {"T": 1.0, "steps": 2, "layout": "path"},
          "driver": {"type": "linear_ambiguous", "r": 0.05, "R": 0.1},
          "claims": {"aggregate": "-B_T"},
          "rules": [{"tag": "gradient"}]
        })");
        std::ostringstream log;
        CHECK(run_config(config.path, {}, log) == 2);
    }
}

TEST_CASE("deterministic mode reproduces byte-identical reports") {
    const TempFile config("det.json", kBaseConfig);
    std::ostringstream log;
    REQUIRE(run_config(config.path, {}, log) == 0);
    std::ifstream first("risklat_test_report.json");
    std::stringstream buf1;
    buf1 << first.rdbuf();
    first.close();

    REQUIRE(run_config(config.path, {}, log) == 0);
    std::ifstream second("risklat_test_report.json");
    std::stringstream buf2;
    buf2 << second.rdbuf();
    second.close();
    std::remove("risklat_test_report.json");

    CHECK(buf1.str() == buf2.str());
    CHECK(!buf1.str().empty());
}

TEST_CASE("csv projection has the documented columns") {
    const TempFile config("csv.json", R"({
      "schema_version": 1,
      "model": {"T": 1.0, "steps": 2, "layout": "path"},
      "driver": {"type": "entropic", "gamma": 1.0},
      "claims": {"aggregate": "-B_T"},
      "rules": [{"tag": "marginal"}],
      "output": {"format": "csv", "report_times": [0, 2]}
    })");
    std::ostringstream log;
    REQUIRE(run_config(config.path, {}, log) == 0);
    std::istringstream lines(log.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "rule,t,state,value");
    std::string row;
    std::getline(lines, row);
    CHECK(row.rfind("marginal,0,0,", 0) == 0);
}

TEST_CASE("cserm rule honours the kappa override") {
    const char* base = R"({
      "schema_version": 1,
      "model": {"T": 1.0, "steps": 2, "layout": "path"},
      "driver": {"type": "entropic", "gamma": 1.0},
      "claims": {"aggregate": "-B_T", "sub_units": ["-B_T/2"]},
      "rules": [{"tag": "cserm", "beta": 0.0, "gamma": 1.0, "gamma1": 1.0}],
      "output": {"format": "json", "path": "risklat_test_cserm_report.json"}
    })";
    const TempFile config("cserm.json", base);

    auto fd_residual = [&](const std::string& kappa) {
        CliOverrides overrides;
        if (!kappa.empty()) overrides.kappa = kappa;
        std::ostringstream log;
        REQUIRE(run_config(config.path, overrides, log) == 0);
        std::ifstream in("risklat_test_cserm_report.json");
        const json report = json::parse(in);
        in.close();
        std::remove("risklat_test_cserm_report.json");
        return report.at("results")[0].at("diagnostics").at("fd_residual").get<double>();
    };

    CHECK(fd_residual("") <= 1e-9);       // default 1/g1 matches the oracle
    CHECK(fd_residual("2/g1") > 1e-3);    // the paper's coefficient does not
}

TEST_CASE("verify runs a tiny suite end to end") {
    std::ostringstream log;
    const int code = verify("comparison", 7, 3, SignVariant::Corrected,
                            "risklat_test_verify.json", log);
    CHECK(code == 0);
    std::ifstream in("risklat_test_verify.json");
    REQUIRE(in.good());
    const json report = json::parse(in);
    in.close();
    std::remove("risklat_test_verify.json");
    CHECK(report.at("reports").size() == 1);
    CHECK(log.str().find("[PASS]") != std::string::npos);

    std::ostringstream bad;
    CHECK(verify("nonsense", 7, 3, SignVariant::Corrected, "", bad) == 2);
}

TEST_CASE("verify car with the paper sign variant exits 1 on the cross-method row") {
    std::ostringstream log;
    const int code = verify("car", 11, 4, SignVariant::Paper, "", log);
    CHECK(code == 1);
    CHECK(log.str().find("FAILED:") != std::string::npos);
    CHECK(log.str().find("[FAIL] cross_method_gap") != std::string::npos);
}
