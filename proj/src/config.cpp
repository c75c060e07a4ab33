#include "risklat/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "risklat/claim_expr.hpp"

namespace risklat {

namespace {

using nlohmann::json;

AdaptedField field_from_json(const LatticeModel& model, const json& j, const std::string& name) {
    const int last = model.steps() - 1;
    if (j.is_number()) {
        return AdaptedField::constant(model, last, j.get<double>());
    }
    if (j.is_array()) {
        if (static_cast<int>(j.size()) != model.steps()) {
            throw ConfigError("driver field '" + name + "': expected " +
                              std::to_string(model.steps()) + " per-step values");
        }
        AdaptedField field(model, last);
        for (int k = 0; k <= last; ++k) {
            const double v = j[static_cast<std::size_t>(k)].get<double>();
            for (double& slot : field.at(k)) slot = v;
        }
        return field;
    }
    throw ConfigError("driver field '" + name + "': expected a number or per-step array");
}

DriverPtr driver_from_json(const LatticeModel& model, const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "zero") return make_zero_driver();
    if (type == "linear_ambiguous") {
        return make_linear_ambiguous(field_from_json(model, j.at("r"), "r"),
                                     field_from_json(model, j.at("R"), "R"));
    }
    if (type == "entropic") return make_entropic(j.at("gamma").get<double>());
    if (type == "cserm") {
        return make_cserm(field_from_json(model, j.at("beta"), "beta"),
                          j.at("gamma").get<double>());
    }
    if (type == "linear_generic") {
        return make_linear_generic(field_from_json(model, j.at("beta"), "beta"),
                                   field_from_json(model, j.at("lambda"), "lambda"));
    }
    throw ConfigError("unknown driver type '" + type + "'");
}

TerminalClaim claim_from_json(const LatticeModel& model, const json& j) {
    if (j.is_string()) {
        return ClaimExpr::parse(j.get<std::string>()).build(model);
    }
    if (j.is_object() && j.contains("table")) {
        const auto& table = j.at("table");
        if (model.layout() == Layout::Path && model.steps() > 12) {
            throw ConfigError("per-path claim tables are accepted for N <= 12");
        }
        TerminalClaim claim{table.get<std::vector<double>>()};
        if (claim.values.size() != model.states_at(model.steps())) {
            throw ConfigError("claim table: expected " +
                              std::to_string(model.states_at(model.steps())) + " values, got " +
                              std::to_string(claim.values.size()));
        }
        return claim;
    }
    throw ConfigError("claim: expected an expression string or {\"table\": [...]}");
}

double kappa_from_string(const std::string& text, double gamma1) {
    if (text == "1/g1") return 1.0 / gamma1;
    if (text == "2/g1") return 2.0 / gamma1;
    try {
        return std::stod(text);
    } catch (const std::exception&) {
        throw ConfigError("kappa: expected '1/g1', '2/g1' or a number, got '" + text + "'");
    }
}

struct ResultEntry {
    std::string rule;
    int sub_unit = 0;
    AllocationResult result;
};

json states_json(const std::vector<double>& row) {
    json out = json::array();
    for (std::size_t s = 0; s < row.size(); ++s) {
        out.push_back({{"index", s}, {"value", row[s]}});
    }
    return out;
}

} // namespace

int run_config(const std::string& path, const CliOverrides& overrides, std::ostream& log) {
    json config;
    try {
        std::ifstream in(path);
        if (!in) {
            log << "error: cannot read config '" << path << "'\n";
            return 2;
        }
        config = json::parse(in);
    } catch (const json::exception& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    }

    try {
        if (config.at("schema_version").get<int>() != kSchemaVersion) {
            throw ConfigError("unsupported schema_version");
        }
        const json& jm = config.at("model");
        const std::string layout_name = jm.value("layout", std::string("path"));
        const Layout layout = layout_name == "node"   ? Layout::Node
                              : layout_name == "path" ? Layout::Path
                                                      : throw ConfigError("layout must be "
                                                                          "'node' or 'path'");
        const LatticeModel model(
            build_grid(jm.at("T").get<double>(), jm.at("steps").get<int>()), layout);
        const DriverPtr driver = driver_from_json(model, config.at("driver"));

        const json& jc = config.at("claims");
        const TerminalClaim aggregate = claim_from_json(model, jc.at("aggregate"));
        std::vector<TerminalClaim> sub_units;
        if (jc.contains("sub_units")) {
            for (const auto& ju : jc.at("sub_units")) {
                sub_units.push_back(claim_from_json(model, ju));
            }
        }
        if (sub_units.empty()) sub_units.push_back(aggregate);

        if (overrides.seed) config["seed"] = *overrides.seed;
        if (overrides.deterministic) config["deterministic"] = *overrides.deterministic;
        const SignVariant variant = overrides.sign_variant.value_or(
            config.value("sign_variant", std::string("corrected")) == "paper"
                ? SignVariant::Paper
                : SignVariant::Corrected);

        const json& jrules = config.at("rules");

        // Partition consistency is required by the full/sub-allocation rules.
        bool wants_partition_rule = false;
        for (const auto& jr : jrules) {
            const std::string tag = jr.at("tag").get<std::string>();
            if (tag == "sub" || tag == "aumann_shapley") wants_partition_rule = true;
        }
        if (wants_partition_rule && sub_units.size() >= 2) {
            double mismatch = 0.0;
            for (std::size_t p = 0; p < aggregate.values.size(); ++p) {
                double sum = 0.0;
                for (const auto& unit : sub_units) sum += unit.values[p];
                mismatch = std::max(mismatch, std::abs(sum - aggregate.values[p]));
            }
            if (mismatch > 1e-12) {
                std::ostringstream msg;
                msg << "sub_units do not sum to the aggregate (mismatch norm "
                    << std::scientific << std::setprecision(3) << mismatch << ")";
                throw ConfigError(msg.str());
            }
        }

        std::vector<ResultEntry> entries;
        for (const auto& jr : jrules) {
            const std::string tag = jr.at("tag").get<std::string>();
            for (std::size_t i = 0; i < sub_units.size(); ++i) {
                const TerminalClaim& x = sub_units[i];
                AllocationResult result;
                if (tag == "sub") {
                    result = alloc_sub_direct(model, driver, x, aggregate);
                } else if (tag == "sub_bsvie") {
                    result = alloc_sub_bsvie(model, driver, x, aggregate, variant, true);
                } else if (tag == "gradient") {
                    result = alloc_gradient(model, driver, x, aggregate,
                                            jr.value("fd_step", 1e-3));
                } else if (tag == "marginal") {
                    result = alloc_marginal(model, driver, x, aggregate);
                } else if (tag == "generalized_marginal") {
                    result = alloc_generalized_marginal(
                        model, driver, x, aggregate,
                        field_from_json(model, jr.at("lambda"), "lambda"));
                } else if (tag == "aumann_shapley") {
                    result = alloc_aumann_shapley(model, driver, x, aggregate,
                                                  jr.value("nodes", 16),
                                                  jr.value("penalized", false), true);
                } else if (tag == "cserm") {
                    CsermParams params;
                    params.beta = field_from_json(model, jr.at("beta"), "beta");
                    params.gamma = jr.at("gamma").get<double>();
                    params.gamma1 = jr.at("gamma1").get<double>();
                    const std::string kappa_text =
                        overrides.kappa.value_or(jr.value("kappa", std::string("1/g1")));
                    params.kappa = kappa_from_string(kappa_text, params.gamma1);
                    result = alloc_cserm(model, x, aggregate, params, jr.value("fd_step", 1e-3));
                } else {
                    throw ConfigError("unknown rule tag '" + tag + "'");
                }
                entries.push_back({tag, static_cast<int>(i), std::move(result)});
            }
        }

        // report times: explicit indices or "all"
        std::vector<int> times{0};
        if (config.contains("output") && config.at("output").contains("report_times")) {
            const auto& jt = config.at("output").at("report_times");
            if (jt.is_string() && jt.get<std::string>() == "all") {
                times.clear();
                for (int t = 0; t <= model.steps(); ++t) times.push_back(t);
            } else {
                times = jt.get<std::vector<int>>();
                for (int t : times) {
                    if (t < 0 || t > model.steps()) {
                        throw ConfigError("report time " + std::to_string(t) + " outside 0..N");
                    }
                }
            }
        }

        json report;
        report["schema_version"] = kSchemaVersion;
        report["engine_version"] = kEngineVersion;
        report["config"] = config;
        report["results"] = json::array();
        for (const auto& entry : entries) {
            for (int t : times) {
                json row;
                row["rule"] = entry.rule;
                row["sub_unit"] = entry.sub_unit;
                row["t"] = t;
                row["states"] = states_json(entry.result.values[static_cast<std::size_t>(t)]);
                row["diagnostics"] = entry.result.diagnostics;
                report["results"].push_back(std::move(row));
            }
        }

        const std::string format =
            config.contains("output") ? config.at("output").value("format", std::string("json"))
                                      : std::string("json");
        const std::string out_path =
            config.contains("output") ? config.at("output").value("path", std::string())
                                      : std::string();

        if (format == "json") {
            if (out_path.empty()) {
                log << report.dump(2) << "\n";
            } else {
                std::ofstream out(out_path);
                if (!out) throw ConfigError("cannot write report to '" + out_path + "'");
                out << report.dump(2) << "\n";
                log << "report written to " << out_path << "\n";
            }
        } else if (format == "csv") {
            std::ostringstream csv;
            csv << "rule,t,state,value\n";
            for (const auto& entry : entries) {
                std::string rule_tag = entry.rule;
                if (sub_units.size() > 1) rule_tag += ":" + std::to_string(entry.sub_unit);
                for (int t : times) {
                    const auto& row = entry.result.values[static_cast<std::size_t>(t)];
                    for (std::size_t s = 0; s < row.size(); ++s) {
                        csv << rule_tag << ',' << t << ',' << s << ','
                            << std::setprecision(17) << row[s] << "\n";
                    }
                }
            }
            if (out_path.empty()) {
                log << csv.str();
            } else {
                std::ofstream out(out_path);
                if (!out) throw ConfigError("cannot write report to '" + out_path + "'");
                out << csv.str();
                log << "report written to " << out_path << "\n";
            }
        } else {
            throw ConfigError("output format must be 'json' or 'csv'");
        }
        return 0;
    } catch (const ConfigError& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const LayoutError& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const CapabilityError& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const json::exception& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const EngineError& err) {
        log << "numeric error: " << err.what() << "\n";
        return 3;
    }
}

namespace {

void print_report(const CheckReport& report, std::ostream& log) {
    log << "suite " << report.suite << "\n";
    for (const auto& row : report.rows) {
        const char* tag = !row.asserted ? "[info]" : row.pass ? "[PASS]" : "[FAIL]";
        log << "  " << tag << " " << row.name << ": worst = " << std::scientific
            << std::setprecision(3) << row.worst;
        if (row.asserted) log << " (tol " << row.tolerance << ")";
        log << ", samples = " << row.samples << "\n";
    }
}

json report_to_json(const CheckReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"name", row.name},
                        {"worst", row.worst},
                        {"tolerance", row.tolerance},
                        {"asserted", row.asserted},
                        {"pass", row.pass},
                        {"samples", row.samples}});
    }
    return {{"suite", report.suite}, {"rows", rows}};
}

} // namespace

int verify(const std::string& suite, std::uint64_t seed, int count, SignVariant variant,
           const std::string& report_path, std::ostream& log) {
    std::vector<CheckReport> reports;
    try {
        const bool all = suite == "all";
        if (suite == "risk" || all) {
            for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                              BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
                reports.push_back(check_risk_axioms(kind, count, seed));
            }
        }
        if (suite == "car" || all) {
            for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                              BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
                reports.push_back(check_car_axioms(RuleKind::Sub, kind, count, seed));
                reports.push_back(check_car_axioms(RuleKind::SubBsvie, kind, count, seed, variant));
            }
            for (auto kind : {BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm,
                              BuiltinDriverKind::LinearGeneric}) {
                reports.push_back(check_car_axioms(RuleKind::Gradient, kind, count, seed));
            }
            for (auto kind : {BuiltinDriverKind::LinearAmbiguous, BuiltinDriverKind::Entropic}) {
                reports.push_back(check_car_axioms(RuleKind::Marginal, kind, count, seed));
                reports.push_back(
                    check_car_axioms(RuleKind::GeneralizedMarginal, kind, count, seed));
                reports.push_back(check_car_axioms(RuleKind::AumannShapley, kind, count, seed));
            }
            reports.push_back(check_car_axioms(RuleKind::PenalizedAumannShapley,
                                               BuiltinDriverKind::Entropic, count, seed));
            reports.push_back(
                check_car_axioms(RuleKind::Cserm, BuiltinDriverKind::Cserm, count, seed));
        }
        if (suite == "comparison" || all) {
            reports.push_back(check_comparison(count, seed));
        }
        if (suite == "duality" || all) {
            for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                              BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
                reports.push_back(check_duality(kind, count, seed));
            }
        }
        if (reports.empty()) {
            log << "error: unknown verify suite '" << suite
                << "' (expected risk|car|comparison|duality|all)\n";
            return 2;
        }
    } catch (const ConfigError& err) {
        log << "config error: " << err.what() << "\n";
        return 2;
    } catch (const EngineError& err) {
        log << "numeric error: " << err.what() << "\n";
        return 3;
    }

    bool ok = true;
    const CheckRow* worst_row = nullptr;
    for (const auto& report : reports) {
        print_report(report, log);
        for (const auto& row : report.rows) {
            if (row.asserted && !row.pass) {
                ok = false;
                if (!worst_row || row.worst > worst_row->worst) worst_row = &row;
            }
        }
    }

    if (!report_path.empty()) {
        json out;
        out["schema_version"] = kSchemaVersion;
        out["engine_version"] = kEngineVersion;
        out["suite"] = suite;
        out["seed"] = seed;
        out["count"] = count;
        out["sign_variant"] = variant == SignVariant::Paper ? "paper" : "corrected";
        out["reports"] = json::array();
        for (const auto& report : reports) out["reports"].push_back(report_to_json(report));
        std::ofstream file(report_path);
        if (!file) {
            log << "error: cannot write report to '" << report_path << "'\n";
            return 2;
        }
        file << out.dump(2) << "\n";
    }

    if (!ok && worst_row) {
        log << "FAILED: " << worst_row->name << " worst violation " << std::scientific
            << worst_row->worst << " exceeds " << worst_row->tolerance << "\n";
    }
    return ok ? 0 : 1;
}

} // namespace risklat
