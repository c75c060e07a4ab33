#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "risklat/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"risklat: dynamic cash-subadditive risk measures and capital "
                 "allocation rules on binomial lattices"};

    std::string config_path;
    std::string verify_suite;
    std::string report_path;
    std::string sign_variant = "corrected";
    std::string kappa;
    std::uint64_t seed = 42;
    int count = 100;
    bool deterministic = false;
    bool seed_given = false;

    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--verify", verify_suite, "property suite: risk|car|comparison|duality|all");
    app.add_option("--seed", seed, "harness seed")->each([&](const std::string&) {
        seed_given = true;
    });
    app.add_option("--count", count, "instances per property suite")
        ->check(CLI::PositiveNumber);
    app.add_flag("--deterministic", deterministic,
                 "byte-identical reports (single-threaded reductions)");
    app.add_option("--sign-variant", sign_variant,
                   "subdifferential BSVIE driver sign: corrected|paper")
        ->check(CLI::IsMember({"corrected", "paper"}));
    app.add_option("--kappa", kappa, "CSERM linearization coefficient: 1/g1|2/g1|<number>");
    app.add_option("--out", report_path, "verify report path (JSON)");

    CLI11_PARSE(app, argc, argv);

    const risklat::SignVariant variant = sign_variant == "paper" ? risklat::SignVariant::Paper
                                                                 : risklat::SignVariant::Corrected;

    if (!verify_suite.empty()) {
        return risklat::verify(verify_suite, seed, count, variant, report_path, std::cout);
    }
    if (!config_path.empty()) {
        risklat::CliOverrides overrides;
        if (seed_given) overrides.seed = seed;
        if (deterministic) overrides.deterministic = true;
        overrides.sign_variant = variant;
        if (!kappa.empty()) overrides.kappa = kappa;
        return risklat::run_config(config_path, overrides, std::cout);
    }
    std::cout << app.help() << std::endl;
    return 2;
}
