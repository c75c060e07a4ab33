#include <doctest.h>

#include <cmath>

#include "risklat/properties.hpp"

using namespace risklat;

namespace {

void require_all_pass(const CheckReport& report) {
    for (const auto& row : report.rows) {
        INFO(report.suite, " / ", row.name, " worst=", row.worst, " tol=", row.tolerance);
        CHECK(row.pass);
    }
}

} // namespace

TEST_CASE("random_instance is reproducible and validated") {
    const InstanceSpec spec{.seed = 4242, .kind = BuiltinDriverKind::Entropic};
    const Instance a = random_instance(spec);
    const Instance b = random_instance(spec);
    CHECK(a.model.steps() == b.model.steps());
    CHECK(a.aggregate.values == b.aggregate.values);
    REQUIRE(a.sub_units.size() == b.sub_units.size());
    for (std::size_t i = 0; i < a.sub_units.size(); ++i) {
        CHECK(a.sub_units[i].values == b.sub_units[i].values);
    }

    const Instance c = random_instance({.seed = 4243, .kind = BuiltinDriverKind::Entropic});
    CHECK((c.model.steps() != a.model.steps() || c.aggregate.values != a.aggregate.values));

    CHECK_THROWS_AS(random_instance({.seed = 1, .steps = 25}), ConfigError);
    CHECK_THROWS_AS(random_instance({.seed = 1, .claim_bound = 0.0}), ConfigError);
}

TEST_CASE("sub-units add up to the aggregate") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const Instance inst = random_instance({.seed = seed, .kind = BuiltinDriverKind::Cserm});
        for (std::size_t p = 0; p < inst.aggregate.values.size(); ++p) {
            double sum = 0.0;
            for (const auto& unit : inst.sub_units) sum += unit.values[p];
            CHECK(sum == doctest::Approx(inst.aggregate.values[p]).epsilon(1e-12));
        }
        // feasibility certification leaves the tilt inside the lattice bound
        const BsdeSolution rho = risk_measure(inst.model, inst.driver, inst.aggregate);
        CHECK(tilt_load(inst.model, *inst.driver, rho) <= 0.98);
    }
}

TEST_CASE("risk axiom suites pass for every builtin driver") {
    for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                      BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
        require_all_pass(check_risk_axioms(kind, 25, 7));
    }
}

TEST_CASE("strict cash-subadditivity is witnessed for discounting drivers") {
    const auto report = check_risk_axioms(BuiltinDriverKind::LinearAmbiguous, 40, 11);
    const CheckRow* row = report.row("cash_additivity_gap (reported)");
    REQUIRE(row != nullptr);
    CHECK_FALSE(row->asserted);
    CHECK(row->worst > 1e-6); // equality genuinely fails somewhere
}

TEST_CASE("car axiom suites") {
    SUBCASE("subdifferential rule across drivers") {
        for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                          BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
            require_all_pass(check_car_axioms(RuleKind::Sub, kind, 12, 21));
        }
    }
    SUBCASE("bsvie rule cross-checks the direct rule") {
        for (auto kind : {BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
            require_all_pass(check_car_axioms(RuleKind::SubBsvie, kind, 12, 23));
        }
    }
    SUBCASE("gradient rule on differentiable drivers") {
        for (auto kind : {BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm,
                          BuiltinDriverKind::LinearGeneric}) {
            require_all_pass(check_car_axioms(RuleKind::Gradient, kind, 12, 29));
        }
        CHECK_THROWS_AS(
            check_car_axioms(RuleKind::Gradient, BuiltinDriverKind::LinearAmbiguous, 2, 1),
            CapabilityError);
    }
    SUBCASE("marginal and generalized marginal") {
        require_all_pass(check_car_axioms(RuleKind::Marginal, BuiltinDriverKind::Entropic, 15, 31));
        require_all_pass(check_car_axioms(RuleKind::GeneralizedMarginal,
                                          BuiltinDriverKind::LinearAmbiguous, 15, 31));
    }
    SUBCASE("aumann-shapley plain and penalized") {
        require_all_pass(
            check_car_axioms(RuleKind::AumannShapley, BuiltinDriverKind::LinearAmbiguous, 8, 37));
        require_all_pass(
            check_car_axioms(RuleKind::AumannShapley, BuiltinDriverKind::Entropic, 8, 37));
        require_all_pass(check_car_axioms(RuleKind::PenalizedAumannShapley,
                                          BuiltinDriverKind::Entropic, 8, 37));
    }
    SUBCASE("cserm decomposition rule") {
        require_all_pass(check_car_axioms(RuleKind::Cserm, BuiltinDriverKind::Cserm, 12, 41));
    }
}

TEST_CASE("paper sign variant fails the cross-method check") {
    const auto report = check_car_axioms(RuleKind::SubBsvie, BuiltinDriverKind::Entropic, 10, 43,
                                         SignVariant::Paper);
    const CheckRow* row = report.row("cross_method_gap");
    REQUIRE(row != nullptr);
    CHECK_FALSE(row->pass);
    CHECK(row->worst > 1e-3);
}

TEST_CASE("comparison suite") {
    require_all_pass(check_comparison(40, 47));
    require_all_pass(check_comparison(1, 48)); // single instance is enough to run
}

TEST_CASE("duality suite") {
    for (auto kind : {BuiltinDriverKind::Zero, BuiltinDriverKind::LinearAmbiguous,
                      BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
        require_all_pass(check_duality(kind, 15, 53));
    }
}

TEST_CASE("count validation") {
    CHECK_THROWS_AS(check_risk_axioms(BuiltinDriverKind::Zero, 0, 1), ConfigError);
    CHECK_THROWS_AS(check_comparison(0, 1), ConfigError);
}
