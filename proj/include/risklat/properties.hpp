#pragma once

#include <cstdint>

#include "risklat/allocation.hpp"

namespace risklat {

enum class BuiltinDriverKind { Zero, LinearAmbiguous, Entropic, Cserm, LinearGeneric };
enum class RuleKind {
    Sub,
    SubBsvie,
    Gradient,
    Marginal,
    GeneralizedMarginal,
    AumannShapley,
    PenalizedAumannShapley,
    Cserm
};

std::string to_string(BuiltinDriverKind kind);
std::string to_string(RuleKind rule);

/// Reproducible randomized instance recipe. Path layout; the spec caps path
/// instances at N = 12.
struct InstanceSpec {
    std::uint64_t seed = 0;
    int steps = 0; // 0: sampled in [2, max_steps]
    int max_steps = 8;
    double horizon = 0.0; // 0: sampled in [0.75, 1.25]
    BuiltinDriverKind kind = BuiltinDriverKind::Entropic;
    int partition = 0; // 0: sampled in [2, 4]
    double claim_bound = 0.75;
};

struct Instance {
    LatticeModel model;
    DriverPtr driver;
    TerminalClaim aggregate;              // Y = sum of the sub-units
    std::vector<TerminalClaim> sub_units; // X_1..X_n
    CsermParams cserm;                    // populated for the Cserm kind
    std::uint64_t seed = 0;
    int feasibility_halvings = 0; // claim rescalings applied for the tilt bound
};

/// Deterministic instance from the spec's seed: lattice, driver with sampled
/// adapted coefficient fields, and a claim partition whose aggregate scenario
/// respects the lattice tilt bound (claims are halved until it does).
Instance random_instance(const InstanceSpec& spec);

struct CheckRow {
    std::string name;
    double worst = 0.0;
    double tolerance = 0.0;
    bool asserted = true; // reported-only rows are never failures
    bool pass = true;
    long samples = 0;
};

struct CheckReport {
    std::string suite;
    std::vector<CheckRow> rows;
    bool all_pass() const;
    const CheckRow* row(const std::string& name) const;
};

/// Risk-measure axioms (monotonicity, convexity, cash-subadditivity,
/// normalization, flow, regularity; positive homogeneity for sublinear kinds)
/// over seeded instances.
CheckReport check_risk_axioms(BuiltinDriverKind kind, int count, std::uint64_t seed);

/// CAR axioms for one rule/driver pairing. Asserted rows follow what the
/// underlying theory claims for that rule; 1-time-consistency is reported
/// without assertion.
CheckReport check_car_axioms(RuleKind rule, BuiltinDriverKind kind, int count, std::uint64_t seed,
                             SignVariant variant = SignVariant::Corrected);

/// Comparison theorems: ordered (driver, terminal) pairs for BSDEs and
/// ordered (driver, family) pairs for BSVIEs give ordered solutions.
CheckReport check_comparison(int count, std::uint64_t seed);

/// Dual representation: dual gaps, penalty nonnegativity and upper-bound
/// property, density conditional mean, subdifferential membership.
CheckReport check_duality(BuiltinDriverKind kind, int count, std::uint64_t seed);

} // namespace risklat
