// Acceptance suite: one criterion per function, each printing the measured
// quantities and its own pass/fail line. Run with a list of criterion numbers
// or with no arguments for all twelve.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "risklat/allocation.hpp"
#include "risklat/properties.hpp"
#include "risklat/rng.hpp"

using namespace risklat;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

struct Criterion {
    bool ok = true;
    std::ostringstream detail;

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << "  VIOLATION: " << what << "\n";
        }
    }
};

std::string fmt(double v) {
    std::ostringstream out;
    out << std::scientific << std::setprecision(3) << v;
    return out.str();
}

double max_abs_diff(const std::vector<std::vector<double>>& a, const AdaptedField& b) {
    double m = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        auto rb = b.at(static_cast<int>(t));
        for (std::size_t s = 0; s < a[t].size(); ++s) m = std::max(m, std::abs(a[t][s] - rb[s]));
    }
    return m;
}

double max_excess(const std::vector<std::vector<double>>& a, const AdaptedField& b) {
    double m = -1e300;
    for (std::size_t t = 0; t < a.size(); ++t) {
        auto rb = b.at(static_cast<int>(t));
        for (std::size_t s = 0; s < a[t].size(); ++s) m = std::max(m, a[t][s] - rb[s]);
    }
    return m;
}

constexpr BuiltinDriverKind kAllKinds[] = {BuiltinDriverKind::Zero,
                                           BuiltinDriverKind::LinearAmbiguous,
                                           BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm};

// 1. Linear ambiguous-discount risk measure against the scalar recursion and
//    the continuous-time discount, N = 4 and N = 1000, under one second.
Criterion criterion_1() {
    Criterion c;
    const Timer timer;

    const LatticeModel small(build_grid(1.0, 4), Layout::Node);
    const auto rho4 =
        risk_measure(small, make_linear_ambiguous(small, 0.05, 0.1), claim_constant(small, -1.0));
    double oracle = 1.0;
    for (int k = 0; k < 4; ++k) oracle /= 1.0 + 0.05 * small.delta();
    const double gap_oracle = std::abs(rho4.y.at(0)[0] - oracle);
    const double gap_exp4 = std::abs(rho4.y.at(0)[0] - std::exp(-0.05));
    c.detail << "  N=4: |rho_0 - (1+r*delta)^{-4}| = " << fmt(gap_oracle)
             << ", |rho_0 - e^{-0.05}| = " << fmt(gap_exp4) << "\n";
    c.require(gap_oracle <= 1e-12, "scalar-recursion gap exceeds 1e-12");
    c.require(gap_exp4 <= 3e-4, "continuous-discount gap exceeds 3e-4 at N=4");

    const LatticeModel large(build_grid(1.0, 1000), Layout::Node);
    const auto rho1000 =
        risk_measure(large, make_linear_ambiguous(large, 0.05, 0.1), claim_constant(large, -1.0));
    const double gap_exp1000 = std::abs(rho1000.y.at(0)[0] - std::exp(-0.05));
    c.detail << "  N=1000: |rho_0 - e^{-0.05}| = " << fmt(gap_exp1000) << "\n";
    c.require(gap_exp1000 <= 2e-6, "continuous-discount gap exceeds 2e-6 at N=1000");

    const double elapsed = timer.seconds();
    c.detail << "  runtime " << std::fixed << std::setprecision(2) << elapsed << " s\n";
    c.require(elapsed < 1.0, "runtime reached 1 s");
    return c;
}

// 2. Entropic exactness at N = 2 and the refinement study at N = 50/100/200.
Criterion criterion_2() {
    Criterion c;
    const Timer timer;

    const LatticeModel two(build_grid(1.0, 2), Layout::Node);
    const auto rho2 = risk_measure(two, make_entropic(1.0), claim_scale(claim_brownian(two), -1.0));
    const double gap2 = std::abs(rho2.y.at(0)[0] - 0.5);
    c.detail << "  N=2: |rho_0 - 1/2| = " << fmt(gap2) << "\n";
    c.require(gap2 <= 1e-12, "hand value 0.5 missed at N=2");

    std::vector<double> errors;
    for (int n : {50, 100, 200}) {
        const LatticeModel model(build_grid(1.0, n), Layout::Node);
        const auto rho =
            risk_measure(model, make_entropic(1.0), claim_scale(claim_brownian(model), -1.0));
        errors.push_back(std::abs(rho.y.at(0)[0] - 0.5));
        c.detail << "  N=" << n << ": |rho_0 - T/(2 gamma)| = " << fmt(errors.back()) << "\n";
        c.require(errors.back() <= 1e-2, "refinement error exceeds 1e-2");
    }
    // Z is identically 1 for this claim, so the scheme is exact at every N and
    // the error-halving ratio is vacuous; accept exactness in its place.
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const bool exact = errors[i] <= 1e-12 && errors[i + 1] <= 1e-12;
        const bool halving = errors[i + 1] > 0.0 && errors[i] / errors[i + 1] > 1.5 &&
                             errors[i] / errors[i + 1] < 3.0;
        c.require(exact || halving, "neither exact nor halving between refinements");
        if (exact) c.detail << "  refinement " << i << ": exact (scheme error below 1e-12)\n";
    }

    const double elapsed = timer.seconds();
    c.detail << "  runtime " << std::fixed << std::setprecision(2) << elapsed << " s\n";
    c.require(elapsed < 5.0, "runtime reached 5 s");
    return c;
}

// 3. Dual-representation chain for the entropic hand instance.
Criterion criterion_3() {
    Criterion c;
    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const auto driver = make_entropic(1.0);
    const auto rho = risk_measure(model, driver, claim_scale(claim_brownian(model), -1.0));
    const auto scenario = extract_scenario(model, *driver, rho);

    double mu_gap = 0.0;
    for (int k = 0; k < 2; ++k) {
        for (double m : scenario.mu.at(k)) mu_gap = std::max(mu_gap, std::abs(m + 1.0));
    }
    c.detail << "  max |mu + 1| = " << fmt(mu_gap) << "\n";
    c.require(mu_gap <= 1e-12, "optimal drift is not -1");

    std::vector<double> b_t(model.path_count());
    for (std::size_t p = 0; p < b_t.size(); ++p) b_t[p] = model.brownian(2, p);
    const double tilted_mean = reduce_expectation(model, b_t, 2, 0, &scenario.tilt)[0];
    c.detail << "  tilted mean of B_T = " << std::setprecision(15) << tilted_mean << "\n";
    c.require(std::abs(tilted_mean - 1.0) <= 1e-12, "tilted mean of B_T is not 1");

    const double penalty = penalty_at(model, *driver, scenario, 0)[0];
    c.detail << "  c_0 = " << std::setprecision(15) << penalty << "\n";
    c.require(std::abs(penalty - 0.5) <= 1e-12, "penalty c_0 is not 1/2");

    const double gap = dual_check(model, *driver, scenario, rho, 0);
    c.detail << "  dual gap = " << fmt(gap) << "\n";
    c.require(gap <= 1e-10, "dual gap exceeds 1e-10");
    return c;
}

// 4. Cross-method subdifferential CAR on 100 seeded instances, plus the
//    documented paper-sign discrepancy.
Criterion criterion_4() {
    Criterion c;
    const Timer timer;
    Rng master(20240);
    double worst_gap = 0.0;
    double paper_gap = 0.0;
    for (int i = 0; i < 100; ++i) {
        const InstanceSpec spec{.seed = master.next_u64(), .max_steps = 10, .kind = kAllKinds[i % 4]};
        const Instance inst = random_instance(spec);
        const auto res = alloc_sub_bsvie(inst.model, inst.driver, inst.sub_units.front(),
                                         inst.aggregate, SignVariant::Corrected, true);
        worst_gap = std::max(worst_gap, res.diagnostics.at("cross_method_gap"));
        if (spec.kind == BuiltinDriverKind::Entropic) {
            const auto paper = alloc_sub_bsvie(inst.model, inst.driver, inst.sub_units.front(),
                                               inst.aggregate, SignVariant::Paper, true);
            paper_gap = std::max(paper_gap, paper.diagnostics.at("cross_method_gap"));
        }
    }
    c.detail << "  corrected sign: worst cross-method gap = " << fmt(worst_gap) << "\n";
    c.detail << "  paper sign (entropic instances): worst disagreement = " << fmt(paper_gap)
             << "\n";
    c.require(worst_gap <= 1e-8, "cross-method gap exceeds 1e-8");
    c.require(paper_gap > 1e-3, "paper sign variant failed to disagree above 1e-3");

    const double elapsed = timer.seconds();
    c.detail << "  runtime " << std::fixed << std::setprecision(2) << elapsed << " s\n";
    c.require(elapsed < 60.0, "runtime reached 60 s");
    return c;
}

// 5. CAR identity for every rule, audacity for the penalized Aumann-Shapley.
Criterion criterion_5() {
    Criterion c;
    Rng master(20245);
    double sub_gap = 0.0, grad_gap = 0.0, grad_adjusted_gap = 0.0, marginal_gap = 0.0,
           genmarg_gap = 0.0, as_gap = 0.0, cserm_gap = 0.0, audacity = -1e300;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t seed = master.next_u64();
        const BuiltinDriverKind kind = kAllKinds[i % 4];
        const Instance inst = random_instance({.seed = seed, .kind = kind});
        const LatticeModel& model = inst.model;
        const TerminalClaim& y = inst.aggregate;
        const BsdeSolution rho = risk_measure(model, inst.driver, y);

        sub_gap = std::max(sub_gap,
                           max_abs_diff(alloc_sub_direct(model, inst.driver, y, y).values, rho.y));
        marginal_gap = std::max(
            marginal_gap, max_abs_diff(alloc_marginal(model, inst.driver, y, y).values, rho.y));

        Rng aux(seed ^ 0xabcdULL);
        AdaptedField lambda(model, model.steps() - 1);
        const double amp = aux.uniform(-0.5, 0.5) / model.sqrt_delta();
        for (int k = 0; k < model.steps(); ++k) {
            for (double& v : lambda.at(k)) v = amp;
        }
        genmarg_gap = std::max(
            genmarg_gap,
            max_abs_diff(alloc_generalized_marginal(model, inst.driver, y, y, lambda).values,
                         rho.y));

        as_gap = std::max(
            as_gap,
            max_abs_diff(alloc_aumann_shapley(model, inst.driver, y, y, 16, false, false).values,
                         rho.y));

        if (kind == BuiltinDriverKind::Entropic || kind == BuiltinDriverKind::Cserm) {
            const auto penalized = alloc_aumann_shapley(model, inst.driver, y, y, 16, true, false);
            audacity = std::max(audacity, max_excess(penalized.values, rho.y));

            // gradient identity, penalty-adjusted for the strictly convex family
            const ScenarioEvaluator eval(model, inst.driver, y, true);
            const auto lam = eval.dual_values(y, false);
            double adj = 0.0;
            for (std::size_t t = 0; t < lam.size(); ++t) {
                auto r = rho.y.at(static_cast<int>(t));
                const auto& pen = eval.penalties()[t];
                for (std::size_t s = 0; s < lam[t].size(); ++s) {
                    adj = std::max(adj, std::abs(lam[t][s] - r[s] - pen[s]));
                }
            }
            grad_adjusted_gap = std::max(grad_adjusted_gap, adj);
        }

        // plain gradient identity on the sublinear differentiable family
        const Instance lin =
            random_instance({.seed = seed ^ 0x77ULL, .kind = BuiltinDriverKind::LinearGeneric});
        const BsdeSolution lin_rho = risk_measure(lin.model, lin.driver, lin.aggregate);
        grad_gap = std::max(
            grad_gap,
            max_abs_diff(alloc_gradient(lin.model, lin.driver, lin.aggregate, lin.aggregate).values,
                         lin_rho.y));

        CsermParams params = inst.cserm;
        if (kind != BuiltinDriverKind::Cserm) {
            params.beta = AdaptedField::constant(model, model.steps() - 1, 0.05);
            params.gamma = 1.0;
            params.gamma1 = 1.5;
            params.kappa = 1.0 / params.gamma1;
        }
        const auto se = alloc_cserm(model, y, y, params);
        const auto rho_se = risk_measure(model, make_cserm(params.beta, params.gamma), y);
        cserm_gap = std::max(cserm_gap, max_abs_diff(se.values, rho_se.y));
    }
    c.detail << "  sub identity gap = " << fmt(sub_gap) << "\n";
    c.detail << "  gradient identity gap (sublinear family) = " << fmt(grad_gap)
             << ", penalty-adjusted (entropic/cserm) = " << fmt(grad_adjusted_gap) << "\n";
    c.detail << "  marginal = " << fmt(marginal_gap)
             << ", generalized marginal = " << fmt(genmarg_gap)
             << ", aumann-shapley = " << fmt(as_gap) << ", cserm = " << fmt(cserm_gap) << "\n";
    c.detail << "  penalized-AS audacity max(Lambda - rho) = " << fmt(audacity) << "\n";
    c.require(sub_gap <= 1e-9, "sub identity gap exceeds 1e-9");
    c.require(grad_gap <= 1e-9, "gradient identity gap exceeds 1e-9");
    c.require(grad_adjusted_gap <= 1e-9, "penalty-adjusted gradient identity exceeds 1e-9");
    c.require(marginal_gap <= 1e-9, "marginal identity gap exceeds 1e-9");
    c.require(genmarg_gap <= 1e-9, "generalized marginal identity gap exceeds 1e-9");
    c.require(as_gap <= 1e-9, "aumann-shapley identity gap exceeds 1e-9");
    c.require(cserm_gap <= 1e-9, "cserm identity gap exceeds 1e-9");
    c.require(audacity <= 1e-9, "penalized AS exceeds rho(Y)");
    return c;
}

// 6. Axiom suites: CAR axioms for Lambda^sub and risk-measure axioms for rho,
//    25 instances per builtin driver (100 per suite), under two minutes.
Criterion criterion_6() {
    Criterion c;
    const Timer timer;
    for (const BuiltinDriverKind kind : kAllKinds) {
        const auto car = check_car_axioms(RuleKind::Sub, kind, 25, 2026);
        for (const auto& row : car.rows) {
            if (row.asserted && !row.pass) {
                c.require(false, car.suite + " / " + row.name + " worst " + fmt(row.worst));
            }
        }
        const auto risk = check_risk_axioms(kind, 25, 2027);
        for (const auto& row : risk.rows) {
            if (row.asserted && !row.pass) {
                c.require(false, risk.suite + " / " + row.name + " worst " + fmt(row.worst));
            }
        }
        c.detail << "  " << to_string(kind) << ": car rows and risk rows all inside tolerance\n";
    }
    const double elapsed = timer.seconds();
    c.detail << "  runtime " << std::fixed << std::setprecision(2) << elapsed << " s\n";
    c.require(elapsed < 120.0, "runtime reached 120 s");
    return c;
}

// 7. Comparison theorems for BSDEs and BSVIEs on 100 ordered instances.
Criterion criterion_7() {
    Criterion c;
    const auto report = check_comparison(100, 2028);
    for (const auto& row : report.rows) {
        c.detail << "  " << row.name << ": worst ordering violation = " << fmt(row.worst) << "\n";
        c.require(row.worst <= 1e-12, row.name + " ordering violated beyond 1e-12");
    }
    return c;
}

// 8. Gradient CAR against the central finite difference, plus the hand value.
Criterion criterion_8() {
    Criterion c;
    Rng master(20248);
    double fd_worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        for (const BuiltinDriverKind kind : {BuiltinDriverKind::Entropic, BuiltinDriverKind::Cserm}) {
            const Instance inst = random_instance({.seed = master.next_u64(), .kind = kind});
            const auto res = alloc_gradient(inst.model, inst.driver, inst.sub_units.front(),
                                            inst.aggregate, 1e-3);
            fd_worst = std::max(fd_worst, res.diagnostics.at("fd_residual"));
        }
    }
    c.detail << "  worst |gradient - central FD| = " << fmt(fd_worst) << "\n";
    c.require(fd_worst <= 1e-6, "gradient/FD residual exceeds 1e-6");

    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const TerminalClaim y = claim_scale(claim_brownian(model), -1.0);
    const auto hand = alloc_gradient(model, make_entropic(1.0), claim_scale(y, 0.5), y);
    c.detail << "  hand value Lambda^grad_0(-B_T/2, -B_T) = " << std::setprecision(15)
             << hand.values[0][0] << "\n";
    c.require(std::abs(hand.values[0][0] - 0.5) <= 1e-10, "hand value 0.5 missed");
    return c;
}

// 9. Aumann-Shapley: full allocation residuals and the entropic hand value.
Criterion criterion_9() {
    Criterion c;
    Rng master(20249);
    double residual_la = 0.0, residual_e16 = 0.0, residual_e32 = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Instance la = random_instance(
            {.seed = master.next_u64(), .kind = BuiltinDriverKind::LinearAmbiguous});
        std::vector<TerminalClaim> claims = la.sub_units;
        claims.push_back(la.aggregate);
        const auto batch = aumann_shapley_batch(la.model, la.driver, claims, la.aggregate, 16, false);
        for (std::size_t t = 0; t < batch.back().size(); ++t) {
            for (std::size_t s = 0; s < batch.back()[t].size(); ++s) {
                double sum = 0.0;
                for (std::size_t u = 0; u + 1 < batch.size(); ++u) sum += batch[u][t][s];
                residual_la = std::max(residual_la, std::abs(sum - batch.back()[t][s]));
            }
        }

        const Instance en =
            random_instance({.seed = master.next_u64(), .kind = BuiltinDriverKind::Entropic});
        std::vector<TerminalClaim> eclaims = en.sub_units;
        eclaims.push_back(en.aggregate);
        for (int nodes : {16, 32}) {
            const auto ebatch =
                aumann_shapley_batch(en.model, en.driver, eclaims, en.aggregate, nodes, false);
            double residual = 0.0;
            for (std::size_t t = 0; t < ebatch.back().size(); ++t) {
                for (std::size_t s = 0; s < ebatch.back()[t].size(); ++s) {
                    double sum = 0.0;
                    for (std::size_t u = 0; u + 1 < ebatch.size(); ++u) sum += ebatch[u][t][s];
                    residual = std::max(residual, std::abs(sum - ebatch.back()[t][s]));
                }
            }
            double& slot = nodes == 16 ? residual_e16 : residual_e32;
            slot = std::max(slot, residual);
        }
    }
    c.detail << "  full-allocation residual: linear_ambiguous = " << fmt(residual_la)
             << ", entropic 16 nodes = " << fmt(residual_e16)
             << ", 32 nodes = " << fmt(residual_e32) << "\n";
    c.require(residual_la <= 1e-9, "linear_ambiguous full allocation beyond 1e-9");
    c.require(residual_e16 <= 1e-3, "entropic full allocation beyond 1e-3 at 16 nodes");
    c.require(residual_e32 <= 1e-5, "entropic full allocation beyond 1e-5 at 32 nodes");

    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const TerminalClaim y = claim_scale(claim_brownian(model), -1.0);
    const auto hand = alloc_aumann_shapley(model, make_entropic(1.0), y, y, 16, false, false);
    c.detail << "  hand value Lambda^AS_0(-B_T, -B_T) = " << std::setprecision(15)
             << hand.values[0][0] << "\n";
    c.require(std::abs(hand.values[0][0] - 0.5) <= 1e-10, "hand value 0.5 missed");
    return c;
}

// 10. Marginal rule: hand value and construction-exact identity.
Criterion criterion_10() {
    Criterion c;
    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const TerminalClaim y = claim_scale(claim_brownian(model), -1.0);
    const auto res = alloc_marginal(model, make_entropic(1.0), claim_scale(y, 0.5), y);
    c.detail << "  Lambda^M_0(Y/2, Y) = " << std::setprecision(15) << res.values[0][0] << "\n";
    c.require(std::abs(res.values[0][0] - 0.375) <= 1e-12, "hand value 0.375 missed");

    Rng master(202410);
    double identity = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Instance inst =
            random_instance({.seed = master.next_u64(), .kind = BuiltinDriverKind::Entropic});
        const auto lam =
            alloc_marginal(inst.model, inst.driver, inst.sub_units.front(), inst.aggregate);
        const auto whole = risk_measure(inst.model, inst.driver, inst.aggregate);
        const auto rest = risk_measure(inst.model, inst.driver,
                                       claim_add(inst.aggregate, inst.sub_units.front(), -1.0));
        for (std::size_t t = 0; t < lam.values.size(); ++t) {
            auto w = whole.y.at(static_cast<int>(t));
            auto r = rest.y.at(static_cast<int>(t));
            for (std::size_t s = 0; s < lam.values[t].size(); ++s) {
                identity = std::max(identity, std::abs(lam.values[t][s] - (w[s] - r[s])));
            }
        }
    }
    c.detail << "  identity residual vs re-solved difference = " << fmt(identity) << "\n";
    c.require(identity == 0.0, "marginal identity is not construction-exact");
    return c;
}

// 11. CSERM decomposition, kappa = 1/g1 vs kappa = 2/g1 on the hand instance.
Criterion criterion_11() {
    Criterion c;
    const LatticeModel model(build_grid(1.0, 2), Layout::Path);
    const TerminalClaim y = claim_scale(claim_brownian(model), -1.0);
    const TerminalClaim x = claim_scale(y, 0.5);
    const AdaptedField beta = AdaptedField::constant(model, 1, 0.0);

    const CsermParams good{beta, 1.0, 1.0, 1.0};
    const auto res = alloc_cserm(model, x, y, good);
    // recompute both components independently
    const auto rho_se = risk_measure(model, make_cserm(beta, good.gamma), y);
    const auto rho_g1 = risk_measure(model, make_cserm(beta, good.gamma1), y);
    AdaptedField lambda(model, 1);
    for (int k = 0; k < 2; ++k) {
        auto z = rho_g1.z.at(k);
        auto l = lambda.at(k);
        for (std::size_t s = 0; s < l.size(); ++s) l[s] = good.kappa * z[s];
    }
    const auto rho_nabla =
        risk_measure(model, make_linear_generic(beta, lambda), claim_add(y, x, -1.0));
    double decomposition = 0.0;
    for (std::size_t t = 0; t < res.values.size(); ++t) {
        auto se = rho_se.y.at(static_cast<int>(t));
        auto nb = rho_nabla.y.at(static_cast<int>(t));
        for (std::size_t s = 0; s < res.values[t].size(); ++s) {
            decomposition = std::max(decomposition, std::abs(res.values[t][s] - (se[s] - nb[s])));
        }
    }
    c.detail << "  decomposition residual = " << fmt(decomposition) << "\n";
    c.require(decomposition <= 1e-12, "decomposition not exact within 1e-12");

    c.detail << "  kappa = 1/g1: fd diagnostic = " << fmt(res.diagnostics.at("fd_residual"))
             << "\n";
    c.require(res.diagnostics.at("fd_residual") <= 1e-6, "fd diagnostic beyond 1e-6 at 1/g1");

    const CsermParams paper{beta, 1.0, 1.0, 2.0};
    const auto res2 = alloc_cserm(model, x, y, paper);
    c.detail << "  kappa = 2/g1: fd diagnostic = " << fmt(res2.diagnostics.at("fd_residual"))
             << " (recorded discrepancy)\n";
    c.require(res2.diagnostics.at("fd_residual") > 1e-3,
              "2/g1 variant unexpectedly matches the oracle");
    return c;
}

// 12. Subdifferential membership across all builtin drivers at N <= 8.
Criterion criterion_12() {
    Criterion c;
    Rng master(202412);
    for (const BuiltinDriverKind kind : kAllKinds) {
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            const Instance inst = random_instance({.seed = master.next_u64(), .kind = kind});
            const auto rho = risk_measure(inst.model, inst.driver, inst.aggregate);
            const auto scenario = extract_scenario(inst.model, *inst.driver, rho);
            Rng aux(inst.seed ^ 0xfeedULL);
            std::vector<TerminalClaim> samples;
            for (int j = 0; j < 20; ++j) {
                TerminalClaim s{std::vector<double>(inst.model.path_count())};
                for (double& v : s.values) v = aux.uniform(-0.9, 0.9);
                samples.push_back(std::move(s));
            }
            const int t = static_cast<int>(aux.below(inst.model.steps() + 1));
            worst = std::min(worst, subdifferential_test(inst.model, scenario, rho, samples, t));
        }
        c.detail << "  " << to_string(kind) << ": min violation = " << fmt(worst) << "\n";
        c.require(worst >= -1e-9, to_string(kind) + " subgradient inequality below -1e-9");
    }
    return c;
}

} // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<std::string, std::function<Criterion()>>> criteria{
        {1, {"linear ambiguous-discount risk measure", criterion_1}},
        {2, {"entropic exactness and refinement", criterion_2}},
        {3, {"dual-representation chain", criterion_3}},
        {4, {"cross-method subdifferential CAR", criterion_4}},
        {5, {"CAR identity and audacity", criterion_5}},
        {6, {"axiom suites", criterion_6}},
        {7, {"comparison theorems", criterion_7}},
        {8, {"gradient CAR vs finite differences", criterion_8}},
        {9, {"aumann-shapley allocation", criterion_9}},
        {10, {"marginal allocation", criterion_10}},
        {11, {"cserm decomposition and kappa variants", criterion_11}},
        {12, {"subdifferential membership", criterion_12}}};

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    if (selected.empty()) {
        for (const auto& [number, entry] : criteria) selected.push_back(number);
    }

    int failures = 0;
    for (int number : selected) {
        const auto it = criteria.find(number);
        if (it == criteria.end()) {
            std::cout << "[FAIL] criterion " << number << ": unknown\n";
            ++failures;
            continue;
        }
        Criterion result;
        try {
            result = it->second.second();
        } catch (const std::exception& err) {
            result.ok = false;
            result.detail << "  EXCEPTION: " << err.what() << "\n";
        }
        std::cout << (result.ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": "
                  << it->second.first << "\n"
                  << result.detail.str();
        if (!result.ok) ++failures;
    }
    std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: " + std::to_string(failures) + " criteria failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
