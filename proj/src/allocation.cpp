#include "risklat/allocation.hpp"

#include <cmath>
#include <string>

#include "risklat/quadrature.hpp"

namespace risklat {

namespace {

double implicit_factor(double beta, double delta) { return 1.0 / (1.0 + beta * delta); }

// (beta, mu) along a solved measure, without building the measure tilt;
// rules that never tilt (generalized marginal, CSERM) stay usable even when
// the optimal drift is outside the lattice tilt bound.
std::pair<AdaptedField, AdaptedField> select_fields(const LatticeModel& model,
                                                    const Driver& driver,
                                                    const BsdeSolution& rho) {
    AdaptedField beta(model, model.steps() - 1);
    AdaptedField mu(model, model.steps() - 1);
    for (int k = 0; k < model.steps(); ++k) {
        auto y = rho.y.at(k);
        auto z = rho.z.at(k);
        auto b = beta.at(k);
        auto m = mu.at(k);
        for (std::size_t s = 0; s < y.size(); ++s) {
            const ScenarioPoint pt = driver.select_scenario(k, s, y[s], z[s]);
            b[s] = pt.beta;
            m[s] = pt.mu;
        }
    }
    return {std::move(beta), std::move(mu)};
}

double max_abs_gap(const std::vector<std::vector<double>>& a,
                   const std::vector<std::vector<double>>& b) {
    double gap = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t s = 0; s < a[t].size(); ++s) {
            gap = std::max(gap, std::abs(a[t][s] - b[t][s]));
        }
    }
    return gap;
}

double terminal_gap(const LatticeModel& model, const std::vector<std::vector<double>>& values,
                    const TerminalClaim& x) {
    double gap = 0.0;
    const auto& last = values[static_cast<std::size_t>(model.steps())];
    for (std::size_t s = 0; s < last.size(); ++s) {
        gap = std::max(gap, std::abs(last[s] + x.values[s]));
    }
    return gap;
}

std::vector<std::vector<double>> field_values(const LatticeModel& model, const AdaptedField& y) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(model.steps()) + 1);
    for (int t = 0; t <= model.steps(); ++t) {
        auto row = y.at(t);
        out[static_cast<std::size_t>(t)].assign(row.begin(), row.end());
    }
    return out;
}

std::vector<std::vector<double>> field_difference(const LatticeModel& model, const AdaptedField& a,
                                                  const AdaptedField& b) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(model.steps()) + 1);
    for (int t = 0; t <= model.steps(); ++t) {
        auto ra = a.at(t);
        auto rb = b.at(t);
        auto& row = out[static_cast<std::size_t>(t)];
        row.resize(ra.size());
        for (std::size_t s = 0; s < ra.size(); ++s) row[s] = ra[s] - rb[s];
    }
    return out;
}

AdaptedField conjugate_field(const LatticeModel& model, const Driver& driver,
                             const AdaptedField& beta, const AdaptedField& mu) {
    AdaptedField g(model, model.steps() - 1);
    for (int k = 0; k < model.steps(); ++k) {
        auto b = beta.at(k);
        auto m = mu.at(k);
        auto out = g.at(k);
        for (std::size_t s = 0; s < out.size(); ++s) {
            const double value = driver.conjugate(k, s, b[s], m[s]);
            if (!std::isfinite(value)) {
                throw ScenarioInfeasibleError("allocation: conjugate +inf at step " +
                                              std::to_string(k) + ", state " + std::to_string(s));
            }
            out[s] = value;
        }
    }
    return g;
}

// Anchor-family driver of the subdifferential BSVIE. weight_row(i, k) is the
// F_k-measurable discount D(i, k+1) through step k inclusive; the Paper
// variant flips the sign of both the penalty and the drift terms.
class SubVolterraDriver final : public VolterraDriver {
public:
    SubVolterraDriver(const LatticeModel& model, const AdaptedField& beta, AdaptedField mu,
                      AdaptedField conjugates, SignVariant variant)
        : mu_(std::move(mu)), g_(std::move(conjugates)),
          sign_(variant == SignVariant::Corrected ? -1.0 : 1.0) {
        const int n = model.steps();
        const bool path = model.layout() == Layout::Path;
        weights_.resize(static_cast<std::size_t>(n));
        for (int anchor = 0; anchor < n; ++anchor) {
            auto& rows = weights_[static_cast<std::size_t>(anchor)];
            rows.resize(static_cast<std::size_t>(n - anchor));
            std::vector<double> running; // D(anchor, k+1) on step-k states
            for (int k = anchor; k < n; ++k) {
                auto b = beta.at(k);
                std::vector<double> next(model.states_at(k));
                for (std::size_t s = 0; s < next.size(); ++s) {
                    double prior = 1.0;
                    if (k > anchor) {
                        // node layout reaches here only with deterministic beta
                        prior = path ? running[model.prefix(s, k - 1)] : running[0];
                    }
                    next[s] = prior * implicit_factor(b[s], model.delta());
                }
                rows[static_cast<std::size_t>(k - anchor)] = next;
                running = std::move(next);
            }
        }
    }

    double evaluate(int anchor, int k, std::size_t state, double z) const override {
        const double w = weight_row(anchor, k)[state];
        return sign_ * (w * g_.at(k)[state] + mu_.at(k)[state] * z);
    }
    std::string name() const override { return "subdifferential-car"; }

    const std::vector<double>& weight_row(int anchor, int k) const {
        return weights_[static_cast<std::size_t>(anchor)][static_cast<std::size_t>(k - anchor)];
    }

private:
    AdaptedField mu_;
    AdaptedField g_;
    double sign_;
    std::vector<std::vector<std::vector<double>>> weights_;
};

struct SubFamily {
    std::shared_ptr<SubVolterraDriver> vdriver;
    TerminalFamily family;
    BsdeSolution rho;
};

// Solve the aggregate, select its scenario fields and assemble the anchor
// family phi(t_i) = -D(t_i, N) X with the driver's own discount table.
SubFamily build_sub_family(const LatticeModel& model, const DriverPtr& driver,
                           const TerminalClaim& x, const TerminalClaim& y_aggregate,
                           SignVariant variant) {
    BsdeSolution rho = risk_measure(model, driver, y_aggregate);
    auto [beta, mu] = select_fields(model, *driver, rho);
    if (model.layout() == Layout::Node && !beta.deterministic_in_state()) {
        throw LayoutError("alloc_sub_bsvie: state-dependent discounts need path layout");
    }
    AdaptedField conjugates = conjugate_field(model, *driver, beta, mu);
    auto vdriver = std::make_shared<SubVolterraDriver>(model, beta, std::move(mu),
                                                       std::move(conjugates), variant);

    const int n = model.steps();
    TerminalFamily family;
    family.phi.resize(static_cast<std::size_t>(n) + 1);
    for (int anchor = 0; anchor <= n; ++anchor) {
        TerminalClaim phi{std::vector<double>(model.states_at(n))};
        if (anchor == n) {
            for (std::size_t p = 0; p < phi.values.size(); ++p) phi.values[p] = -x.values[p];
        } else {
            const auto& d = vdriver->weight_row(anchor, n - 1); // D(anchor, N)
            for (std::size_t p = 0; p < phi.values.size(); ++p) {
                const std::size_t s =
                    model.layout() == Layout::Path ? model.prefix(p, n - 1) : 0; // deterministic
                phi.values[p] = -d[s] * x.values[p];
            }
        }
        family.phi[static_cast<std::size_t>(anchor)] = std::move(phi);
    }
    return {std::move(vdriver), std::move(family), std::move(rho)};
}

} // namespace

ScenarioEvaluator::ScenarioEvaluator(const LatticeModel& model, DriverPtr driver,
                                     const TerminalClaim& aggregate, bool with_penalties)
    : model_(&model), driver_(std::move(driver)),
      rho_(risk_measure(model, driver_, aggregate)),
      scenario_(extract_scenario(model, *driver_, rho_)) {
    if (with_penalties) {
        penalties_.resize(static_cast<std::size_t>(model.steps()) + 1);
        for (int t = 0; t <= model.steps(); ++t) {
            penalties_[static_cast<std::size_t>(t)] = penalty_at(model, *driver_, scenario_, t);
        }
    }
}

std::vector<std::vector<double>> ScenarioEvaluator::dual_values(const TerminalClaim& x,
                                                                bool with_penalty) const {
    if (with_penalty && penalties_.empty()) {
        throw CapabilityError("scenario evaluator built without penalties");
    }
    std::vector<double> neg_x(x.values.size());
    for (std::size_t p = 0; p < neg_x.size(); ++p) neg_x[p] = -x.values[p];
    std::vector<std::vector<double>> values(static_cast<std::size_t>(model_->steps()) + 1);
    for (int t = 0; t <= model_->steps(); ++t) {
        auto row = discounted_tilted_expectation(*model_, scenario_, neg_x, t);
        if (with_penalty) {
            const auto& penalty = penalties_[static_cast<std::size_t>(t)];
            for (std::size_t s = 0; s < row.size(); ++s) row[s] -= penalty[s];
        }
        values[static_cast<std::size_t>(t)] = std::move(row);
    }
    return values;
}

AllocationResult alloc_sub_direct(const LatticeModel& model, DriverPtr driver,
                                  const TerminalClaim& x, const TerminalClaim& y_aggregate) {
    const ScenarioEvaluator evaluator(model, std::move(driver), y_aggregate, true);
    AllocationResult result;
    result.rule = "sub";
    result.values = evaluator.dual_values(x, true);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);
    return result;
}

AllocationResult alloc_sub_bsvie(const LatticeModel& model, DriverPtr driver,
                                 const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                 SignVariant variant, bool cross_check, bool retain_z) {
    const BsdeSolution rho = risk_measure(model, driver, y_aggregate);
    const auto [beta, mu] = select_fields(model, *driver, rho);
    if (model.layout() == Layout::Node && !beta.deterministic_in_state()) {
        throw LayoutError("alloc_sub_bsvie: state-dependent discounts need path layout");
    }

    SubVolterraDriver vdriver(model, beta, mu, conjugate_field(model, *driver, beta, mu), variant);

    // phi(t_i) = -D(t_i, N) X; D(i, N) is the driver's weight through step N-1.
    const int n = model.steps();
    TerminalFamily family;
    family.phi.resize(static_cast<std::size_t>(n) + 1);
    for (int anchor = 0; anchor <= n; ++anchor) {
        TerminalClaim phi{std::vector<double>(model.states_at(n))};
        if (anchor == n) {
            for (std::size_t p = 0; p < phi.values.size(); ++p) phi.values[p] = -x.values[p];
        } else {
            const auto& d = vdriver.weight_row(anchor, n - 1);
            for (std::size_t p = 0; p < phi.values.size(); ++p) {
                const std::size_t s =
                    model.layout() == Layout::Path ? model.prefix(p, n - 1) : 0; // deterministic
                phi.values[p] = -d[s] * x.values[p];
            }
        }
        family.phi[static_cast<std::size_t>(anchor)] = std::move(phi);
    }

    BsvieSolution solution = solve_bsvie(model, vdriver, family, retain_z);
    AllocationResult result;
    result.rule = variant == SignVariant::Corrected ? "sub_bsvie" : "sub_bsvie(paper-sign)";
    result.values = solution.diagonal;
    if (retain_z) result.z_triangle = std::move(solution.z_field);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);
    if (cross_check && model.layout() == Layout::Path) {
        const AllocationResult direct = alloc_sub_direct(model, driver, x, y_aggregate);
        result.diagnostics["cross_method_gap"] = max_abs_gap(result.values, direct.values);
    }
    return result;
}

AllocationResult alloc_gradient(const LatticeModel& model, DriverPtr driver,
                                const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                double fd_step) {
    if (!driver->differentiable()) {
        throw CapabilityError("alloc_gradient: driver '" + driver->name() +
                              "' is not differentiable; use alloc_sub_direct");
    }
    const ScenarioEvaluator evaluator(model, driver, y_aggregate, false);
    AllocationResult result;
    result.rule = "gradient";
    result.values = evaluator.dual_values(x, false);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);

    const auto fd = gradient_fd_oracle(model, driver, x, y_aggregate, fd_step);
    result.diagnostics["fd_residual"] = max_abs_gap(result.values, fd);
    return result;
}

std::vector<std::vector<double>> gradient_fd_oracle(const LatticeModel& model, DriverPtr driver,
                                                    const TerminalClaim& x,
                                                    const TerminalClaim& y_aggregate, double h) {
    if (!(h > 0.0)) throw ConfigError("gradient_fd_oracle: h must be positive");
    const BsdeSolution up = risk_measure(model, driver, claim_add(y_aggregate, x, h));
    const BsdeSolution down = risk_measure(model, driver, claim_add(y_aggregate, x, -h));
    std::vector<std::vector<double>> out(static_cast<std::size_t>(model.steps()) + 1);
    for (int t = 0; t <= model.steps(); ++t) {
        auto hi = up.y.at(t);
        auto lo = down.y.at(t);
        auto& row = out[static_cast<std::size_t>(t)];
        row.resize(hi.size());
        for (std::size_t s = 0; s < hi.size(); ++s) row[s] = (hi[s] - lo[s]) / (2.0 * h);
    }
    return out;
}

AllocationResult alloc_marginal(const LatticeModel& model, DriverPtr driver,
                                const TerminalClaim& x, const TerminalClaim& y_aggregate) {
    const BsdeSolution whole = risk_measure(model, driver, y_aggregate);
    const BsdeSolution rest = risk_measure(model, driver, claim_add(y_aggregate, x, -1.0));
    AllocationResult result;
    result.rule = "marginal";
    result.values = field_difference(model, whole.y, rest.y);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);
    return result;
}

AllocationResult alloc_generalized_marginal(const LatticeModel& model, DriverPtr driver,
                                            const TerminalClaim& x,
                                            const TerminalClaim& y_aggregate,
                                            const AdaptedField& lambda) {
    const BsdeSolution whole = risk_measure(model, driver, y_aggregate);
    auto [beta, mu] = select_fields(model, *driver, whole);
    const DriverPtr linear = make_linear_generic(std::move(beta), lambda);
    const BsdeSolution rest = risk_measure(model, linear, claim_add(y_aggregate, x, -1.0));
    AllocationResult result;
    result.rule = "generalized_marginal";
    result.values = field_difference(model, whole.y, rest.y);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);
    return result;
}

std::vector<std::vector<std::vector<double>>>
aumann_shapley_batch(const LatticeModel& model, DriverPtr driver,
                     std::span<const TerminalClaim> sub_units, const TerminalClaim& y_aggregate,
                     int nodes, bool penalized) {
    if (nodes < 2) throw ConfigError("aumann_shapley: need at least 2 quadrature nodes");
    std::vector<std::vector<std::vector<double>>> values(sub_units.size());
    for (auto& per_claim : values) {
        per_claim.resize(static_cast<std::size_t>(model.steps()) + 1);
        for (int t = 0; t <= model.steps(); ++t) {
            per_claim[static_cast<std::size_t>(t)].assign(model.states_at(t), 0.0);
        }
    }
    for (const auto& [node, weight] : gauss_legendre_01(nodes)) {
        std::unique_ptr<ScenarioEvaluator> at_node;
        try {
            at_node = std::make_unique<ScenarioEvaluator>(
                model, driver, claim_scale(y_aggregate, node), penalized);
        } catch (const EngineError& err) {
            throw ScenarioInfeasibleError("aumann_shapley: scenario infeasible at node a = " +
                                          std::to_string(node) + ": " + err.what());
        }
        for (std::size_t i = 0; i < sub_units.size(); ++i) {
            const auto term = at_node->dual_values(sub_units[i], penalized);
            for (int t = 0; t <= model.steps(); ++t) {
                auto& row = values[i][static_cast<std::size_t>(t)];
                const auto& src = term[static_cast<std::size_t>(t)];
                for (std::size_t s = 0; s < row.size(); ++s) row[s] += weight * src[s];
            }
        }
    }
    return values;
}

AllocationResult alloc_aumann_shapley(const LatticeModel& model, DriverPtr driver,
                                      const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                      int nodes, bool penalized, bool with_residual) {
    AllocationResult result;
    result.rule = penalized ? "penalized_aumann_shapley" : "aumann_shapley";
    result.values =
        std::move(aumann_shapley_batch(model, driver, {&x, 1}, y_aggregate, nodes, penalized)[0]);
    if (with_residual) {
        const auto refined =
            aumann_shapley_batch(model, driver, {&x, 1}, y_aggregate, 2 * nodes, penalized);
        result.diagnostics["quadrature_residual"] = max_abs_gap(result.values, refined[0]);
    }
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);
    return result;
}

AllocationResult alloc_cserm(const LatticeModel& model, const TerminalClaim& x,
                             const TerminalClaim& y_aggregate, const CsermParams& params,
                             double fd_step) {
    if (!(params.gamma > 0.0) || !(params.gamma1 > 0.0)) {
        throw ConfigError("cserm: gamma and gamma1 must be positive");
    }
    if (!(params.kappa > 0.0)) {
        throw ConfigError("cserm: kappa must be positive");
    }
    const DriverPtr se_driver = make_cserm(params.beta, params.gamma);
    const DriverPtr g1_driver = make_cserm(params.beta, params.gamma1);
    const BsdeSolution rho_se = risk_measure(model, se_driver, y_aggregate);
    const BsdeSolution rho_g1 = risk_measure(model, g1_driver, y_aggregate);

    // Linearized measure along the aggregate: driver -beta y + kappa Z^{g1} z.
    AdaptedField lambda(model, model.steps() - 1);
    for (int k = 0; k < model.steps(); ++k) {
        auto z = rho_g1.z.at(k);
        auto l = lambda.at(k);
        for (std::size_t s = 0; s < l.size(); ++s) l[s] = params.kappa * z[s];
    }
    const TerminalClaim margin = claim_add(y_aggregate, x, -1.0); // Y - X
    const DriverPtr linear = make_linear_generic(params.beta, std::move(lambda));
    const BsdeSolution rho_nabla = risk_measure(model, linear, margin);

    AllocationResult result;
    result.rule = "cserm";
    result.values = field_difference(model, rho_se.y, rho_nabla.y);
    result.diagnostics["terminal_gap"] = terminal_gap(model, result.values, x);

    const auto fd = gradient_fd_oracle(model, g1_driver, margin, y_aggregate, fd_step);
    result.diagnostics["fd_residual"] = max_abs_gap(field_values(model, rho_nabla.y), fd);
    return result;
}

} // namespace risklat
