#include "risklat/scenario.hpp"

#include <cmath>
#include <string>

namespace risklat {

namespace {

double step_factor(double beta, double delta, DiscountRule rule) {
    return rule == DiscountRule::PerStepExp ? std::exp(-beta * delta) : 1.0 / (1.0 + beta * delta);
}

// Conjugate values along the scenario, one row per step. Infinite entries
// make the scenario's penalty undefined.
AdaptedField conjugate_along(const LatticeModel& model, const Driver& driver,
                             const Scenario& scenario) {
    AdaptedField g(model, model.steps() - 1);
    for (int k = 0; k < model.steps(); ++k) {
        auto b = scenario.beta.at(k);
        auto m = scenario.mu.at(k);
        auto out = g.at(k);
        for (std::size_t s = 0; s < out.size(); ++s) {
            const double value = driver.conjugate(k, s, b[s], m[s]);
            if (!std::isfinite(value)) {
                throw ScenarioInfeasibleError("penalty: conjugate is +inf at step " +
                                              std::to_string(k) + ", state " + std::to_string(s));
            }
            out[s] = value;
        }
    }
    return g;
}

// Per-path products of step factors over steps i..k-1 (path layout).
std::vector<double> per_path_discount(const LatticeModel& model, const AdaptedField& beta, int i,
                                      int k, DiscountRule rule) {
    std::vector<double> d(model.path_count(), 1.0);
    for (int m = i; m < k; ++m) {
        auto b = beta.at(m);
        for (std::size_t path = 0; path < d.size(); ++path) {
            d[path] *= step_factor(b[model.prefix(path, m)], model.delta(), rule);
        }
    }
    return d;
}

void require_path(const LatticeModel& model, const char* op) {
    if (model.layout() != Layout::Path) {
        throw LayoutError(std::string(op) + ": discounts are path-dependent, need path layout");
    }
}

} // namespace

Scenario extract_scenario(const LatticeModel& model, const Driver& driver,
                          const BsdeSolution& rho) {
    const int n = model.steps();
    Scenario sc;
    sc.beta = AdaptedField(model, n - 1);
    sc.mu = AdaptedField(model, n - 1);
    for (int k = 0; k < n; ++k) {
        auto y = rho.y.at(k);
        auto z = rho.z.at(k);
        auto b = sc.beta.at(k);
        auto m = sc.mu.at(k);
        for (std::size_t s = 0; s < y.size(); ++s) {
            const ScenarioPoint pt = driver.select_scenario(k, s, y[s], z[s]);
            if (pt.beta < 0.0) {
                throw ScenarioInfeasibleError("scenario: negative beta at step " +
                                              std::to_string(k) + ", state " + std::to_string(s));
            }
            b[s] = pt.beta;
            m[s] = pt.mu;
        }
    }
    sc.tilt = tilt_probabilities(model, sc.mu);
    return sc;
}

double tilt_load(const LatticeModel& model, const Driver& driver, const BsdeSolution& rho) {
    double load = 0.0;
    for (int k = 0; k < model.steps(); ++k) {
        auto y = rho.y.at(k);
        auto z = rho.z.at(k);
        for (std::size_t s = 0; s < y.size(); ++s) {
            const ScenarioPoint pt = driver.select_scenario(k, s, y[s], z[s]);
            load = std::max(load, std::abs(pt.mu) * model.sqrt_delta());
        }
    }
    return load;
}

std::vector<double> discount_between(const LatticeModel& model, const Scenario& scenario, int i,
                                     int k, DiscountRule rule) {
    if (i > k) {
        throw IndexError("discount_between: need i <= k, got i = " + std::to_string(i) +
                         ", k = " + std::to_string(k));
    }
    if (model.layout() == Layout::Node) {
        if (!scenario.beta.deterministic_in_state()) {
            throw LayoutError("discount_between: state-dependent beta needs path layout");
        }
        double d = 1.0;
        for (int m = i; m < k; ++m) {
            d *= step_factor(scenario.beta.at(m)[0], model.delta(), rule);
        }
        return std::vector<double>(model.states_at(k), d);
    }
    std::vector<double> out(model.states_at(k), 1.0);
    for (int m = i; m < k; ++m) {
        auto b = scenario.beta.at(m);
        for (std::size_t s = 0; s < out.size(); ++s) {
            out[s] *= step_factor(b[model.prefix(s, m)], model.delta(), rule);
        }
    }
    return out;
}

SubProbabilityDensity scenario_density(const LatticeModel& model, const Scenario& scenario,
                                       int t_index, DiscountRule rule) {
    require_path(model, "scenario_density");
    SubProbabilityDensity density;
    density.t_index = t_index;
    density.values = pathwise_density(model, scenario.tilt, t_index);
    const auto discount = per_path_discount(model, scenario.beta, t_index, model.steps(), rule);
    for (std::size_t path = 0; path < density.values.size(); ++path) {
        density.values[path] *= discount[path];
    }
    return density;
}

std::vector<double> penalty_at(const LatticeModel& model, const Driver& driver,
                               const Scenario& scenario, int t_index) {
    require_path(model, "penalty_at");
    const AdaptedField g = conjugate_along(model, driver, scenario);

    // Accumulate sum_k D(t, k+1) G_k delta per path, then reduce under Q^mu.
    std::vector<double> cumulative(model.path_count(), 1.0);
    std::vector<double> sum(model.path_count(), 0.0);
    for (int k = t_index; k < model.steps(); ++k) {
        auto b = scenario.beta.at(k);
        auto gk = g.at(k);
        for (std::size_t path = 0; path < sum.size(); ++path) {
            const std::size_t s = model.prefix(path, k);
            cumulative[path] *= step_factor(b[s], model.delta(), DiscountRule::Implicit);
            sum[path] += cumulative[path] * gk[s] * model.delta();
        }
    }
    return reduce_expectation(model, std::move(sum), model.steps(), t_index, &scenario.tilt);
}

std::vector<double> discounted_tilted_expectation(const LatticeModel& model,
                                                  const Scenario& scenario,
                                                  std::span<const double> terminal_values,
                                                  int t_index) {
    require_path(model, "discounted_tilted_expectation");
    if (terminal_values.size() != model.path_count()) {
        throw IndexError("discounted_tilted_expectation: wrong terminal size");
    }
    std::vector<double> weighted =
        per_path_discount(model, scenario.beta, t_index, model.steps(), DiscountRule::Implicit);
    for (std::size_t path = 0; path < weighted.size(); ++path) {
        weighted[path] *= terminal_values[path];
    }
    return reduce_expectation(model, std::move(weighted), model.steps(), t_index, &scenario.tilt);
}

double dual_check(const LatticeModel& model, const Driver& driver, const Scenario& scenario,
                  const BsdeSolution& rho, int t_index) {
    const auto expectation =
        discounted_tilted_expectation(model, scenario, rho.terminal.values, t_index);
    const auto penalty = penalty_at(model, driver, scenario, t_index);
    auto states = rho.y.at(t_index);
    double gap = 0.0;
    for (std::size_t s = 0; s < states.size(); ++s) {
        gap = std::max(gap, std::abs(states[s] - (expectation[s] - penalty[s])));
    }
    return gap;
}

double subdifferential_test(const LatticeModel& model, const Scenario& scenario,
                            const BsdeSolution& rho_y, std::span<const TerminalClaim> x_samples,
                            int t_index) {
    require_path(model, "subdifferential_test");
    const TerminalClaim claim_y = claim_scale(rho_y.terminal, -1.0);
    auto rho_y_t = rho_y.y.at(t_index);

    double worst = 0.0;
    for (const TerminalClaim& x : x_samples) {
        const BsdeSolution rho_x = risk_measure(model, rho_y.driver, x);
        const TerminalClaim diff = claim_add(x, claim_y, -1.0); // X - Y
        std::vector<double> neg_diff(diff.values.size());
        for (std::size_t p = 0; p < neg_diff.size(); ++p) neg_diff[p] = -diff.values[p];
        const auto linear = discounted_tilted_expectation(model, scenario, neg_diff, t_index);
        auto rho_x_t = rho_x.y.at(t_index);
        for (std::size_t s = 0; s < rho_x_t.size(); ++s) {
            worst = std::min(worst, rho_x_t[s] - rho_y_t[s] - linear[s]);
        }
    }
    return worst;
}

} // namespace risklat
