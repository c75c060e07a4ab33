#include "risklat/bsde.hpp"

#include <cmath>
#include <string>

namespace risklat {

namespace {

struct StepResult {
    double y = 0.0;
    int iterations = 0;
};

// Solve y = e + g(k, s, y, z) * delta for one state. The contraction
// C_y * delta < 1 is checked by the caller; iterate to the machine fixed
// point and judge failure against the documented 1e-12 contract.
StepResult implicit_step(const Driver& driver, int k, std::size_t s, double e, double z,
                         double delta) {
    if (!driver.flags().depends_on_y) {
        return {e + driver.evaluate(k, s, e, z) * delta, 1};
    }
    double y = e;
    for (int it = 1; it <= kPicardMaxIterations; ++it) {
        const double next = e + driver.evaluate(k, s, y, z) * delta;
        const double change = std::abs(next - y);
        const double scale = std::max(1.0, std::abs(next));
        if (change <= 1e-15 * scale || next == y) {
            return {next, it};
        }
        if (it == kPicardMaxIterations && change > kPicardTolerance * scale) {
            throw NumericError("bsde: Picard stalled at step " + std::to_string(k) + ", state " +
                               std::to_string(s) + ", residual " + std::to_string(change));
        }
        y = next;
    }
    return {y, kPicardMaxIterations};
}

void check_contraction(const LatticeModel& model, const Driver& driver) {
    const double cy = driver.lipschitz_y();
    if (!(cy * model.delta() < 1.0)) {
        throw StepSizeError("bsde: contraction C_y * delta = " +
                            std::to_string(cy * model.delta()) +
                            " >= 1; increase the number of steps N");
    }
}

BsdeSolution backward_from(const LatticeModel& model, DriverPtr driver,
                           std::vector<double> start_values, int start_step) {
    check_contraction(model, *driver);
    if (start_values.size() != model.states_at(start_step)) {
        throw IndexError("bsde: terminal has " + std::to_string(start_values.size()) +
                         " values, expected " + std::to_string(model.states_at(start_step)));
    }
    for (double v : start_values) {
        if (!std::isfinite(v)) throw NumericError("bsde: non-finite terminal value");
    }

    BsdeSolution sol{model, driver, TerminalClaim{start_values},
                     AdaptedField(model, start_step),
                     start_step > 0 ? AdaptedField(model, start_step - 1) : AdaptedField{}, 0};
    auto top = sol.y.at(start_step);
    std::copy(start_values.begin(), start_values.end(), top.begin());

    const double delta = model.delta();
    for (int k = start_step - 1; k >= 0; --k) {
        auto next = sol.y.at(k + 1);
        auto yk = sol.y.at(k);
        auto zk = sol.z.at(k);
        const double denom = 2.0 * model.sqrt_delta();
        for (std::size_t s = 0; s < yk.size(); ++s) {
            const auto [down, up] = model.children(k, s);
            const double e = 0.5 * (next[up] + next[down]);
            const double z = (next[up] - next[down]) / denom;
            const auto step = implicit_step(*driver, k, s, e, z, delta);
            yk[s] = step.y;
            zk[s] = z;
            sol.picard_iterations_max = std::max(sol.picard_iterations_max, step.iterations);
        }
    }
    return sol;
}

} // namespace

BsdeSolution solve_bsde(const LatticeModel& model, DriverPtr driver, TerminalClaim terminal) {
    return backward_from(model, std::move(driver), std::move(terminal.values), model.steps());
}

BsdeSolution risk_measure(const LatticeModel& model, DriverPtr driver,
                          const TerminalClaim& claim) {
    return solve_bsde(model, std::move(driver), claim_scale(claim, -1.0));
}

BsdeSolution solve_bsde_segment(const LatticeModel& model, DriverPtr driver,
                                std::vector<double> values_at_t, int t_step) {
    if (t_step < 0 || t_step > model.steps()) {
        throw IndexError("bsde: segment step outside 0..N");
    }
    return backward_from(model, std::move(driver), std::move(values_at_t), t_step);
}

double flow_consistency_check(const BsdeSolution& solution, int s_step, int t_step) {
    if (s_step > t_step) throw IndexError("flow check: need s <= t");
    const auto at_t = solution.y.at(t_step);
    const auto resolved = solve_bsde_segment(solution.model, solution.driver,
                                             std::vector<double>(at_t.begin(), at_t.end()), t_step);
    double gap = 0.0;
    auto lhs = solution.y.at(s_step);
    auto rhs = resolved.y.at(s_step);
    for (std::size_t s = 0; s < lhs.size(); ++s) {
        gap = std::max(gap, std::abs(lhs[s] - rhs[s]));
    }
    return gap;
}

} // namespace risklat
