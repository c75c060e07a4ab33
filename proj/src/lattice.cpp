#include "risklat/lattice.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace risklat {

namespace {

std::string state_tag(int k, std::size_t state) {
    return "step " + std::to_string(k) + ", state " + std::to_string(state);
}

} // namespace

TimeGrid build_grid(double horizon, int steps) {
    if (!(horizon > 0.0)) {
        throw ConfigError("time grid: horizon must be positive, got " + std::to_string(horizon));
    }
    if (steps < 1) {
        throw ConfigError("time grid: steps must be >= 1, got " + std::to_string(steps));
    }
    TimeGrid grid;
    grid.horizon = horizon;
    grid.steps = steps;
    grid.delta = horizon / static_cast<double>(steps);
    return grid;
}

LatticeModel::LatticeModel(TimeGrid grid, Layout layout)
    : grid_(grid), layout_(layout), sqrt_delta_(std::sqrt(grid.delta)) {
    if (grid_.steps < 1 || !(grid_.delta > 0.0)) {
        throw ConfigError("lattice: invalid time grid");
    }
    if (layout_ == Layout::Path && grid_.steps > kMaxPathSteps) {
        throw ConfigError("lattice: path layout capped at N = " + std::to_string(kMaxPathSteps) +
                          ", got N = " + std::to_string(grid_.steps));
    }
}

std::size_t LatticeModel::states_at(int k) const {
    if (k < 0 || k > grid_.steps) {
        throw IndexError("lattice: step " + std::to_string(k) + " outside 0.." +
                         std::to_string(grid_.steps));
    }
    if (layout_ == Layout::Node) return static_cast<std::size_t>(k) + 1;
    return std::size_t{1} << k;
}

std::size_t LatticeModel::path_count() const {
    if (layout_ != Layout::Path) {
        throw LayoutError("lattice: path_count requires path layout");
    }
    return std::size_t{1} << grid_.steps;
}

double LatticeModel::brownian(int k, std::size_t state) const {
    if (layout_ == Layout::Node) {
        // state = number of up moves j, B = (2j - k) sqrt(delta)
        return (2.0 * static_cast<double>(state) - static_cast<double>(k)) * sqrt_delta_;
    }
    const int ups = std::popcount(state);
    return (2.0 * ups - static_cast<double>(k)) * sqrt_delta_;
}

std::pair<std::size_t, std::size_t> LatticeModel::children(int k, std::size_t state) const {
    if (layout_ == Layout::Node) return {state, state + 1};
    return {state, state + (std::size_t{1} << k)};
}

std::size_t LatticeModel::prefix(std::size_t path, int k) const {
    if (layout_ != Layout::Path) {
        throw LayoutError("lattice: prefix requires path layout");
    }
    return path & ((std::size_t{1} << k) - 1);
}

AdaptedField::AdaptedField(const LatticeModel& model, int last_step) {
    values_.resize(static_cast<std::size_t>(last_step) + 1);
    for (int k = 0; k <= last_step; ++k) {
        values_[static_cast<std::size_t>(k)].assign(model.states_at(k), 0.0);
    }
}

AdaptedField AdaptedField::constant(const LatticeModel& model, int last_step, double value) {
    AdaptedField field(model, last_step);
    for (int k = 0; k <= last_step; ++k) {
        for (double& v : field.mutable_at(k)) v = value;
    }
    return field;
}

std::span<double> AdaptedField::at(int k) {
    return values_.at(static_cast<std::size_t>(k));
}

std::span<const double> AdaptedField::at(int k) const {
    return values_.at(static_cast<std::size_t>(k));
}

bool AdaptedField::deterministic_in_state() const {
    for (const auto& step : values_) {
        for (double v : step) {
            if (v != step.front()) return false;
        }
    }
    return true;
}

double TerminalClaim::bound() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> conditional_expectation(const LatticeModel& model,
                                            std::span<const double> field_next, int k,
                                            const MeasureTilt* tilt) {
    if (field_next.size() != model.states_at(k + 1)) {
        throw IndexError("conditional_expectation: field has " +
                         std::to_string(field_next.size()) + " values, expected " +
                         std::to_string(model.states_at(k + 1)) + " at step " +
                         std::to_string(k + 1));
    }
    const std::size_t n = model.states_at(k);
    std::vector<double> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto [down, up] = model.children(k, s);
        const double p = tilt ? tilt->up_prob.at(k)[s] : 0.5;
        out[s] = p * field_next[up] + (1.0 - p) * field_next[down];
    }
    return out;
}

std::vector<double> martingale_component(const LatticeModel& model,
                                         std::span<const double> field_next, int k) {
    if (field_next.size() != model.states_at(k + 1)) {
        throw IndexError("martingale_component: wrong field size at step " + std::to_string(k + 1));
    }
    const std::size_t n = model.states_at(k);
    const double denom = 2.0 * model.sqrt_delta();
    std::vector<double> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto [down, up] = model.children(k, s);
        out[s] = (field_next[up] - field_next[down]) / denom;
    }
    return out;
}

MeasureTilt tilt_probabilities(const LatticeModel& model, const AdaptedField& theta) {
    if (theta.last_step() < model.steps() - 1) {
        throw IndexError("tilt_probabilities: theta must cover steps 0.." +
                         std::to_string(model.steps() - 1));
    }
    const double sd = model.sqrt_delta();
    MeasureTilt tilt;
    tilt.theta = theta;
    tilt.up_prob = AdaptedField(model, model.steps() - 1);
    for (int k = 0; k < model.steps(); ++k) {
        auto src = theta.at(k);
        auto dst = tilt.up_prob.at(k);
        for (std::size_t s = 0; s < src.size(); ++s) {
            const double scaled = src[s] * sd;
            // Degenerate probabilities at |theta|*sqrt(delta) == 1 are allowed;
            // beyond the bound the branch weights stop being probabilities.
            if (std::abs(scaled) > 1.0 + 1e-12) {
                throw TiltError("tilt: |theta|*sqrt(delta) = " + std::to_string(std::abs(scaled)) +
                                " > 1 at " + state_tag(k, s));
            }
            const double p = 0.5 * (1.0 - scaled);
            dst[s] = std::min(1.0, std::max(0.0, p));
        }
    }
    return tilt;
}

std::vector<double> pathwise_density(const LatticeModel& model, const MeasureTilt& tilt,
                                     int from_step) {
    if (model.layout() != Layout::Path) {
        throw LayoutError("pathwise_density: densities are path-dependent, need path layout");
    }
    if (from_step < 0 || from_step > model.steps()) {
        throw IndexError("pathwise_density: from_step outside 0..N");
    }
    std::vector<double> density(model.path_count(), 1.0);
    for (int k = from_step; k < model.steps(); ++k) {
        auto p = tilt.up_prob.at(k);
        const std::size_t bit = std::size_t{1} << k;
        for (std::size_t path = 0; path < density.size(); ++path) {
            const double pk = p[model.prefix(path, k)];
            density[path] *= (path & bit) ? 2.0 * pk : 2.0 * (1.0 - pk);
        }
    }
    return density;
}

std::vector<double> left_riemann_integral(const LatticeModel& model, const AdaptedField& field,
                                          int i, int k) {
    if (i > k) {
        throw IndexError("left_riemann_integral: need i <= k, got i = " + std::to_string(i) +
                         ", k = " + std::to_string(k));
    }
    if (k > model.steps()) {
        throw IndexError("left_riemann_integral: k outside grid");
    }
    if (model.layout() == Layout::Node && !field.deterministic_in_state()) {
        throw LayoutError("left_riemann_integral: running sums of state-dependent fields are "
                          "path-dependent, need path layout");
    }
    std::vector<double> out(model.states_at(k), 0.0);
    for (int m = i; m < k; ++m) {
        auto vals = field.at(m);
        for (std::size_t s = 0; s < out.size(); ++s) {
            const std::size_t sm = model.layout() == Layout::Path
                                       ? model.prefix(s, m)
                                       : std::size_t{0}; // deterministic per step
            out[s] += model.delta() * vals[sm];
        }
    }
    return out;
}

std::vector<double> reduce_expectation(const LatticeModel& model, std::vector<double> values,
                                       int from_step, int to_step, const MeasureTilt* tilt) {
    if (to_step > from_step) {
        throw IndexError("reduce_expectation: to_step must not exceed from_step");
    }
    for (int k = from_step - 1; k >= to_step; --k) {
        values = conditional_expectation(model, values, k, tilt);
    }
    return values;
}

TerminalClaim claim_constant(const LatticeModel& model, double value) {
    return {std::vector<double>(model.states_at(model.steps()), value)};
}

TerminalClaim claim_brownian(const LatticeModel& model) {
    const int n = model.steps();
    TerminalClaim claim{std::vector<double>(model.states_at(n))};
    for (std::size_t s = 0; s < claim.values.size(); ++s) {
        claim.values[s] = model.brownian(n, s);
    }
    return claim;
}

TerminalClaim claim_scale(const TerminalClaim& claim, double factor) {
    TerminalClaim out = claim;
    for (double& v : out.values) v *= factor;
    return out;
}

TerminalClaim claim_add(const TerminalClaim& a, const TerminalClaim& b, double weight_b) {
    if (a.values.size() != b.values.size()) {
        throw IndexError("claim_add: shape mismatch");
    }
    TerminalClaim out = a;
    for (std::size_t s = 0; s < out.values.size(); ++s) out.values[s] += weight_b * b.values[s];
    return out;
}

TerminalClaim lift_to_claim(const LatticeModel& model, std::span<const double> values_at_t,
                            int t_index) {
    if (model.layout() != Layout::Path) {
        throw LayoutError("lift_to_claim: needs path layout");
    }
    if (values_at_t.size() != model.states_at(t_index)) {
        throw IndexError("lift_to_claim: wrong value count for step " + std::to_string(t_index));
    }
    TerminalClaim claim{std::vector<double>(model.path_count())};
    for (std::size_t path = 0; path < claim.values.size(); ++path) {
        claim.values[path] = values_at_t[model.prefix(path, t_index)];
    }
    return claim;
}

} // namespace risklat
