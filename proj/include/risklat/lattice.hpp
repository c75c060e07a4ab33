#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "risklat/errors.hpp"

namespace risklat {

/// Uniform partition of [0, T] into N steps of length delta = T/N.
struct TimeGrid {
    double horizon = 0.0; // T
    int steps = 0;        // N
    double delta = 0.0;   // T / N

    double time(int k) const { return delta * static_cast<double>(k); }
};

/// build_grid validates T > 0, N >= 1 and fills delta.
TimeGrid build_grid(double horizon, int steps);

enum class Layout {
    Node, // recombining: step k has k+1 states, state j = number of up moves
    Path  // full histories: step k has 2^k states, bit m of the index = up/down at step m
};

/// Discrete Brownian scaffold: increments of +-sqrt(delta), each with base
/// probability 1/2. Node layout stores O(N^2) states and supports Markov
/// data; path layout stores 2^N histories (capped at N = 20) and supports
/// path-dependent objects such as discount factors and densities.
class LatticeModel {
public:
    static constexpr int kMaxPathSteps = 20;

    LatticeModel(TimeGrid grid, Layout layout);

    const TimeGrid& grid() const { return grid_; }
    Layout layout() const { return layout_; }
    int steps() const { return grid_.steps; }
    double delta() const { return grid_.delta; }
    double sqrt_delta() const { return sqrt_delta_; }

    /// Number of distinct states observable at step k.
    std::size_t states_at(int k) const;

    /// Number of full histories (path layout only).
    std::size_t path_count() const;

    /// Brownian value B_{t_k} at a step-k state.
    double brownian(int k, std::size_t state) const;

    /// Successor states at step k+1 of a step-k state: (down, up).
    std::pair<std::size_t, std::size_t> children(int k, std::size_t state) const;

    /// State at step k on the history through the given terminal state.
    /// Node layout is not invertible this way; path layout truncates bits.
    std::size_t prefix(std::size_t path, int k) const;

private:
    TimeGrid grid_;
    Layout layout_;
    double sqrt_delta_;
};

/// Scalar process adapted to the lattice filtration: one value per state
/// per step, for steps first_step()..last_step().
class AdaptedField {
public:
    AdaptedField() = default;
    AdaptedField(const LatticeModel& model, int last_step); // zeros on 0..last_step

    static AdaptedField constant(const LatticeModel& model, int last_step, double value);

    int last_step() const { return static_cast<int>(values_.size()) - 1; }
    std::span<double> at(int k);
    std::span<const double> at(int k) const;
    std::vector<double>& mutable_at(int k) { return values_.at(static_cast<std::size_t>(k)); }

    /// True when every step's values are equal across states (deterministic in time).
    bool deterministic_in_state() const;

private:
    std::vector<std::vector<double>> values_;
};

/// F_T-measurable claim: one value per terminal state (node) or per path (path).
struct TerminalClaim {
    std::vector<double> values;

    double bound() const; // max absolute value
};

/// Per-step drift field theta with the induced up-probabilities
/// p_k = (1 - theta_k * sqrt(delta)) / 2. Obtained from tilt_probabilities.
struct MeasureTilt {
    AdaptedField theta;   // steps 0..N-1
    AdaptedField up_prob; // same support
};

/// One-step conditional expectation: values at step k+1 -> values at step k.
/// The optional tilt reweights the up/down branch; absent means base measure.
std::vector<double> conditional_expectation(const LatticeModel& model,
                                            std::span<const double> field_next, int k,
                                            const MeasureTilt* tilt = nullptr);

/// Lattice martingale representation: Z_k = E[V_{k+1} xi_k | F_k] / delta
/// = (V_up - V_down) / (2 sqrt(delta)), under the base measure.
std::vector<double> martingale_component(const LatticeModel& model,
                                         std::span<const double> field_next, int k);

/// Builds the measure tilt for drift theta. Feasibility: |theta|*sqrt(delta) <= 1
/// (degenerate probabilities 0/1 allowed at the boundary); beyond that the
/// offending step/state is reported. One tilted increment has mean -theta_k*delta.
MeasureTilt tilt_probabilities(const LatticeModel& model, const AdaptedField& theta);

/// Per-path likelihood ratio of the tilted measure w.r.t. the base measure over
/// steps from_step..N-1: product of 2*p_k (up moves) and 2*(1-p_k) (down moves).
/// Path layout only. Conditional mean given F_{from_step} is 1.
std::vector<double> pathwise_density(const LatticeModel& model, const MeasureTilt& tilt,
                                     int from_step);

/// Left-endpoint Riemann sum delta * sum_{m=i}^{k-1} field_m along each history;
/// returns one value per step-k state. Node layout requires the field to be
/// deterministic in state (the running sum is path-dependent otherwise).
std::vector<double> left_riemann_integral(const LatticeModel& model, const AdaptedField& field,
                                          int i, int k);

/// E^{tilt}[values_at_from | F_t]: iterated (tilted) conditional expectations.
/// With tilt == nullptr this is the base-measure tower reduction.
std::vector<double> reduce_expectation(const LatticeModel& model, std::vector<double> values,
                                       int from_step, int to_step,
                                       const MeasureTilt* tilt = nullptr);

// Claim arithmetic used throughout the allocation rules.
TerminalClaim claim_constant(const LatticeModel& model, double value);
TerminalClaim claim_brownian(const LatticeModel& model); // X = B_T
TerminalClaim claim_scale(const TerminalClaim& claim, double factor);
TerminalClaim claim_add(const TerminalClaim& a, const TerminalClaim& b, double weight_b = 1.0);

/// Lifts F_t-measurable values (one per step-t state) to a terminal claim,
/// constant on the sub-tree hanging off each step-t state. Path layout.
TerminalClaim lift_to_claim(const LatticeModel& model, std::span<const double> values_at_t,
                            int t_index);

} // namespace risklat
