#pragma once

#include "risklat/bsde.hpp"

namespace risklat {

/// Per-step discount factor convention for exp(-int beta du).
///   PerStepExp: exp(-beta_k delta), the literal discretization of the display.
///   Implicit:   1/(1 + beta_k delta), the factor the implicit BSDE step
///               actually telescopes into; the dual-representation and
///               allocation identities hold to roundoff only under this one.
enum class DiscountRule { PerStepExp, Implicit };

/// Optimal scenario (beta, mu) read off a solved risk measure along
/// (rho_k, Z_k), with the measure tilt induced by mu.
struct Scenario {
    AdaptedField beta; // steps 0..N-1, >= 0
    AdaptedField mu;   // steps 0..N-1
    MeasureTilt tilt;  // built from mu
};

/// Pathwise density L(T, t) of the sub-probability D_t Q^mu for one anchor.
struct SubProbabilityDensity {
    int t_index = 0;
    std::vector<double> values; // per path, >= 0
};

/// Subgradient selection at every (step, state) of the solved measure.
Scenario extract_scenario(const LatticeModel& model, const Driver& driver,
                          const BsdeSolution& rho);

/// max |mu_k| sqrt(delta) over the selected scenario; above 1 the optimal
/// drift cannot be represented as a lattice tilt.
double tilt_load(const LatticeModel& model, const Driver& driver, const BsdeSolution& rho);

/// D(i, k): product of per-step discount factors over steps i..k-1, one value
/// per step-k state. D(i, i) = 1; multiplicative across splits. Node layout
/// requires beta deterministic in state.
std::vector<double> discount_between(const LatticeModel& model, const Scenario& scenario, int i,
                                     int k, DiscountRule rule = DiscountRule::PerStepExp);

/// L(T, t) = D(t, N) x pathwise likelihood ratio of the mu-tilt from step t.
/// Conditional mean given F_t equals E[D(t, N)|F_t] (= 1 when beta == 0).
SubProbabilityDensity scenario_density(const LatticeModel& model, const Scenario& scenario,
                                       int t_index, DiscountRule rule = DiscountRule::PerStepExp);

/// Penalty c_t = E_{Q^mu}[ sum_k D(t, k+1) G(k, beta_k, mu_k) delta | F_t ],
/// one value per step-t state, always >= 0. Scheme-consistent weights; an
/// infinite conjugate along the scenario is a scenario-infeasible error.
std::vector<double> penalty_at(const LatticeModel& model, const Driver& driver,
                               const Scenario& scenario, int t_index);

/// E_{Q^mu}[ D(t, N) * values | F_t ] with scheme-consistent discounting;
/// the workhorse of the dual representation and of every allocation rule.
std::vector<double> discounted_tilted_expectation(const LatticeModel& model,
                                                  const Scenario& scenario,
                                                  std::span<const double> terminal_values,
                                                  int t_index);

/// max_state | rho_t - ( E_{Q^mu}[D_t (-X) | F_t] - c_t ) | at the anchor.
double dual_check(const LatticeModel& model, const Driver& driver, const Scenario& scenario,
                  const BsdeSolution& rho, int t_index);

/// min over samples and step-t states of
///   rho_t(X) - rho_t(Y) - E_{lambda^Y}[-(X - Y) | F_t],
/// nonnegative when lambda^Y = D_t Q^mu belongs to the subdifferential at Y.
double subdifferential_test(const LatticeModel& model, const Scenario& scenario,
                            const BsdeSolution& rho_y, std::span<const TerminalClaim> x_samples,
                            int t_index);

} // namespace risklat
