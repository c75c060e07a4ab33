#pragma once

#include <map>
#include <string>

#include "risklat/bsvie.hpp"
#include "risklat/scenario.hpp"

namespace risklat {

/// Sign convention of the subdifferential-CAR Volterra driver. The displayed
/// bracket D_{t,s}[-g - beta rho - mu Z^rho] + mu Z equals +D G + mu z, which
/// contradicts the explicit discounted-expectation formula; expanding the
/// tilted Brownian integral gives -D G - mu z. Corrected is the default; the
/// Paper variant stays available to demonstrate the discrepancy.
enum class SignVariant { Corrected, Paper };

/// Value field t -> Lambda_t(X, Y) per step-t state, plus rule diagnostics
/// (dual gaps, quadrature and finite-difference residuals, cross-method gaps).
/// BSVIE rules can retain the triangular field Z(t_i, t_k), k >= i.
struct AllocationResult {
    std::string rule;
    std::vector<std::vector<double>> values; // [t][state at step t]
    std::vector<std::vector<std::vector<double>>> z_triangle; // [i][k - i][state at k]
    std::map<std::string, double> diagnostics;
};

/// One aggregate's solved measure, optimal scenario and per-anchor penalties,
/// reusable across many sub-units. Path layout.
class ScenarioEvaluator {
public:
    ScenarioEvaluator(const LatticeModel& model, DriverPtr driver,
                      const TerminalClaim& aggregate, bool with_penalties = true);

    /// E_{Q^mu}[D(t, N)(-x) | F_t] minus (optionally) c_t, at every anchor.
    std::vector<std::vector<double>> dual_values(const TerminalClaim& x,
                                                 bool with_penalty) const;

    const BsdeSolution& rho() const { return rho_; }
    const Scenario& scenario() const { return scenario_; }
    const std::vector<std::vector<double>>& penalties() const { return penalties_; }

private:
    const LatticeModel* model_;
    DriverPtr driver_;
    BsdeSolution rho_;
    Scenario scenario_;
    std::vector<std::vector<double>> penalties_; // [t][state at t]; empty if skipped
};

/// Subdifferential CAR from the explicit dual form:
/// Lambda_t = E_{Q^mu}[D_t (-X) | F_t] - c_t along the aggregate's scenario.
AllocationResult alloc_sub_direct(const LatticeModel& model, DriverPtr driver,
                                  const TerminalClaim& x, const TerminalClaim& y_aggregate);

/// The same CAR as the diagonal of the anchor-family BSVIE with terminal
/// -D(t_i, N) X and driver -D(t_i, k+1) G_k - mu_k z (Corrected). Node layout
/// needs beta deterministic in state. cross_check records the gap to
/// alloc_sub_direct (path layout only).
AllocationResult alloc_sub_bsvie(const LatticeModel& model, DriverPtr driver,
                                 const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                 SignVariant variant = SignVariant::Corrected,
                                 bool cross_check = true, bool retain_z = false);

/// Gradient CAR for differentiable drivers: the exact lattice directional
/// derivative of rho at the aggregate in direction X, computed as the
/// zero-penalty tilted discounted expectation of -X.
AllocationResult alloc_gradient(const LatticeModel& model, DriverPtr driver,
                                const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                double fd_step = 1e-3);

/// Central difference [rho_t(Y + hX) - rho_t(Y - hX)] / (2h) per step/state.
std::vector<std::vector<double>> gradient_fd_oracle(const LatticeModel& model, DriverPtr driver,
                                                    const TerminalClaim& x,
                                                    const TerminalClaim& y_aggregate, double h);

/// Marginal CAR: rho_t(Y) - rho_t(Y - X), exact by construction.
AllocationResult alloc_marginal(const LatticeModel& model, DriverPtr driver,
                                const TerminalClaim& x, const TerminalClaim& y_aggregate);

/// Generalized marginal CAR: rho_t(Y) - rho^lambda_t(Y - X) where rho^lambda
/// solves the linear BSDE with driver -beta^Y_k y + lambda_k z.
AllocationResult alloc_generalized_marginal(const LatticeModel& model, DriverPtr driver,
                                            const TerminalClaim& x,
                                            const TerminalClaim& y_aggregate,
                                            const AdaptedField& lambda);

/// Gauss-Legendre average over the scaling variable a of the scenario value at
/// a*Y, shared across the given sub-units. penalized subtracts c_t(a) per node
/// (the audacious variant). Entry i of the result belongs to sub_units[i].
std::vector<std::vector<std::vector<double>>>
aumann_shapley_batch(const LatticeModel& model, DriverPtr driver,
                     std::span<const TerminalClaim> sub_units, const TerminalClaim& y_aggregate,
                     int nodes, bool penalized);

/// Aumann-Shapley CAR for one sub-unit; with_residual doubles the node count
/// for the quadrature residual diagnostic.
AllocationResult alloc_aumann_shapley(const LatticeModel& model, DriverPtr driver,
                                      const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                      int nodes = 16, bool penalized = false,
                                      bool with_residual = true);

/// Anchor data shared by every CAR of the general Volterra construction:
/// the aggregate's solved measure and scenario, the terminal family
/// -D(t_i, N) X, and the induced subdifferential generator
/// -D(t_i, k+1) G_k - mu_k z together with its solution for X. A custom CAR
/// is a VolterraDriver agreeing with sub_driver on the diagonal argument,
/// solved against `terminal` via solve_bsvie.
struct CarConstruction {
    BsdeSolution rho;
    Scenario scenario;
    TerminalFamily terminal;
    std::shared_ptr<const VolterraDriver> sub_driver;
    BsvieSolution sub_reference;
};

CarConstruction car_construction(const LatticeModel& model, DriverPtr driver,
                                 const TerminalClaim& x, const TerminalClaim& y_aggregate,
                                 SignVariant variant = SignVariant::Corrected);

struct CsermParams {
    AdaptedField beta; // ambiguous rate, >= 0 bounded
    double gamma = 1.0;
    double gamma1 = 1.0;
    double kappa = 1.0; // linearization coefficient; 1/gamma1 matches the FD oracle
};

/// CSERM CAR: Lambda_t = rho^SE_t(Y) - rho^nabla_t(Y - X), with rho^nabla the
/// linear BSDE with driver -beta_k y + kappa Z^{gamma1}_k z along rho^{gamma1}(Y).
/// Diagnostic compares rho^nabla against the central-difference derivative of
/// rho^{gamma1} at Y in direction Y - X.
AllocationResult alloc_cserm(const LatticeModel& model, const TerminalClaim& x,
                             const TerminalClaim& y_aggregate, const CsermParams& params,
                             double fd_step = 1e-3);

} // namespace risklat
