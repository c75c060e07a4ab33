#pragma once

#include "risklat/drivers.hpp"
#include "risklat/lattice.hpp"

namespace risklat {

/// Adapted pair (Y, Z) from backward induction. Y_N is the terminal claim;
/// each earlier step satisfies Y_k = E[Y_{k+1}|F_k] + g(t_k, Y_k, Z_k) delta
/// with Z_k the lattice martingale component of Y_{k+1}.
struct BsdeSolution {
    LatticeModel model;
    DriverPtr driver;
    TerminalClaim terminal;
    AdaptedField y; // steps 0..N
    AdaptedField z; // steps 0..N-1
    int picard_iterations_max = 0;
};

inline constexpr double kPicardTolerance = 1e-12;
inline constexpr int kPicardMaxIterations = 100;

/// Implicit-in-y, explicit-in-z scheme. Requires the Picard contraction
/// C_y * delta < 1; y-independent drivers step explicitly.
BsdeSolution solve_bsde(const LatticeModel& model, DriverPtr driver, TerminalClaim terminal);

/// rho_t(X) = Y_t of the BSDE with terminal -X; rho_T(X) = -X exactly.
BsdeSolution risk_measure(const LatticeModel& model, DriverPtr driver, const TerminalClaim& claim);

/// Backward induction restarted at step t with given F_t-measurable values.
/// Produces fields on steps 0..t. Shared by the flow check and the harness.
BsdeSolution solve_bsde_segment(const LatticeModel& model, DriverPtr driver,
                                std::vector<double> values_at_t, int t_step);

/// Time-consistency gap max_state |rho_s(X) - rho_s(-rho_t(X))|; zero up to
/// Picard residuals because both sides run the same recursion on [s, t].
double flow_consistency_check(const BsdeSolution& solution, int s_step, int t_step);

} // namespace risklat
