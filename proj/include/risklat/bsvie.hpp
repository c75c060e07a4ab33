#pragma once

#include "risklat/bsde.hpp"

namespace risklat {

/// Anchor-indexed terminal data phi(t_i), each F_T-measurable.
struct TerminalFamily {
    std::vector<TerminalClaim> phi; // size N+1, anchors 0..N
};

/// Volterra generator g(t_i, t_k, state, z) for k >= i. Deliberately
/// y-independent: the allocation equations only need z-dependence once the
/// underlying risk measure is pre-solved.
class VolterraDriver {
public:
    virtual ~VolterraDriver() = default;
    virtual double evaluate(int anchor, int k, std::size_t state, double z) const = 0;
    virtual std::string name() const { return "volterra"; }
};

/// Diagonal process Y(t_i) plus the two-parameter field Z(t_i, t_k), k >= i,
/// assembled from one independent backward solve per anchor.
struct BsvieSolution {
    // diagonal[i][state at step i] = Y(t_i)
    std::vector<std::vector<double>> diagonal;
    // z_field[i][k - i][state at step k] = Z(t_i, t_k); empty in streaming mode
    std::vector<std::vector<std::vector<double>>> z_field;
    // y_field[i][k - i][state at step k] = eta(t_k; t_i); empty in streaming mode
    std::vector<std::vector<std::vector<double>>> y_field;
    bool retained = false;
};

/// Solves the N+1 anchor BSDEs eta(.; t_i) with terminal phi(t_i) and driver
/// g(t_i, ., .), then reads off Y(t_i) = eta(t_i; t_i), Z(t_i, .) = zeta(.; t_i).
/// retain=false keeps only the diagonal (the O(N^3) field can dominate memory).
BsvieSolution solve_bsvie(const LatticeModel& model, const VolterraDriver& driver,
                          const TerminalFamily& family, bool retain = true);

/// The map i -> Y(t_i) per step-i state.
const std::vector<std::vector<double>>& diagonal(const BsvieSolution& solution);

} // namespace risklat
