#pragma once

#include <memory>
#include <string>

#include "risklat/lattice.hpp"

namespace risklat {

/// Closed-form claim over the terminal Brownian value: arithmetic on the
/// symbol B_T with constants, parentheses, unary minus and min/max/exp/abs.
/// F_T-measurability is guaranteed by the grammar.
class ClaimExpr {
public:
    struct Node;

    static ClaimExpr parse(const std::string& text);

    double evaluate(double b_t) const;
    TerminalClaim build(const LatticeModel& model) const;
    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace risklat
