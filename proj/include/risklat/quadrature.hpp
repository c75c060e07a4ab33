#pragma once

#include <utility>
#include <vector>

namespace risklat {

/// Gauss-Legendre (node, weight) pairs on [0, 1], exact for polynomials of
/// degree <= 2n - 1. Nodes via Newton iteration on the Legendre recurrence.
std::vector<std::pair<double, double>> gauss_legendre_01(int n);

} // namespace risklat
