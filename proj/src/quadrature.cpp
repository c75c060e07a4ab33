#include "risklat/quadrature.hpp"

#include <cmath>

#include "risklat/errors.hpp"

namespace risklat {

std::vector<std::pair<double, double>> gauss_legendre_01(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: need at least 1 node");
    std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < n; ++i) {
        // Chebyshev-style initial guess for the i-th root of P_n on [-1, 1].
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        out[static_cast<std::size_t>(n - 1 - i)] = {0.5 * (x + 1.0), 0.5 * w};
    }
    return out;
}

} // namespace risklat
