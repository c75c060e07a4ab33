#include "risklat/bsvie.hpp"

#include <cmath>
#include <string>

namespace risklat {

BsvieSolution solve_bsvie(const LatticeModel& model, const VolterraDriver& driver,
                          const TerminalFamily& family, bool retain) {
    const int n = model.steps();
    if (static_cast<int>(family.phi.size()) != n + 1) {
        throw ConfigError("bsvie: terminal family must cover anchors 0..N (got " +
                          std::to_string(family.phi.size()) + " of " + std::to_string(n + 1) + ")");
    }

    BsvieSolution sol;
    sol.diagonal.resize(static_cast<std::size_t>(n) + 1);
    sol.retained = retain;
    if (retain) {
        sol.y_field.resize(static_cast<std::size_t>(n) + 1);
        sol.z_field.resize(static_cast<std::size_t>(n) + 1);
    }

    const double delta = model.delta();
    const double denom = 2.0 * model.sqrt_delta();
    for (int anchor = 0; anchor <= n; ++anchor) {
        const auto& phi = family.phi[static_cast<std::size_t>(anchor)];
        if (phi.values.size() != model.states_at(n)) {
            throw ConfigError("bsvie: anchor " + std::to_string(anchor) +
                              ": terminal has wrong state count");
        }
        for (double v : phi.values) {
            if (!std::isfinite(v)) {
                throw NumericError("bsvie: anchor " + std::to_string(anchor) +
                                   ": non-finite terminal value");
            }
        }

        std::vector<double> values = phi.values;
        std::vector<std::vector<double>> ys;
        std::vector<std::vector<double>> zs;
        if (retain) {
            ys.resize(static_cast<std::size_t>(n - anchor) + 1);
            zs.resize(static_cast<std::size_t>(n - anchor));
            ys[static_cast<std::size_t>(n - anchor)] = values;
        }
        for (int k = n - 1; k >= anchor; --k) {
            std::vector<double> lower(model.states_at(k));
            std::vector<double> zrow(retain ? lower.size() : 0);
            for (std::size_t s = 0; s < lower.size(); ++s) {
                const auto [down, up] = model.children(k, s);
                const double e = 0.5 * (values[up] + values[down]);
                const double z = (values[up] - values[down]) / denom;
                lower[s] = e + driver.evaluate(anchor, k, s, z) * delta;
                if (retain) zrow[s] = z;
            }
            values = std::move(lower);
            if (retain) {
                ys[static_cast<std::size_t>(k - anchor)] = values;
                zs[static_cast<std::size_t>(k - anchor)] = std::move(zrow);
            }
        }
        sol.diagonal[static_cast<std::size_t>(anchor)] = values;
        if (retain) {
            sol.y_field[static_cast<std::size_t>(anchor)] = std::move(ys);
            sol.z_field[static_cast<std::size_t>(anchor)] = std::move(zs);
        }
    }
    return sol;
}

const std::vector<std::vector<double>>& diagonal(const BsvieSolution& solution) {
    return solution.diagonal;
}

} // namespace risklat
