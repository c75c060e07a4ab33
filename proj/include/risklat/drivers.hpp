#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "risklat/lattice.hpp"

namespace risklat {

/// Structural properties a generator claims for itself; validate_flags
/// spot-checks them by sampling.
struct DriverFlags {
    bool depends_on_y = false;
    bool convex = false;
    bool decreasing_in_y = false;
    bool positively_homogeneous = false;
    bool subadditive = false;
};

/// A point of the subdifferential of -g: the (discount rate, drift) pair
/// attaining the conjugate, i.e. G(k, beta, mu) = -g(k,y,z) - beta*y - mu*z.
struct ScenarioPoint {
    double beta = 0.0;
    double mu = 0.0;
};

/// Bounded rectangle in (y, z) for grid-search fallbacks.
struct SearchBox {
    double y_min = 0.0, y_max = 0.0;
    double z_min = 0.0, z_max = 0.0;
};

constexpr double kConjugateInfinity = std::numeric_limits<double>::infinity();

/// BSDE generator g(t_k, state, y, z). State context resolves adapted
/// coefficient fields (ambiguous rates, confidence drifts) built on the
/// same lattice the driver is later solved on.
class Driver {
public:
    virtual ~Driver() = default;

    virtual double evaluate(int k, std::size_t state, double y, double z) const = 0;

    /// Subgradient selection of -g along (y, z). Builtins are closed-form;
    /// custom drivers fall back to grid search over their scenario box.
    virtual ScenarioPoint select_scenario(int k, std::size_t state, double y, double z) const;

    /// Fenchel conjugate G(k, b, m) = sup_{y,z} { -b*y - m*z - g }.
    /// Returns kConjugateInfinity outside the effective domain.
    virtual double conjugate(int k, std::size_t state, double b, double m) const;

    virtual std::string name() const = 0;
    virtual bool differentiable() const { return false; }

    const DriverFlags& flags() const { return flags_; }
    double lipschitz_y() const { return lipschitz_y_; }
    double lipschitz_z() const { return lipschitz_z_; }

protected:
    DriverFlags flags_{};
    double lipschitz_y_ = 0.0;
    double lipschitz_z_ = 0.0;
};

using DriverPtr = std::shared_ptr<const Driver>;

/// g = 0. Risk measure collapses to the conditional expectation of -X.
DriverPtr make_zero_driver();

/// Ambiguous discount rate: g(y) = sup_{r <= b <= R} (-b y) = max(-r y, -R y),
/// with 0 <= r <= R adapted and bounded. Sublinear; zero penalty on its domain.
DriverPtr make_linear_ambiguous(AdaptedField r, AdaptedField R);
DriverPtr make_linear_ambiguous(const LatticeModel& model, double r, double R);

/// Entropic generator g = z^2 / (2 gamma). Quadratic in z; on a lattice the
/// martingale components are bounded, so each run is effectively Lipschitz.
DriverPtr make_entropic(double gamma);

/// Cash-subadditive entropic generator g = -beta_k y + z^2 / (2 gamma),
/// beta >= 0 adapted and bounded.
DriverPtr make_cserm(AdaptedField beta, double gamma);
DriverPtr make_cserm(const LatticeModel& model, double beta, double gamma);

/// Linear generator g = -beta_k y + lambda_k z, the auxiliary family behind
/// the generalized-marginal and CSERM allocations.
DriverPtr make_linear_generic(AdaptedField beta, AdaptedField lambda);

/// base + offset_k(state); preserves convexity and monotonicity in y.
/// Used to build ordered driver pairs for comparison checks.
DriverPtr make_shifted(DriverPtr base, AdaptedField offset);

/// User-supplied generator. Without a selector, scenario extraction grid
/// searches the scenario box (requires one); without a conjugate, G is
/// bounded below via conjugate_numeric on the (y, z) box.
struct CustomDriverSpec {
    std::function<double(int, std::size_t, double, double)> evaluate;
    std::function<ScenarioPoint(int, std::size_t, double, double)> selector; // optional
    std::function<double(int, std::size_t, double, double)> conjugate;       // optional
    DriverFlags flags{};
    double lipschitz_y = 0.0;
    double lipschitz_z = 0.0;
    bool differentiable = false;
    std::optional<SearchBox> value_box;    // (y, z) box for conjugate_numeric
    std::optional<SearchBox> scenario_box; // (b, m) box for selector fallback
    std::string name = "custom";
};
DriverPtr make_custom(CustomDriverSpec spec);

/// Grid lower bound of G(k, b, m) over the (y, z) box: max of -b*y - m*z - g.
/// grid_points >= 2 per non-degenerate axis.
double conjugate_numeric(const Driver& driver, int k, std::size_t state, double b, double m,
                         const SearchBox& box, int grid_points);

/// One sampled property check from validate_flags.
struct FlagCheck {
    std::string property;
    bool flagged = false;
    bool holds = true;         // over the drawn samples
    double worst = 0.0;        // largest violation seen
    bool violation() const { return flagged && !holds; }
};

struct FlagReport {
    std::vector<FlagCheck> checks;
    double lipschitz_y_estimate = 0.0;
    double lipschitz_z_estimate = 0.0;
    int samples = 0;

    bool has_violations() const;
    const FlagCheck& check(const std::string& property) const;
};

/// Samples random (y, z) pairs and tests convexity, monotone decrease in y,
/// positive homogeneity and subadditivity; estimates Lipschitz constants.
/// Flagged properties that fail sampling are violations.
FlagReport validate_flags(const Driver& driver, int sample_count, std::uint64_t seed,
                          int k = 0, std::size_t state = 0);

} // namespace risklat
