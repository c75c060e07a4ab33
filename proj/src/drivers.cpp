#include "risklat/drivers.hpp"

#include <algorithm>
#include <cmath>

#include "risklat/rng.hpp"

namespace risklat {

namespace {

// Domain membership for closed-form conjugates. The scenario fields feeding
// back into conjugate() are bitwise copies of the driver's own selections, so
// a tight tolerance only has to absorb user-supplied (b, m).
bool close(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

double field_max(const AdaptedField& f, bool absolute) {
    double m = 0.0;
    for (int k = 0; k <= f.last_step(); ++k) {
        for (double v : f.at(k)) m = std::max(m, absolute ? std::abs(v) : v);
    }
    return m;
}

double field_min(const AdaptedField& f) {
    double m = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= f.last_step(); ++k) {
        for (double v : f.at(k)) m = std::min(m, v);
    }
    return m;
}

class ZeroDriver final : public Driver {
public:
    ZeroDriver() {
        flags_ = {.depends_on_y = false,
                  .convex = true,
                  .decreasing_in_y = true,
                  .positively_homogeneous = true,
                  .subadditive = true};
    }
    double evaluate(int, std::size_t, double, double) const override { return 0.0; }
    ScenarioPoint select_scenario(int, std::size_t, double, double) const override {
        return {0.0, 0.0};
    }
    double conjugate(int, std::size_t, double b, double m) const override {
        return (b == 0.0 && m == 0.0) ? 0.0 : kConjugateInfinity;
    }
    std::string name() const override { return "zero"; }
    bool differentiable() const override { return true; }
};

class LinearAmbiguousDriver final : public Driver {
public:
    LinearAmbiguousDriver(AdaptedField r, AdaptedField upper)
        : r_(std::move(r)), upper_(std::move(upper)) {
        if (field_min(r_) < 0.0) {
            throw ConfigError("linear_ambiguous: lower rate r must be >= 0");
        }
        for (int k = 0; k <= r_.last_step(); ++k) {
            auto lo = r_.at(k);
            auto hi = upper_.at(k);
            if (lo.size() != hi.size()) {
                throw ConfigError("linear_ambiguous: r and R shapes differ at step " +
                                  std::to_string(k));
            }
            for (std::size_t s = 0; s < lo.size(); ++s) {
                if (hi[s] < lo[s]) {
                    throw ConfigError("linear_ambiguous: need R >= r everywhere");
                }
            }
        }
        flags_ = {.depends_on_y = true,
                  .convex = true,
                  .decreasing_in_y = true,
                  .positively_homogeneous = true,
                  .subadditive = true};
        lipschitz_y_ = field_max(upper_, true);
        lipschitz_z_ = 0.0;
    }

    double evaluate(int k, std::size_t s, double y, double) const override {
        return std::max(-r_.at(k)[s] * y, -upper_.at(k)[s] * y);
    }
    ScenarioPoint select_scenario(int k, std::size_t s, double y, double) const override {
        // Tie at y = 0 resolved toward r (right-limit of the y > 0 branch).
        return {y < 0.0 ? upper_.at(k)[s] : r_.at(k)[s], 0.0};
    }
    double conjugate(int k, std::size_t s, double b, double m) const override {
        const double lo = r_.at(k)[s];
        const double hi = upper_.at(k)[s];
        const bool in_band = (b >= lo - 1e-12) && (b <= hi + 1e-12);
        return (in_band && close(m, 0.0)) ? 0.0 : kConjugateInfinity;
    }
    std::string name() const override { return "linear_ambiguous"; }

private:
    AdaptedField r_;
    AdaptedField upper_;
};

class EntropicDriver final : public Driver {
public:
    explicit EntropicDriver(double gamma) : gamma_(gamma) {
        if (!(gamma > 0.0)) throw ConfigError("entropic: gamma must be positive");
        flags_ = {.depends_on_y = false,
                  .convex = true,
                  .decreasing_in_y = true,
                  .positively_homogeneous = false,
                  .subadditive = false};
        lipschitz_y_ = 0.0;
        lipschitz_z_ = std::numeric_limits<double>::infinity(); // quadratic in z
    }

    double evaluate(int, std::size_t, double, double z) const override {
        return z * z / (2.0 * gamma_);
    }
    ScenarioPoint select_scenario(int, std::size_t, double, double z) const override {
        return {0.0, -z / gamma_};
    }
    double conjugate(int, std::size_t, double b, double m) const override {
        return close(b, 0.0) ? gamma_ * m * m / 2.0 : kConjugateInfinity;
    }
    std::string name() const override { return "entropic"; }
    bool differentiable() const override { return true; }

private:
    double gamma_;
};

class CsermDriver final : public Driver {
public:
    CsermDriver(AdaptedField beta, double gamma) : beta_(std::move(beta)), gamma_(gamma) {
        if (!(gamma > 0.0)) throw ConfigError("cserm: gamma must be positive");
        if (field_min(beta_) < 0.0) throw ConfigError("cserm: beta must be >= 0");
        flags_ = {.depends_on_y = true,
                  .convex = true,
                  .decreasing_in_y = true,
                  .positively_homogeneous = false,
                  .subadditive = false};
        lipschitz_y_ = field_max(beta_, true);
        lipschitz_z_ = std::numeric_limits<double>::infinity();
    }

    double evaluate(int k, std::size_t s, double y, double z) const override {
        return -beta_.at(k)[s] * y + z * z / (2.0 * gamma_);
    }
    ScenarioPoint select_scenario(int k, std::size_t s, double, double z) const override {
        return {beta_.at(k)[s], -z / gamma_};
    }
    double conjugate(int k, std::size_t s, double b, double m) const override {
        return close(b, beta_.at(k)[s]) ? gamma_ * m * m / 2.0 : kConjugateInfinity;
    }
    std::string name() const override { return "cserm"; }
    bool differentiable() const override { return true; }

private:
    AdaptedField beta_;
    double gamma_;
};

class LinearGenericDriver final : public Driver {
public:
    LinearGenericDriver(AdaptedField beta, AdaptedField lambda)
        : beta_(std::move(beta)), lambda_(std::move(lambda)) {
        if (field_min(beta_) < 0.0) throw ConfigError("linear_generic: beta must be >= 0");
        flags_ = {.depends_on_y = true,
                  .convex = true,
                  .decreasing_in_y = true,
                  .positively_homogeneous = true,
                  .subadditive = true};
        lipschitz_y_ = field_max(beta_, true);
        lipschitz_z_ = field_max(lambda_, true);
    }

    double evaluate(int k, std::size_t s, double y, double z) const override {
        return -beta_.at(k)[s] * y + lambda_.at(k)[s] * z;
    }
    ScenarioPoint select_scenario(int k, std::size_t s, double, double) const override {
        // mu = -lambda makes -beta*y - mu*z - g vanish identically.
        return {beta_.at(k)[s], -lambda_.at(k)[s]};
    }
    double conjugate(int k, std::size_t s, double b, double m) const override {
        const bool in_domain = close(b, beta_.at(k)[s]) && close(m, -lambda_.at(k)[s]);
        return in_domain ? 0.0 : kConjugateInfinity;
    }
    std::string name() const override { return "linear_generic"; }
    bool differentiable() const override { return true; }

private:
    AdaptedField beta_;
    AdaptedField lambda_;
};

class ShiftedDriver final : public Driver {
public:
    ShiftedDriver(DriverPtr base, AdaptedField offset)
        : base_(std::move(base)), offset_(std::move(offset)) {
        flags_ = base_->flags();
        flags_.positively_homogeneous = false;
        flags_.subadditive = false;
        lipschitz_y_ = base_->lipschitz_y();
        lipschitz_z_ = base_->lipschitz_z();
    }

    double evaluate(int k, std::size_t s, double y, double z) const override {
        return base_->evaluate(k, s, y, z) + offset_.at(k)[s];
    }
    ScenarioPoint select_scenario(int k, std::size_t s, double y, double z) const override {
        return base_->select_scenario(k, s, y, z); // subdifferential of -g is shift-invariant
    }
    double conjugate(int k, std::size_t s, double b, double m) const override {
        const double g = base_->conjugate(k, s, b, m);
        return std::isfinite(g) ? g - offset_.at(k)[s] : kConjugateInfinity;
    }
    std::string name() const override { return base_->name() + "+offset"; }
    bool differentiable() const override { return base_->differentiable(); }

private:
    DriverPtr base_;
    AdaptedField offset_;
};

class CustomDriver final : public Driver {
public:
    explicit CustomDriver(CustomDriverSpec spec) : spec_(std::move(spec)) {
        if (!spec_.evaluate) throw ConfigError("custom driver: evaluator is required");
        flags_ = spec_.flags;
        lipschitz_y_ = spec_.lipschitz_y;
        lipschitz_z_ = spec_.lipschitz_z;
    }

    double evaluate(int k, std::size_t s, double y, double z) const override {
        return spec_.evaluate(k, s, y, z);
    }
    ScenarioPoint select_scenario(int k, std::size_t s, double y, double z) const override {
        if (spec_.selector) return spec_.selector(k, s, y, z);
        if (!spec_.scenario_box) {
            throw CapabilityError("custom driver '" + spec_.name +
                                  "': no scenario selector and grid fallback disabled "
                                  "(no scenario box)");
        }
        return grid_select(k, s, y, z);
    }
    double conjugate(int k, std::size_t s, double b, double m) const override {
        if (spec_.conjugate) return spec_.conjugate(k, s, b, m);
        if (!spec_.value_box) {
            throw CapabilityError("custom driver '" + spec_.name +
                                  "': no conjugate and no (y, z) box for grid search");
        }
        return conjugate_numeric(*this, k, s, b, m, *spec_.value_box, 401);
    }
    std::string name() const override { return spec_.name; }
    bool differentiable() const override { return spec_.differentiable; }

private:
    // Scan the (b, m) box for the pair maximizing -b*y - m*z - G(b, m),
    // i.e. the best available subgradient of -g at (y, z).
    ScenarioPoint grid_select(int k, std::size_t s, double y, double z) const {
        const SearchBox& box = *spec_.scenario_box;
        const int nb = box.y_min == box.y_max ? 1 : 201;
        const int nm = box.z_min == box.z_max ? 1 : 201;
        double best = -std::numeric_limits<double>::infinity();
        ScenarioPoint pick{box.y_min, box.z_min};
        for (int ib = 0; ib < nb; ++ib) {
            const double b =
                nb == 1 ? box.y_min
                        : box.y_min + (box.y_max - box.y_min) * ib / static_cast<double>(nb - 1);
            for (int im = 0; im < nm; ++im) {
                const double m = nm == 1 ? box.z_min
                                         : box.z_min + (box.z_max - box.z_min) * im /
                                               static_cast<double>(nm - 1);
                const double g = conjugate(k, s, b, m);
                if (!std::isfinite(g)) continue;
                const double value = -b * y - m * z - g;
                if (value > best) {
                    best = value;
                    pick = {b, m};
                }
            }
        }
        return pick;
    }

    CustomDriverSpec spec_;
};

} // namespace

ScenarioPoint Driver::select_scenario(int, std::size_t, double, double) const {
    throw CapabilityError("driver '" + name() + "' has no scenario selector");
}

double Driver::conjugate(int, std::size_t, double, double) const {
    throw CapabilityError("driver '" + name() + "' has no conjugate evaluator");
}

DriverPtr make_zero_driver() { return std::make_shared<ZeroDriver>(); }

DriverPtr make_linear_ambiguous(AdaptedField r, AdaptedField upper) {
    return std::make_shared<LinearAmbiguousDriver>(std::move(r), std::move(upper));
}

DriverPtr make_linear_ambiguous(const LatticeModel& model, double r, double upper) {
    const int last = model.steps() - 1;
    return make_linear_ambiguous(AdaptedField::constant(model, last, r),
                                 AdaptedField::constant(model, last, upper));
}

DriverPtr make_entropic(double gamma) { return std::make_shared<EntropicDriver>(gamma); }

DriverPtr make_cserm(AdaptedField beta, double gamma) {
    return std::make_shared<CsermDriver>(std::move(beta), gamma);
}

DriverPtr make_cserm(const LatticeModel& model, double beta, double gamma) {
    return make_cserm(AdaptedField::constant(model, model.steps() - 1, beta), gamma);
}

DriverPtr make_linear_generic(AdaptedField beta, AdaptedField lambda) {
    return std::make_shared<LinearGenericDriver>(std::move(beta), std::move(lambda));
}

DriverPtr make_shifted(DriverPtr base, AdaptedField offset) {
    return std::make_shared<ShiftedDriver>(std::move(base), std::move(offset));
}

DriverPtr make_custom(CustomDriverSpec spec) {
    return std::make_shared<CustomDriver>(std::move(spec));
}

double conjugate_numeric(const Driver& driver, int k, std::size_t state, double b, double m,
                         const SearchBox& box, int grid_points) {
    if (box.y_max < box.y_min || box.z_max < box.z_min) {
        throw ConfigError("conjugate_numeric: empty search box");
    }
    if (grid_points < 2) {
        throw ConfigError("conjugate_numeric: need at least 2 grid points per axis");
    }
    const int ny = box.y_min == box.y_max ? 1 : grid_points;
    const int nz = box.z_min == box.z_max ? 1 : grid_points;
    double best = -std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < ny; ++iy) {
        const double y = ny == 1 ? box.y_min
                                 : box.y_min + (box.y_max - box.y_min) * iy /
                                       static_cast<double>(ny - 1);
        for (int iz = 0; iz < nz; ++iz) {
            const double z = nz == 1 ? box.z_min
                                     : box.z_min + (box.z_max - box.z_min) * iz /
                                           static_cast<double>(nz - 1);
            best = std::max(best, -b * y - m * z - driver.evaluate(k, state, y, z));
        }
    }
    return best;
}

bool FlagReport::has_violations() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const FlagCheck& c) { return c.violation(); });
}

const FlagCheck& FlagReport::check(const std::string& property) const {
    for (const auto& c : checks) {
        if (c.property == property) return c;
    }
    throw ConfigError("flag report: unknown property '" + property + "'");
}

FlagReport validate_flags(const Driver& driver, int sample_count, std::uint64_t seed, int k,
                          std::size_t state) {
    if (sample_count < 1) throw ConfigError("validate_flags: sample_count must be >= 1");
    Rng rng(seed);
    const double tol = 1e-9;

    FlagCheck convex{"convex", driver.flags().convex};
    FlagCheck decreasing{"decreasing_in_y", driver.flags().decreasing_in_y};
    FlagCheck homogeneous{"positively_homogeneous", driver.flags().positively_homogeneous};
    FlagCheck subadditive{"subadditive", driver.flags().subadditive};
    double lip_y = 0.0;
    double lip_z = 0.0;

    auto g = [&](double y, double z) { return driver.evaluate(k, state, y, z); };
    auto record = [&](FlagCheck& c, double violation) {
        if (violation > c.worst) c.worst = violation;
        if (violation > tol) c.holds = false;
    };

    for (int i = 0; i < sample_count; ++i) {
        const double y1 = rng.uniform(-3.0, 3.0), z1 = rng.uniform(-3.0, 3.0);
        const double y2 = rng.uniform(-3.0, 3.0), z2 = rng.uniform(-3.0, 3.0);

        record(convex, g(0.5 * (y1 + y2), 0.5 * (z1 + z2)) - 0.5 * (g(y1, z1) + g(y2, z2)));

        const double bump = rng.uniform(0.0, 2.0);
        record(decreasing, g(y1 + bump, z1) - g(y1, z1));

        const double alpha = rng.uniform(0.0, 2.0);
        record(homogeneous, std::abs(g(alpha * y1, alpha * z1) - alpha * g(y1, z1)));

        record(subadditive, g(y1 + y2, z1 + z2) - (g(y1, z1) + g(y2, z2)));

        lip_y = std::max(lip_y, std::abs(g(y2, z1) - g(y1, z1)) / std::max(1e-12, std::abs(y2 - y1)));
        lip_z = std::max(lip_z, std::abs(g(y1, z2) - g(y1, z1)) / std::max(1e-12, std::abs(z2 - z1)));
    }

    FlagReport report;
    report.checks = {convex, decreasing, homogeneous, subadditive};
    report.lipschitz_y_estimate = lip_y;
    report.lipschitz_z_estimate = lip_z;
    report.samples = sample_count;
    return report;
}

} // namespace risklat
