#pragma once

#include <memory>
#include <optional>

#include "ssb/grid.hpp"
#include "ssb/schedule.hpp"

namespace ssb {

/// Noise predictor eps(x_t, label, step). Implementations must be safe to
/// call concurrently through the const interface.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual Grid predict(const Grid& x_t, Label label, int step) const = 0;

    /// Called once at the start of a sampling chain with the chain's starting
    /// image. Predictors that need it return a bound copy; the default
    /// returns nullptr, meaning "use *this unchanged".
    virtual std::unique_ptr<Predictor> bind_source(const Grid& /*x1*/) const { return nullptr; }
};

/// Exact score target when the mask distribution is a point mass at `a`:
/// predict returns (x_t - a) / sigma_step.
class DiracOracle final : public Predictor {
public:
    DiracOracle(Grid a, Schedule schedule);

    Grid predict(const Grid& x_t, Label label, int step) const override;

private:
    Grid target_;
    Schedule schedule_;
};

/// Conjugate-Gaussian oracle: X_0 ~ N(mean, prior_var I) independently per
/// pixel, x_t | x_0, x_1 from the bridge posterior. predict returns
/// (x_t - E[X_0 | x_t, x_1]) / sigma_step.
class GaussianOracle final : public Predictor {
public:
    GaussianOracle(Grid mean, double prior_var, Schedule schedule,
                   std::optional<Grid> source = std::nullopt);

    Grid predict(const Grid& x_t, Label label, int step) const override;
    std::unique_ptr<Predictor> bind_source(const Grid& x1) const override;

    /// E[X_0 | x_t, x_1], elementwise.
    Grid posterior_mean(const Grid& x_t, int step) const;
    /// Var[X_0 | x_t, x_1] (same for every pixel).
    double posterior_var(int step) const;

    const Grid& mean() const noexcept { return mean_; }
    double prior_var() const noexcept { return prior_var_; }

private:
    Grid mean_;
    double prior_var_;
    Schedule schedule_;
    std::optional<Grid> source_;
};

}  // namespace ssb
