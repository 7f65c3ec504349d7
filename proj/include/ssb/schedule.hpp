#pragma once

#include <vector>

namespace ssb {

/// Construction parameters persisted in configs and checkpoint headers.
struct ScheduleParams {
    int n_steps = 50;
    double total_variance = 1.0;
};

/// Discrete zero-drift noise schedule. beta[i] is the variance added between
/// steps i and i+1; sigma_sq accumulates from step 0 upward, sigma_bar_sq
/// from step n_steps downward. Immutable once built.
class Schedule {
public:
    int n_steps() const noexcept { return static_cast<int>(beta_.size()); }
    const std::vector<double>& beta() const noexcept { return beta_; }
    const std::vector<double>& sigma_sq() const noexcept { return sigma_sq_; }
    const std::vector<double>& sigma_bar_sq() const noexcept { return sigma_bar_sq_; }

    double sigma_sq(int step) const { return sigma_sq_.at(static_cast<std::size_t>(step)); }
    double sigma_bar_sq(int step) const { return sigma_bar_sq_.at(static_cast<std::size_t>(step)); }
    double sigma(int step) const;
    double total_variance() const noexcept { return sigma_sq_.back(); }
    double beta_max() const noexcept { return beta_max_; }

    ScheduleParams params() const { return {n_steps(), total_variance()}; }

    /// Wraps precomputed arrays without checking the accumulation invariants.
    /// Only the fault-injection path of the verification suite uses this.
    static Schedule unchecked(std::vector<double> beta, std::vector<double> sigma_sq,
                              std::vector<double> sigma_bar_sq);

private:
    friend Schedule make_schedule(int n_steps, double beta_max);

    std::vector<double> beta_;
    std::vector<double> sigma_sq_;
    std::vector<double> sigma_bar_sq_;
    double beta_max_ = 0.0;
};

/// Symmetric triangular schedule peaking at beta_max in the middle.
Schedule make_schedule(int n_steps, double beta_max);

/// Same shape, scaled so that sigma_sq[n_steps] equals params.total_variance.
Schedule make_schedule(const ScheduleParams& params);

/// Mixing weights and variance of q(x_t | x_0, x_1).
struct BridgeCoeffs {
    double w0;
    double w1;
    double var;
};

BridgeCoeffs bridge_coeffs(const Schedule& s, int step);

}  // namespace ssb
