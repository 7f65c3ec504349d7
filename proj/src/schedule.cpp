#include "ssb/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssb {

namespace {

// Triangle sampled at cell centres; equal for i and n-1-i bit for bit.
double triangle_shape(int i, int n) {
    const double rise = static_cast<double>(i) + 0.5;
    const double fall = static_cast<double>(n - i) - 0.5;
    return std::min(rise, fall) / (0.5 * static_cast<double>(n));
}

}  // namespace

double Schedule::sigma(int step) const { return std::sqrt(sigma_sq(step)); }

Schedule Schedule::unchecked(std::vector<double> beta, std::vector<double> sigma_sq,
                             std::vector<double> sigma_bar_sq) {
    if (sigma_sq.size() != beta.size() + 1 || sigma_bar_sq.size() != beta.size() + 1) {
        throw std::invalid_argument("Schedule::unchecked: array lengths disagree");
    }
    Schedule s;
    s.beta_ = std::move(beta);
    s.sigma_sq_ = std::move(sigma_sq);
    s.sigma_bar_sq_ = std::move(sigma_bar_sq);
    for (double b : s.beta_) s.beta_max_ = std::max(s.beta_max_, b);
    return s;
}

Schedule make_schedule(int n_steps, double beta_max) {
    if (n_steps < 2) throw std::invalid_argument("make_schedule: n_steps must be >= 2");
    if (!(beta_max > 0.0) || !std::isfinite(beta_max)) {
        throw std::invalid_argument("make_schedule: beta_max must be positive and finite");
    }
    Schedule s;
    s.beta_max_ = beta_max;
    const auto n = static_cast<std::size_t>(n_steps);
    s.beta_.resize(n);
    for (int i = 0; i < n_steps; ++i) s.beta_[static_cast<std::size_t>(i)] = beta_max * triangle_shape(i, n_steps);

    s.sigma_sq_.assign(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) s.sigma_sq_[i] = s.sigma_sq_[i - 1] + s.beta_[i - 1];

    s.sigma_bar_sq_.assign(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) s.sigma_bar_sq_[i] = s.sigma_bar_sq_[i + 1] + s.beta_[i];
    return s;
}

Schedule make_schedule(const ScheduleParams& params) {
    if (params.n_steps < 2) throw std::invalid_argument("make_schedule: n_steps must be >= 2");
    if (!(params.total_variance > 0.0) || !std::isfinite(params.total_variance)) {
        throw std::invalid_argument("make_schedule: total_variance must be positive and finite");
    }
    double shape_sum = 0.0;
    for (int i = 0; i < params.n_steps; ++i) shape_sum += triangle_shape(i, params.n_steps);
    return make_schedule(params.n_steps, params.total_variance / shape_sum);
}

BridgeCoeffs bridge_coeffs(const Schedule& s, int step) {
    if (step < 0 || step > s.n_steps()) {
        throw std::invalid_argument("bridge_coeffs: step " + std::to_string(step) +
                                    " outside [0, " + std::to_string(s.n_steps()) + "]");
    }
    const double fwd = s.sigma_sq(step);
    const double bwd = s.sigma_bar_sq(step);
    const double denom = fwd + bwd;
    // At either endpoint one variance is exactly zero and these reduce to 1, 0, 0.
    return {bwd / denom, fwd / denom, fwd * bwd / denom};
}

}  // namespace ssb
