#include "ssb/predictor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssb {

namespace {

double checked_sigma(const Schedule& s, int step, const char* who) {
    if (step < 0 || step > s.n_steps()) {
        throw std::invalid_argument(std::string(who) + ": step out of range");
    }
    if (step == 0) throw std::domain_error(std::string(who) + ": step 0 has sigma = 0");
    return s.sigma(step);
}

}  // namespace

DiracOracle::DiracOracle(Grid a, Schedule schedule)
    : target_(std::move(a)), schedule_(std::move(schedule)) {
    if (!target_.all_finite()) throw std::invalid_argument("DiracOracle: target must be finite");
}

Grid DiracOracle::predict(const Grid& x_t, Label, int step) const {
    require_same_shape(x_t, target_, "DiracOracle::predict");
    const double sigma = checked_sigma(schedule_, step, "DiracOracle::predict");
    Grid eps = x_t;
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x_t[i] - target_[i]) / sigma;
    return eps;
}

GaussianOracle::GaussianOracle(Grid mean, double prior_var, Schedule schedule,
                               std::optional<Grid> source)
    : mean_(std::move(mean)),
      prior_var_(prior_var),
      schedule_(std::move(schedule)),
      source_(std::move(source)) {
    if (!(prior_var_ > 0.0)) throw std::invalid_argument("GaussianOracle: prior_var must be > 0");
    if (source_) require_same_shape(*source_, mean_, "GaussianOracle");
}

std::unique_ptr<Predictor> GaussianOracle::bind_source(const Grid& x1) const {
    return std::make_unique<GaussianOracle>(mean_, prior_var_, schedule_, x1);
}

double GaussianOracle::posterior_var(int step) const {
    const BridgeCoeffs c = bridge_coeffs(schedule_, step);
    if (c.w0 == 0.0) return prior_var_;
    if (c.var == 0.0) throw std::logic_error("GaussianOracle: zero bridge variance at interior step");
    return prior_var_ * c.var / (c.w0 * c.w0 * prior_var_ + c.var);
}

Grid GaussianOracle::posterior_mean(const Grid& x_t, int step) const {
    if (!source_) throw std::logic_error("GaussianOracle: no source image bound");
    require_same_shape(x_t, mean_, "GaussianOracle::posterior_mean");
    const BridgeCoeffs c = bridge_coeffs(schedule_, step);
    if (c.w0 == 0.0) return mean_;  // x_t carries no information about x_0
    if (c.var == 0.0) throw std::logic_error("GaussianOracle: zero bridge variance at interior step");
    const double gain = prior_var_ * c.w0 / (c.w0 * c.w0 * prior_var_ + c.var);
    Grid out = mean_;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double predicted = c.w0 * mean_[i] + c.w1 * (*source_)[i];
        out[i] = mean_[i] + gain * (x_t[i] - predicted);
    }
    return out;
}

Grid GaussianOracle::predict(const Grid& x_t, Label, int step) const {
    const double sigma = checked_sigma(schedule_, step, "GaussianOracle::predict");
    const Grid x0 = posterior_mean(x_t, step);
    Grid eps = x_t;
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = (x_t[i] - x0[i]) / sigma;
    return eps;
}

}  // namespace ssb
