#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssb/grid.hpp"
#include "ssb/predictor.hpp"
#include "ssb/rng.hpp"
#include "ssb/schedule.hpp"

namespace ssb {

/// One training example drawn from the bridge posterior.
struct BridgeSample {
    Grid x_t;
    int step = 1;
    Label label;
    Grid target;  // (x_t - x_0) / sigma_step
};

struct SampleConfig {
    double omega = 0.0;
    int nfe = 50;
    bool stochastic = true;
    std::uint64_t seed = 0;
};

/// Raised when a sampling chain fails; names the step that failed.
class GenerationError : public std::runtime_error {
public:
    GenerationError(int step, const std::string& what)
        : std::runtime_error("generation failed at step " + std::to_string(step) + ": " + what),
          step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

/// Draws x_t ~ N(w0 x0 + w1 x1, var I).
Grid sample_xt(const Grid& x0, const Grid& x1, int step, const Schedule& s, Rng& rng);

Grid training_target(const Grid& x_t, const Grid& x0, int step, const Schedule& s);

/// x_t - sigma_step * eps; inverse of training_target.
Grid predict_x0(const Grid& x_t, const Grid& eps, int step, const Schedule& s);

BridgeSample make_bridge_sample(const Grid& x0, const Grid& x1, int step, Label label,
                                const Schedule& s, Rng& rng);

/// Classifier-free guidance: (1 + omega) eps(x, label) - omega eps(x, null).
Grid guided_eps(const Predictor& p, const Grid& x_t, Label label, int step, double omega);

/// Brownian-bridge transition from step_from to step_to pinned at x0_hat.
Grid reverse_step(const Grid& x_n, const Grid& x0_hat, int step_from, int step_to,
                  const Schedule& s, bool stochastic, Rng& rng);

/// nfe + 1 strictly decreasing steps from n_steps to 0.
std::vector<int> step_ladder(int n_steps, int nfe);

/// Runs the reverse chain from x1 down to step 0. The random stream is
/// derived from (cfg.seed, stream) so samples are independent of each other
/// and of evaluation order.
Grid generate(const Predictor& p, const Grid& x1, Label label, const SampleConfig& cfg,
              const Schedule& s, std::uint64_t stream = 0);

}  // namespace ssb
