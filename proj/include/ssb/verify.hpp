#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssb/schedule.hpp"

namespace ssb {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    /// Replace the schedule with one whose backward variances are corrupted;
    /// the moment checks must then fail.
    bool inject_fault = false;
    std::uint64_t seed = 0;
};

/// Schedule with sigma_bar_sq doubled, breaking sigma_sq + sigma_bar_sq = total.
Schedule corrupted_schedule(const Schedule& s);

/// Mean and variance of the terminal state of the discretized sampler run
/// with a Gaussian oracle on a scalar, propagated exactly through the chain.
struct MomentPair {
    double mean = 0.0;
    double var = 0.0;
};
MomentPair gaussian_sampler_law(const Schedule& s, double prior_mean, double prior_var, double x1, int nfe,
                                bool stochastic = true);

/// Built-in oracle suite: schedule invariants, bridge moments, Markov
/// marginals, Dirac and Gaussian oracle sampling, CFG identity, network
/// gradient check and metric fixtures.
std::vector<CheckResult> run_verification(const VerifyOptions& opts);

}  // namespace ssb
