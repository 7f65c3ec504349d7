#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssb/loss.hpp"
#include "ssb/schedule.hpp"
#include "ssb/synthdata.hpp"
#include "ssb/unet.hpp"

namespace ssb {

struct TrainConfig {
    int steps = 2000;
    int batch = 8;
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    LossConfig loss;
    int eta = 4;  // number of experts sampled from

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LossConfig& c);
LossConfig loss_config_from_json(const nlohmann::json& j);

/// Raised when the training loss stops being finite.
class NumericalError : public std::runtime_error {
public:
    NumericalError(int iteration, const std::string& what)
        : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

struct TrainResult {
    TinyUNet net;
    std::vector<double> loss_trace;  // batch-mean loss per iteration
};

using TrainProgress = std::function<void(int iteration, double loss)>;

/// Minibatch Adam on the bridge loss over the dataset's training split.
/// Deterministic in (data, arch, cfg); per-sample work may run in parallel but
/// gradients are summed in a fixed order.
TrainResult train(const Dataset& data, const ArchConfig& arch, const TrainConfig& cfg, const Schedule& s,
                  const TrainProgress& progress = {});

/// Continues optimizing an existing network (fresh optimizer state).
TrainResult train_from(TinyUNet net, const Dataset& data, const TrainConfig& cfg, const Schedule& s,
                       const TrainProgress& progress = {});

/// Adam state over a flat parameter vector.
class Adam {
public:
    Adam(std::size_t n, double lr, double beta1, double beta2, double eps);
    void step(std::vector<float>& params, const std::vector<double>& grad);
    int iterations() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace ssb
