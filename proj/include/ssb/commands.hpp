#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ssb/synthdata.hpp"

namespace ssb {

enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitUsage = 2,
    kExitNumerical = 3,
};

struct GenDataOptions {
    std::filesystem::path out;
    DatasetConfig data;
};

struct TrainOptions {
    std::filesystem::path data;
    std::optional<std::filesystem::path> config;
    std::filesystem::path out;  // checkpoint path
    std::optional<int> steps;
    std::optional<int> batch;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

struct SampleOptions {
    std::filesystem::path ckpt;
    std::filesystem::path data;
    std::optional<std::filesystem::path> config;
    std::filesystem::path out;
    std::optional<std::string> split;
    std::optional<int> num_samples;
    std::optional<double> omega;
    std::optional<int> nfe;
    std::optional<std::uint64_t> seed;
    std::optional<bool> stochastic;
    std::optional<bool> save_continuous;
};

struct EvaluateOptions {
    std::filesystem::path pred;
    std::filesystem::path data;
    std::string split = "test";
    std::filesystem::path report;
};

struct VerifyCommandOptions {
    bool inject_fault = false;
    std::uint64_t seed = 0;
};

/// Random stream id for sample j of record `id`.
std::uint64_t sample_stream(const std::string& id, int j);

int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyCommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ssb
