#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ssb/bridge.hpp"
#include "ssb/schedule.hpp"
#include "ssb/train.hpp"
#include "ssb/unet.hpp"

namespace ssb {

inline constexpr int kConfigFormatVersion = 1;

/// Sampling options beyond the per-chain SampleConfig.
struct SampleSettings {
    SampleConfig chain;
    int num_samples = 4;
    double threshold = 0.5;
    bool save_continuous = false;
    std::string split = "test";

    void validate() const;
};

/// Everything a run needs. Serialized as JSON with a format_version field;
/// unknown keys are rejected at every level.
struct RunConfig {
    ScheduleParams schedule;
    ArchConfig arch;
    TrainConfig train;
    SampleSettings sample;
    std::string data_dir;
    std::string output;

    void validate() const;
};

nlohmann::json to_json(const ScheduleParams& p);
ScheduleParams schedule_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SampleSettings& s);
SampleSettings sample_settings_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& c);
/// Missing sections keep their defaults. Throws std::invalid_argument on
/// unknown keys, bad values or a format version mismatch.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Throws LoadError if the file is missing or not JSON, std::invalid_argument
/// if its contents are invalid.
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& c);

}  // namespace ssb
