#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssb/grid.hpp"

namespace ssb {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kGeneratorVersion = "ssb-synth-1";

struct DatasetConfig {
    int count = 100;
    int grid_size = 32;
    int experts = 4;
    double ambiguity = 0.5;
    double split = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
    /// floor(count * split), with a 1e-9 guard against representation error.
    int train_count() const;
};

struct Provenance {
    std::uint64_t seed = 0;
    int index = 0;
    std::string generator_version = kGeneratorVersion;
};

struct DatasetRecord {
    std::string id;
    Grid image;
    std::vector<Grid> expert_masks;
    Provenance provenance;
};

/// A dataset with its records in generation order; the first train_count
/// records form the training split.
struct Dataset {
    DatasetConfig config;
    std::vector<DatasetRecord> records;
    std::size_t train_count = 0;

    std::span<const DatasetRecord> train() const {
        return std::span(records).first(train_count);
    }
    std::span<const DatasetRecord> test() const {
        return std::span(records).subspan(train_count);
    }
};

std::string record_id(int index);

/// Deterministic in (seed, index); expert k's mask additionally depends only
/// on k. The image does not depend on `ambiguity` or `experts`.
DatasetRecord gen_record(const DatasetConfig& cfg, int index);

/// Generates every record in memory.
Dataset gen_dataset(const DatasetConfig& cfg);

/// Writes manifest.json, img/<id>.pgm and masks/<id>_e<k>.pgm under dir.
void write_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

/// Mean over records of the mean pairwise (1 - IoU) between expert masks.
double mean_expert_divergence(std::span<const DatasetRecord> records);

}  // namespace ssb
