#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ssb/schedule.hpp"
#include "ssb/unet.hpp"

namespace ssb {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "SSBC", u32 version, u32 header length, JSON header, then the
/// parameters as little-endian float32 in layout order. All integers are
/// little-endian.
struct Checkpoint {
    TinyUNet net;
    ScheduleParams schedule;
    std::string train_digest;
};

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_digest(const nlohmann::json& j);

std::string encode_checkpoint(const TinyUNet& net, const ScheduleParams& schedule, const std::string& train_digest);
/// Throws LoadError naming `name` on bad magic, version, header or blob length.
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& name);

void save_checkpoint(const std::filesystem::path& path, const TinyUNet& net, const ScheduleParams& schedule,
                     const std::string& train_digest);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ssb
