#include "ssb/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <fmt/format.h>

#include "ssb/io.hpp"

namespace ssb {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'S', 'B', 'C'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

}  // namespace

std::string config_digest(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : j.dump()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string encode_checkpoint(const TinyUNet& net, const ScheduleParams& schedule, const std::string& train_digest) {
    const json header{{"arch", to_json(net.arch())},
                      {"schedule", {{"n_steps", schedule.n_steps}, {"total_variance", schedule.total_variance}}},
                      {"train_config_digest", train_digest},
                      {"param_count", net.param_count()},
                      {"layout", layout_to_json(net.layout())}};
    const std::string text = header.dump();
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out += text;
    out.reserve(out.size() + 4 * net.param_count());
    for (const float v : net.params()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& name) {
    const auto fail = [&](const std::string& why) { return LoadError(name + ": " + why); };
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw fail("not a checkpoint (bad magic)");
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kCheckpointVersion) throw fail("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t header_len = get_u32(bytes, 8);
    if (bytes.size() < 12 + static_cast<std::size_t>(header_len)) throw fail("truncated header");

    json header;
    ArchConfig arch;
    ScheduleParams schedule;
    std::size_t count = 0;
    std::string digest;
    try {
        header = json::parse(bytes.substr(12, header_len));
        arch = arch_config_from_json(header.at("arch"));
        schedule.n_steps = header.at("schedule").at("n_steps").get<int>();
        schedule.total_variance = header.at("schedule").at("total_variance").get<double>();
        count = header.at("param_count").get<std::size_t>();
        digest = header.at("train_config_digest").get<std::string>();
    } catch (const std::exception& e) {
        throw fail(std::string("bad header: ") + e.what());
    }
    TinyUNet net(arch);
    if (count != net.param_count() || header.at("layout") != layout_to_json(net.layout())) {
        throw fail("parameter layout does not match the architecture");
    }
    const std::size_t blob_at = 12 + header_len;
    if (bytes.size() - blob_at != 4 * count) {
        throw fail(fmt::format("parameter blob has {} bytes, expected {}", bytes.size() - blob_at, 4 * count));
    }
    for (std::size_t i = 0; i < count; ++i) net.params()[i] = std::bit_cast<float>(get_u32(bytes, blob_at + 4 * i));
    return {std::move(net), schedule, std::move(digest)};
}

void save_checkpoint(const std::filesystem::path& path, const TinyUNet& net, const ScheduleParams& schedule,
                     const std::string& train_digest) {
    write_file_atomic(path, encode_checkpoint(net, schedule, train_digest));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path), path.string());
}

}  // namespace ssb
