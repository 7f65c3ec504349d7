#include "ssb/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace ssb {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Grid quantize8(const Grid& g) {
    Grid out = g;
    for (double& v : out.values()) v = static_cast<double>(to_byte(v)) / 255.0;
    return out;
}

std::string encode_pgm(const Grid& g) {
    std::string out = "P5\n" + std::to_string(g.width()) + " " + std::to_string(g.height()) + "\n255\n";
    out.reserve(out.size() + g.size());
    for (double v : g.values()) out.push_back(static_cast<char>(to_byte(v)));
    return out;
}

Grid decode_pgm(std::string_view bytes, const std::string& name) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        const std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') ++pos;
        if (pos == start) throw LoadError(name + ": malformed PGM header");
        return std::stol(std::string(bytes.substr(start, pos - start)));
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw LoadError(name + ": bad PGM magic (expected P5)");
    }
    pos = 2;
    const long width = read_int();
    const long height = read_int();
    const long maxval = read_int();
    if (width <= 0 || height <= 0) throw LoadError(name + ": non-positive PGM dimensions");
    if (maxval != 255) throw LoadError(name + ": only maxval 255 is supported");
    if (pos >= bytes.size()) throw LoadError(name + ": truncated PGM");
    ++pos;  // single whitespace before raster
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - pos != n) throw LoadError(name + ": PGM raster length mismatch");

    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) / 255.0;
    }
    return Grid(static_cast<int>(height), static_cast<int>(width), std::move(data));
}

void write_pgm(const fs::path& path, const Grid& g) { write_file_atomic(path, encode_pgm(g)); }

Grid read_pgm(const fs::path& path) { return decode_pgm(read_file(path), path.string()); }

Grid read_mask_pgm(const fs::path& path) {
    Grid g = read_pgm(path);
    for (double& v : g.values()) v = (std::lround(v * 255.0) >= 128) ? 1.0 : 0.0;
    return g;
}

void write_pfm(const fs::path& path, const Grid& g) {
    std::string out = "Pf\n" + std::to_string(g.width()) + " " + std::to_string(g.height()) + "\n-1.0\n";
    // PFM stores rows bottom to top.
    for (int r = g.height() - 1; r >= 0; --r) {
        for (int c = 0; c < g.width(); ++c) {
            const auto f = static_cast<float>(g(r, c));
            auto bits = std::bit_cast<std::uint32_t>(f);
            if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
            char buf[4];
            std::memcpy(buf, &bits, 4);
            out.append(buf, 4);
        }
    }
    write_file_atomic(path, out);
}

}  // namespace ssb
