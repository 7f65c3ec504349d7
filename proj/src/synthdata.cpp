#include "ssb/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "ssb/io.hpp"
#include "ssb/metrics.hpp"
#include "ssb/rng.hpp"

namespace ssb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kImageStream = 1;
constexpr std::uint64_t kExpertStream = 2;
constexpr int kBackgroundModes = 6;
constexpr int kJitterHarmonics = 3;

// Rotated superellipse in pixel units.
struct Blob {
    double cx, cy;
    double rx, ry;
    double cos_t, sin_t;
    double exponent;
    double softness;

    double mean_radius() const { return 0.5 * (rx + ry); }

    // Superellipse level set value: < 1 inside, 1 on the boundary.
    double level(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = (cos_t * dx + sin_t * dy) / rx;
        const double v = (-sin_t * dx + cos_t * dy) / ry;
        return std::pow(std::pow(std::abs(u), exponent) + std::pow(std::abs(v), exponent),
                        1.0 / exponent);
    }

    double angle(double x, double y) const {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = (cos_t * dx + sin_t * dy) / rx;
        const double v = (-sin_t * dx + cos_t * dy) / ry;
        return std::atan2(v, u);
    }

    // Approximate signed distance to the boundary in pixels (negative inside).
    double signed_distance(double x, double y) const {
        return (level(x, y) - 1.0) * mean_radius();
    }
};

struct Bounds {
    int r0, r1, c0, c1;  // inclusive
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Blob draw_blob(int size, Rng& rng) {
    const double s = size;
    Blob b{};
    b.cx = rng.uniform(0.35, 0.65) * s;
    b.cy = rng.uniform(0.35, 0.65) * s;
    b.rx = rng.uniform(0.12, 0.22) * s;
    b.ry = rng.uniform(0.12, 0.22) * s;
    const double theta = rng.uniform(0.0, std::numbers::pi);
    b.cos_t = std::cos(theta);
    b.sin_t = std::sin(theta);
    b.exponent = rng.uniform(1.6, 3.0);
    b.softness = rng.uniform(0.6, 1.6);
    return b;
}

Grid render_image(const Blob& blob, int size, Rng& rng) {
    const double s = size;
    const double base = rng.uniform(0.15, 0.30);
    const double ramp = rng.uniform(0.0, 0.15);
    const double ramp_dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double contrast = rng.uniform(0.35, 0.55);

    struct Mode {
        double kx, ky, phase, amp;
    };
    std::vector<Mode> modes(kBackgroundModes);
    for (Mode& m : modes) {
        m.kx = rng.uniform(-3.0, 3.0) * 2.0 * std::numbers::pi / s;
        m.ky = rng.uniform(-3.0, 3.0) * 2.0 * std::numbers::pi / s;
        m.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        m.amp = rng.uniform(0.0, 0.03);
    }

    Grid img(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double x = c + 0.5;
            const double y = r + 0.5;
            double v = base;
            v += ramp * ((x / s - 0.5) * std::cos(ramp_dir) + (y / s - 0.5) * std::sin(ramp_dir));
            for (const Mode& m : modes) v += m.amp * std::sin(m.kx * x + m.ky * y + m.phase);
            v += contrast * sigmoid(-blob.signed_distance(x, y) / blob.softness);
            v += 0.03 * rng.normal();
            img(r, c) = v;
        }
    }
    return quantize8(img);
}

Bounds true_region_bounds(const Blob& blob, int size) {
    Bounds b{size, -1, size, -1};
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            if (blob.level(c + 0.5, r + 0.5) <= 1.0) {
                b.r0 = std::min(b.r0, r);
                b.r1 = std::max(b.r1, r);
                b.c0 = std::min(b.c0, c);
                b.c1 = std::max(b.c1, c);
            }
        }
    }
    if (b.r1 < 0) {
        // Degenerate blob smaller than a pixel: use the pixel under the centre.
        const int r = std::clamp(static_cast<int>(blob.cy), 0, size - 1);
        const int c = std::clamp(static_cast<int>(blob.cx), 0, size - 1);
        b = {r, r, c, c};
    }
    return b;
}

Grid expert_mask(const Blob& blob, int size, int expert, int experts, double ambiguity, Rng& rng) {
    const double r_mean = blob.mean_radius();
    const double position = experts > 1 ? -1.0 + 2.0 * expert / (experts - 1) : 0.0;
    const double bias = position * ambiguity * 0.35 * r_mean;
    const double jitter_amp = 0.12 * ambiguity * r_mean;

    double weights[kJitterHarmonics];
    double phases[kJitterHarmonics];
    double norm = 0.0;
    for (int h = 0; h < kJitterHarmonics; ++h) {
        weights[h] = rng.uniform(0.2, 1.0);
        phases[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        norm += weights[h];
    }

    Grid mask(size, size);
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double x = c + 0.5;
            const double y = r + 0.5;
            double offset = bias;
            if (jitter_amp > 0.0) {
                const double phi = blob.angle(x, y);
                double j = 0.0;
                for (int h = 0; h < kJitterHarmonics; ++h) {
                    j += weights[h] * std::cos((h + 2) * phi + phases[h]);
                }
                offset += jitter_amp * j / norm;
            }
            mask(r, c) = blob.signed_distance(x, y) <= offset ? 1.0 : 0.0;
        }
    }

    const Bounds bb = true_region_bounds(blob, size);
    bool touches = false;
    for (int r = bb.r0; r <= bb.r1 && !touches; ++r) {
        for (int c = bb.c0; c <= bb.c1; ++c) {
            if (mask(r, c) == 1.0) {
                touches = true;
                break;
            }
        }
    }
    if (!touches) {
        mask(std::clamp(static_cast<int>(blob.cy), bb.r0, bb.r1),
             std::clamp(static_cast<int>(blob.cx), bb.c0, bb.c1)) = 1.0;
    }
    return mask;
}

std::string mask_path(const std::string& id, int expert) {
    return "masks/" + id + "_e" + std::to_string(expert) + ".pgm";
}

}  // namespace

void DatasetConfig::validate() const {
    if (count < 0) throw std::invalid_argument("DatasetConfig: count must be >= 0");
    if (grid_size != 32 && grid_size != 64) {
        throw std::invalid_argument("DatasetConfig: grid_size must be 32 or 64");
    }
    if (experts < 1) throw std::invalid_argument("DatasetConfig: experts must be >= 1");
    if (!(ambiguity >= 0.0 && ambiguity <= 1.0)) {
        throw std::invalid_argument("DatasetConfig: ambiguity must be in [0, 1]");
    }
    if (!(split > 0.0 && split < 1.0)) throw std::invalid_argument("DatasetConfig: split must be in (0, 1)");
}

int DatasetConfig::train_count() const {
    return static_cast<int>(std::floor(static_cast<double>(count) * split + 1e-9));
}

std::string record_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "r%05d", index);
    return buf;
}

DatasetRecord gen_record(const DatasetConfig& cfg, int index) {
    cfg.validate();
    if (index < 0 || index >= cfg.count) throw std::invalid_argument("gen_record: index out of range");

    Rng image_rng = Rng(cfg.seed, kImageStream).split(static_cast<std::uint64_t>(index));
    const Blob blob = draw_blob(cfg.grid_size, image_rng);

    DatasetRecord rec;
    rec.id = record_id(index);
    rec.provenance = {cfg.seed, index, kGeneratorVersion};
    rec.image = render_image(blob, cfg.grid_size, image_rng);

    const Rng expert_base = Rng(cfg.seed, kExpertStream).split(static_cast<std::uint64_t>(index));
    for (int k = 0; k < cfg.experts; ++k) {
        Rng rng = expert_base.split(static_cast<std::uint64_t>(k));
        rec.expert_masks.push_back(expert_mask(blob, cfg.grid_size, k, cfg.experts, cfg.ambiguity, rng));
    }
    return rec;
}

Dataset gen_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    ds.records.reserve(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) ds.records.push_back(gen_record(cfg, i));
    ds.train_count = static_cast<std::size_t>(cfg.train_count());
    return ds;
}

json to_json(const DatasetConfig& cfg) {
    return json{{"count", cfg.count},     {"grid_size", cfg.grid_size}, {"experts", cfg.experts},
                {"ambiguity", cfg.ambiguity}, {"split", cfg.split},     {"seed", cfg.seed}};
}

DatasetConfig dataset_config_from_json(const json& j) {
    DatasetConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "count") cfg.count = value.get<int>();
        else if (key == "grid_size") cfg.grid_size = value.get<int>();
        else if (key == "experts") cfg.experts = value.get<int>();
        else if (key == "ambiguity") cfg.ambiguity = value.get<double>();
        else if (key == "split") cfg.split = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else throw std::invalid_argument("dataset config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

void write_dataset(const DatasetConfig& cfg, const fs::path& dir) {
    cfg.validate();
    fs::create_directories(dir / "img");
    fs::create_directories(dir / "masks");
    const int train = cfg.train_count();

    json records = json::array();
    for (int i = 0; i < cfg.count; ++i) {
        const DatasetRecord rec = gen_record(cfg, i);
        const std::string image_rel = "img/" + rec.id + ".pgm";
        write_pgm(dir / image_rel, rec.image);
        json masks = json::array();
        for (int k = 0; k < cfg.experts; ++k) {
            const std::string rel = mask_path(rec.id, k + 1);
            write_pgm(dir / rel, rec.expert_masks[static_cast<std::size_t>(k)]);
            masks.push_back(rel);
        }
        records.push_back({{"id", rec.id},
                           {"index", i},
                           {"split", i < train ? "train" : "test"},
                           {"image", image_rel},
                           {"masks", masks}});
    }
    const json manifest = {{"format_version", kDatasetFormatVersion},
                           {"generator_version", kGeneratorVersion},
                           {"config", to_json(cfg)},
                           {"records", records}};
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw LoadError(manifest_path.string() + ": " + e.what());
    }
    try {
        if (manifest.at("format_version").get<int>() != kDatasetFormatVersion) {
            throw LoadError(manifest_path.string() + ": unsupported format_version");
        }
        Dataset ds;
        ds.config = dataset_config_from_json(manifest.at("config"));
        const auto& records = manifest.at("records");
        if (static_cast<int>(records.size()) != ds.config.count) {
            throw LoadError(manifest_path.string() + ": record count does not match config");
        }
        bool seen_test = false;
        for (const auto& entry : records) {
            DatasetRecord rec;
            rec.id = entry.at("id").get<std::string>();
            rec.provenance = {ds.config.seed, entry.at("index").get<int>(),
                              manifest.at("generator_version").get<std::string>()};
            const fs::path image_path = dir / entry.at("image").get<std::string>();
            rec.image = read_pgm(image_path);
            if (rec.image.height() != ds.config.grid_size || rec.image.width() != ds.config.grid_size) {
                throw LoadError(image_path.string() + ": image shape does not match grid_size");
            }
            const auto& masks = entry.at("masks");
            if (static_cast<int>(masks.size()) != ds.config.experts) {
                throw LoadError(manifest_path.string() + ": record " + rec.id + " has wrong mask count");
            }
            for (const auto& m : masks) {
                const fs::path mp = dir / m.get<std::string>();
                Grid mask = read_mask_pgm(mp);
                if (!mask.same_shape(rec.image)) throw LoadError(mp.string() + ": mask shape mismatch");
                rec.expert_masks.push_back(std::move(mask));
            }
            const std::string split = entry.at("split").get<std::string>();
            if (split == "train") {
                if (seen_test) throw LoadError(manifest_path.string() + ": train record after test records");
                ++ds.train_count;
            } else if (split == "test") {
                seen_test = true;
            } else {
                throw LoadError(manifest_path.string() + ": unknown split '" + split + "'");
            }
            ds.records.push_back(std::move(rec));
        }
        return ds;
    } catch (const json::exception& e) {
        throw LoadError(manifest_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw LoadError(manifest_path.string() + ": " + e.what());
    }
}

double mean_expert_divergence(std::span<const DatasetRecord> records) {
    double total = 0.0;
    for (const DatasetRecord& rec : records) {
        double sum = 0.0;
        double pairs = 0.0;
        for (std::size_t i = 0; i < rec.expert_masks.size(); ++i) {
            for (std::size_t j = i + 1; j < rec.expert_masks.size(); ++j) {
                sum += 1.0 - iou(rec.expert_masks[i], rec.expert_masks[j]);
                pairs += 1.0;
            }
        }
        if (pairs > 0.0) total += sum / pairs;
    }
    return records.empty() ? 0.0 : total / static_cast<double>(records.size());
}

}  // namespace ssb
