#include "ssb/config.hpp"

#include "ssb/io.hpp"

namespace ssb {

using nlohmann::json;

namespace {

[[noreturn]] void unknown(const std::string& section, const std::string& key) {
    throw std::invalid_argument(section + ": unknown key '" + key + "'");
}

}  // namespace

void SampleSettings::validate() const {
    if (chain.nfe < 1) throw std::invalid_argument("sample: nfe must be >= 1");
    if (!(chain.omega >= 0.0)) throw std::invalid_argument("sample: omega must be >= 0");
    if (num_samples < 1) throw std::invalid_argument("sample: num_samples must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("sample: threshold must be in (0, 1)");
    if (split != "train" && split != "test" && split != "all") {
        throw std::invalid_argument("sample: split must be train, test or all");
    }
}

void RunConfig::validate() const {
    if (schedule.n_steps < 2) throw std::invalid_argument("schedule: n_steps must be >= 2");
    if (!(schedule.total_variance > 0.0)) throw std::invalid_argument("schedule: total_variance must be > 0");
    arch.validate();
    train.validate();
    sample.validate();
    if (sample.chain.nfe > schedule.n_steps) throw std::invalid_argument("sample: nfe must not exceed n_steps");
    if (train.eta > arch.experts) throw std::invalid_argument("train: eta must not exceed arch.experts");
}

json to_json(const ScheduleParams& p) {
    return json{{"n_steps", p.n_steps}, {"total_variance", p.total_variance}};
}

ScheduleParams schedule_params_from_json(const json& j) {
    ScheduleParams p;
    for (const auto& [key, value] : j.items()) {
        if (key == "n_steps") p.n_steps = value.get<int>();
        else if (key == "total_variance") p.total_variance = value.get<double>();
        else unknown("schedule", key);
    }
    return p;
}

json to_json(const SampleSettings& s) {
    return json{{"omega", s.chain.omega},
                {"nfe", s.chain.nfe},
                {"stochastic", s.chain.stochastic},
                {"seed", s.chain.seed},
                {"num_samples", s.num_samples},
                {"threshold", s.threshold},
                {"save_continuous", s.save_continuous},
                {"split", s.split}};
}

SampleSettings sample_settings_from_json(const json& j) {
    SampleSettings s;
    for (const auto& [key, value] : j.items()) {
        if (key == "omega") s.chain.omega = value.get<double>();
        else if (key == "nfe") s.chain.nfe = value.get<int>();
        else if (key == "stochastic") s.chain.stochastic = value.get<bool>();
        else if (key == "seed") s.chain.seed = value.get<std::uint64_t>();
        else if (key == "num_samples") s.num_samples = value.get<int>();
        else if (key == "threshold") s.threshold = value.get<double>();
        else if (key == "save_continuous") s.save_continuous = value.get<bool>();
        else if (key == "split") s.split = value.get<std::string>();
        else unknown("sample", key);
    }
    s.validate();
    return s;
}

json to_json(const RunConfig& c) {
    return json{{"format_version", kConfigFormatVersion},
                {"schedule", to_json(c.schedule)},
                {"arch", to_json(c.arch)},
                {"train", to_json(c.train)},
                {"sample", to_json(c.sample)},
                {"data_dir", c.data_dir},
                {"output", c.output}};
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
    if (!j.contains("format_version")) throw std::invalid_argument("config: missing format_version");
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "format_version") {
                if (value.get<int>() != kConfigFormatVersion) {
                    throw std::invalid_argument("config: unsupported format_version " + value.dump());
                }
            } else if (key == "schedule") c.schedule = schedule_params_from_json(value);
            else if (key == "arch") c.arch = arch_config_from_json(value);
            else if (key == "train") c.train = train_config_from_json(value);
            else if (key == "sample") c.sample = sample_settings_from_json(value);
            else if (key == "data_dir") c.data_dir = value.get<std::string>();
            else if (key == "output") c.output = value.get<std::string>();
            else unknown("config", key);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& c) {
    write_file_atomic(path, to_json(c).dump(2) + "\n");
}

}  // namespace ssb
