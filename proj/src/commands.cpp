#include "ssb/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ssb/bridge.hpp"
#include "ssb/checkpoint.hpp"
#include "ssb/config.hpp"
#include "ssb/io.hpp"
#include "ssb/metrics.hpp"
#include "ssb/parallel.hpp"
#include "ssb/rng.hpp"
#include "ssb/train.hpp"
#include "ssb/verify.hpp"

namespace ssb {

namespace fs = std::filesystem;

namespace {

std::span<const DatasetRecord> select_split(const Dataset& ds, const std::string& split) {
    if (split == "train") return ds.train();
    if (split == "test") return ds.test();
    if (split == "all") return ds.records;
    throw std::invalid_argument("unknown split '" + split + "' (expected train, test or all)");
}

std::string fmt_num(double v) { return fmt::format("{:.12g}", v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

fs::path parent_or_dot(const fs::path& p) {
    const fs::path parent = p.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

RunConfig base_config(const std::optional<fs::path>& path) {
    return path ? load_run_config(*path) : RunConfig{};
}

// Runs body and maps exceptions onto exit codes.
template <typename Fn>
int guarded(std::ostream& err, const char* cmd, Fn&& body) {
    try {
        return body();
    } catch (const NumericalError& e) {
        fmt::print(err, "{}: {}\n", cmd, e.what());
        return kExitNumerical;
    } catch (const GenerationError& e) {
        fmt::print(err, "{}: {}\n", cmd, e.what());
        return kExitNumerical;
    } catch (const LoadError& e) {
        fmt::print(err, "{}: {}\n", cmd, e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        fmt::print(err, "{}: {}\n", cmd, e.what());
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "{}: {}\n", cmd, e.what());
        return kExitUsage;
    }
}

}  // namespace

std::uint64_t sample_stream(const std::string& id, int j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : id) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(h ^ (static_cast<std::uint64_t>(j) * 0x9E3779B97F4A7C15ULL));
}

int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, "gen-data", [&] {
        opts.data.validate();
        write_dataset(opts.data, opts.out);
        fmt::print(out, "wrote {} records ({} train, {} test) to {}\n", opts.data.count, opts.data.train_count(),
                   opts.data.count - opts.data.train_count(), opts.out.string());
        return int{kExitOk};
    });
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, "train", [&] {
        RunConfig cfg = base_config(opts.config);
        if (opts.steps) cfg.train.steps = *opts.steps;
        if (opts.batch) cfg.train.batch = *opts.batch;
        if (opts.lr) cfg.train.lr = *opts.lr;
        if (opts.seed) cfg.train.seed = *opts.seed;
        cfg.data_dir = opts.data.string();
        cfg.output = opts.out.string();

        const Dataset ds = load_dataset(opts.data);
        cfg.arch.grid_size = ds.config.grid_size;
        if (ds.config.experts < cfg.train.eta) {
            throw std::invalid_argument(fmt::format("dataset has {} experts but train.eta is {}",
                                                    ds.config.experts, cfg.train.eta));
        }
        cfg.validate();

        const Schedule schedule = make_schedule(cfg.schedule);
        const int every = std::max(1, cfg.train.steps / 20);
        const TrainProgress progress = [&](int it, double loss) {
            if (!opts.quiet && (it % every == 0 || it + 1 == cfg.train.steps)) {
                fmt::print(out, "iter {:>6}  loss {:.6f}\n", it, loss);
            }
        };
        const TrainResult result = train(ds, cfg.arch, cfg.train, schedule, progress);

        const fs::path dir = parent_or_dot(opts.out);
        fs::create_directories(dir);
        const nlohmann::json digest_src{{"train", to_json(cfg.train)}, {"arch", to_json(cfg.arch)},
                                        {"schedule", to_json(cfg.schedule)}};
        save_checkpoint(opts.out, result.net, cfg.schedule, config_digest(digest_src));

        std::string trace = "iteration,loss\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
            trace += fmt::format("{},{}\n", i, fmt_num(result.loss_trace[i]));
        }
        write_file_atomic(dir / "loss_trace.csv", trace);
        save_run_config(dir / "effective_config.json", cfg);
        fmt::print(out, "wrote checkpoint {} ({} parameters, {} steps)\n", opts.out.string(),
                   result.net.param_count(), result.loss_trace.size());
        return int{kExitOk};
    });
}

int cmd_sample(const SampleOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, "sample", [&] {
        RunConfig cfg = base_config(opts.config);
        SampleSettings& ss = cfg.sample;
        if (opts.split) ss.split = *opts.split;
        if (opts.num_samples) ss.num_samples = *opts.num_samples;
        if (opts.omega) ss.chain.omega = *opts.omega;
        if (opts.nfe) ss.chain.nfe = *opts.nfe;
        if (opts.seed) ss.chain.seed = *opts.seed;
        if (opts.stochastic) ss.chain.stochastic = *opts.stochastic;
        if (opts.save_continuous) ss.save_continuous = *opts.save_continuous;

        const Checkpoint ckpt = load_checkpoint(opts.ckpt);
        cfg.schedule = ckpt.schedule;
        cfg.arch = ckpt.net.arch();
        cfg.train.eta = std::min(cfg.train.eta, cfg.arch.experts);
        cfg.data_dir = opts.data.string();
        cfg.output = opts.out.string();
        cfg.validate();

        const Dataset ds = load_dataset(opts.data);
        if (ds.config.grid_size != cfg.arch.grid_size) {
            throw std::invalid_argument("dataset grid size does not match the checkpoint");
        }
        const auto records = select_split(ds, ss.split);
        const Schedule schedule = make_schedule(cfg.schedule);
        const auto net = std::make_shared<const TinyUNet>(ckpt.net);
        const UNetPredictor predictor(net);
        const int eta = cfg.arch.experts;
        const auto k = static_cast<std::size_t>(ss.num_samples);

        std::vector<Grid> results(records.size() * k);
        parallel_for(results.size(), [&](std::size_t task) {
            const DatasetRecord& rec = records[task / k];
            const int j = static_cast<int>(task % k);
            const Label label = Label::expert(j % eta + 1);
            results[task] = generate(predictor, rec.image, label, ss.chain, schedule, sample_stream(rec.id, j));
        });

        const fs::path pred_dir = opts.out / "pred";
        fs::create_directories(pred_dir);
        for (std::size_t task = 0; task < results.size(); ++task) {
            const DatasetRecord& rec = records[task / k];
            const std::string stem = fmt::format("{}_s{}", rec.id, task % k);
            write_pgm(pred_dir / (stem + ".pgm"), threshold(results[task], ss.threshold));
            if (ss.save_continuous) write_pfm(pred_dir / (stem + ".pfm"), results[task]);
        }
        save_run_config(opts.out / "effective_config.json", cfg);
        fmt::print(out, "wrote {} masks for {} images to {}\n", results.size(), records.size(), pred_dir.string());
        return int{kExitOk};
    });
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, "evaluate", [&] {
        const Dataset ds = load_dataset(opts.data);
        const auto records = select_split(ds, opts.split);
        fs::path pred_dir = opts.pred;
        if (fs::is_directory(pred_dir / "pred")) pred_dir /= "pred";
        if (!fs::is_directory(pred_dir)) throw LoadError("prediction directory not found: " + opts.pred.string());

        std::string csv = "id,ged,d_max,ci,d_a,ddi_exp,ddi_gen\n";
        std::map<std::string, std::pair<double, int>> sums;
        const auto add = [&](const std::string& key, const std::optional<double>& v) {
            if (!v) return;
            auto& [sum, n] = sums[key];
            sum += *v;
            ++n;
        };
        for (const DatasetRecord& rec : records) {
            std::vector<Grid> generated;
            for (int j = 0;; ++j) {
                const fs::path p = pred_dir / fmt::format("{}_s{}.pgm", rec.id, j);
                if (!fs::exists(p)) break;
                Grid g = read_mask_pgm(p);
                if (!g.same_shape(rec.image)) throw LoadError(p.string() + ": shape does not match the image");
                generated.push_back(std::move(g));
            }
            if (generated.empty()) {
                throw LoadError(fmt::format("no predictions for {} in {}", rec.id, pred_dir.string()));
            }
            const MetricsReport r = evaluate_masks(MaskSet(std::move(generated), MaskSet::Role::Generated),
                                                   MaskSet(rec.expert_masks, MaskSet::Role::Expert));
            csv += fmt::format("{},{},{},{},{},{},{}\n", rec.id, fmt_num(r.ged), fmt_num(r.d_max), fmt_num(r.ci),
                               fmt_opt(r.d_a), fmt_opt(r.ddi_exp), fmt_opt(r.ddi_gen));
            add("ged", r.ged);
            add("d_max", r.d_max);
            add("ci", r.ci);
            add("d_a", r.d_a);
            add("ddi_exp", r.ddi_exp);
            add("ddi_gen", r.ddi_gen);
        }
        const auto mean = [&](const std::string& key) -> std::optional<double> {
            const auto it = sums.find(key);
            if (it == sums.end()) return std::nullopt;
            return it->second.first / it->second.second;
        };
        csv += fmt::format("AGGREGATE,{},{},{},{},{},{}\n", fmt_opt(mean("ged")), fmt_opt(mean("d_max")),
                           fmt_opt(mean("ci")), fmt_opt(mean("d_a")), fmt_opt(mean("ddi_exp")),
                           fmt_opt(mean("ddi_gen")));
        if (!opts.report.parent_path().empty()) fs::create_directories(opts.report.parent_path());
        write_file_atomic(opts.report, csv);
        fmt::print(out, "evaluated {} images: GED {} D_max {} CI {}\n", records.size(), fmt_opt(mean("ged")),
                   fmt_opt(mean("d_max")), fmt_opt(mean("ci")));
        return int{kExitOk};
    });
}

int cmd_verify(const VerifyCommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, "verify", [&] {
        const std::vector<CheckResult> results = run_verification({opts.inject_fault, opts.seed});
        std::size_t width = 0;
        for (const CheckResult& r : results) width = std::max(width, r.name.size());
        bool all = true;
        for (const CheckResult& r : results) {
            fmt::print(out, "{:<{}}  {}  {}\n", r.name, width, r.passed ? "PASS" : "FAIL", r.detail);
            all = all && r.passed;
        }
        fmt::print(out, "{}\n", all ? "all checks passed" : "verification FAILED");
        return int{all ? kExitOk : kExitCheckFailed};
    });
}

}  // namespace ssb
