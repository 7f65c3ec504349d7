// Command-line front end: gen-data, train, sample, evaluate, verify.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ssb/commands.hpp"

namespace {

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmentation Schrodinger bridge: synthetic data, training, sampling and evaluation"};
    app.require_subcommand(1);

    ssb::GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic multi-expert dataset");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();
    gen_cmd->add_option("--count", gen.data.count, "Number of records")->capture_default_str();
    gen_cmd->add_option("--experts", gen.data.experts, "Expert masks per image")->capture_default_str();
    gen_cmd->add_option("--ambiguity", gen.data.ambiguity, "Expert disagreement in [0, 1]")->capture_default_str();
    gen_cmd->add_option("--size", gen.data.grid_size, "Image side length (32 or 64)")->capture_default_str();
    gen_cmd->add_option("--split", gen.data.split, "Training fraction")->capture_default_str();
    gen_cmd->add_option("--seed", gen.data.seed, "Random seed")->capture_default_str();

    ssb::TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train", "Train the noise predictor");
    train_cmd->add_option("--data", tr.data, "Dataset directory")->required();
    train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();
    optional_flag(train_cmd, "--config", tr.config, "JSON run config");
    optional_flag(train_cmd, "--steps", tr.steps, "Override train.steps");
    optional_flag(train_cmd, "--batch", tr.batch, "Override train.batch");
    optional_flag(train_cmd, "--lr", tr.lr, "Override train.lr");
    optional_flag(train_cmd, "--seed", tr.seed, "Override train.seed");
    train_cmd->add_flag("--quiet", tr.quiet, "Suppress progress lines");

    ssb::SampleOptions sm;
    auto* sample_cmd = app.add_subcommand("sample", "Generate masks for a dataset split");
    sample_cmd->add_option("--ckpt", sm.ckpt, "Checkpoint path")->required();
    sample_cmd->add_option("--data", sm.data, "Dataset directory")->required();
    sample_cmd->add_option("--out", sm.out, "Output directory")->required();
    optional_flag(sample_cmd, "--config", sm.config, "JSON run config");
    optional_flag(sample_cmd, "--split", sm.split, "train, test or all");
    optional_flag(sample_cmd, "--num-samples", sm.num_samples, "Masks per image");
    optional_flag(sample_cmd, "--omega", sm.omega, "Guidance scale");
    optional_flag(sample_cmd, "--nfe", sm.nfe, "Predictor calls per chain");
    optional_flag(sample_cmd, "--seed", sm.seed, "Sampling seed");
    optional_flag(sample_cmd, "--stochastic", sm.stochastic, "Inject noise in reverse steps (true/false)");
    sample_cmd->add_flag_callback("--continuous", [&sm] { sm.save_continuous = true; },
                                  "Also write unthresholded outputs as PFM");

    ssb::EvaluateOptions ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score generated masks against the experts");
    eval_cmd->add_option("--pred", ev.pred, "Sample output directory")->required();
    eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
    eval_cmd->add_option("--split", ev.split, "train, test or all")->capture_default_str();
    eval_cmd->add_option("--report", ev.report, "CSV report path")->required();

    ssb::VerifyCommandOptions vf;
    auto* verify_cmd = app.add_subcommand("verify", "Run the built-in oracle checks");
    verify_cmd->add_flag("--inject-fault", vf.inject_fault, "Corrupt the schedule (negative control)");
    verify_cmd->add_option("--seed", vf.seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ssb::kExitUsage;
    }

    try {
        if (*gen_cmd) return ssb::cmd_gen_data(gen, std::cout, std::cerr);
        if (*train_cmd) return ssb::cmd_train(tr, std::cout, std::cerr);
        if (*sample_cmd) return ssb::cmd_sample(sm, std::cout, std::cerr);
        if (*eval_cmd) return ssb::cmd_evaluate(ev, std::cout, std::cerr);
        if (*verify_cmd) return ssb::cmd_verify(vf, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ssb::kExitNumerical;
    }
    return ssb::kExitUsage;
}
