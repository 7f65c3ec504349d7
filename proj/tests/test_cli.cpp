#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssb/bridge.hpp"
#include "ssb/checkpoint.hpp"
#include "ssb/commands.hpp"
#include "ssb/io.hpp"
#include "ssb/unet.hpp"

using namespace ssb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ssb_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct Outcome {
    int rc = 0;
    std::string out;
    std::string err;
};

template <typename Fn>
Outcome run(Fn&& fn) {
    std::ostringstream out;
    std::ostringstream err;
    const int rc = fn(out, err);
    return {rc, out.str(), err.str()};
}

Outcome gen_data(const fs::path& dir, int count, int experts = 4, double ambiguity = 0.5, double split = 0.75) {
    GenDataOptions o;
    o.out = dir;
    o.data.count = count;
    o.data.experts = experts;
    o.data.ambiguity = ambiguity;
    o.data.split = split;
    o.data.seed = 3;
    return run([&](auto& out, auto& err) { return cmd_gen_data(o, out, err); });
}

Outcome train(const fs::path& data, const fs::path& ckpt, int steps, std::optional<fs::path> config = std::nullopt) {
    TrainOptions o;
    o.data = data;
    o.out = ckpt;
    o.steps = steps;
    o.batch = 2;
    o.seed = 5;
    o.quiet = true;
    o.config = std::move(config);
    return run([&](auto& out, auto& err) { return cmd_train(o, out, err); });
}

// Parses every row of an evaluate report, keyed by id then column.
std::map<std::string, std::map<std::string, std::string>> read_report(const fs::path& p) {
    std::istringstream in(read_file(p));
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    std::istringstream h(line);
    for (std::string f; std::getline(h, f, ',');) cols.push_back(f);
    std::map<std::string, std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
            fields.push_back(line.substr(start, pos - start));
        }
        fields.push_back(line.substr(start));
        for (std::size_t i = 1; i < cols.size(); ++i) rows[fields[0]][cols[i]] = fields.at(i);
    }
    return rows;
}

void copy_experts_as_predictions(const fs::path& data, const fs::path& pred) {
    fs::create_directories(pred);
    const Dataset ds = load_dataset(data);
    for (const DatasetRecord& r : ds.test()) {
        for (std::size_t k = 0; k < r.expert_masks.size(); ++k) {
            write_pgm(pred / (r.id + "_s" + std::to_string(k) + ".pgm"), r.expert_masks[k]);
        }
    }
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(SSB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(GenData, EmptyDataset) {
    const fs::path dir = scratch("gen_empty");
    const Outcome r = gen_data(dir / "d", 0);
    EXPECT_EQ(r.rc, kExitOk) << r.err;
    EXPECT_TRUE(load_dataset(dir / "d").records.empty());
    fs::remove_all(dir);
}

TEST(GenData, RepeatIsByteIdentical) {
    const fs::path dir = scratch("gen_repeat");
    ASSERT_EQ(gen_data(dir / "a", 6).rc, kExitOk);
    ASSERT_EQ(gen_data(dir / "b", 6).rc, kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
        if (!e.is_regular_file()) continue;
        ++files;
        EXPECT_EQ(read_file(e.path()), read_file(dir / "b" / fs::relative(e.path(), dir / "a")));
    }
    EXPECT_EQ(files, 1u + 6u + 24u);
    fs::remove_all(dir);
}

TEST(GenData, ManifestListsEveryMask) {
    const fs::path dir = scratch("gen_masks");
    ASSERT_EQ(gen_data(dir / "d", 100, 4, 0.5, 0.9).rc, kExitOk);
    const auto manifest = nlohmann::json::parse(read_file(dir / "d" / "manifest.json"));
    std::size_t masks = 0;
    int train_records = 0;
    for (const auto& rec : manifest.at("records")) {
        masks += rec.at("masks").size();
        train_records += rec.at("split") == "train";
    }
    EXPECT_EQ(masks, 400u);
    EXPECT_EQ(train_records, 90);
    fs::remove_all(dir);
}

TEST(GenData, BadConfigIsUsageError) {
    const fs::path dir = scratch("gen_bad");
    EXPECT_EQ(gen_data(dir / "d", 5, 4, 1.5).rc, kExitUsage);
    EXPECT_EQ(gen_data(dir / "d", 5, 0).rc, kExitUsage);
    fs::remove_all(dir);
}

TEST(TrainCommand, ZeroStepsWritesInitialNet) {
    const fs::path dir = scratch("train_zero");
    ASSERT_EQ(gen_data(dir / "d", 4).rc, kExitOk);
    const Outcome r = train(dir / "d", dir / "m" / "model.ssbc", 0);
    ASSERT_EQ(r.rc, kExitOk) << r.err;
    const Checkpoint ck = load_checkpoint(dir / "m" / "model.ssbc");
    EXPECT_EQ(ck.net.params(), TinyUNet::init(ck.net.arch(), 5).params());
    EXPECT_EQ(read_file(dir / "m" / "loss_trace.csv"), "iteration,loss\n");
    EXPECT_TRUE(fs::exists(dir / "m" / "effective_config.json"));
    fs::remove_all(dir);
}

TEST(TrainCommand, SameSeedSameBytes) {
    const fs::path dir = scratch("train_bytes");
    ASSERT_EQ(gen_data(dir / "d", 4).rc, kExitOk);
    ASSERT_EQ(train(dir / "d", dir / "a" / "model.ssbc", 3).rc, kExitOk);
    ASSERT_EQ(train(dir / "d", dir / "b" / "model.ssbc", 3).rc, kExitOk);
    EXPECT_EQ(read_file(dir / "a" / "model.ssbc"), read_file(dir / "b" / "model.ssbc"));
    EXPECT_EQ(read_file(dir / "a" / "loss_trace.csv"), read_file(dir / "b" / "loss_trace.csv"));
    fs::remove_all(dir);
}

TEST(TrainCommand, ConfigErrors) {
    const fs::path dir = scratch("train_cfg");
    ASSERT_EQ(gen_data(dir / "d", 4).rc, kExitOk);
    write_file_atomic(dir / "unknown.json", R"({"format_version": 1, "train": {"stepz": 3}})");
    EXPECT_EQ(train(dir / "d", dir / "m" / "model.ssbc", 1, dir / "unknown.json").rc, kExitUsage);
    write_file_atomic(dir / "broken.json", "{ not json");
    EXPECT_EQ(train(dir / "d", dir / "m" / "model.ssbc", 1, dir / "broken.json").rc, kExitUsage);
    EXPECT_EQ(train(dir / "missing", dir / "m" / "model.ssbc", 1).rc, kExitUsage);
    EXPECT_FALSE(fs::exists(dir / "m" / "model.ssbc"));
    fs::remove_all(dir);
}

TEST(TrainCommand, DivergenceIsNumericalFailure) {
    const fs::path dir = scratch("train_nan");
    ASSERT_EQ(gen_data(dir / "d", 4).rc, kExitOk);
    TrainOptions o;
    o.data = dir / "d";
    o.out = dir / "m" / "model.ssbc";
    o.steps = 20;
    o.batch = 2;
    o.lr = 1e38;
    o.quiet = true;
    const Outcome r = run([&](auto& out, auto& err) { return cmd_train(o, out, err); });
    EXPECT_EQ(r.rc, kExitNumerical) << r.err;
    fs::remove_all(dir);
}

class SampleCommand : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = scratch("sample");
        ASSERT_EQ(gen_data(dir_ / "d", 8).rc, kExitOk);
        ASSERT_EQ(train(dir_ / "d", dir_ / "m" / "model.ssbc", 2).rc, kExitOk);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }

    static Outcome sample(const fs::path& out, int k, double omega, int nfe = 5) {
        SampleOptions o;
        o.ckpt = dir_ / "m" / "model.ssbc";
        o.data = dir_ / "d";
        o.out = out;
        o.num_samples = k;
        o.omega = omega;
        o.nfe = nfe;
        o.seed = 4;
        o.save_continuous = true;
        return run([&](auto& so, auto& se) { return cmd_sample(o, so, se); });
    }

    static inline fs::path dir_;
};

TEST_F(SampleCommand, OneMaskPerImage) {
    ASSERT_EQ(sample(dir_ / "one", 1, 0.0).rc, kExitOk);
    std::size_t pgm = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "one" / "pred")) pgm += e.path().extension() == ".pgm";
    EXPECT_EQ(pgm, 2u);
    EXPECT_TRUE(fs::exists(dir_ / "one" / "pred" / "r00006_s0.pgm"));
    EXPECT_TRUE(fs::exists(dir_ / "one" / "pred" / "r00006_s0.pfm"));
    EXPECT_TRUE(fs::exists(dir_ / "one" / "effective_config.json"));
}

TEST_F(SampleCommand, ZeroOmegaMatchesConditionalChain) {
    ASSERT_EQ(sample(dir_ / "w0", 2, 0.0).rc, kExitOk);
    const Checkpoint ck = load_checkpoint(dir_ / "m" / "model.ssbc");
    const auto net = std::make_shared<const TinyUNet>(ck.net);
    const UNetPredictor pred(net);
    const Schedule s = make_schedule(ck.schedule);
    const Dataset ds = load_dataset(dir_ / "d");
    for (const DatasetRecord& rec : ds.test()) {
        for (int j = 0; j < 2; ++j) {
            // The chain written out by hand with the plain conditional prediction.
            Rng rng(4, sample_stream(rec.id, j));
            const Label label = Label::expert(j % ck.net.arch().experts + 1);
            const std::vector<int> ladder = step_ladder(s.n_steps(), 5);
            Grid x = rec.image;
            for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
                const Grid x0_hat = predict_x0(x, pred.predict(x, label, ladder[k]), ladder[k], s);
                x = reverse_step(x, x0_hat, ladder[k], ladder[k + 1], s, true, rng);
            }
            const fs::path stem = dir_ / "w0" / "pred" / (rec.id + "_s" + std::to_string(j));
            EXPECT_EQ(read_file(stem.string() + ".pgm"), encode_pgm(threshold(x, 0.5)));
        }
    }
}

TEST_F(SampleCommand, Deterministic) {
    ASSERT_EQ(sample(dir_ / "r1", 2, 1.0).rc, kExitOk);
    ASSERT_EQ(sample(dir_ / "r2", 2, 1.0).rc, kExitOk);
    for (const auto& e : fs::directory_iterator(dir_ / "r1" / "pred")) {
        EXPECT_EQ(read_file(e.path()), read_file(dir_ / "r2" / "pred" / e.path().filename()));
    }
}

TEST_F(SampleCommand, RejectsBadInputs) {
    EXPECT_EQ(sample(dir_ / "bad", 0, 0.0).rc, kExitUsage);
    EXPECT_EQ(sample(dir_ / "bad", 1, 0.0, 500).rc, kExitUsage);
    write_file_atomic(dir_ / "junk.ssbc", "not a checkpoint");
    SampleOptions o;
    o.ckpt = dir_ / "junk.ssbc";
    o.data = dir_ / "d";
    o.out = dir_ / "bad";
    EXPECT_EQ(run([&](auto& so, auto& se) { return cmd_sample(o, so, se); }).rc, kExitUsage);
}

TEST(EvaluateCommand, CopiedExpertsArePerfect) {
    const fs::path dir = scratch("eval_copy");
    ASSERT_EQ(gen_data(dir / "d", 8, 4, 0.6).rc, kExitOk);
    copy_experts_as_predictions(dir / "d", dir / "p" / "pred");
    EvaluateOptions o;
    o.pred = dir / "p";
    o.data = dir / "d";
    o.report = dir / "report.csv";
    ASSERT_EQ(run([&](auto& so, auto& se) { return cmd_evaluate(o, so, se); }).rc, kExitOk);
    EXPECT_EQ(read_file(o.report).substr(0, 36), "id,ged,d_max,ci,d_a,ddi_exp,ddi_gen\n");
    const auto rows = read_report(o.report);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& [id, row] : rows) {
        EXPECT_NEAR(std::stod(row.at("ged")), 0.0, 1e-12) << id;
        EXPECT_EQ(std::stod(row.at("d_max")), 1.0) << id;
        EXPECT_EQ(std::stod(row.at("ci")), 1.0) << id;
        EXPECT_EQ(std::stod(row.at("d_a")), 1.0) << id;
    }
    fs::remove_all(dir);
}

TEST(EvaluateCommand, SingleExpertLeavesDdiExpEmpty) {
    const fs::path dir = scratch("eval_single");
    ASSERT_EQ(gen_data(dir / "d", 4, 1).rc, kExitOk);
    fs::create_directories(dir / "p");
    const Dataset ds = load_dataset(dir / "d");
    for (const DatasetRecord& r : ds.test()) {
        write_pgm(dir / "p" / (r.id + "_s0.pgm"), r.expert_masks[0]);
        write_pgm(dir / "p" / (r.id + "_s1.pgm"), Grid::constant_like(r.image, 0.0));
    }
    EvaluateOptions o;
    o.pred = dir / "p";
    o.data = dir / "d";
    o.report = dir / "report.csv";
    ASSERT_EQ(run([&](auto& so, auto& se) { return cmd_evaluate(o, so, se); }).rc, kExitOk);
    for (const auto& [id, row] : read_report(o.report)) {
        EXPECT_EQ(row.at("ddi_exp"), "") << id;
        EXPECT_EQ(row.at("d_a"), "") << id;
        EXPECT_NE(row.at("ddi_gen"), "") << id;
    }
    fs::remove_all(dir);
}

TEST(EvaluateCommand, MissingPredictionsIsLoadError) {
    const fs::path dir = scratch("eval_missing");
    ASSERT_EQ(gen_data(dir / "d", 4).rc, kExitOk);
    fs::create_directories(dir / "p");
    EvaluateOptions o;
    o.pred = dir / "p";
    o.data = dir / "d";
    o.report = dir / "report.csv";
    EXPECT_EQ(run([&](auto& so, auto& se) { return cmd_evaluate(o, so, se); }).rc, kExitUsage);
    fs::remove_all(dir);
}

// Two test images on a 32x32 grid with rectangle masks evaluated by hand.
TEST(EvaluateCommand, HandBuiltFixture) {
    const fs::path dir = scratch("eval_fixture");
    const auto rect = [](int r0, int r1, int c0, int c1) {
        Grid g(32, 32);
        for (int r = r0; r < r1; ++r)
            for (int c = c0; c < c1; ++c) g(r, c) = 1.0;
        return g;
    };
    const Grid e1 = rect(0, 8, 0, 8);
    const Grid e2 = rect(0, 8, 0, 16);
    const Grid s2 = rect(8, 16, 0, 8);
    const Grid box = rect(10, 20, 10, 20);

    fs::create_directories(dir / "d" / "img");
    fs::create_directories(dir / "d" / "masks");
    fs::create_directories(dir / "p");
    nlohmann::json records = nlohmann::json::array();
    const std::vector<std::pair<Grid, Grid>> masks{{box, box}, {e1, e2}, {box, box}};
    for (int i = 0; i < 3; ++i) {
        const std::string id = "r0000" + std::to_string(i);
        write_pgm(dir / "d" / "img" / (id + ".pgm"), Grid(32, 32, 0.5));
        write_pgm(dir / "d" / "masks" / (id + "_e1.pgm"), masks[i].first);
        write_pgm(dir / "d" / "masks" / (id + "_e2.pgm"), masks[i].second);
        records.push_back({{"id", id},
                           {"index", i},
                           {"split", i == 0 ? "train" : "test"},
                           {"image", "img/" + id + ".pgm"},
                           {"masks", {"masks/" + id + "_e1.pgm", "masks/" + id + "_e2.pgm"}}});
    }
    const nlohmann::json manifest{
        {"format_version", 1},
        {"generator_version", "hand"},
        {"config",
         {{"count", 3}, {"grid_size", 32}, {"experts", 2}, {"ambiguity", 0.0}, {"split", 0.34}, {"seed", 0}}},
        {"records", records}};
    write_file_atomic(dir / "d" / "manifest.json", manifest.dump());
    write_pgm(dir / "p" / "r00001_s0.pgm", e1);
    write_pgm(dir / "p" / "r00001_s1.pgm", s2);
    write_pgm(dir / "p" / "r00002_s0.pgm", box);
    write_pgm(dir / "p" / "r00002_s1.pgm", box);

    EvaluateOptions o;
    o.pred = dir / "p";
    o.data = dir / "d";
    o.report = dir / "report.csv";
    const Outcome r = run([&](auto& so, auto& se) { return cmd_evaluate(o, so, se); });
    ASSERT_EQ(r.rc, kExitOk) << r.err;
    const auto rows = read_report(o.report);
    ASSERT_EQ(rows.size(), 3u);

    // r00001: d(e1,e2) = 1/2, d(e1,s2) = d(e2,s2) = 1. Cross mean 5/8, self means 1/2 and 1/4.
    // Consensus masks are e2 and rect(0,16,0,8), overlapping in e1. Dice rows normalize
    // to (1,0) twice; columns are (1, 2/3) -> (0.6, 0.4) and (0, 0) -> uniform.
    const auto h = [](std::vector<double> p) {
        double s = 0.0;
        for (double v : p) s -= v > 0 ? v * std::log2(v) : 0.0;
        return s;
    };
    const double js = h({0.55, 0.45}) - 0.5 * (h({0.6, 0.4}) + h({0.5, 0.5}));
    const std::map<std::string, double> first{{"ged", 0.5},   {"d_max", 5.0 / 6.0}, {"ci", 0.5},
                                              {"d_a", 0.5},   {"ddi_exp", 0.0},     {"ddi_gen", 6.0 * js}};
    const std::map<std::string, double> second{{"ged", 0.0}, {"d_max", 1.0},   {"ci", 1.0},
                                               {"d_a", 1.0}, {"ddi_exp", 0.0}, {"ddi_gen", 0.0}};
    for (const auto& [col, want] : first) {
        EXPECT_NEAR(std::stod(rows.at("r00001").at(col)), want, 1e-9) << col;
        EXPECT_NEAR(std::stod(rows.at("r00002").at(col)), second.at(col), 1e-9) << col;
        EXPECT_NEAR(std::stod(rows.at("AGGREGATE").at(col)), (want + second.at(col)) / 2.0, 1e-9) << col;
    }
    fs::remove_all(dir);
}

TEST(VerifyCommand, PassesAndDetectsFault) {
    VerifyCommandOptions o;
    const Outcome ok = run([&](auto& so, auto& se) { return cmd_verify(o, so, se); });
    EXPECT_EQ(ok.rc, kExitOk) << ok.out;
    EXPECT_NE(ok.out.find("network gradient check"), std::string::npos);
    o.inject_fault = true;
    const Outcome bad = run([&](auto& so, auto& se) { return cmd_verify(o, so, se); });
    EXPECT_EQ(bad.rc, kExitCheckFailed) << bad.out;
    EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(Binary, ExitCodes) {
    const fs::path dir = scratch("binary");
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary(""), 2);
    EXPECT_EQ(run_binary("frobnicate"), 2);
    EXPECT_EQ(run_binary("gen-data --out " + (dir / "d").string() + " --count notanumber"), 2);
    EXPECT_EQ(run_binary("gen-data --out " + (dir / "d").string() + " --count 3 --size 32 --seed 1"), 0);
    EXPECT_EQ(run_binary("gen-data --out " + (dir / "e").string() + " --count 3 --ambiguity 2"), 2);
    EXPECT_EQ(run_binary("evaluate --pred " + (dir / "nothing").string() + " --data " + (dir / "d").string() +
                         " --report " + (dir / "r.csv").string()),
              2);
    fs::remove_all(dir);
}
