#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "ssb/checkpoint.hpp"
#include "ssb/config.hpp"
#include "ssb/io.hpp"
#include "ssb/train.hpp"

using namespace ssb;

namespace {

ArchConfig small_arch() {
    ArchConfig a;
    a.grid_size = 16;
    a.channels = {8, 16};
    a.time_embed_dim = 16;
    a.experts = 2;
    return a;
}

Dataset tiny_dataset(int records) {
    Dataset d;
    d.config.count = records;
    d.config.grid_size = 16;
    d.config.experts = 2;
    for (int r = 0; r < records; ++r) {
        DatasetRecord rec;
        rec.id = record_id(r);
        Grid mask(16, 16);
        for (int y = 4; y < 12; ++y) {
            for (int x = 4; x < 12; ++x) mask(y, x) = 1.0;
        }
        rec.image = mask;
        for (std::size_t i = 0; i < rec.image.size(); ++i) rec.image[i] = 0.2 + 0.6 * mask[i];
        rec.expert_masks = {mask, mask};
        d.records.push_back(std::move(rec));
    }
    d.train_count = static_cast<std::size_t>(records);
    return d;
}

TrainConfig small_config(int steps) {
    TrainConfig c;
    c.steps = steps;
    c.batch = 2;
    c.lr = 2e-3;
    c.eta = 2;
    c.seed = 9;
    return c;
}

}  // namespace

TEST(Train, ZeroStepsReturnsInitialNet) {
    const Schedule s = make_schedule(ScheduleParams{});
    const TrainResult r = train(tiny_dataset(2), small_arch(), small_config(0), s);
    EXPECT_TRUE(r.loss_trace.empty());
    EXPECT_EQ(r.net.params(), TinyUNet::init(small_arch(), 9).params());
}

TEST(Train, DeterministicGivenSeed) {
    const Schedule s = make_schedule(ScheduleParams{});
    const TrainResult a = train(tiny_dataset(3), small_arch(), small_config(15), s);
    const TrainResult b = train(tiny_dataset(3), small_arch(), small_config(15), s);
    EXPECT_EQ(a.net.params(), b.net.params());
    EXPECT_EQ(a.loss_trace, b.loss_trace);
    TrainConfig other = small_config(15);
    other.seed = 10;
    EXPECT_NE(train(tiny_dataset(3), small_arch(), other, s).net.params(), a.net.params());
}

TEST(Train, LossDecreasesOnConstantMask) {
    const Schedule s = make_schedule(ScheduleParams{});
    const TrainResult r = train(tiny_dataset(1), small_arch(), small_config(2000), s);
    ASSERT_EQ(r.loss_trace.size(), 2000u);
    const double first = std::accumulate(r.loss_trace.begin(), r.loss_trace.begin() + 100, 0.0) / 100;
    const double last = std::accumulate(r.loss_trace.end() - 100, r.loss_trace.end(), 0.0) / 100;
    EXPECT_LT(last, first);
}

TEST(Train, RejectsEmptyDataset) {
    const Schedule s = make_schedule(ScheduleParams{});
    Dataset empty;
    EXPECT_THROW(train(empty, small_arch(), small_config(5), s), std::invalid_argument);
}

TEST(Train, NonFiniteLossReportsIteration) {
    const Schedule s = make_schedule(ScheduleParams{});
    Dataset d = tiny_dataset(1);
    d.records[0].image[5] = std::numeric_limits<double>::quiet_NaN();
    try {
        train(d, small_arch(), small_config(5), s);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.iteration(), 0);
    }
}

TEST(Train, ConfigValidation) {
    TrainConfig c;
    c.batch = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.eta = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.lr = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    const auto j = to_json(TrainConfig{});
    EXPECT_EQ(to_json(train_config_from_json(j)), j);
    auto bad = j;
    bad["momentum"] = 0.9;
    EXPECT_THROW(train_config_from_json(bad), std::invalid_argument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Adam adam(3, 0.1, 0.9, 0.999, 1e-12);
    std::vector<float> p{1.0f, 1.0f, 1.0f};
    adam.step(p, {2.0, -0.5, 0.0});
    EXPECT_NEAR(p[0], 0.9f, 1e-6);
    EXPECT_NEAR(p[1], 1.1f, 1e-6);
    EXPECT_EQ(p[2], 1.0f);
}

TEST(Checkpoint, RoundTrip) {
    const TinyUNet net = TinyUNet::init(small_arch(), 4);
    const std::string bytes = encode_checkpoint(net, ScheduleParams{40, 1.5}, "abc");
    EXPECT_EQ(bytes.substr(0, 4), "SSBC");
    const Checkpoint c = decode_checkpoint(bytes, "mem");
    EXPECT_EQ(c.net.params(), net.params());
    EXPECT_EQ(to_json(c.net.arch()), to_json(net.arch()));
    EXPECT_EQ(c.schedule.n_steps, 40);
    EXPECT_EQ(c.schedule.total_variance, 1.5);
    EXPECT_EQ(c.train_digest, "abc");
    EXPECT_EQ(encode_checkpoint(c.net, c.schedule, c.train_digest), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
    const TinyUNet net = TinyUNet::init(small_arch(), 4);
    const std::string bytes = encode_checkpoint(net, ScheduleParams{}, "d");
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(decode_checkpoint(bad_magic, "m"), LoadError);
    std::string bad_version = bytes;
    bad_version[4] = 9;
    EXPECT_THROW(decode_checkpoint(bad_version, "m"), LoadError);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 4), "m"), LoadError);
    EXPECT_THROW(decode_checkpoint(bytes + "xxxx", "m"), LoadError);
    EXPECT_THROW(decode_checkpoint("SS", "m"), LoadError);
}

TEST(Checkpoint, BlobIsLittleEndianFloat) {
    TinyUNet net(small_arch());
    net.params()[0] = 1.0f;  // 0x3F800000
    const std::string bytes = encode_checkpoint(net, ScheduleParams{}, "d");
    const std::size_t blob = bytes.size() - 4 * net.param_count();
    EXPECT_EQ(static_cast<unsigned char>(bytes[blob + 0]), 0x00);
    EXPECT_EQ(static_cast<unsigned char>(bytes[blob + 2]), 0x80);
    EXPECT_EQ(static_cast<unsigned char>(bytes[blob + 3]), 0x3F);
}

TEST(ConfigDigest, StableHex) {
    const std::string d = config_digest(nlohmann::json{{"a", 1}});
    EXPECT_EQ(d.size(), 16u);
    EXPECT_EQ(d, config_digest(nlohmann::json{{"a", 1}}));
    EXPECT_NE(d, config_digest(nlohmann::json{{"a", 2}}));
}

TEST(RunConfig, RoundTripAndStrictKeys) {
    RunConfig c;
    c.train.steps = 123;
    c.sample.num_samples = 7;
    c.arch.channels = {8, 16};
    const auto j = to_json(c);
    EXPECT_EQ(to_json(run_config_from_json(j)), j);

    auto extra = j;
    extra["sample"]["temperature"] = 1.0;
    EXPECT_THROW(run_config_from_json(extra), std::invalid_argument);
    auto top = j;
    top["bogus"] = true;
    EXPECT_THROW(run_config_from_json(top), std::invalid_argument);
    auto version = j;
    version["format_version"] = 99;
    EXPECT_THROW(run_config_from_json(version), std::invalid_argument);
    auto missing = j;
    missing.erase("format_version");
    EXPECT_THROW(run_config_from_json(missing), std::invalid_argument);
    auto wrong_type = j;
    wrong_type["train"]["steps"] = "many";
    EXPECT_THROW(run_config_from_json(wrong_type), std::invalid_argument);
}

TEST(RunConfig, PartialSectionsKeepDefaults) {
    const RunConfig c = run_config_from_json(nlohmann::json{{"format_version", 1}, {"train", {{"steps", 5}}}});
    EXPECT_EQ(c.train.steps, 5);
    EXPECT_EQ(c.train.batch, TrainConfig{}.batch);
    EXPECT_EQ(c.sample.chain.nfe, 50);
}
