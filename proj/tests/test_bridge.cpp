#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ssb/bridge.hpp"
#include "ssb/predictor.hpp"
#include "ssb/rng.hpp"

using namespace ssb;

namespace {

// Returns `cond` for real labels and `uncond` for the null label.
class ConstantPredictor final : public Predictor {
public:
    ConstantPredictor(double cond, double uncond) : cond_(cond), uncond_(uncond) {}
    Grid predict(const Grid& x_t, Label label, int) const override {
        return Grid::constant_like(x_t, label.is_null() ? uncond_ : cond_);
    }

private:
    double cond_;
    double uncond_;
};

class NanAtStep final : public Predictor {
public:
    explicit NanAtStep(int step) : step_(step) {}
    Grid predict(const Grid& x_t, Label, int step) const override {
        return Grid::constant_like(x_t, step == step_ ? std::numeric_limits<double>::quiet_NaN() : 0.0);
    }

private:
    int step_;
};

Grid random_grid(int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Grid g(h, w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(lo, hi);
    return g;
}

const Schedule& unit_schedule() {
    static const Schedule s = make_schedule(ScheduleParams{});
    return s;
}

}  // namespace

TEST(SampleXt, EndpointsAreExact) {
    Rng rng(1);
    const Grid x0 = random_grid(3, 4, rng);
    const Grid x1 = random_grid(3, 4, rng);
    EXPECT_EQ(sample_xt(x0, x1, 0, unit_schedule(), rng), x0);
    EXPECT_EQ(sample_xt(x0, x1, 50, unit_schedule(), rng), x1);
}

TEST(SampleXt, MidpointMoments) {
    Rng rng(2);
    const Grid x0(1, 1, 0.0);
    const Grid x1(1, 1, 1.0);
    const int n = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_xt(x0, x1, 25, unit_schedule(), rng)[0];
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.5, 0.005);
    EXPECT_NEAR(var, 0.25, 0.25 * 0.05);
}

TEST(SampleXt, ShapeMismatchThrows) {
    Rng rng(3);
    EXPECT_THROW(sample_xt(Grid(2, 2), Grid(2, 3), 5, unit_schedule(), rng), std::invalid_argument);
}

TEST(TrainingTarget, Examples) {
    // sigma = 0.5 at the top of a schedule with total variance 0.25.
    const Schedule s = make_schedule(ScheduleParams{10, 0.25});
    EXPECT_NEAR(training_target(Grid(1, 1, 0.7), Grid(1, 1, 0.2), 10, s)[0], 1.0, 1e-12);
    EXPECT_NEAR(predict_x0(Grid(1, 1, 0.7), Grid(1, 1, 1.0), 10, s)[0], 0.2, 1e-12);
    const Grid x(2, 2, 0.3);
    EXPECT_EQ(training_target(x, x, 4, s), Grid(2, 2, 0.0));
    EXPECT_EQ(predict_x0(x, Grid(2, 2, 0.0), 4, s), x);
    EXPECT_THROW(training_target(x, x, 0, s), std::domain_error);
    EXPECT_THROW(predict_x0(x, x, 0, s), std::domain_error);
    EXPECT_THROW(predict_x0(x, Grid(3, 2), 3, s), std::invalid_argument);
}

TEST(TrainingTarget, RecoversInjectedNoise) {
    Rng rng(4);
    const Schedule& s = unit_schedule();
    const Grid x0 = random_grid(4, 4, rng);
    const Grid z = random_grid(4, 4, rng);
    Grid x_t = x0;
    for (std::size_t i = 0; i < x_t.size(); ++i) x_t[i] += s.sigma(17) * z[i];
    const Grid t = training_target(x_t, x0, 17, s);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i], z[i], 1e-12);
}

TEST(TrainingTarget, RoundTripAtEveryStep) {
    Rng rng(5);
    const Schedule& s = unit_schedule();
    const Grid x0 = random_grid(5, 5, rng, 0.0, 1.0);
    const Grid x1 = random_grid(5, 5, rng, 0.0, 1.0);
    for (int n = 1; n <= 50; ++n) {
        const BridgeSample b = make_bridge_sample(x0, x1, n, Label::expert(1), s, rng);
        const Grid back = predict_x0(b.x_t, b.target, n, s);
        for (std::size_t i = 0; i < back.size(); ++i) EXPECT_NEAR(back[i], x0[i], 1e-12);
    }
}

TEST(GuidedEps, Arithmetic) {
    const Grid x(2, 3, 0.0);
    EXPECT_EQ(guided_eps(ConstantPredictor(1.0, 0.0), x, Label::expert(1), 5, 0.5), Grid(2, 3, 1.5));
    EXPECT_NEAR(guided_eps(ConstantPredictor(0.7, 0.7), x, Label::expert(2), 5, 3.0)[0], 0.7, 1e-15);
    EXPECT_THROW(guided_eps(ConstantPredictor(1, 0), x, Label::null(), 5, 1.0), std::invalid_argument);
}

TEST(GuidedEps, ZeroOmegaIsBitwiseConditional) {
    Rng rng(6);
    const Schedule& s = unit_schedule();
    const Grid a = random_grid(3, 3, rng);
    const GaussianOracle oracle(a, 0.3, s, random_grid(3, 3, rng));
    for (int trial = 0; trial < 100; ++trial) {
        const Grid x = random_grid(3, 3, rng, -2.0, 2.0);
        const int step = rng.uniform_int(1, 49);
        EXPECT_EQ(guided_eps(oracle, x, Label::expert(1), step, 0.0), oracle.predict(x, Label::expert(1), step));
    }
}

TEST(ReverseStep, ToZeroReturnsEstimate) {
    Rng rng(7);
    const Grid xn = random_grid(2, 2, rng);
    const Grid hat = random_grid(2, 2, rng);
    EXPECT_EQ(reverse_step(xn, hat, 9, 0, unit_schedule(), true, rng), hat);
}

TEST(ReverseStep, EqualEndpointsKeepMean) {
    Rng rng(8);
    const Grid x = random_grid(2, 2, rng);
    const Grid out = reverse_step(x, x, 30, 12, unit_schedule(), false, rng);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out[i], x[i], 1e-15);
}

TEST(ReverseStep, BrownianBridgeMoments) {
    // A two-step schedule with total 1 has sigma^2 = 0.5 at step 1; step 2 holds 1.0.
    // Use a hand-built schedule so sigma^2 takes exactly 0.5 and 0.25.
    const Schedule s = Schedule::unchecked({0.25, 0.25, 0.5}, {0.0, 0.25, 0.5, 1.0}, {1.0, 0.75, 0.5, 0.0});
    Rng rng(9);
    const Grid hat(1, 1, 0.0);
    const Grid xn(1, 1, 1.0);
    EXPECT_NEAR(reverse_step(xn, hat, 2, 1, s, false, rng)[0], 0.5, 1e-15);
    const int n = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = reverse_step(xn, hat, 2, 1, s, true, rng)[0];
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double se_mean = std::sqrt(0.125 / n);
    const double se_var = 0.125 * std::sqrt(2.0 / n);
    EXPECT_NEAR(mean, 0.5, 5 * se_mean);
    EXPECT_NEAR(var, 0.125, 5 * se_var);
}

TEST(ReverseStep, RejectsBadOrdering) {
    Rng rng(10);
    const Grid x(1, 1);
    EXPECT_THROW(reverse_step(x, x, 5, 5, unit_schedule(), true, rng), std::invalid_argument);
    EXPECT_THROW(reverse_step(x, x, 5, 7, unit_schedule(), true, rng), std::invalid_argument);
    EXPECT_THROW(reverse_step(x, x, 51, 7, unit_schedule(), true, rng), std::invalid_argument);
}

TEST(StepLadder, EvenlySpacedAndStrictlyDecreasing) {
    for (const int nfe : {1, 2, 3, 7, 25, 50}) {
        const std::vector<int> l = step_ladder(50, nfe);
        ASSERT_EQ(l.size(), static_cast<std::size_t>(nfe) + 1);
        EXPECT_EQ(l.front(), 50);
        EXPECT_EQ(l.back(), 0);
        for (std::size_t i = 1; i < l.size(); ++i) EXPECT_LT(l[i], l[i - 1]);
    }
    EXPECT_EQ(step_ladder(10, 4), (std::vector<int>{10, 7, 5, 2, 0}));
    EXPECT_THROW(step_ladder(10, 11), std::invalid_argument);
    EXPECT_THROW(step_ladder(10, 0), std::invalid_argument);
}

TEST(Generate, DiracOracleIsExact) {
    Rng rng(11);
    const Schedule& s = unit_schedule();
    for (int trial = 0; trial < 20; ++trial) {
        const Grid a = random_grid(4, 4, rng, 0.0, 1.0);
        const Grid x1 = random_grid(4, 4, rng, -3.0, 3.0);
        const DiracOracle oracle(a, s);
        for (const int nfe : {5, 50}) {
            SampleConfig cfg;
            cfg.nfe = nfe;
            cfg.seed = rng.next_u64();
            const Grid out = generate(oracle, x1, Label::expert(1), cfg, s);
            for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(out[i], a[i], 1e-9);
        }
    }
}

TEST(Generate, SingleStepChain) {
    Rng rng(12);
    const Schedule& s = unit_schedule();
    const Grid x1 = random_grid(3, 3, rng);
    const ConstantPredictor p(0.4, -0.2);
    SampleConfig cfg;
    cfg.nfe = 1;
    cfg.omega = 0.7;
    const Grid expected = predict_x0(x1, guided_eps(p, x1, Label::expert(1), 50, 0.7), 50, s);
    EXPECT_EQ(generate(p, x1, Label::expert(1), cfg, s), expected);
}

TEST(Generate, DeterministicAndStreamDependent) {
    Rng rng(13);
    const Schedule& s = unit_schedule();
    const GaussianOracle oracle(random_grid(4, 4, rng), 0.5, s);
    const Grid x1 = random_grid(4, 4, rng);
    SampleConfig cfg;
    cfg.seed = 42;
    const Grid a = generate(oracle, x1, Label::expert(1), cfg, s, 3);
    EXPECT_EQ(a, generate(oracle, x1, Label::expert(1), cfg, s, 3));
    EXPECT_FALSE(a == generate(oracle, x1, Label::expert(1), cfg, s, 4));
    cfg.seed = 43;
    EXPECT_FALSE(a == generate(oracle, x1, Label::expert(1), cfg, s, 3));
}

TEST(Generate, NamesFailingStep) {
    const Schedule& s = unit_schedule();
    SampleConfig cfg;
    cfg.nfe = 10;
    try {
        generate(NanAtStep(30), Grid(2, 2, 0.5), Label::expert(1), cfg, s);
        FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
        EXPECT_EQ(e.step(), 30);
    }
    EXPECT_THROW(generate(NanAtStep(1), Grid(2, 2, 0.5), Label::null(), cfg, s), std::invalid_argument);
}

// Chaining the reverse kernel with the true x0 must reproduce the forward
// bridge marginals at every visited step.
TEST(Generate, MarkovMarginalConsistency) {
    const Schedule& s = unit_schedule();
    const double x0 = -0.4;
    const double x1 = 1.2;
    const std::vector<int> ladder = step_ladder(50, 50);
    const int chains = 20000;
    std::vector<double> sum(ladder.size(), 0.0);
    std::vector<double> sq(ladder.size(), 0.0);
    for (int c = 0; c < chains; ++c) {
        Rng rng = Rng(14).split(static_cast<std::uint64_t>(c));
        Grid x(1, 1, x1);
        for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
            x = reverse_step(x, Grid(1, 1, x0), ladder[k], ladder[k + 1], s, true, rng);
            sum[k + 1] += x[0];
            sq[k + 1] += x[0] * x[0];
        }
    }
    for (std::size_t k = 1; k + 1 < ladder.size(); ++k) {
        const double w1 = s.sigma_sq(ladder[k]) / s.total_variance();
        const double mean = (1.0 - w1) * x0 + w1 * x1;
        const double var = s.sigma_sq(ladder[k]) * s.sigma_bar_sq(ladder[k]) / s.total_variance();
        const double m = sum[k] / chains;
        const double v = sq[k] / chains - m * m;
        EXPECT_NEAR(m, mean, 5 * std::sqrt(var / chains)) << "step " << ladder[k];
        EXPECT_NEAR(v, var, 5 * var * std::sqrt(2.0 / chains)) << "step " << ladder[k];
    }
}
