#include "ssb/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "ssb/bridge.hpp"
#include "ssb/loss.hpp"
#include "ssb/metrics.hpp"
#include "ssb/predictor.hpp"
#include "ssb/rng.hpp"
#include "ssb/unet.hpp"

namespace ssb {

Schedule corrupted_schedule(const Schedule& s) {
    std::vector<double> bar = s.sigma_bar_sq();
    for (double& v : bar) v *= 2.0;
    return Schedule::unchecked(s.beta(), s.sigma_sq(), std::move(bar));
}

MomentPair gaussian_sampler_law(const Schedule& s, double prior_mean, double prior_var, double x1, int nfe,
                                bool stochastic) {
    const std::vector<int> ladder = step_ladder(s.n_steps(), nfe);
    MomentPair st{x1, 0.0};
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        const int from = ladder[i];
        const int to = ladder[i + 1];
        const BridgeCoeffs c = bridge_coeffs(s, from);
        const double gain = c.w0 == 0.0 ? 0.0 : prior_var * c.w0 / (c.w0 * c.w0 * prior_var + c.var);
        const double hat_mean = prior_mean + gain * (st.mean - c.w0 * prior_mean - c.w1 * x1);
        if (to == 0) {
            st = {hat_mean, gain * gain * st.var};
            break;
        }
        const double r = s.sigma_sq(to) / s.sigma_sq(from);
        const double noise = stochastic ? s.sigma_sq(to) * (s.sigma_sq(from) - s.sigma_sq(to)) / s.sigma_sq(from) : 0.0;
        const double slope = (1.0 - r) * gain + r;
        st = {(1.0 - r) * hat_mean + r * st.mean, slope * slope * st.var + noise};
    }
    return st;
}

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(m.n);
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(m.n - 1);
    return m;
}

// |sample - expected| in standard errors, for mean and variance.
std::pair<double, double> z_scores(const Moments& m, double mean, double var) {
    const double n = static_cast<double>(m.n);
    const double se_mean = std::sqrt(var / n);
    const double se_var = var * std::sqrt(2.0 / (n - 1.0));
    return {std::abs(m.mean - mean) / se_mean, std::abs(m.var - var) / se_var};
}

Grid scalar(double v) { return Grid(1, 1, v); }

Grid mask2x2(std::initializer_list<double> v) { return Grid(2, 2, std::vector<double>(v)); }

CheckResult check_schedule(const Schedule& s, double total) {
    double worst = 0.0;
    bool monotone = true;
    for (int i = 0; i <= s.n_steps(); ++i) {
        worst = std::max(worst, std::abs(s.sigma_sq(i) + s.sigma_bar_sq(i) - total));
        if (i > 0 && s.sigma_sq(i) < s.sigma_sq(i - 1)) monotone = false;
    }
    return {"schedule invariants", worst <= 1e-12 && monotone,
            fmt::format("max |sigma^2 + sigma_bar^2 - total| = {:.3g}", worst)};
}

CheckResult check_bridge_moments(const Schedule& s, std::uint64_t seed) {
    // Nominal schedule is symmetric with unit total, so the midpoint law is N(0.5, 0.25).
    const int mid = s.n_steps() / 2;
    Rng rng(seed, 11);
    const Grid x0 = scalar(0.0);
    const Grid x1 = scalar(1.0);
    std::vector<double> xs(20000);
    for (double& x : xs) x = sample_xt(x0, x1, mid, s, rng)[0];
    const auto [zm, zv] = z_scores(moments(xs), 0.5, 0.25);
    const Moments m = moments(xs);
    return {"bridge posterior moments", zm <= 5.0 && zv <= 5.0,
            fmt::format("mean {:.4f} var {:.4f} (expect 0.5, 0.25)", m.mean, m.var)};
}

CheckResult check_markov(const Schedule& s, const Schedule& nominal, std::uint64_t seed) {
    const int nfe = 10;
    const std::vector<int> ladder = step_ladder(s.n_steps(), nfe);
    const double x0 = 0.3;
    const double x1 = 1.0;
    const std::size_t chains = 10000;
    std::vector<std::vector<double>> visited(ladder.size(), std::vector<double>(chains));
    for (std::size_t c = 0; c < chains; ++c) {
        Rng rng = Rng(seed, 12).split(c);
        Grid x = scalar(x1);
        for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
            x = reverse_step(x, scalar(x0), ladder[k], ladder[k + 1], s, true, rng);
            visited[k + 1][c] = x[0];
        }
    }
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < ladder.size(); ++k) {
        const BridgeCoeffs c = bridge_coeffs(nominal, ladder[k]);
        const auto [zm, zv] = z_scores(moments(visited[k]), c.w0 * x0 + c.w1 * x1, c.var);
        worst = std::max({worst, zm, zv});
    }
    return {"markov marginal consistency", worst <= 5.0, fmt::format("worst deviation {:.2f} SE", worst)};
}

CheckResult check_dirac(const Schedule& s, std::uint64_t seed) {
    double worst = 0.0;
    Rng rng(seed, 13);
    for (int trial = 0; trial < 20; ++trial) {
        Grid a(4, 4);
        Grid x1(4, 4);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
            x1[i] = rng.uniform(-1.0, 2.0);
        }
        const DiracOracle oracle(a, s);
        for (const int nfe : {5, 50}) {
            SampleConfig cfg;
            cfg.nfe = std::min(nfe, s.n_steps());
            cfg.seed = rng.next_u64();
            const Grid out = generate(oracle, x1, Label::expert(1), cfg, s);
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(out[i] - a[i]));
        }
    }
    return {"dirac oracle exactness", worst <= 1e-9, fmt::format("max abs error {:.3g}", worst)};
}

CheckResult check_gaussian(const Schedule& s, std::uint64_t seed) {
    const double m = 0.4;
    const double p = 0.25;
    const double x1 = 0.9;
    const GaussianOracle oracle(scalar(m), p, s);
    SampleConfig cfg;
    cfg.nfe = std::min(50, s.n_steps());
    cfg.seed = seed;
    std::vector<double> xs(4000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = generate(oracle, scalar(x1), Label::expert(1), cfg, s, i)[0];
    const MomentPair law = gaussian_sampler_law(s, m, p, x1, cfg.nfe);
    const Moments got = moments(xs);
    const auto [zm, zv] = z_scores(got, m, law.var);
    return {"gaussian oracle sampling", zm <= 4.0 && zv <= 4.0,
            fmt::format("mean {:.4f} (posterior {:.4f}), var {:.4f} (chain law {:.4f}, posterior {:.4f})", got.mean,
                        m, got.var, law.var, p)};
}

CheckResult check_cfg(std::uint64_t seed) {
    ArchConfig arch;
    arch.grid_size = 16;
    const auto net = std::make_shared<const TinyUNet>(TinyUNet::init(arch, seed));
    const UNetPredictor pred(net);
    Rng rng(seed, 14);
    bool identical = true;
    for (int trial = 0; trial < 20; ++trial) {
        Grid x(16, 16);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 2.0);
        const Label label = Label::expert(rng.uniform_int(1, arch.experts));
        const int step = rng.uniform_int(1, 50);
        if (!(guided_eps(pred, x, label, step, 0.0) == pred.predict(x, label, step))) identical = false;
    }
    return {"cfg identity at omega = 0", identical, identical ? "bitwise equal" : "outputs differ"};
}

CheckResult check_gradient(std::uint64_t seed) {
    ArchConfig arch;
    arch.grid_size = 8;
    TinyUNet64 net = TinyUNet64::init(arch, seed);
    Rng rng(seed, 15);
    for (const ParamEntry& e : net.layout()) {
        if (e.kind == ParamKind::Weight || e.kind == ParamKind::Embedding) continue;
        for (std::size_t i = 0; i < e.size; ++i) net.params()[e.offset + i] += rng.uniform(-0.2, 0.2);
    }
    Grid x_t(8, 8);
    Grid target(8, 8);
    Grid truth(8, 8);
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        x_t[i] = rng.uniform(-0.5, 1.5);
        target[i] = rng.uniform(-1.0, 1.0);
        truth[i] = rng.bernoulli(0.4) ? 1.0 : 0.0;
    }
    const double sigma = 0.3;
    const Label label = Label::expert(1);
    const int step = 9;
    const LossConfig cfg;
    const auto loss_at = [&](const TinyUNet64& n) {
        return ssb_loss_on_eps(n.forward(x_t, label, step), target, x_t, truth, sigma, cfg).value;
    };
    TinyUNet64::Workspace ws;
    const std::vector<double> y = net.forward(x_t.values(), label, step, ws);
    const LossResult lr = ssb_loss_on_eps(Grid(8, 8, y), target, x_t, truth, sigma, cfg);
    std::vector<double> grad(net.param_count(), 0.0);
    net.backward(ws, lr.grad_eps.values(), grad);

    const double h = 1e-5;
    double worst = 0.0;
    const int samples = 200;
    for (int k = 0; k < samples; ++k) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(net.param_count()) - 1));
        TinyUNet64 plus = net;
        TinyUNet64 minus = net;
        plus.params()[idx] += h;
        minus.params()[idx] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[idx]) / std::max({std::abs(fd), std::abs(grad[idx]), 1e-6}));
    }
    return {"network gradient check", worst <= 1e-4,
            fmt::format("max relative error {:.3g} over {} parameters", worst, samples)};
}

CheckResult check_metrics() {
    using Role = MaskSet::Role;
    double worst = 0.0;
    const auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

    track(dice(mask2x2({1, 1, 0, 0}), mask2x2({1, 0, 1, 0})), 0.5);
    track(ged(MaskSet({mask2x2({1, 1, 0, 0})}, Role::Generated), MaskSet({mask2x2({0, 0, 1, 1})}, Role::Expert)),
          2.0);

    const MaskSet exp_a({mask2x2({1, 1, 1, 1}), mask2x2({1, 0, 0, 0})}, Role::Expert);
    const MaskSet gen_a({mask2x2({1, 1, 0, 0}), mask2x2({0, 0, 1, 1})}, Role::Generated);
    const DdiResult a = ddi(DiceMatrix::from_masks(exp_a, gen_a));
    const double want_a = 9.0 - 4.5 * std::log2(3.0);
    track(a.exp.value_or(-1.0), want_a);
    track(a.gen.value_or(-1.0), want_a);

    const MaskSet exp_b({mask2x2({1, 1, 0, 0}), mask2x2({0, 0, 1, 1})}, Role::Expert);
    const MaskSet gen_b({mask2x2({1, 1, 0, 0}), mask2x2({0, 0, 1, 1})}, Role::Generated);
    const DdiResult b = ddi(DiceMatrix::from_masks(exp_b, gen_b));
    track(b.exp.value_or(-1.0), 6.0);
    track(b.gen.value_or(-1.0), 6.0);

    const MaskSet exp_c({mask2x2({1, 1, 0, 0}), mask2x2({1, 0, 0, 0})}, Role::Expert);
    const MaskSet gen_c({mask2x2({1, 1, 0, 0})}, Role::Generated);
    track(d_max(gen_c, exp_c), 5.0 / 6.0);
    track(ci_score(gen_c, exp_c), 1.0);

    return {"metric fixtures", worst <= 1e-9, fmt::format("max abs error {:.3g}", worst)};
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& opts) {
    const Schedule nominal = make_schedule(ScheduleParams{});
    const Schedule s = opts.inject_fault ? corrupted_schedule(nominal) : nominal;
    std::vector<CheckResult> out;
    const auto guarded = [&](const char* name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    guarded("schedule invariants", [&] { return check_schedule(s, nominal.total_variance()); });
    guarded("bridge posterior moments", [&] { return check_bridge_moments(s, opts.seed); });
    guarded("markov marginal consistency", [&] { return check_markov(s, nominal, opts.seed); });
    guarded("dirac oracle exactness", [&] { return check_dirac(s, opts.seed); });
    guarded("gaussian oracle sampling", [&] { return check_gaussian(s, opts.seed); });
    guarded("cfg identity at omega = 0", [&] { return check_cfg(opts.seed); });
    guarded("network gradient check", [&] { return check_gradient(opts.seed); });
    guarded("metric fixtures", [&] { return check_metrics(); });
    return out;
}

}  // namespace ssb
