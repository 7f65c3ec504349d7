#include "ssb/bridge.hpp"

#include <cmath>
#include <memory>

namespace ssb {

namespace {

void check_step(const Schedule& s, int step, const char* who) {
    if (step < 0 || step > s.n_steps()) {
        throw std::invalid_argument(std::string(who) + ": step " + std::to_string(step) +
                                    " outside [0, " + std::to_string(s.n_steps()) + "]");
    }
}

double positive_sigma(const Schedule& s, int step, const char* who) {
    check_step(s, step, who);
    if (step == 0) throw std::domain_error(std::string(who) + ": sigma is zero at step 0");
    return s.sigma(step);
}

}  // namespace

Grid sample_xt(const Grid& x0, const Grid& x1, int step, const Schedule& s, Rng& rng) {
    require_same_shape(x0, x1, "sample_xt");
    const BridgeCoeffs c = bridge_coeffs(s, step);
    if (c.var == 0.0) {
        // Endpoints: exactly one weight is 1 and the other 0.
        return c.w0 == 1.0 ? x0 : x1;
    }
    Grid out = x0;
    const double sd = std::sqrt(c.var);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = c.w0 * x0[i] + c.w1 * x1[i] + sd * rng.normal();
    }
    return out;
}

Grid training_target(const Grid& x_t, const Grid& x0, int step, const Schedule& s) {
    require_same_shape(x_t, x0, "training_target");
    const double sigma = positive_sigma(s, step, "training_target");
    Grid out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - x0[i]) / sigma;
    return out;
}

Grid predict_x0(const Grid& x_t, const Grid& eps, int step, const Schedule& s) {
    require_same_shape(x_t, eps, "predict_x0");
    const double sigma = positive_sigma(s, step, "predict_x0");
    Grid out = x_t;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_t[i] - sigma * eps[i];
    return out;
}

BridgeSample make_bridge_sample(const Grid& x0, const Grid& x1, int step, Label label,
                                const Schedule& s, Rng& rng) {
    if (step < 1) throw std::domain_error("make_bridge_sample: step must be >= 1");
    BridgeSample out;
    out.x_t = sample_xt(x0, x1, step, s, rng);
    out.step = step;
    out.label = label;
    out.target = training_target(out.x_t, x0, step, s);
    return out;
}

Grid guided_eps(const Predictor& p, const Grid& x_t, Label label, int step, double omega) {
    if (label.is_null()) throw std::invalid_argument("guided_eps: label must not be null");
    Grid cond = p.predict(x_t, label, step);
    require_same_shape(cond, x_t, "guided_eps");
    if (omega == 0.0) return cond;
    const Grid uncond = p.predict(x_t, Label::null(), step);
    require_same_shape(uncond, x_t, "guided_eps");
    for (std::size_t i = 0; i < cond.size(); ++i) {
        cond[i] = (1.0 + omega) * cond[i] - omega * uncond[i];
    }
    return cond;
}

Grid reverse_step(const Grid& x_n, const Grid& x0_hat, int step_from, int step_to,
                  const Schedule& s, bool stochastic, Rng& rng) {
    require_same_shape(x_n, x0_hat, "reverse_step");
    check_step(s, step_from, "reverse_step");
    check_step(s, step_to, "reverse_step");
    if (!(step_to < step_from)) {
        throw std::invalid_argument("reverse_step: step_to must be < step_from");
    }
    if (step_to == 0) return x0_hat;

    const double var_from = s.sigma_sq(step_from);
    const double var_to = s.sigma_sq(step_to);
    const double ratio = var_to / var_from;
    const double var = var_to * (var_from - var_to) / var_from;
    const double sd = std::sqrt(var);

    Grid out = x_n;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - ratio) * x0_hat[i] + ratio * x_n[i];
        if (stochastic && var > 0.0) out[i] += sd * rng.normal();
    }
    return out;
}

std::vector<int> step_ladder(int n_steps, int nfe) {
    if (nfe < 1 || nfe > n_steps) {
        throw std::invalid_argument("step_ladder: nfe must be in [1, n_steps]");
    }
    std::vector<int> ladder(static_cast<std::size_t>(nfe) + 1);
    for (int k = 0; k <= nfe; ++k) {
        const long long j = nfe - k;
        ladder[static_cast<std::size_t>(k)] = static_cast<int>(j * n_steps / nfe);
    }
    return ladder;
}

Grid generate(const Predictor& p, const Grid& x1, Label label, const SampleConfig& cfg,
              const Schedule& s, std::uint64_t stream) {
    if (!x1.all_finite()) throw std::invalid_argument("generate: x1 must be finite");
    if (label.is_null()) throw std::invalid_argument("generate: label must not be null");
    const std::vector<int> ladder = step_ladder(s.n_steps(), cfg.nfe);

    const std::unique_ptr<Predictor> bound = p.bind_source(x1);
    const Predictor& model = bound ? *bound : p;
    Rng rng(cfg.seed, stream);

    Grid x = x1;
    for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
        const int from = ladder[k];
        const int to = ladder[k + 1];
        try {
            const Grid eps = guided_eps(model, x, label, from, cfg.omega);
            const Grid x0_hat = predict_x0(x, eps, from, s);
            x = reverse_step(x, x0_hat, from, to, s, cfg.stochastic, rng);
        } catch (const GenerationError&) {
            throw;
        } catch (const std::exception& e) {
            throw GenerationError(from, e.what());
        }
        if (!x.all_finite()) throw GenerationError(from, "non-finite values in chain state");
    }
    return x;
}

}  // namespace ssb
