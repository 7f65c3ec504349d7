#include "ssb/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssb {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct DiceTerm {
    double dice;
    Grid grad;  // d(1 - dice) / d pred, clamp-masked
};

DiceTerm dice_with_gradient(const Grid& pred, const Grid& truth, double smooth) {
    double overlap = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp01(pred[i]);
        const double t = clamp01(truth[i]);
        overlap += p * t;
        total += p + t;
    }
    const double num = 2.0 * overlap + smooth;
    const double den = total + smooth;
    DiceTerm out{num / den, Grid::constant_like(pred, 0.0)};
    const double den_sq = den * den;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] <= 0.0 || pred[i] >= 1.0) continue;
        const double d_dice = (2.0 * clamp01(truth[i]) * den - num) / den_sq;
        out.grad[i] = -d_dice;
    }
    return out;
}

}  // namespace

void LossConfig::validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("LossConfig: gamma must be >= 0");
    if (!(dice_smooth > 0.0)) throw std::invalid_argument("LossConfig: dice_smooth must be > 0");
    if (!(label_drop_prob >= 0.0 && label_drop_prob < 1.0)) {
        throw std::invalid_argument("LossConfig: label_drop_prob must be in [0, 1)");
    }
}

double soft_dice(const Grid& pred, const Grid& truth, double smooth) {
    require_same_shape(pred, truth, "soft_dice");
    if (!(smooth > 0.0)) throw std::invalid_argument("soft_dice: smooth must be > 0");
    double overlap = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp01(pred[i]);
        const double t = clamp01(truth[i]);
        overlap += p * t;
        total += p + t;
    }
    return (2.0 * overlap + smooth) / (total + smooth);
}

LossResult ssb_loss(const Grid& eps_pred, const Grid& eps_target, const Grid& x0_pred,
                    const Grid& x0_true, const LossConfig& cfg) {
    require_same_shape(eps_pred, eps_target, "ssb_loss");
    require_same_shape(eps_pred, x0_pred, "ssb_loss");
    require_same_shape(eps_pred, x0_true, "ssb_loss");
    cfg.validate();

    LossResult out;
    const auto n = static_cast<double>(eps_pred.size());
    out.grad_eps = Grid::constant_like(eps_pred, 0.0);
    double sq = 0.0;
    for (std::size_t i = 0; i < eps_pred.size(); ++i) {
        const double diff = eps_pred[i] - eps_target[i];
        sq += diff * diff;
        out.grad_eps[i] = 2.0 * diff / n;
    }
    out.mse = sq / n;

    DiceTerm dice = dice_with_gradient(x0_pred, x0_true, cfg.dice_smooth);
    out.dice = dice.dice;
    for (double& g : dice.grad.values()) g *= cfg.gamma;
    out.grad_x0 = std::move(dice.grad);
    out.value = out.mse + cfg.gamma * (1.0 - out.dice);
    return out;
}

LossResult ssb_loss_on_eps(const Grid& eps_pred, const Grid& eps_target, const Grid& x_t,
                           const Grid& x0_true, double sigma, const LossConfig& cfg) {
    require_same_shape(eps_pred, x_t, "ssb_loss_on_eps");
    if (!(sigma > 0.0)) throw std::domain_error("ssb_loss_on_eps: sigma must be > 0");

    if (cfg.dice_on == DiceOn::NoiseEstimate) {
        LossResult out = ssb_loss(eps_pred, eps_target, eps_pred, x0_true, cfg);
        for (std::size_t i = 0; i < out.grad_eps.size(); ++i) out.grad_eps[i] += out.grad_x0[i];
        return out;
    }

    Grid x0_pred = x_t;
    for (std::size_t i = 0; i < x0_pred.size(); ++i) x0_pred[i] = x_t[i] - sigma * eps_pred[i];
    LossResult out = ssb_loss(eps_pred, eps_target, x0_pred, x0_true, cfg);
    for (std::size_t i = 0; i < out.grad_eps.size(); ++i) {
        out.grad_eps[i] -= sigma * out.grad_x0[i];
    }
    return out;
}

}  // namespace ssb
