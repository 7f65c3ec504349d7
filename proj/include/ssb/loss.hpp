#pragma once

#include "ssb/grid.hpp"

namespace ssb {

/// Which quantity the Dice penalty compares against the true mask.
enum class DiceOn {
    PredictedMask,  // x0_hat = x_t - sigma * eps (default)
    NoiseEstimate,  // eps itself, the literal ablation
};

struct LossConfig {
    double gamma = 0.5;
    double dice_smooth = 1.0;
    double label_drop_prob = 0.1;
    DiceOn dice_on = DiceOn::PredictedMask;

    void validate() const;
};

/// (2 sum(p t) + smooth) / (sum p + sum t + smooth) with p clamped to [0, 1].
double soft_dice(const Grid& pred, const Grid& truth, double smooth);

/// Value and gradients of MSE(eps_pred, eps_target) + gamma (1 - soft_dice(x0_pred, x0_true)).
struct LossResult {
    double value = 0.0;
    double mse = 0.0;
    double dice = 1.0;
    Grid grad_eps;  // d value / d eps_pred holding x0_pred fixed
    Grid grad_x0;   // d value / d x0_pred (zero outside the clamp range)
};

LossResult ssb_loss(const Grid& eps_pred, const Grid& eps_target, const Grid& x0_pred,
                    const Grid& x0_true, const LossConfig& cfg);

/// Same loss with the Dice argument tied to eps_pred: either through
/// x0_pred = x_t - sigma * eps_pred or, for DiceOn::NoiseEstimate, eps_pred
/// directly. grad_eps is the total derivative with respect to eps_pred.
LossResult ssb_loss_on_eps(const Grid& eps_pred, const Grid& eps_target, const Grid& x_t,
                           const Grid& x0_true, double sigma, const LossConfig& cfg);

}  // namespace ssb
