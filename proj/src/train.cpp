#include "ssb/train.hpp"

#include <cmath>

#include "ssb/bridge.hpp"
#include "ssb/parallel.hpp"
#include "ssb/rng.hpp"

namespace ssb {

using nlohmann::json;

void TrainConfig::validate() const {
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
    if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("TrainConfig: Adam betas must be in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
    if (eta < 1) throw std::invalid_argument("TrainConfig: eta must be >= 1");
    loss.validate();
}

json to_json(const LossConfig& c) {
    return json{{"gamma", c.gamma},
                {"dice_smooth", c.dice_smooth},
                {"label_drop_prob", c.label_drop_prob},
                {"dice_on", c.dice_on == DiceOn::PredictedMask ? "predicted_mask" : "noise_estimate"}};
}

LossConfig loss_config_from_json(const json& j) {
    LossConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "gamma") c.gamma = value.get<double>();
        else if (key == "dice_smooth") c.dice_smooth = value.get<double>();
        else if (key == "label_drop_prob") c.label_drop_prob = value.get<double>();
        else if (key == "dice_on") {
            const auto s = value.get<std::string>();
            if (s == "predicted_mask") c.dice_on = DiceOn::PredictedMask;
            else if (s == "noise_estimate") c.dice_on = DiceOn::NoiseEstimate;
            else throw std::invalid_argument("loss: unknown dice_on '" + s + "'");
        } else {
            throw std::invalid_argument("loss: unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"steps", c.steps},       {"batch", c.batch}, {"lr", c.lr},
                {"beta1", c.beta1},       {"beta2", c.beta2}, {"adam_eps", c.adam_eps},
                {"seed", c.seed},         {"eta", c.eta},     {"loss", to_json(c.loss)}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "steps") c.steps = value.get<int>();
        else if (key == "batch") c.batch = value.get<int>();
        else if (key == "lr") c.lr = value.get<double>();
        else if (key == "beta1") c.beta1 = value.get<double>();
        else if (key == "beta2") c.beta2 = value.get<double>();
        else if (key == "adam_eps") c.adam_eps = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "eta") c.eta = value.get<int>();
        else if (key == "loss") c.loss = loss_config_from_json(value);
        else throw std::invalid_argument("train: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<float>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        params[i] = static_cast<float>(params[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
}

namespace {

struct SlotResult {
    double loss = 0.0;
    std::vector<float> grad;
};

}  // namespace

TrainResult train_from(TinyUNet net, const Dataset& data, const TrainConfig& cfg, const Schedule& s,
                       const TrainProgress& progress) {
    cfg.validate();
    const auto records = data.train();
    if (records.empty()) throw std::invalid_argument("train: the training split is empty");
    if (cfg.eta > net.arch().experts) {
        throw std::invalid_argument("train: eta exceeds the network's label table");
    }
    for (const DatasetRecord& r : records) {
        if (static_cast<int>(r.expert_masks.size()) < cfg.eta) {
            throw std::invalid_argument("train: record " + r.id + " has fewer than eta expert masks");
        }
        if (r.image.height() != net.arch().grid_size || r.image.width() != net.arch().grid_size) {
            throw std::invalid_argument("train: record " + r.id + " does not match the network grid size");
        }
    }

    TrainResult result{std::move(net), {}};
    TinyUNet& model = result.net;
    result.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
    Adam adam(model.param_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);

    const auto batch = static_cast<std::size_t>(cfg.batch);
    std::vector<TinyUNet::Workspace> workspaces(batch);
    std::vector<SlotResult> slots(batch);
    std::vector<double> grad(model.param_count());
    const Rng root(cfg.seed, 0x747261696E);  // "train"
    const int last_record = static_cast<int>(records.size()) - 1;

    for (int it = 0; it < cfg.steps; ++it) {
        const Rng iter_rng = root.split(static_cast<std::uint64_t>(it));
        parallel_for(batch, [&](std::size_t b) {
            Rng rng = iter_rng.split(b);
            const DatasetRecord& rec = records[static_cast<std::size_t>(rng.uniform_int(0, last_record))];
            const int step = rng.uniform_int(1, s.n_steps());
            const int expert = rng.uniform_int(1, cfg.eta);
            const Grid& x0 = rec.expert_masks[static_cast<std::size_t>(expert - 1)];
            const Grid x_t = sample_xt(x0, rec.image, step, s, rng);
            const Grid target = training_target(x_t, x0, step, s);
            const Label label = rng.bernoulli(cfg.loss.label_drop_prob) ? Label::null() : Label::expert(expert);

            std::vector<float> in(x_t.size());
            for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<float>(x_t[i]);
            const std::vector<float> y = model.forward(std::span<const float>(in), label, step, workspaces[b]);
            const LossResult lr = ssb_loss_on_eps(Grid(x_t.height(), x_t.width(), std::vector<double>(y.begin(), y.end())),
                                                  target, x_t, x0, s.sigma(step), cfg.loss);
            std::vector<float> dout(y.size());
            for (std::size_t i = 0; i < dout.size(); ++i) {
                dout[i] = static_cast<float>(lr.grad_eps[i] / static_cast<double>(batch));
            }
            SlotResult& slot = slots[b];
            slot.loss = lr.value;
            slot.grad.assign(model.param_count(), 0.0f);
            model.backward(workspaces[b], dout, slot.grad);
        });

        double loss = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const SlotResult& slot : slots) {
            loss += slot.loss;
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += static_cast<double>(slot.grad[i]);
        }
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) throw NumericalError(it, "loss is " + std::to_string(loss));
        for (double g : grad) {
            if (!std::isfinite(g)) throw NumericalError(it, "gradient is not finite");
        }
        adam.step(model.params(), grad);
        result.loss_trace.push_back(loss);
        if (progress) progress(it, loss);
    }
    return result;
}

TrainResult train(const Dataset& data, const ArchConfig& arch, const TrainConfig& cfg, const Schedule& s,
                  const TrainProgress& progress) {
    cfg.validate();
    if (arch.experts < cfg.eta) throw std::invalid_argument("train: arch.experts must be >= eta");
    return train_from(TinyUNet::init(arch, cfg.seed), data, cfg, s, progress);
}

}  // namespace ssb
