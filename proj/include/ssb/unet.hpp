#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssb/grid.hpp"
#include "ssb/predictor.hpp"

namespace ssb {

enum class DownKind { AvgPool, StridedConv };
enum class UpKind { Nearest, NearestConv };

/// Architecture of the time- and label-conditioned U-Net.
struct ArchConfig {
    int grid_size = 32;
    std::vector<int> channels{16, 32};  // one width per resolution level
    int time_embed_dim = 32;
    int experts = 4;  // label table has experts + 1 rows; row 0 is the null label
    int groups = 8;   // group-norm groups
    DownKind down = DownKind::AvgPool;
    UpKind up = UpKind::Nearest;
    bool residual = true;

    void validate() const;
    int levels() const { return static_cast<int>(channels.size()); }
};

nlohmann::json to_json(const ArchConfig& a);
ArchConfig arch_config_from_json(const nlohmann::json& j);

enum class ParamKind { Weight, Bias, NormGain, NormShift, Embedding };

/// One named tensor in the flat parameter array.
struct ParamEntry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
    ParamKind kind = ParamKind::Weight;
    int fan_in = 0;
};

/// Deterministic parameter layout; a pure function of the architecture.
std::vector<ParamEntry> param_layout(const ArchConfig& arch);
nlohmann::json layout_to_json(const std::vector<ParamEntry>& layout);

template <typename T>
struct UNetCache;
template <typename T>
struct UNetPlan;

/// Small U-Net noise predictor with hand-written backward pass. T is float
/// for training and sampling, double for gradient verification.
template <typename T>
class TinyUNetT {
public:
    /// Reusable per-thread activation storage for forward/backward.
    class Workspace {
    public:
        Workspace();
        ~Workspace();
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;

    private:
        friend class TinyUNetT;
        std::unique_ptr<UNetCache<T>> cache_;
    };

    /// All-zero parameters.
    explicit TinyUNetT(ArchConfig arch);
    /// Variance-scaled uniform initialization, deterministic in seed.
    static TinyUNetT init(const ArchConfig& arch, std::uint64_t seed);

    TinyUNetT(const TinyUNetT&) = default;
    TinyUNetT(TinyUNetT&&) noexcept = default;
    TinyUNetT& operator=(const TinyUNetT&) = default;
    TinyUNetT& operator=(TinyUNetT&&) noexcept = default;

    const ArchConfig& arch() const noexcept { return arch_; }
    const std::vector<ParamEntry>& layout() const noexcept { return layout_; }
    std::vector<T>& params() noexcept { return params_; }
    const std::vector<T>& params() const noexcept { return params_; }
    std::size_t param_count() const noexcept { return params_.size(); }
    const ParamEntry& entry(const std::string& name) const;

    /// x holds grid_size^2 values; returns the same number.
    std::vector<T> forward(std::span<const T> x, Label label, int step, Workspace& ws) const;
    /// Adds d(loss)/d(params) into grad given d(loss)/d(output) of the last
    /// forward call made with ws.
    void backward(Workspace& ws, std::span<const T> dout, std::span<T> grad) const;

    Grid forward(const Grid& x, Label label, int step) const;

    template <typename U>
    TinyUNetT<U> cast() const {
        TinyUNetT<U> out(arch_);
        for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
        return out;
    }

private:
    void check_inputs(std::size_t n, Label label, int step) const;

    ArchConfig arch_;
    std::vector<ParamEntry> layout_;
    std::shared_ptr<const UNetPlan<T>> plan_;
    std::vector<T> params_;
};

using TinyUNet = TinyUNetT<float>;
using TinyUNet64 = TinyUNetT<double>;

/// Predictor adapter over a float network.
class UNetPredictor final : public Predictor {
public:
    explicit UNetPredictor(std::shared_ptr<const TinyUNet> net) : net_(std::move(net)) {}
    Grid predict(const Grid& x_t, Label label, int step) const override;

private:
    std::shared_ptr<const TinyUNet> net_;
};

}  // namespace ssb
