#include "ssb/unet.hpp"

#include <cmath>
#include <stdexcept>

#include "nn_layers.hpp"
#include "ssb/rng.hpp"

namespace ssb {

using nlohmann::json;

namespace {

const char* to_string(DownKind k) { return k == DownKind::AvgPool ? "avgpool" : "strided_conv"; }
const char* to_string(UpKind k) { return k == UpKind::Nearest ? "nearest" : "nearest_conv"; }

DownKind down_kind_from(const std::string& s) {
    if (s == "avgpool") return DownKind::AvgPool;
    if (s == "strided_conv") return DownKind::StridedConv;
    throw std::invalid_argument("arch: unknown down kind '" + s + "'");
}

UpKind up_kind_from(const std::string& s) {
    if (s == "nearest") return UpKind::Nearest;
    if (s == "nearest_conv") return UpKind::NearestConv;
    throw std::invalid_argument("arch: unknown up kind '" + s + "'");
}

class LayoutBuilder {
public:
    std::size_t add(const std::string& name, std::vector<int> shape, ParamKind kind, int fan_in) {
        std::size_t size = 1;
        for (int d : shape) size *= static_cast<std::size_t>(d);
        entries.push_back({name, std::move(shape), next, size, kind, fan_in});
        const std::size_t offset = next;
        next += size;
        return offset;
    }

    nn::Conv2d conv(const std::string& name, int cin, int cout, int k, int stride) {
        nn::Conv2d c;
        c.cin = cin;
        c.cout = cout;
        c.k = k;
        c.stride = stride;
        c.pad = k / 2;
        c.w = add(name + ".weight", {cout, cin, k, k}, ParamKind::Weight, cin * k * k);
        c.b = add(name + ".bias", {cout}, ParamKind::Bias, cin * k * k);
        return c;
    }

    nn::GroupNorm norm(const std::string& name, int channels, int groups) {
        nn::GroupNorm g;
        g.channels = channels;
        g.groups = groups;
        g.gamma = add(name + ".gamma", {channels}, ParamKind::NormGain, 0);
        g.beta = add(name + ".beta", {channels}, ParamKind::NormShift, 0);
        return g;
    }

    nn::Linear linear(const std::string& name, int in, int out) {
        nn::Linear l;
        l.in = in;
        l.out = out;
        l.w = add(name + ".weight", {out, in}, ParamKind::Weight, in);
        l.b = add(name + ".bias", {out}, ParamKind::Bias, in);
        return l;
    }

    std::vector<ParamEntry> entries;
    std::size_t next = 0;
};

struct ResBlock {
    int cin = 0;
    int cout = 0;
    bool residual = true;
    bool skip_conv = false;
    nn::GroupNorm gn1;
    nn::Conv2d conv1;
    nn::Linear emb;
    nn::GroupNorm gn2;
    nn::Conv2d conv2;
    nn::Conv2d skip;

    static ResBlock build(LayoutBuilder& lb, const std::string& name, int cin, int cout,
                          const ArchConfig& arch) {
        ResBlock b;
        b.cin = cin;
        b.cout = cout;
        b.residual = arch.residual;
        b.gn1 = lb.norm(name + ".norm1", cin, arch.groups);
        b.conv1 = lb.conv(name + ".conv1", cin, cout, 3, 1);
        b.emb = lb.linear(name + ".emb_proj", arch.time_embed_dim, cout);
        b.gn2 = lb.norm(name + ".norm2", cout, arch.groups);
        b.conv2 = lb.conv(name + ".conv2", cout, cout, 3, 1);
        b.skip_conv = arch.residual && cin != cout;
        if (b.skip_conv) b.skip = lb.conv(name + ".skip", cin, cout, 1, 1);
        return b;
    }
};

template <typename T>
struct BlockCache {
    std::vector<T> in;
    std::vector<T> xhat1, norm1, act1, col1;
    nn::GroupNormCache stats1;
    std::vector<T> emb_out, h;
    std::vector<T> xhat2, norm2, act2, col2;
    nn::GroupNormCache stats2;
    std::vector<T> col_skip, skip_out;
    std::vector<T> out;
    // backward scratch
    std::vector<T> g, g_in, dcol, d_emb;
};

template <typename T>
void block_forward(const ResBlock& b, const T* p, const std::vector<T>& in, int res,
                   const std::vector<T>& e_act, BlockCache<T>& c) {
    const int plane = res * res;
    c.in = in;
    b.gn1.forward(p, c.in, plane, c.xhat1, c.stats1, c.norm1);
    nn::silu_forward(c.norm1, c.act1);
    b.conv1.forward(p, c.act1.data(), res, res, c.col1, c.h);
    b.emb.forward(p, e_act, c.emb_out);
    for (int o = 0; o < b.cout; ++o) {
        T* row = c.h.data() + static_cast<std::size_t>(o) * plane;
        for (int i = 0; i < plane; ++i) row[i] += c.emb_out[static_cast<std::size_t>(o)];
    }
    b.gn2.forward(p, c.h, plane, c.xhat2, c.stats2, c.norm2);
    nn::silu_forward(c.norm2, c.act2);
    b.conv2.forward(p, c.act2.data(), res, res, c.col2, c.out);
    if (!b.residual) return;
    if (b.skip_conv) {
        b.skip.forward(p, c.in.data(), res, res, c.col_skip, c.skip_out);
        for (std::size_t i = 0; i < c.out.size(); ++i) c.out[i] += c.skip_out[i];
    } else {
        for (std::size_t i = 0; i < c.out.size(); ++i) c.out[i] += c.in[i];
    }
}

// din receives d/d(block input); d_e_act accumulates d/d(embedding activation).
template <typename T>
void block_backward(const ResBlock& b, const T* p, BlockCache<T>& c, const std::vector<T>& dout, int res,
                    const std::vector<T>& e_act, T* grads, std::vector<T>& din, std::vector<T>& d_e_act) {
    const int plane = res * res;
    din.assign(c.in.size(), T(0));
    if (b.residual) {
        if (b.skip_conv) {
            b.skip.backward(p, c.col_skip, dout.data(), res, res, grads, din.data(), c.dcol);
        } else {
            for (std::size_t i = 0; i < din.size(); ++i) din[i] += dout[i];
        }
    }
    c.g.assign(c.act2.size(), T(0));
    b.conv2.backward(p, c.col2, dout.data(), res, res, grads, c.g.data(), c.dcol);
    nn::silu_backward(c.norm2, c.g);
    b.gn2.backward(p, c.xhat2, c.stats2, plane, grads, c.g);  // c.g = d/dh

    c.d_emb.assign(static_cast<std::size_t>(b.cout), T(0));
    for (int o = 0; o < b.cout; ++o) {
        const T* row = c.g.data() + static_cast<std::size_t>(o) * plane;
        T acc = 0;
        for (int i = 0; i < plane; ++i) acc += row[i];
        c.d_emb[static_cast<std::size_t>(o)] = acc;
    }
    b.emb.backward(p, e_act, c.d_emb, grads, d_e_act);

    c.g_in.assign(c.act1.size(), T(0));
    b.conv1.backward(p, c.col1, c.g.data(), res, res, grads, c.g_in.data(), c.dcol);
    nn::silu_backward(c.norm1, c.g_in);
    b.gn1.backward(p, c.xhat1, c.stats1, plane, grads, c.g_in);
    for (std::size_t i = 0; i < din.size(); ++i) din[i] += c.g_in[i];
}

}  // namespace

template <typename T>
struct UNetPlan {
    ArchConfig arch;
    nn::Linear time1, time2;
    std::size_t label_table = 0;
    nn::Conv2d conv_in;
    std::vector<ResBlock> down_blocks;
    std::vector<nn::Conv2d> down_convs;  // StridedConv only
    ResBlock mid;
    std::vector<nn::Conv2d> up_convs;  // NearestConv only
    std::vector<ResBlock> up_blocks;   // index l: output width channels[l]
    nn::GroupNorm out_norm;
    nn::Conv2d conv_out;
};

template <typename T>
struct UNetCache {
    std::vector<T> x;
    int label = 0;
    std::vector<T> t_embed, t1, t1_act, temb, e, e_act;
    std::vector<T> col_in, h0;
    std::vector<BlockCache<T>> down;
    std::vector<std::vector<T>> skips;
    std::vector<std::vector<T>> down_in;  // inputs to each downsampling op
    std::vector<std::vector<T>> down_col;
    std::vector<std::vector<T>> pooled;
    BlockCache<T> mid;
    std::vector<std::vector<T>> up_in;  // inputs to each upsampling op
    std::vector<std::vector<T>> upsampled;
    std::vector<std::vector<T>> up_col;
    std::vector<std::vector<T>> up_conv_out;
    std::vector<std::vector<T>> concat;
    std::vector<BlockCache<T>> up;
    std::vector<T> out_xhat, out_norm, out_act, col_out, y;
    nn::GroupNormCache out_stats;
    // backward scratch
    std::vector<T> g, g2, d_e_act, d_t, dcol;
};

namespace {

template <typename T>
std::pair<UNetPlan<T>, std::vector<ParamEntry>> build_plan(const ArchConfig& arch) {
    arch.validate();
    LayoutBuilder lb;
    UNetPlan<T> plan;
    plan.arch = arch;
    const int e = arch.time_embed_dim;
    plan.time1 = lb.linear("time.fc1", e, e);
    plan.time2 = lb.linear("time.fc2", e, e);
    plan.label_table = lb.add("label_embed", {arch.experts + 1, e}, ParamKind::Embedding, 1);

    const auto& ch = arch.channels;
    const int levels = arch.levels();
    plan.conv_in = lb.conv("conv_in", 1, ch[0], 3, 1);
    for (int l = 0; l < levels; ++l) {
        const int cin = l == 0 ? ch[0] : ch[static_cast<std::size_t>(l - 1)];
        const std::string name = "down" + std::to_string(l);
        plan.down_blocks.push_back(ResBlock::build(lb, name, cin, ch[static_cast<std::size_t>(l)], arch));
        if (l < levels - 1 && arch.down == DownKind::StridedConv) {
            const int c = ch[static_cast<std::size_t>(l)];
            plan.down_convs.push_back(lb.conv(name + ".downsample", c, c, 3, 2));
        }
    }
    const int deepest = ch.back();
    plan.mid = ResBlock::build(lb, "mid", deepest, deepest, arch);
    plan.up_blocks.resize(static_cast<std::size_t>(levels - 1));
    plan.up_convs.resize(static_cast<std::size_t>(levels - 1));
    for (int l = levels - 2; l >= 0; --l) {
        const int below = ch[static_cast<std::size_t>(l + 1)];
        const int here = ch[static_cast<std::size_t>(l)];
        const std::string name = "up" + std::to_string(l);
        if (arch.up == UpKind::NearestConv) {
            plan.up_convs[static_cast<std::size_t>(l)] = lb.conv(name + ".upsample", below, below, 3, 1);
        }
        plan.up_blocks[static_cast<std::size_t>(l)] = ResBlock::build(lb, name, below + here, here, arch);
    }
    plan.out_norm = lb.norm("out.norm", ch[0], arch.groups);
    plan.conv_out = lb.conv("conv_out", ch[0], 1, 3, 1);
    return {std::move(plan), std::move(lb.entries)};
}

template <typename T>
void sinusoid(int step, int dim, std::vector<T>& out) {
    const int half = dim / 2;
    out.resize(static_cast<std::size_t>(dim));
    const double scale = std::log(10000.0) / half;
    for (int i = 0; i < half; ++i) {
        const double angle = step * std::exp(-scale * i);
        out[static_cast<std::size_t>(i)] = static_cast<T>(std::cos(angle));
        out[static_cast<std::size_t>(i + half)] = static_cast<T>(std::sin(angle));
    }
}

}  // namespace

void ArchConfig::validate() const {
    if (channels.empty()) throw std::invalid_argument("arch: at least one level is required");
    for (int c : channels) {
        if (c <= 0 || c % groups != 0) {
            throw std::invalid_argument("arch: channel widths must be positive multiples of groups");
        }
    }
    if (groups <= 0) throw std::invalid_argument("arch: groups must be positive");
    if (grid_size <= 0 || grid_size % (1 << levels()) != 0) {
        throw std::invalid_argument("arch: grid_size must be divisible by 2^levels");
    }
    if (time_embed_dim <= 0 || time_embed_dim % 2 != 0) {
        throw std::invalid_argument("arch: time_embed_dim must be positive and even");
    }
    if (experts < 1) throw std::invalid_argument("arch: experts must be >= 1");
}

json to_json(const ArchConfig& a) {
    return json{{"grid_size", a.grid_size},
                {"channels", a.channels},
                {"time_embed_dim", a.time_embed_dim},
                {"experts", a.experts},
                {"groups", a.groups},
                {"down", to_string(a.down)},
                {"up", to_string(a.up)},
                {"residual", a.residual}};
}

ArchConfig arch_config_from_json(const json& j) {
    ArchConfig a;
    for (const auto& [key, value] : j.items()) {
        if (key == "grid_size") a.grid_size = value.get<int>();
        else if (key == "channels") a.channels = value.get<std::vector<int>>();
        else if (key == "time_embed_dim") a.time_embed_dim = value.get<int>();
        else if (key == "experts") a.experts = value.get<int>();
        else if (key == "groups") a.groups = value.get<int>();
        else if (key == "down") a.down = down_kind_from(value.get<std::string>());
        else if (key == "up") a.up = up_kind_from(value.get<std::string>());
        else if (key == "residual") a.residual = value.get<bool>();
        else throw std::invalid_argument("arch: unknown key '" + key + "'");
    }
    a.validate();
    return a;
}

std::vector<ParamEntry> param_layout(const ArchConfig& arch) { return build_plan<float>(arch).second; }

json layout_to_json(const std::vector<ParamEntry>& layout) {
    json out = json::array();
    for (const ParamEntry& e : layout) {
        out.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
    }
    return out;
}

template <typename T>
TinyUNetT<T>::Workspace::Workspace() : cache_(std::make_unique<UNetCache<T>>()) {}
template <typename T>
TinyUNetT<T>::Workspace::~Workspace() = default;
template <typename T>
TinyUNetT<T>::Workspace::Workspace(Workspace&&) noexcept = default;
template <typename T>
typename TinyUNetT<T>::Workspace& TinyUNetT<T>::Workspace::operator=(Workspace&&) noexcept = default;

template <typename T>
TinyUNetT<T>::TinyUNetT(ArchConfig arch) : arch_(std::move(arch)) {
    auto [plan, layout] = build_plan<T>(arch_);
    layout_ = std::move(layout);
    plan_ = std::make_shared<const UNetPlan<T>>(std::move(plan));
    std::size_t total = 0;
    for (const ParamEntry& e : layout_) total += e.size;
    params_.assign(total, T(0));
}

template <typename T>
TinyUNetT<T> TinyUNetT<T>::init(const ArchConfig& arch, std::uint64_t seed) {
    TinyUNetT net(arch);
    const Rng root(seed, 0x756E6574);  // "unet"
    for (std::size_t idx = 0; idx < net.layout_.size(); ++idx) {
        const ParamEntry& e = net.layout_[idx];
        Rng rng = root.split(idx);
        T* dst = net.params_.data() + e.offset;
        switch (e.kind) {
            case ParamKind::Weight: {
                double bound = std::sqrt(3.0 / e.fan_in);
                if (e.name == "conv_out.weight") bound *= 0.1;
                for (std::size_t i = 0; i < e.size; ++i) dst[i] = static_cast<T>(rng.uniform(-bound, bound));
                break;
            }
            case ParamKind::Embedding: {
                const double bound = std::sqrt(3.0);
                for (std::size_t i = 0; i < e.size; ++i) dst[i] = static_cast<T>(rng.uniform(-bound, bound));
                break;
            }
            case ParamKind::NormGain:
                for (std::size_t i = 0; i < e.size; ++i) dst[i] = T(1);
                break;
            case ParamKind::Bias:
            case ParamKind::NormShift:
                break;
        }
    }
    return net;
}

template <typename T>
const ParamEntry& TinyUNetT<T>::entry(const std::string& name) const {
    for (const ParamEntry& e : layout_) {
        if (e.name == name) return e;
    }
    throw std::invalid_argument("TinyUNet: no parameter named '" + name + "'");
}

template <typename T>
void TinyUNetT<T>::check_inputs(std::size_t n, Label label, int step) const {
    const auto expected = static_cast<std::size_t>(arch_.grid_size) * arch_.grid_size;
    if (n != expected) throw std::invalid_argument("TinyUNet: input size does not match grid_size");
    if (label.index() < 0 || label.index() > arch_.experts) {
        throw std::invalid_argument("TinyUNet: label out of range");
    }
    if (step < 0) throw std::invalid_argument("TinyUNet: negative step");
}

template <typename T>
std::vector<T> TinyUNetT<T>::forward(std::span<const T> x, Label label, int step, Workspace& ws) const {
    check_inputs(x.size(), label, step);
    const UNetPlan<T>& plan = *plan_;
    UNetCache<T>& c = *ws.cache_;
    const T* p = params_.data();
    const int levels = arch_.levels();
    const auto L = static_cast<std::size_t>(levels);
    const int e_dim = arch_.time_embed_dim;

    c.x.assign(x.begin(), x.end());
    c.label = label.index();
    sinusoid(step, e_dim, c.t_embed);
    plan.time1.forward(p, c.t_embed, c.t1);
    nn::silu_forward(c.t1, c.t1_act);
    plan.time2.forward(p, c.t1_act, c.temb);
    c.e = c.temb;
    const T* label_row = p + plan.label_table + static_cast<std::size_t>(label.index()) * e_dim;
    for (int i = 0; i < e_dim; ++i) c.e[static_cast<std::size_t>(i)] += label_row[i];
    nn::silu_forward(c.e, c.e_act);

    int res = arch_.grid_size;
    plan.conv_in.forward(p, c.x.data(), res, res, c.col_in, c.h0);

    c.down.resize(L);
    c.skips.resize(L);
    c.down_in.resize(L);
    c.down_col.resize(L);
    c.pooled.resize(L);
    const std::vector<T>* cur = &c.h0;
    for (int l = 0; l < levels; ++l) {
        const auto li = static_cast<std::size_t>(l);
        block_forward(plan.down_blocks[li], p, *cur, res, c.e_act, c.down[li]);
        cur = &c.down[li].out;
        if (l == levels - 1) break;
        const int ch = plan.down_blocks[li].cout;
        if (arch_.down == DownKind::AvgPool) {
            nn::avgpool2_forward(*cur, ch, res, res, c.pooled[li]);
        } else {
            plan.down_convs[li].forward(p, cur->data(), res, res, c.down_col[li], c.pooled[li]);
        }
        cur = &c.pooled[li];
        res /= 2;
    }

    block_forward(plan.mid, p, *cur, res, c.e_act, c.mid);
    cur = &c.mid.out;

    c.up.resize(L);
    c.upsampled.resize(L);
    c.up_col.resize(L);
    c.up_conv_out.resize(L);
    c.concat.resize(L);
    for (int l = levels - 2; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const int below = arch_.channels[li + 1];
        const int here = arch_.channels[li];
        nn::upsample2_forward(*cur, below, res, res, c.upsampled[li]);
        res *= 2;
        const std::vector<T>* up_out = &c.upsampled[li];
        if (arch_.up == UpKind::NearestConv) {
            plan.up_convs[li].forward(p, up_out->data(), res, res, c.up_col[li], c.up_conv_out[li]);
            up_out = &c.up_conv_out[li];
        }
        std::vector<T>& cat = c.concat[li];
        cat.resize(static_cast<std::size_t>(below + here) * res * res);
        std::copy(up_out->begin(), up_out->end(), cat.begin());
        std::copy(c.down[li].out.begin(), c.down[li].out.end(),
                  cat.begin() + static_cast<std::ptrdiff_t>(up_out->size()));
        block_forward(plan.up_blocks[li], p, cat, res, c.e_act, c.up[li]);
        cur = &c.up[li].out;
    }

    plan.out_norm.forward(p, *cur, res * res, c.out_xhat, c.out_stats, c.out_norm);
    nn::silu_forward(c.out_norm, c.out_act);
    plan.conv_out.forward(p, c.out_act.data(), res, res, c.col_out, c.y);
    return c.y;
}

template <typename T>
void TinyUNetT<T>::backward(Workspace& ws, std::span<const T> dout, std::span<T> grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("TinyUNet::backward: bad gradient size");
    const UNetPlan<T>& plan = *plan_;
    UNetCache<T>& c = *ws.cache_;
    if (dout.size() != c.y.size()) throw std::invalid_argument("TinyUNet::backward: bad upstream size");
    const T* p = params_.data();
    T* g = grad.data();
    const int levels = arch_.levels();
    int res = arch_.grid_size;

    c.d_e_act.assign(static_cast<std::size_t>(arch_.time_embed_dim), T(0));

    std::vector<T> dy(dout.begin(), dout.end());
    c.g.assign(c.out_act.size(), T(0));
    plan.conv_out.backward(p, c.col_out, dy.data(), res, res, g, c.g.data(), c.dcol);
    nn::silu_backward(c.out_norm, c.g);
    plan.out_norm.backward(p, c.out_xhat, c.out_stats, res * res, g, c.g);
    // c.g: gradient w.r.t. the output of the last up block (or mid when levels == 1)

    // Gradients flowing into each level's skip tensor.
    std::vector<std::vector<T>> skip_grad(static_cast<std::size_t>(levels));
    for (int l = 0; l <= levels - 2; ++l) {
        const auto li = static_cast<std::size_t>(l);
        const int lres = arch_.grid_size >> l;
        const ResBlock& blk = plan.up_blocks[li];
        block_backward(blk, p, c.up[li], c.g, lres, c.e_act, g, c.g2, c.d_e_act);
        const int below = arch_.channels[li + 1];
        const std::size_t up_size = static_cast<std::size_t>(below) * lres * lres;
        skip_grad[li].assign(c.g2.begin() + static_cast<std::ptrdiff_t>(up_size), c.g2.end());
        std::vector<T> d_up(c.g2.begin(), c.g2.begin() + static_cast<std::ptrdiff_t>(up_size));
        if (arch_.up == UpKind::NearestConv) {
            std::vector<T> d_in(c.upsampled[li].size(), T(0));
            plan.up_convs[li].backward(p, c.up_col[li], d_up.data(), lres, lres, g, d_in.data(), c.dcol);
            d_up = std::move(d_in);
        }
        nn::upsample2_backward(d_up, below, lres / 2, lres / 2, c.g);
    }

    res = arch_.grid_size >> (levels - 1);
    block_backward(plan.mid, p, c.mid, c.g, res, c.e_act, g, c.g2, c.d_e_act);
    std::swap(c.g, c.g2);

    for (int l = levels - 1; l >= 0; --l) {
        const auto li = static_cast<std::size_t>(l);
        const int lres = arch_.grid_size >> l;
        if (l < levels - 1) {
            const int ch = plan.down_blocks[li].cout;
            std::vector<T> d_block;
            if (arch_.down == DownKind::AvgPool) {
                nn::avgpool2_backward(c.g, ch, lres, lres, d_block);
            } else {
                d_block.assign(c.down[li].out.size(), T(0));
                plan.down_convs[li].backward(p, c.down_col[li], c.g.data(), lres, lres, g, d_block.data(), c.dcol);
            }
            for (std::size_t i = 0; i < d_block.size(); ++i) d_block[i] += skip_grad[li][i];
            c.g = std::move(d_block);
        }
        block_backward(plan.down_blocks[li], p, c.down[li], c.g, lres, c.e_act, g, c.g2, c.d_e_act);
        std::swap(c.g, c.g2);
    }

    plan.conv_in.backward(p, c.col_in, c.g.data(), arch_.grid_size, arch_.grid_size, g, static_cast<T*>(nullptr), c.dcol);

    // Embedding path: e_act = silu(temb + label_row), temb = fc2(silu(fc1(sinusoid))).
    std::vector<T> d_e = c.d_e_act;
    nn::silu_backward(c.e, d_e);
    T* label_grad = g + plan.label_table + static_cast<std::size_t>(c.label) * arch_.time_embed_dim;
    for (std::size_t i = 0; i < d_e.size(); ++i) label_grad[i] += d_e[i];
    c.d_t.assign(static_cast<std::size_t>(arch_.time_embed_dim), T(0));
    plan.time2.backward(p, c.t1_act, d_e, g, c.d_t);
    nn::silu_backward(c.t1, c.d_t);
    std::vector<T> d_sin(static_cast<std::size_t>(arch_.time_embed_dim), T(0));
    plan.time1.backward(p, c.t_embed, c.d_t, g, d_sin);
}

template <typename T>
Grid TinyUNetT<T>::forward(const Grid& x, Label label, int step) const {
    thread_local Workspace ws;
    std::vector<T> in(x.size());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = static_cast<T>(x[i]);
    const std::vector<T> y = forward(std::span<const T>(in), label, step, ws);
    std::vector<double> out(y.begin(), y.end());
    return Grid(x.height(), x.width(), std::move(out));
}

template class TinyUNetT<float>;
template class TinyUNetT<double>;

Grid UNetPredictor::predict(const Grid& x_t, Label label, int step) const {
    return net_->forward(x_t, label, step);
}

}  // namespace ssb
