#include "ssb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssb {

namespace {

struct Overlap {
    double intersection = 0.0;
    double size_a = 0.0;
    double size_b = 0.0;
};

Overlap overlap(const Grid& a, const Grid& b, const char* who) {
    require_same_shape(a, b, who);
    if (!a.is_binary() || !b.is_binary()) {
        throw std::invalid_argument(std::string(who) + ": masks must be binary {0,1}");
    }
    Overlap o;
    for (std::size_t i = 0; i < a.size(); ++i) {
        o.intersection += a[i] * b[i];
        o.size_a += a[i];
        o.size_b += b[i];
    }
    return o;
}

void require_compatible(const MaskSet& x, const MaskSet& y, const char* who) {
    require_same_shape(x[0], y[0], who);
}

double mean_pairwise_distance(const MaskSet& set, bool include_self) {
    double total = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (i == j && !include_self) continue;
            total += 1.0 - iou(set[i], set[j]);
            count += 1.0;
        }
    }
    return total / count;
}

Grid consensus(const MaskSet& set) {
    Grid mean = Grid::constant_like(set[0], 0.0);
    for (const Grid& m : set.masks()) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += m[i];
    }
    const auto n = static_cast<double>(set.size());
    for (double& v : mean.values()) v = (v / n >= 0.5) ? 1.0 : 0.0;
    return mean;
}

std::vector<double> normalized(std::vector<double> v) {
    double total = 0.0;
    for (double x : v) total += x;
    if (total <= 0.0) {
        std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
        return v;
    }
    for (double& x : v) x /= total;
    return v;
}

double pairwise_js_index(const std::vector<std::vector<double>>& dists) {
    const auto k = static_cast<double>(dists.size());
    const double pairs = k * (k - 1.0) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
        for (std::size_t j = 0; j < dists.size(); ++j) {
            if (i == j) continue;
            total += js_divergence(dists[i], dists[j]);
        }
    }
    return 3.0 / pairs * total;
}

}  // namespace

MaskSet::MaskSet(std::vector<Grid> masks, Role role) : masks_(std::move(masks)), role_(role) {
    if (masks_.empty()) throw std::invalid_argument("MaskSet: must contain at least one mask");
    for (const Grid& m : masks_) {
        require_same_shape(m, masks_.front(), "MaskSet");
        if (!m.is_binary()) throw std::invalid_argument("MaskSet: masks must be binary {0,1}");
    }
}

DiceMatrix::DiceMatrix(std::size_t m, std::size_t n, std::vector<double> values)
    : m_(m), n_(n), values_(std::move(values)) {
    if (m_ == 0 || n_ == 0 || values_.size() != m_ * n_) {
        throw std::invalid_argument("DiceMatrix: bad dimensions");
    }
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("DiceMatrix: entries must lie in [0,1]");
    }
}

DiceMatrix DiceMatrix::from_masks(const MaskSet& experts, const MaskSet& generated) {
    require_compatible(experts, generated, "DiceMatrix");
    std::vector<double> values;
    values.reserve(experts.size() * generated.size());
    for (const Grid& e : experts.masks()) {
        for (const Grid& g : generated.masks()) values.push_back(dice(e, g));
    }
    return DiceMatrix(experts.size(), generated.size(), std::move(values));
}

std::vector<double> DiceMatrix::row(std::size_t i) const {
    return {values_.begin() + static_cast<std::ptrdiff_t>(i * n_),
            values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_)};
}

std::vector<double> DiceMatrix::column(std::size_t j) const {
    std::vector<double> col(m_);
    for (std::size_t i = 0; i < m_; ++i) col[i] = (*this)(i, j);
    return col;
}

double dice(const Grid& a, const Grid& b) {
    const Overlap o = overlap(a, b, "dice");
    const double denom = o.size_a + o.size_b;
    if (denom == 0.0) return 1.0;
    return 2.0 * o.intersection / denom;
}

double iou(const Grid& a, const Grid& b) {
    const Overlap o = overlap(a, b, "iou");
    const double uni = o.size_a + o.size_b - o.intersection;
    if (uni == 0.0) return 1.0;
    return o.intersection / uni;
}

double ged(const MaskSet& generated, const MaskSet& experts) {
    require_compatible(generated, experts, "ged");
    double cross = 0.0;
    for (const Grid& s : generated.masks()) {
        for (const Grid& y : experts.masks()) cross += 1.0 - iou(s, y);
    }
    cross /= static_cast<double>(generated.size() * experts.size());
    const double self_gen = mean_pairwise_distance(generated, true);
    const double self_exp = mean_pairwise_distance(experts, true);
    return std::max(0.0, 2.0 * cross - self_gen - self_exp);
}

double d_max(const MaskSet& generated, const MaskSet& experts) {
    require_compatible(generated, experts, "d_max");
    double total = 0.0;
    for (const Grid& e : experts.masks()) {
        double best = 0.0;
        for (const Grid& g : generated.masks()) best = std::max(best, dice(e, g));
        total += best;
    }
    return total / static_cast<double>(experts.size());
}

double ci_score(const MaskSet& generated, const MaskSet& experts) {
    require_compatible(generated, experts, "ci_score");
    return dice(consensus(generated), consensus(experts));
}

std::optional<double> diversity_agreement(const MaskSet& generated, const MaskSet& experts) {
    require_compatible(generated, experts, "diversity_agreement");
    if (generated.size() < 2 || experts.size() < 2) return std::nullopt;
    const double div_gen = mean_pairwise_distance(generated, false);
    const double div_exp = mean_pairwise_distance(experts, false);
    const double scale = std::max({div_gen, div_exp, 1e-12});
    return 1.0 - std::abs(div_gen - div_exp) / scale;
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.empty() || p.size() != q.size()) {
        throw std::invalid_argument("js_divergence: vectors must be non-empty and equal length");
    }
    double sum_p = 0.0;
    double sum_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) {
            throw std::invalid_argument("js_divergence: entries must be non-negative");
        }
        sum_p += p[i];
        sum_q += q[i];
    }
    if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
        throw std::invalid_argument("js_divergence: vectors must sum to 1");
    }
    double kl_p = 0.0;
    double kl_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) kl_p += p[i] * std::log2(p[i] / m);
        if (q[i] > 0.0) kl_q += q[i] * std::log2(q[i] / m);
    }
    return std::clamp(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0);
}

DdiResult ddi(const DiceMatrix& dm) {
    DdiResult out;
    if (dm.experts() >= 2) {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < dm.experts(); ++i) rows.push_back(normalized(dm.row(i)));
        out.exp = pairwise_js_index(rows);
    }
    if (dm.generated() >= 2) {
        std::vector<std::vector<double>> cols;
        for (std::size_t j = 0; j < dm.generated(); ++j) cols.push_back(normalized(dm.column(j)));
        out.gen = pairwise_js_index(cols);
    }
    return out;
}

MetricsReport evaluate_masks(const MaskSet& generated, const MaskSet& experts) {
    MetricsReport r;
    r.ged = ged(generated, experts);
    r.d_max = d_max(generated, experts);
    r.ci = ci_score(generated, experts);
    r.d_a = diversity_agreement(generated, experts);
    const DdiResult d = ddi(DiceMatrix::from_masks(experts, generated));
    r.ddi_exp = d.exp;
    r.ddi_gen = d.gen;
    return r;
}

}  // namespace ssb
