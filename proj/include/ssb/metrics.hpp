#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssb/grid.hpp"

namespace ssb {

/// Non-empty list of same-shape binary masks.
class MaskSet {
public:
    enum class Role { Expert, Generated };

    MaskSet(std::vector<Grid> masks, Role role);

    const std::vector<Grid>& masks() const noexcept { return masks_; }
    std::size_t size() const noexcept { return masks_.size(); }
    const Grid& operator[](std::size_t i) const { return masks_[i]; }
    Role role() const noexcept { return role_; }

private:
    std::vector<Grid> masks_;
    Role role_;
};

/// Rows are experts, columns generated samples.
class DiceMatrix {
public:
    DiceMatrix(std::size_t m, std::size_t n, std::vector<double> values);
    static DiceMatrix from_masks(const MaskSet& experts, const MaskSet& generated);

    std::size_t experts() const noexcept { return m_; }
    std::size_t generated() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

    std::vector<double> row(std::size_t i) const;
    std::vector<double> column(std::size_t j) const;

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> values_;
};

struct MetricsReport {
    double ged = 0.0;
    double d_max = 0.0;
    double ci = 0.0;
    std::optional<double> d_a;
    std::optional<double> ddi_exp;
    std::optional<double> ddi_gen;
};

struct DdiResult {
    std::optional<double> exp;
    std::optional<double> gen;
};

/// 2|a & b| / (|a| + |b|); 1 when both are empty.
double dice(const Grid& a, const Grid& b);
/// |a & b| / |a | b|; 1 when both are empty.
double iou(const Grid& a, const Grid& b);

/// Squared generalized energy distance with d = 1 - IoU.
double ged(const MaskSet& generated, const MaskSet& experts);
double d_max(const MaskSet& generated, const MaskSet& experts);
double ci_score(const MaskSet& generated, const MaskSet& experts);
/// Absent when either set has fewer than two masks.
std::optional<double> diversity_agreement(const MaskSet& generated, const MaskSet& experts);

/// Base-2 Jensen-Shannon divergence of two probability vectors.
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// Diversity Divergence Index over rows (experts) and columns (samples).
DdiResult ddi(const DiceMatrix& dm);

MetricsReport evaluate_masks(const MaskSet& generated, const MaskSet& experts);

}  // namespace ssb
