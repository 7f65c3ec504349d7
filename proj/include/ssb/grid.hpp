#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssb {

/// Dense row-major 2-D array of doubles. Carries images, masks, noise and
/// network outputs.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, double fill = 0.0);
    Grid(int height, int width, std::vector<double> data);

    static Grid constant_like(const Grid& other, double value) {
        return Grid(other.height(), other.width(), value);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(int row, int col) { return data_[index(row, col)]; }
    double operator()(int row, int col) const { return data_[index(row, col)]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool all_finite() const noexcept;
    bool is_binary() const noexcept;
    double sum() const noexcept;

    bool operator==(const Grid& other) const = default;

private:
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Throws std::invalid_argument naming `what` unless both grids have equal shape.
void require_same_shape(const Grid& a, const Grid& b, const std::string& what);

/// Binarize at `threshold` (value >= threshold -> 1).
Grid threshold(const Grid& g, double threshold);

/// Expert label: 0 is the null (unconditional) label, 1..eta are experts.
class Label {
public:
    constexpr Label() = default;
    static constexpr Label null() { return Label(); }
    static constexpr Label expert(int id) { return Label(id); }

    constexpr bool is_null() const noexcept { return id_ == 0; }
    /// Row in the label embedding table (0 = null).
    constexpr int index() const noexcept { return id_; }

    constexpr bool operator==(const Label&) const = default;

private:
    constexpr explicit Label(int id) : id_(id) {}
    int id_ = 0;
};

}  // namespace ssb
