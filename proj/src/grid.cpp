#include "ssb/grid.hpp"

#include <cmath>
#include <numeric>

namespace ssb {

Grid::Grid(int height, int width, double fill) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("Grid: dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

Grid::Grid(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("Grid: dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw std::invalid_argument("Grid: data length does not match height*width");
    }
}

bool Grid::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool Grid::is_binary() const noexcept {
    for (double v : data_) {
        if (v != 0.0 && v != 1.0) return false;
    }
    return true;
}

double Grid::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

void require_same_shape(const Grid& a, const Grid& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(what + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                                    std::to_string(a.width()) + " vs " +
                                    std::to_string(b.height()) + "x" +
                                    std::to_string(b.width()) + ")");
    }
}

Grid threshold(const Grid& g, double level) {
    Grid out = g;
    for (double& v : out.values()) v = v >= level ? 1.0 : 0.0;
    return out;
}

}  // namespace ssb
