#pragma once

// Per-sample CHW layer primitives with explicit backward passes. Parameters
// live in one flat array; layers hold offsets into it.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace ssb::nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
void silu_forward(const std::vector<T>& in, std::vector<T>& out) {
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * sigmoid(in[i]);
}

// Overwrites grad (w.r.t. output) with the gradient w.r.t. input.
template <typename T>
void silu_backward(const std::vector<T>& in, std::vector<T>& grad) {
    for (std::size_t i = 0; i < in.size(); ++i) {
        const T s = sigmoid(in[i]);
        grad[i] *= s * (T(1) + in[i] * (T(1) - s));
    }
}

struct Conv2d {
    int cin = 0;
    int cout = 0;
    int k = 3;
    int stride = 1;
    int pad = 1;
    std::size_t w = 0;  // offset of cout x (cin*k*k) weights
    std::size_t b = 0;  // offset of cout biases

    int out_dim(int in) const { return (in + 2 * pad - k) / stride + 1; }
    std::size_t weight_count() const { return static_cast<std::size_t>(cout) * cin * k * k; }

    // Output columns [lo, hi) whose input column ox * stride + kx - pad is in range.
    void valid_range(int kx, int in, int out, int& lo, int& hi) const {
        lo = 0;
        while (lo < out && lo * stride + kx - pad < 0) ++lo;
        hi = out;
        while (hi > lo && (hi - 1) * stride + kx - pad >= in) --hi;
    }

    template <typename T>
    void im2col(const T* in, int h, int wd, std::vector<T>& col) const {
        const int oh = out_dim(h);
        const int ow = out_dim(wd);
        const std::size_t plane = static_cast<std::size_t>(oh) * ow;
        col.resize(static_cast<std::size_t>(cin) * k * k * plane);
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                int lo = 0;
                int hi = 0;
                valid_range(kx, wd, ow, lo, hi);
                for (int c = 0; c < cin; ++c) {
                    T* dst = col.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * plane;
                    const T* src = in + static_cast<std::size_t>(c) * h * wd;
                    for (int oy = 0; oy < oh; ++oy) {
                        T* row = dst + static_cast<std::size_t>(oy) * ow;
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) {
                            std::fill(row, row + ow, T(0));
                            continue;
                        }
                        std::fill(row, row + lo, T(0));
                        std::fill(row + hi, row + ow, T(0));
                        if (hi <= lo) continue;
                        const T* srow = src + static_cast<std::size_t>(iy) * wd + (lo * stride + kx - pad);
                        if (stride == 1) {
                            std::copy(srow, srow + (hi - lo), row + lo);
                        } else {
                            for (int ox = lo; ox < hi; ++ox) row[ox] = srow[(ox - lo) * stride];
                        }
                    }
                }
            }
        }
    }

    template <typename T>
    void col2im(const std::vector<T>& col, int h, int wd, T* din) const {
        const int oh = out_dim(h);
        const int ow = out_dim(wd);
        const std::size_t plane = static_cast<std::size_t>(oh) * ow;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                int lo = 0;
                int hi = 0;
                valid_range(kx, wd, ow, lo, hi);
                for (int c = 0; c < cin; ++c) {
                    const T* src = col.data() + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * plane;
                    T* dst = din + static_cast<std::size_t>(c) * h * wd;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        const T* row = src + static_cast<std::size_t>(oy) * ow;
                        if (hi <= lo) continue;
                        T* drow = dst + static_cast<std::size_t>(iy) * wd + (lo * stride + kx - pad);
                        for (int ox = lo; ox < hi; ++ox) drow[(ox - lo) * stride] += row[ox];
                    }
                }
            }
        }
    }

    // out must hold cout * oh * ow values; col receives the patch matrix.
    template <typename T>
    void forward(const T* params, const T* in, int h, int wd, std::vector<T>& col, std::vector<T>& out) const {
        im2col(in, h, wd, col);
        const int plane = out_dim(h) * out_dim(wd);
        const int kdim = cin * k * k;
        out.resize(static_cast<std::size_t>(cout) * plane);
        MapMat<T> y(out.data(), cout, plane);
        y.noalias() = ConstMapMat<T>(params + w, cout, kdim) * ConstMapMat<T>(col.data(), kdim, plane);
        for (int o = 0; o < cout; ++o) y.row(o).array() += params[b + o];
    }

    // Accumulates parameter gradients; if din is non-null, adds the input gradient to it.
    template <typename T>
    void backward(const T* params, const std::vector<T>& col, const T* dout, int h, int wd, T* grads,
                  T* din, std::vector<T>& dcol) const {
        const int plane = out_dim(h) * out_dim(wd);
        const int kdim = cin * k * k;
        ConstMapMat<T> dy(dout, cout, plane);
        MapMat<T>(grads + w, cout, kdim).noalias() += dy * ConstMapMat<T>(col.data(), kdim, plane).transpose();
        for (int o = 0; o < cout; ++o) {
            const T* row = dout + static_cast<std::size_t>(o) * plane;
            T acc = T(0);
            for (int i = 0; i < plane; ++i) acc += row[i];
            grads[b + o] += acc;
        }
        if (din == nullptr) return;
        dcol.resize(static_cast<std::size_t>(kdim) * plane);
        MapMat<T>(dcol.data(), kdim, plane).noalias() = ConstMapMat<T>(params + w, cout, kdim).transpose() * dy;
        col2im(dcol, h, wd, din);
    }
};

struct GroupNormCache {
    std::vector<double> rstd;  // per group
};

struct GroupNorm {
    int channels = 0;
    int groups = 8;
    std::size_t gamma = 0;
    std::size_t beta = 0;
    static constexpr double kEps = 1e-5;

    // xhat receives the normalized input (before the affine map).
    template <typename T>
    void forward(const T* params, const std::vector<T>& in, int plane, std::vector<T>& xhat,
                 GroupNormCache& cache, std::vector<T>& out) const {
        const int per = channels / groups;
        const std::size_t n = static_cast<std::size_t>(per) * plane;
        xhat.resize(in.size());
        out.resize(in.size());
        cache.rstd.assign(static_cast<std::size_t>(groups), 0.0);
        for (int g = 0; g < groups; ++g) {
            const std::size_t base = static_cast<std::size_t>(g) * n;
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += static_cast<double>(in[base + i]);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = static_cast<double>(in[base + i]) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            const double rstd = 1.0 / std::sqrt(var + kEps);
            cache.rstd[static_cast<std::size_t>(g)] = rstd;
            for (std::size_t i = 0; i < n; ++i) {
                xhat[base + i] = static_cast<T>((static_cast<double>(in[base + i]) - mean) * rstd);
            }
        }
        for (int c = 0; c < channels; ++c) {
            const T ga = params[gamma + c];
            const T be = params[beta + c];
            const std::size_t base = static_cast<std::size_t>(c) * plane;
            for (int i = 0; i < plane; ++i) out[base + i] = ga * xhat[base + i] + be;
        }
    }

    // grad holds d/d out on entry and d/d in on exit.
    template <typename T>
    void backward(const T* params, const std::vector<T>& xhat, const GroupNormCache& cache, int plane,
                  T* grads, std::vector<T>& grad) const {
        for (int c = 0; c < channels; ++c) {
            const std::size_t base = static_cast<std::size_t>(c) * plane;
            T dg = 0;
            T db = 0;
            for (int i = 0; i < plane; ++i) {
                dg += grad[base + i] * xhat[base + i];
                db += grad[base + i];
            }
            grads[gamma + c] += dg;
            grads[beta + c] += db;
            const T ga = params[gamma + c];
            for (int i = 0; i < plane; ++i) grad[base + i] *= ga;  // now d/d xhat
        }
        const int per = channels / groups;
        const std::size_t n = static_cast<std::size_t>(per) * plane;
        for (int g = 0; g < groups; ++g) {
            const std::size_t base = static_cast<std::size_t>(g) * n;
            double sum_d = 0.0;
            double sum_dx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum_d += static_cast<double>(grad[base + i]);
                sum_dx += static_cast<double>(grad[base + i]) * static_cast<double>(xhat[base + i]);
            }
            const double rstd = cache.rstd[static_cast<std::size_t>(g)];
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = static_cast<double>(grad[base + i]);
                const double xh = static_cast<double>(xhat[base + i]);
                grad[base + i] = static_cast<T>(rstd * (d - inv_n * sum_d - xh * inv_n * sum_dx));
            }
        }
    }
};

struct Linear {
    int in = 0;
    int out = 0;
    std::size_t w = 0;  // out x in
    std::size_t b = 0;

    template <typename T>
    void forward(const T* params, const std::vector<T>& x, std::vector<T>& y) const {
        y.resize(static_cast<std::size_t>(out));
        for (int o = 0; o < out; ++o) {
            T acc = params[b + o];
            const T* row = params + w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
            y[static_cast<std::size_t>(o)] = acc;
        }
    }

    // Accumulates parameter gradients and adds d/dx into dx.
    template <typename T>
    void backward(const T* params, const std::vector<T>& x, const std::vector<T>& dy, T* grads,
                  std::vector<T>& dx) const {
        dx.resize(static_cast<std::size_t>(in), T(0));
        for (int o = 0; o < out; ++o) {
            const T g = dy[static_cast<std::size_t>(o)];
            grads[b + o] += g;
            const T* row = params + w + static_cast<std::size_t>(o) * in;
            T* grow = grads + w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                grow[i] += g * x[static_cast<std::size_t>(i)];
                dx[static_cast<std::size_t>(i)] += g * row[i];
            }
        }
    }
};

template <typename T>
void avgpool2_forward(const std::vector<T>& in, int channels, int h, int w, std::vector<T>& out) {
    const int oh = h / 2;
    const int ow = w / 2;
    out.assign(static_cast<std::size_t>(channels) * oh * ow, T(0));
    for (int c = 0; c < channels; ++c) {
        const T* src = in.data() + static_cast<std::size_t>(c) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(c) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                dst[y * ow + x] = T(0.25) * (src[(2 * y) * w + 2 * x] + src[(2 * y) * w + 2 * x + 1] +
                                             src[(2 * y + 1) * w + 2 * x] + src[(2 * y + 1) * w + 2 * x + 1]);
            }
        }
    }
}

template <typename T>
void avgpool2_backward(const std::vector<T>& dout, int channels, int h, int w, std::vector<T>& din) {
    const int oh = h / 2;
    const int ow = w / 2;
    din.assign(static_cast<std::size_t>(channels) * h * w, T(0));
    for (int c = 0; c < channels; ++c) {
        const T* src = dout.data() + static_cast<std::size_t>(c) * oh * ow;
        T* dst = din.data() + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) dst[y * w + x] = T(0.25) * src[(y / 2) * ow + x / 2];
        }
    }
}

template <typename T>
void upsample2_forward(const std::vector<T>& in, int channels, int h, int w, std::vector<T>& out) {
    const int oh = h * 2;
    const int ow = w * 2;
    out.resize(static_cast<std::size_t>(channels) * oh * ow);
    for (int c = 0; c < channels; ++c) {
        const T* src = in.data() + static_cast<std::size_t>(c) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(c) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) dst[y * ow + x] = src[(y / 2) * w + x / 2];
        }
    }
}

// h, w are the pre-upsampling dimensions.
template <typename T>
void upsample2_backward(const std::vector<T>& dout, int channels, int h, int w, std::vector<T>& din) {
    const int ow = w * 2;
    din.assign(static_cast<std::size_t>(channels) * h * w, T(0));
    for (int c = 0; c < channels; ++c) {
        const T* src = dout.data() + static_cast<std::size_t>(c) * 4 * h * w;
        T* dst = din.data() + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < 2 * h; ++y) {
            for (int x = 0; x < ow; ++x) dst[(y / 2) * w + x / 2] += src[y * ow + x];
        }
    }
}

}  // namespace ssb::nn
