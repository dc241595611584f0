#pragma once

// Test-side reference implementations, kept independent of the library code
// paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "deepblur/generator.hpp"

namespace oracles {

// Central finite difference of a scalar function at x along every coordinate.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + step;
        const double fp = f(x);
        x[i] = saved - step;
        const double fm = f(x);
        x[i] = saved;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

// Worst relative error between an analytic gradient and the finite-difference
// one, with a small absolute floor so near-zero entries do not explode.
inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric, double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
    }
    return worst;
}

// Norm-level relative error |a - n| / max(|a|, |n|), the usual gradient-check
// metric; robust to truncation noise in individual near-zero components.
inline double vector_relative_error(const std::vector<double>& analytic,
                                    const std::vector<double>& numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
}

// Mirror an index into [0, n) without repeating the edge element. Written
// independently of the library helper.
inline int reflect101(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

// Direct double-loop 2-D convolution of an r x c matrix with an arbitrary
// square kernel (odd side), reflected boundary.
inline deepblur::LatentCode brute_force_convolve(const deepblur::LatentCode& w,
                                                 const std::vector<double>& kernel,
                                                 int radius) {
    deepblur::LatentCode out(w.rows, w.cols);
    const int side = 2 * radius + 1;
    for (int r = 0; r < w.rows; ++r)
        for (int c = 0; c < w.cols; ++c) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    const double k =
                        kernel[static_cast<std::size_t>(dy + radius) * side + (dx + radius)];
                    acc += k * w.at(reflect101(r + dy, w.rows), reflect101(c + dx, w.cols));
                }
            out.at(r, c) = acc;
        }
    return out;
}

// Dense inverse-Hessian approximation built pair by pair with the BFGS update
//   H <- (I - rho s y') H (I - rho y s') + rho s s',  H0 = gamma I,
// used as the reference for the two-loop recursion.
inline std::vector<double> dense_bfgs_direction(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
    const std::vector<double>& grad) {
    const std::size_t n = grad.size();
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    double gamma = 1.0;
    if (!pairs.empty()) {
        const auto& [s, y] = pairs.back();
        double sy = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sy += s[i] * y[i];
            yy += y[i] * y[i];
        }
        gamma = sy / yy;
    }
    for (std::size_t i = 0; i < n; ++i) H[i][i] = gamma;

    for (const auto& [s, y] : pairs) {
        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) sy += s[i] * y[i];
        const double rho = 1.0 / sy;

        // A = (I - rho s y') H
        std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double acc = H[i][j];
                double yH = 0.0;
                for (std::size_t k = 0; k < n; ++k) yH += y[k] * H[k][j];
                acc -= rho * s[i] * yH;
                A[i][j] = acc;
            }
        }
        // H' = A (I - rho y s') + rho s s'
        std::vector<std::vector<double>> Hn(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double Ay = 0.0;
                for (std::size_t k = 0; k < n; ++k) Ay += A[i][k] * y[k];
                Hn[i][j] = A[i][j] - rho * Ay * s[j] + rho * s[i] * s[j];
            }
        }
        H = std::move(Hn);
    }

    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += H[i][j] * grad[j];
        d[i] = -acc;
    }
    return d;
}

// FNV-1a over the raw bit patterns of a double sequence; used for pinned
// golden checksums.
inline std::uint64_t double_stream_hash(const std::vector<double>& values) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double v : values) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        __builtin_memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

}  // namespace oracles
