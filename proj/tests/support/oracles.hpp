#pragma once

// Independent reference implementations used only by tests. They share no
// code with the engine beyond the plain data types.

#include "pda/featstore.hpp"
#include "pda/knn.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace pda::oracle {

/// Nearest-rank percentile by counting: the smallest sorted element v with
/// 100 * #{x <= v} >= p * n.
inline double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double target = p * static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (100.0 * static_cast<double>(i + 1) >= target) return values[i];
    }
    return values.back();
}

/// k-th smallest Euclidean distance by full sort of (distance, index) pairs.
inline double kth_distance(const std::vector<Point2>& ref, Point2 z, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double dx = ref[i].x - z.x, dy = ref[i].y - z.y;
        d.emplace_back(std::sqrt(dx * dx + dy * dy), i);
    }
    std::sort(d.begin(), d.end());
    return d[k - 1].first;
}

/// Conditional Gaussian affinities with per-row bisection on the entropy,
/// symmetrized as (P + P^T) / 2n. Plain loops, no shared helpers.
inline std::vector<double> affinities(const FeatureSet& x, double perplexity) {
    const std::size_t n = x.size();
    std::vector<double> d2(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < x.dim(); ++c) {
                const double t = x.row(i)[c] - x.row(j)[c];
                s += t * t;
            }
            d2[i * n + j] = s;
        }
    }
    const double target = std::log2(perplexity);
    std::vector<double> cond(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double lo = 0.0, hi = 1e300, beta = 1.0;
        std::vector<double> row(n, 0.0);
        for (int step = 0; step < 200; ++step) {
            double dmin = 1e300;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) dmin = std::min(dmin, d2[i * n + j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = j == i ? 0.0 : std::exp(-beta * (d2[i * n + j] - dmin));
                sum += row[j];
            }
            double h = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] /= sum;
                if (row[j] > 0.0) h -= row[j] * std::log2(row[j]);
            }
            if (std::abs(h - target) < 1e-10) break;
            if (h > target) {
                lo = beta;
                beta = hi >= 1e300 ? beta * 2.0 : 0.5 * (lo + hi);
            } else {
                hi = beta;
                beta = 0.5 * (lo + hi);
            }
        }
        for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = row[j];
    }
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / (2.0 * n);
    }
    return p;
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues descending with matching unit eigenvectors.
inline std::pair<std::vector<double>, std::vector<std::vector<double>>> jacobi_eigen(std::vector<double> a,
                                                                                    std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    for (auto i : order) {
        values.push_back(a[i * n + i]);
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + i];
        vectors.push_back(std::move(col));
    }
    return {values, vectors};
}

/// Direct O(N^4) unnormalized forward 2D DFT magnitude.
inline std::vector<double> dft_magnitude(const std::vector<double>& f, std::size_t rows, std::size_t cols) {
    std::vector<double> out(rows * cols);
    for (std::size_t u = 0; u < rows; ++u) {
        for (std::size_t v = 0; v < cols; ++v) {
            std::complex<double> acc = 0.0;
            for (std::size_t x = 0; x < rows; ++x) {
                for (std::size_t y = 0; y < cols; ++y) {
                    const double ang = -2.0 * std::numbers::pi *
                                       (static_cast<double>(u * x) / rows + static_cast<double>(v * y) / cols);
                    acc += f[x * cols + y] * std::polar(1.0, ang);
                }
            }
            out[u * cols + v] = std::abs(acc);
        }
    }
    return out;
}

} // namespace pda::oracle
