#include "pda/error.hpp"
#include "pda/random.hpp"
#include "pda/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pda {

namespace {

constexpr double kEntropyTolerance = 1e-5;
constexpr int kBisectionSteps = 50;
// Conditional affinities below this are treated as zero when placing a new
// point; they change the objective by less than n * 1e-12.
constexpr double kSupportCutoff = 1e-12;
// Far below any mass that matters for a threshold, and high enough that the
// far-field kernel terms stay representable.
constexpr double kMassFloor = 1e-100;
constexpr double kConvergedGain = 1e-12;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 200;
constexpr int kMaxDoublings = 400;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

struct RowFit {
    double beta = 0.0;
    double entropy_bits = 0.0;
    bool feasible = false;
};

// Fills `cond` with exp(-beta * (d2 - d2min)) normalized, returns entropy in bits.
double conditional_row(std::span<const double> d2, std::size_t self, double beta, double d2min,
                       std::span<double> cond) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d2.size(); ++j) {
        if (j == self) {
            cond[j] = 0.0;
            continue;
        }
        cond[j] = std::exp(-beta * (d2[j] - d2min));
        sum += cond[j];
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < d2.size(); ++j) {
        if (j == self) continue;
        cond[j] /= sum;
        weighted += cond[j] * (d2[j] - d2min);
    }
    return (beta * weighted + std::log(sum)) / std::numbers::ln2;
}

// Bisection on log(beta): entropy decreases monotonically as beta grows.
RowFit fit_row(std::span<const double> d2, std::size_t self, double target_bits, std::span<double> cond) {
    double d2min = std::numeric_limits<double>::infinity();
    double spread = 0.0;
    std::size_t others = 0;
    for (std::size_t j = 0; j < d2.size(); ++j) {
        if (j == self) continue;
        d2min = std::min(d2min, d2[j]);
    }
    for (std::size_t j = 0; j < d2.size(); ++j) {
        if (j == self) continue;
        spread += d2[j] - d2min;
        ++others;
    }
    spread /= static_cast<double>(others);

    RowFit best;
    if (spread <= 0.0) {
        // All neighbours equidistant: every beta gives the uniform row.
        best.entropy_bits = conditional_row(d2, self, 0.0, d2min, cond);
        best.feasible = std::abs(best.entropy_bits - target_bits) <= kEntropyTolerance;
        return best;
    }

    const double scale = 1.0 / spread;
    double lo = -40.0;
    double hi = 40.0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int step = 0; step < kBisectionSteps; ++step) {
        const double mid = 0.5 * (lo + hi);
        const double beta = scale * std::exp(mid);
        const double h = conditional_row(d2, self, beta, d2min, cond);
        const double err = std::abs(h - target_bits);
        if (err < best_err) {
            best_err = err;
            best.beta = beta;
            best.entropy_bits = h;
        }
        if (err <= kEntropyTolerance) break;
        if (h > target_bits) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.feasible = best_err <= kEntropyTolerance;
    conditional_row(d2, self, best.beta, d2min, cond);
    return best;
}

double median_pairwise_distance(const FeatureSet& x) {
    const auto n = x.size();
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dists.push_back(std::sqrt(squared_distance(x.row(i), x.row(j))));
        }
    }
    if (dists.empty()) return 1.0;
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    return *mid > 0.0 ? *mid : 1.0;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 1.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

} // namespace

void TsneConfig::check(std::size_t n) const {
    if (n < 3) throw ConfigError("t-SNE needs at least 3 points, got " + std::to_string(n));
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n)) {
        throw ConfigError("perplexity must lie in (0, n); got " + std::to_string(perplexity) + " for n=" +
                          std::to_string(n));
    }
    if (iterations <= 0) throw ConfigError("t-SNE iterations must be positive");
    if (exaggeration_factor < 1.0) throw ConfigError("exaggeration factor must be >= 1");
    if (exaggeration_iters < 0) throw ConfigError("exaggeration iterations must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (out_of_sample_steps < 0) throw ConfigError("out-of-sample steps must be >= 0");
}

AffinityMatrix pairwise_affinities(const FeatureSet& x, double perplexity) {
    const auto n = x.size();
    if (n < 3) throw ConfigError("affinities need at least 3 points, got " + std::to_string(n));
    if (!(perplexity > 0.0) || perplexity >= static_cast<double>(n)) {
        throw ConfigError("perplexity must lie in (0, n)");
    }
    check(x);

    AffinityMatrix out;
    out.n = n;
    out.p.assign(n * n, 0.0);
    out.beta.resize(n);
    out.sigma.resize(n);
    out.entropy_bits.resize(n);
    out.infeasible.assign(n, 0);

    const double target = std::log2(perplexity);
    std::vector<double> d2(n);
    std::vector<double> cond(n * n);
    double fallback_beta = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) d2[j] = j == i ? 0.0 : squared_distance(x.row(i), x.row(j));
        std::span<double> row(cond.data() + i * n, n);
        auto fit = fit_row(d2, i, target, row);
        if (!fit.feasible) {
            if (fallback_beta < 0.0) {
                const double sigma = median_pairwise_distance(x);
                fallback_beta = 1.0 / (2.0 * sigma * sigma);
            }
            out.infeasible[i] = 1;
            double d2min = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) d2min = std::min(d2min, d2[j]);
            }
            fit.beta = fallback_beta;
            fit.entropy_bits = conditional_row(d2, i, fit.beta, d2min, row);
        }
        out.beta[i] = fit.beta;
        out.sigma[i] = fit.beta > 0.0 ? std::sqrt(1.0 / (2.0 * fit.beta)) : std::numeric_limits<double>::infinity();
        out.entropy_bits[i] = fit.entropy_bits;
    }

    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = (cond[i * n + j] + cond[j * n + i]) / denom;
            out.p[i * n + j] = v;
            out.p[j * n + i] = v;
        }
    }
    return out;
}

double tsne_kl(const AffinityMatrix& p, std::span<const Point2> y) {
    const auto n = p.n;
    if (y.size() != n) throw ValidationError("map size does not match affinity matrix");
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y[i].x - y[j].x;
            const double dy = y[i].y - y[j].y;
            z += 2.0 / (1.0 + dx * dx + dy * dy);
        }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = p(i, j);
            if (i == j || pij <= 0.0) continue;
            const double dx = y[i].x - y[j].x;
            const double dy = y[i].y - y[j].y;
            const double q = 1.0 / (1.0 + dx * dx + dy * dy) / z;
            kl += pij * std::log(pij / q);
        }
    }
    return kl;
}

std::vector<Point2> tsne_gradient(const AffinityMatrix& p, std::span<const Point2> y) {
    const auto n = p.n;
    if (y.size() != n) throw ValidationError("map size does not match affinity matrix");
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = y[i].x - y[j].x;
            const double dy = y[i].y - y[j].y;
            z += 2.0 / (1.0 + dx * dx + dy * dy);
        }
    }
    std::vector<Point2> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double dx = y[i].x - y[j].x;
            const double dy = y[i].y - y[j].y;
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            const double mult = 4.0 * (p(i, j) - w / z) * w;
            grad[i].x += mult * dx;
            grad[i].y += mult * dy;
        }
    }
    return grad;
}

EmbeddingModel fit_tsne(const FeatureSet& x, const TsneConfig& cfg, ReductionOptions opts) {
    check(x);
    cfg.check(x.size());
    const auto n = x.size();

    auto standardizer = Standardizer::fit(x, opts.standardize);
    FeatureSet scaled(x.dim());
    for (std::size_t i = 0; i < n; ++i) scaled.push_back(standardizer.apply(x.row(i)));

    const auto aff = pairwise_affinities(scaled, cfg.perplexity);

    // Constant part of the KL: sum p log p over off-diagonal entries.
    double p_log_p = 0.0;
    for (double v : aff.p) {
        if (v > 0.0) p_log_p += v * std::log(v);
    }

    Rng rng(cfg.seed);
    std::vector<Point2> y(n);
    for (auto& pt : y) {
        pt.x = rng.normal(0.0, 1e-2); // variance 1e-4
        pt.y = rng.normal(0.0, 1e-2);
    }

    std::vector<Point2> update(n);
    std::vector<Point2> gains(n, Point2{1.0, 1.0});
    std::vector<Point2> attract(n);
    std::vector<Point2> repulse(n);
    TsneState state;
    state.config = cfg;
    state.kl_trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
    const double max_step = 5.0 * cfg.learning_rate;

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const bool early = iter < cfg.exaggeration_iters;
        const double exaggeration = early ? cfg.exaggeration_factor : 1.0;
        const double momentum = early ? cfg.initial_momentum : cfg.final_momentum;

        std::fill(attract.begin(), attract.end(), Point2{});
        std::fill(repulse.begin(), repulse.end(), Point2{});
        double z = 0.0;
        double p_log_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* prow = aff.p.data() + i * n;
            const double yix = y[i].x;
            const double yiy = y[i].y;
            double ax = 0.0, ay = 0.0, rx = 0.0, ry = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = yix - y[j].x;
                const double dy = yiy - y[j].y;
                const double d2 = dx * dx + dy * dy;
                const double w = 1.0 / (1.0 + d2);
                const double pw = prow[j] * w;
                const double ww = w * w;
                z += w;
                ax += pw * dx;
                ay += pw * dy;
                rx += ww * dx;
                ry += ww * dy;
                attract[j].x -= pw * dx;
                attract[j].y -= pw * dy;
                repulse[j].x -= ww * dx;
                repulse[j].y -= ww * dy;
                p_log_w -= prow[j] * std::log(1.0 + d2);
            }
            attract[i].x += ax;
            attract[i].y += ay;
            repulse[i].x += rx;
            repulse[i].y += ry;
        }
        z *= 2.0;
        // KL = sum p log p - sum p log w + log Z, with both triangles counted.
        state.kl_trace.push_back(p_log_p - 2.0 * p_log_w + std::log(z));

        for (std::size_t i = 0; i < n; ++i) {
            const Point2 g{4.0 * (exaggeration * attract[i].x - repulse[i].x / z),
                           4.0 * (exaggeration * attract[i].y - repulse[i].y / z)};
            auto step = [&](double grad, double& gain, double& upd, double& coord) {
                gain = (grad > 0.0) != (upd > 0.0) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, 0.01);
                upd = momentum * upd - cfg.learning_rate * gain * grad;
                upd = std::clamp(upd, -max_step, max_step);
                coord += upd;
            };
            step(g.x, gains[i].x, update[i].x, y[i].x);
            step(g.y, gains[i].y, update[i].y, y[i].y);
        }

        Point2 mean;
        for (const auto& pt : y) {
            mean.x += pt.x;
            mean.y += pt.y;
        }
        mean.x /= static_cast<double>(n);
        mean.y /= static_cast<double>(n);
        for (auto& pt : y) {
            pt.x -= mean.x;
            pt.y -= mean.y;
        }
    }
    state.kl_trace.push_back(tsne_kl(aff, y));
    state.sigma = aff.sigma;
    state.infeasible_rows = aff.infeasible;

    return EmbeddingModel::assemble(ReductionMode::tsne, x, std::move(standardizer), std::move(y), PcaState{},
                                    std::move(state));
}

namespace {

// Joint KL restricted to the terms that move with the new point y, scaled by
// N/2 (N = n + 1) and shifted by a constant so that it stays non-negative and
// keeps relative precision far from the map. Fitted points stay fixed and
// their kernel sum z_fit is taken from the fit:
//   C(y) = -sum_j p_j log w_j + (N/2) log(1 + 2 sum_j w_j / z_fit)
struct OosObjective {
    std::span<const Point2> ref;
    std::span<const std::size_t> support;
    std::span<const double> p; // aligned with support
    double z_fit = 0.0;
    double half_n = 0.0;

    double eval(Point2 y, Point2& grad) const {
        double z = 0.0;
        double gx = 0.0, gy = 0.0; // sum w^2 (y - y_j)
        for (const auto& r : ref) {
            const double dx = y.x - r.x;
            const double dy = y.y - r.y;
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            z += w;
            gx += w * w * dx;
            gy += w * w * dy;
        }
        double p_log_w = 0.0;
        double ax = 0.0, ay = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            const auto& r = ref[support[s]];
            const double dx = y.x - r.x;
            const double dy = y.y - r.y;
            const double d2 = dx * dx + dy * dy;
            const double w = 1.0 / (1.0 + d2);
            p_log_w -= p[s] * std::log1p(d2);
            ax += p[s] * w * dx;
            ay += p[s] * w * dy;
        }
        const double total = z_fit + 2.0 * z;
        grad.x = 2.0 * ax - 4.0 * half_n * gx / total;
        grad.y = 2.0 * ay - 4.0 * half_n * gy / total;
        return -p_log_w + half_n * std::log1p(2.0 * z / z_fit);
    }
};

// KL of one query row against the query-normalized Student-t row, fitted
// points fixed: C(y) = -sum_j p_j log w_j + log sum_k w_k with sum_j p_j = 1.
struct NormalizedOosObjective {
    std::span<const Point2> ref;
    std::span<const std::size_t> support;
    std::span<const double> p;

    double eval(Point2 y, Point2& grad) const {
        double z = 0.0;
        double gx = 0.0, gy = 0.0;
        for (const auto& r : ref) {
            const double dx = y.x - r.x;
            const double dy = y.y - r.y;
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            z += w;
            gx += w * w * dx;
            gy += w * w * dy;
        }
        double p_log_w = 0.0;
        double ax = 0.0, ay = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            const auto& r = ref[support[s]];
            const double dx = y.x - r.x;
            const double dy = y.y - r.y;
            const double d2 = dx * dx + dy * dy;
            p_log_w -= p[s] * std::log1p(d2);
            ax += p[s] * dx / (1.0 + d2);
            ay += p[s] * dy / (1.0 + d2);
        }
        grad.x = 2.0 * ax - 2.0 * gx / z;
        grad.y = 2.0 * ay - 2.0 * gy / z;
        return -p_log_w + std::log(z);
    }
};

// Gradient descent from `y`. Each step backtracks until the Armijo condition
// holds, then keeps doubling while that still improves the objective, so
// points whose equilibrium lies far outside the map reach it in a few steps.
template <class Objective>
std::pair<Point2, double> descend(const Objective& objective, Point2 y, int steps) {
    Point2 grad;
    double f = objective.eval(y, grad);
    double step = 1.0;
    auto armijo = [&](double s, Point2& at, double& ft, Point2& gt) {
        at = Point2{y.x - s * grad.x, y.y - s * grad.y};
        ft = objective.eval(at, gt);
        return std::isfinite(ft) && ft <= f - kArmijo * s * (grad.x * grad.x + grad.y * grad.y);
    };
    for (int it = 0; it < steps; ++it) {
        if (grad.x == 0.0 && grad.y == 0.0) break;
        Point2 at, gt;
        double ft = 0.0;
        int halvings = 0;
        while (!armijo(step, at, ft, gt)) {
            step *= 0.5;
            if (++halvings > kMaxHalvings) return {y, f};
        }
        if (halvings == 0) {
            for (int k = 0; k < kMaxDoublings; ++k) {
                Point2 a2, g2;
                double f2 = 0.0;
                if (!armijo(2.0 * step, a2, f2, g2) || f2 >= ft) break;
                step *= 2.0;
                at = a2;
                ft = f2;
                gt = g2;
            }
        }
        const double gain = f - ft;
        y = at;
        f = ft;
        grad = gt;
        if (gain <= kConvergedGain * f) break;
    }
    return {y, f};
}

} // namespace

namespace detail {

OutOfSampleContext out_of_sample_context(std::span<const double> standardized, std::size_t dim,
                                         std::span<const double> sigma, std::span<const Point2> points) {
    OutOfSampleContext ctx;
    const auto n = points.size();
    if (n == 0 || dim == 0) return ctx;
    const double s = median_of(std::vector<double>(sigma.begin(), sigma.end()));
    ctx.beta = 1.0 / (2.0 * s * s);

    std::vector<double> log_mass(n);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = standardized.subspan(i * dim, dim);
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            d2[j] = squared_distance(xi, standardized.subspan(j * dim, dim));
            lo = std::min(lo, d2[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum += std::exp(-ctx.beta * (d2[j] - lo));
        }
        log_mass[i] = std::log(sum) - ctx.beta * lo;
    }
    ctx.log_row_mass = median_of(std::move(log_mass));

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = points[i].x - points[j].x;
            const double dy = points[i].y - points[j].y;
            ctx.z += 2.0 / (1.0 + dx * dx + dy * dy);
        }
    }
    return ctx;
}

} // namespace detail

Point2 embed_out_of_sample(const EmbeddingModel& model, std::span<const double> x) {
    if (model.mode() != ReductionMode::tsne) throw ConfigError("out-of-sample embedding needs a t-SNE model");
    if (x.size() != model.dim()) {
        throw ValidationError("dim mismatch: model expects " + std::to_string(model.dim()) + ", got " +
                              std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw ValidationError("non-finite value at (0," + std::to_string(i) + ")");
    }

    const auto xs = model.standardizer().apply(x);
    const auto n = model.size();
    const auto d = model.dim();
    const auto inputs = model.standardized_inputs();
    const auto& ref = model.fitted_points();
    const auto& ctx = model.out_of_sample_context();

    // Affinities keep their absolute scale: a query as close to the reference
    // as a typical reference point carries unit mass, a distant one less.
    std::vector<double> d2(n);
    double d2min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        d2[j] = squared_distance(xs, inputs.subspan(j * d, d));
        d2min = std::min(d2min, d2[j]);
    }
    std::vector<double> shape(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        shape[j] = std::exp(-ctx.beta * (d2[j] - d2min));
        sum += shape[j];
    }
    const double log_mass = std::log(sum) - ctx.beta * d2min - ctx.log_row_mass;
    const double mass = std::exp(std::max(log_mass, std::log(kMassFloor)));

    std::vector<std::size_t> support;
    std::vector<double> p;
    double kept = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double v = shape[j] / sum;
        if (v >= kSupportCutoff) {
            support.push_back(j);
            p.push_back(v);
            kept += v;
        }
    }
    Point2 y;
    for (std::size_t s = 0; s < support.size(); ++s) {
        p[s] /= kept;
        y.x += p[s] * ref[support[s]].x;
        y.y += p[s] * ref[support[s]].y;
    }
    const int steps = model.tsne().config.out_of_sample_steps;
    if (model.tsne().config.out_of_sample == OutOfSampleMode::normalized) {
        return descend(NormalizedOosObjective{ref, support, p}, y, steps).first;
    }
    for (auto& v : p) v *= mass;
    const OosObjective objective{ref, support, p, ctx.z, 0.5 * static_cast<double>(n + 1)};

    // A low-mass query can settle in a gap of the map, a local minimum of the
    // repulsion. A second run starts at the far-field equilibrium on the ray
    // from the map centroid through the first start; the lower objective wins.
    auto best = descend(objective, y, steps);
    Point2 centroid;
    for (const auto& r : ref) {
        centroid.x += r.x;
        centroid.y += r.y;
    }
    centroid.x /= static_cast<double>(n);
    centroid.y /= static_cast<double>(n);
    double ux = y.x - centroid.x;
    double uy = y.y - centroid.y;
    const double len = std::hypot(ux, uy);
    if (len > 0.0) {
        ux /= len;
        uy /= len;
    } else {
        ux = 1.0;
        uy = 0.0;
    }
    const double radius = std::sqrt(2.0 * objective.half_n * static_cast<double>(n) / (ctx.z * mass));
    const auto far = descend(objective, Point2{centroid.x + radius * ux, centroid.y + radius * uy}, steps);
    if (far.second < best.second) best = far;
    return best.first;
}


} // namespace pda
