#include "pda/pruning.hpp"

#include "pda/error.hpp"

#include <algorithm>
#include <cmath>

namespace pda {

void PruneConfig::check() const {
    if (!(p > 0.0 && p <= 100.0)) {
        throw ConfigError("pruning percentile must lie in (0, 100], got " + std::to_string(p));
    }
}

std::size_t nearest_rank_index(std::size_t n, double p) {
    if (n == 0) throw ValidationError("percentile of an empty sequence");
    if (!(p > 0.0 && p <= 100.0)) {
        throw ConfigError("percentile must lie in (0, 100], got " + std::to_string(p));
    }
    // p * n is exact for integral p, so the ceiling is not perturbed by 0.91 * 100 style rounding.
    const double rank = std::ceil(p * static_cast<double>(n) / 100.0);
    const auto r = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(n)));
    return r - 1;
}

double percentile(std::span<const double> values, double p) {
    const auto idx = nearest_rank_index(values.size(), p);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw ValidationError("non-finite value at index " + std::to_string(i));
        }
    }
    std::vector<double> scratch(values.begin(), values.end());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(idx), scratch.end());
    return scratch[idx];
}

std::vector<double> prune_activations(std::span<const double> x, const PruneConfig& cfg) {
    cfg.check();
    const double c = percentile(x, cfg.p);
    std::vector<double> out(x.begin(), x.end());
    for (auto& v : out) v = std::min(v, c);
    return out;
}

FeatureVector prune_activations(const FeatureVector& x, const PruneConfig& cfg) {
    return FeatureVector(prune_activations(x.values(), cfg));
}

FeatureSet prune_set(const FeatureSet& set, const PruneConfig& cfg) {
    cfg.check();
    std::vector<double> data;
    data.reserve(set.data().size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto pruned = prune_activations(set.row(i), cfg);
        data.insert(data.end(), pruned.begin(), pruned.end());
    }
    FeatureSet out(set.size(), set.dim(), std::move(data), set.labels());
    out.source = set.source;
    out.seed = set.seed;
    return out;
}

} // namespace pda
