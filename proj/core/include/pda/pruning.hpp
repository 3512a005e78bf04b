#pragma once

#include "pda/featstore.hpp"

#include <span>

namespace pda {

/// Per-sample activation clipping at the p-th percentile.
struct PruneConfig {
    double p = 90.0;

    /// Throws ConfigError unless 0 < p <= 100.
    void check() const;
    friend bool operator==(const PruneConfig&, const PruneConfig&) = default;
};

/// Nearest-rank percentile: the element at 0-based index ceil(p/100 * n) - 1
/// of the ascending sort.
double percentile(std::span<const double> values, double p);

/// 0-based rank used by percentile(); exposed so that oracles and the
/// threshold audit share the same index arithmetic.
std::size_t nearest_rank_index(std::size_t n, double p);

FeatureVector prune_activations(const FeatureVector& x, const PruneConfig& cfg);
std::vector<double> prune_activations(std::span<const double> x, const PruneConfig& cfg);
FeatureSet prune_set(const FeatureSet& set, const PruneConfig& cfg);

} // namespace pda
