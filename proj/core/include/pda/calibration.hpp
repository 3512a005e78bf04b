#pragma once

#include "pda/knn.hpp"
#include "pda/pruning.hpp"
#include "pda/reduction.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pda {

/// The feature-to-distance path shared by calibration and inference:
/// prune (optional) -> embed -> k-th neighbour distance.
class ScoringPath {
public:
    ScoringPath(std::optional<PruneConfig> prune, const EmbeddingModel& model, const ReferenceSet& ref, KnnConfig knn);

    Point2 embed(std::span<const double> x) const;
    double distance(std::span<const double> x) const;
    double distance(Point2 z) const;

    const std::optional<PruneConfig>& prune() const noexcept { return prune_; }
    const EmbeddingModel& model() const noexcept { return *model_; }
    const ReferenceSet& reference() const noexcept { return *ref_; }
    const KnnConfig& knn() const noexcept { return knn_; }

private:
    std::optional<PruneConfig> prune_;
    const EmbeddingModel* model_;
    const ReferenceSet* ref_;
    KnnConfig knn_;
};

/// Calibrated alignment threshold and the record it was derived from.
struct Threshold {
    double tau = 0.0;
    double q = 95.0;
    std::size_t m = 0;
    std::vector<double> distances; ///< ascending
    KnnConfig knn;
    std::uint64_t model_id = 0;
    std::optional<double> prune_p; ///< empty when pruning was disabled

    /// Builds tau as the nearest-rank q-th percentile of `distances`.
    static Threshold from_distances(std::vector<double> distances, double q, KnnConfig knn, std::uint64_t model_id,
                                    std::optional<double> prune_p);

    /// Throws ConfigError if this threshold was not calibrated for `path`.
    void check_provenance(const ScoringPath& path) const;
};

Threshold calibrate_threshold(const FeatureSet& pseudo_fake, const ScoringPath& path, double q);

/// Convenience overload mirroring the pipeline parts one by one.
Threshold calibrate_threshold(const FeatureSet& pseudo_fake, const EmbeddingModel& model, const ReferenceSet& ref,
                              const KnnConfig& knn, double q, std::optional<PruneConfig> prune = PruneConfig{});

/// Fraction of `distances` that are <= threshold.tau.
double coverage(const Threshold& threshold, std::span<const double> distances);
double coverage(double tau, std::span<const double> distances);

} // namespace pda
