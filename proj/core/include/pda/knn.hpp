#pragma once

#include "pda/reduction.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pda {

/// Embedded known-fake points that every kNN distance is measured against.
class ReferenceSet {
public:
    ReferenceSet() = default;
    /// Throws ValidationError if empty or any coordinate is non-finite.
    ReferenceSet(std::vector<Point2> points, std::string origin);

    static ReferenceSet from_model(const EmbeddingModel& model, std::string origin = {});

    const std::vector<Point2>& points() const noexcept { return points_; }
    const std::string& origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return points_.size(); }

    friend bool operator==(const ReferenceSet&, const ReferenceSet&) = default;

private:
    std::vector<Point2> points_;
    std::string origin_;
};

struct KnnConfig {
    std::size_t k = 20;

    /// Throws ConfigError unless 1 <= k <= n.
    void check(std::size_t n) const;
    friend bool operator==(const KnnConfig&, const KnnConfig&) = default;
};

/// Euclidean distance in the plane, the single expression every path uses.
inline double planar_distance(Point2 a, Point2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance from z to its k-th nearest reference point (1-indexed). A
/// reference point coinciding with z contributes distance 0.
double knn_distance(const ReferenceSet& ref, Point2 z, const KnnConfig& cfg);
std::vector<double> knn_distance_batch(const ReferenceSet& ref, std::span<const Point2> zs, const KnnConfig& cfg);

/// Naive full-sort implementation of the same contract, for cross-checking.
double knn_oracle(const ReferenceSet& ref, Point2 z, const KnnConfig& cfg);

} // namespace pda
