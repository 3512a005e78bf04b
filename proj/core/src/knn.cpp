#include "pda/knn.hpp"

#include "pda/error.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace pda {

ReferenceSet::ReferenceSet(std::vector<Point2> points, std::string origin)
    : points_(std::move(points)), origin_(std::move(origin)) {
    if (points_.empty()) throw ValidationError("reference set must hold at least one point");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
            throw ValidationError("non-finite reference coordinate at row " + std::to_string(i));
        }
    }
}

ReferenceSet ReferenceSet::from_model(const EmbeddingModel& model, std::string origin) {
    if (origin.empty()) origin = model.fitted_inputs().source;
    return ReferenceSet(model.fitted_points(), std::move(origin));
}

void KnnConfig::check(std::size_t n) const {
    if (k < 1 || k > n) {
        throw ConfigError("k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    }
}

double knn_distance(const ReferenceSet& ref, Point2 z, const KnnConfig& cfg) {
    cfg.check(ref.size());
    std::vector<double> d;
    d.reserve(ref.size());
    for (const auto& r : ref.points()) d.push_back(planar_distance(z, r));
    auto kth = d.begin() + static_cast<std::ptrdiff_t>(cfg.k - 1);
    std::nth_element(d.begin(), kth, d.end());
    return *kth;
}

std::vector<double> knn_distance_batch(const ReferenceSet& ref, std::span<const Point2> zs, const KnnConfig& cfg) {
    cfg.check(ref.size());
    std::vector<double> out;
    out.reserve(zs.size());
    for (const auto& z : zs) out.push_back(knn_distance(ref, z, cfg));
    return out;
}

double knn_oracle(const ReferenceSet& ref, Point2 z, const KnnConfig& cfg) {
    if (cfg.k < 1 || cfg.k > ref.size()) throw ConfigError("k out of range for reference set");
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < ref.size(); ++i) all.emplace_back(planar_distance(z, ref.points()[i]), i);
    std::sort(all.begin(), all.end());
    return all[cfg.k - 1].first;
}

} // namespace pda
