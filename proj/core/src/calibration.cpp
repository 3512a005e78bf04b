#include "pda/calibration.hpp"

#include "pda/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pda {

ScoringPath::ScoringPath(std::optional<PruneConfig> prune, const EmbeddingModel& model, const ReferenceSet& ref,
                         KnnConfig knn)
    : prune_(prune), model_(&model), ref_(&ref), knn_(knn) {
    if (prune_) prune_->check();
    knn_.check(ref.size());
}

Point2 ScoringPath::embed(std::span<const double> x) const {
    if (x.size() != model_->dim()) {
        throw ValidationError("dim mismatch: pipeline expects " + std::to_string(model_->dim()) + ", got " +
                              std::to_string(x.size()));
    }
    if (prune_) return embed_point(*model_, prune_activations(x, *prune_));
    return embed_point(*model_, x);
}

double ScoringPath::distance(std::span<const double> x) const { return distance(embed(x)); }

double ScoringPath::distance(Point2 z) const { return knn_distance(*ref_, z, knn_); }

Threshold Threshold::from_distances(std::vector<double> distances, double q, KnnConfig knn, std::uint64_t model_id,
                                    std::optional<double> prune_p) {
    if (distances.empty()) throw ValidationError("calibration needs at least one distance");
    Threshold t;
    std::sort(distances.begin(), distances.end());
    t.tau = distances[nearest_rank_index(distances.size(), q)];
    t.q = q;
    t.m = distances.size();
    t.distances = std::move(distances);
    t.knn = knn;
    t.model_id = model_id;
    t.prune_p = prune_p;
    return t;
}

void Threshold::check_provenance(const ScoringPath& path) const {
    std::ostringstream why;
    if (model_id != path.model().id()) {
        why << "threshold was calibrated for model " << std::hex << model_id << ", pipeline uses " << path.model().id();
    } else if (knn.k != path.knn().k) {
        why << "threshold was calibrated with k=" << knn.k << ", pipeline uses k=" << path.knn().k;
    } else if (prune_p.has_value() != path.prune().has_value() ||
               (prune_p && *prune_p != path.prune()->p)) {
        why << "threshold pruning setting does not match the pipeline";
    } else {
        return;
    }
    throw ConfigError(why.str());
}

Threshold calibrate_threshold(const FeatureSet& pseudo_fake, const ScoringPath& path, double q) {
    if (pseudo_fake.empty()) throw ValidationError("empty calibration set");
    check(pseudo_fake);
    std::vector<double> d;
    d.reserve(pseudo_fake.size());
    for (std::size_t i = 0; i < pseudo_fake.size(); ++i) d.push_back(path.distance(pseudo_fake.row(i)));
    std::optional<double> prune_p;
    if (path.prune()) prune_p = path.prune()->p;
    return Threshold::from_distances(std::move(d), q, path.knn(), path.model().id(), prune_p);
}

Threshold calibrate_threshold(const FeatureSet& pseudo_fake, const EmbeddingModel& model, const ReferenceSet& ref,
                              const KnnConfig& knn, double q, std::optional<PruneConfig> prune) {
    return calibrate_threshold(pseudo_fake, ScoringPath(prune, model, ref, knn), q);
}

double coverage(double tau, std::span<const double> distances) {
    if (distances.empty()) throw ValidationError("coverage of an empty distance list");
    const auto inside = std::count_if(distances.begin(), distances.end(), [tau](double d) { return d <= tau; });
    return static_cast<double>(inside) / static_cast<double>(distances.size());
}

double coverage(const Threshold& threshold, std::span<const double> distances) {
    return coverage(threshold.tau, distances);
}

} // namespace pda
