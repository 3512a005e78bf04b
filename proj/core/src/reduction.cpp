#include "pda/reduction.hpp"

#include "pda/error.hpp"

#include <bit>
#include <cmath>

namespace pda {

namespace {

class Fnv1a {
public:
    void add(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (v >> (8 * i)) & 0xFFu;
            hash_ *= 0x100000001b3ULL;
        }
    }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
    void add(std::span<const double> vs) {
        add(static_cast<std::uint64_t>(vs.size()));
        for (double v : vs) add(v);
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

} // namespace

const char* to_string(ReductionMode mode) { return mode == ReductionMode::tsne ? "tsne" : "pca"; }

const char* to_string(OutOfSampleMode mode) { return mode == OutOfSampleMode::mass ? "mass" : "normalized"; }

OutOfSampleMode parse_out_of_sample_mode(std::string_view text) {
    if (text == "mass") return OutOfSampleMode::mass;
    if (text == "normalized") return OutOfSampleMode::normalized;
    throw ConfigError("unknown out-of-sample mode '" + std::string(text) + "' (expected mass or normalized)");
}

ReductionMode parse_reduction_mode(std::string_view text) {
    if (text == "tsne") return ReductionMode::tsne;
    if (text == "pca") return ReductionMode::pca;
    throw ConfigError("unknown reduction '" + std::string(text) + "' (expected tsne or pca)");
}

Standardizer Standardizer::fit(const FeatureSet& set, bool enabled) {
    Standardizer s;
    s.enabled = enabled;
    const auto d = set.dim();
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    if (!enabled || set.empty()) return s;
    const auto n = static_cast<double>(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto r = set.row(i);
        for (std::size_t k = 0; k < d; ++k) s.mean[k] += r[k];
    }
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto r = set.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            const double c = r[k] - s.mean[k];
            var[k] += c * c;
        }
    }
    for (std::size_t k = 0; k < d; ++k) {
        const double sd = std::sqrt(var[k] / n);
        s.scale[k] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (!enabled) return out;
    if (x.size() != mean.size()) {
        throw ValidationError("dim mismatch: standardizer expects " + std::to_string(mean.size()) + ", got " +
                              std::to_string(x.size()));
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] - mean[k]) / scale[k];
    return out;
}

EmbeddingModel EmbeddingModel::assemble(ReductionMode mode, FeatureSet inputs, Standardizer standardizer,
                                        std::vector<Point2> points, PcaState pca, TsneState tsne) {
    EmbeddingModel m;
    m.mode_ = mode;
    m.inputs_ = std::move(inputs);
    m.standardizer_ = std::move(standardizer);
    m.points_ = std::move(points);
    m.pca_ = std::move(pca);
    m.tsne_ = std::move(tsne);
    m.finalize();
    return m;
}

void EmbeddingModel::finalize() {
    if (points_.size() != inputs_.size()) {
        throw ValidationError("fitted point count " + std::to_string(points_.size()) + " != fitted input count " +
                              std::to_string(inputs_.size()));
    }
    if (standardizer_.enabled && standardizer_.dim() != inputs_.dim()) {
        throw ValidationError("standardizer dim does not match fitted inputs");
    }
    if (mode_ == ReductionMode::tsne && tsne_.sigma.size() != inputs_.size()) {
        throw ValidationError("t-SNE model needs one bandwidth per reference point");
    }
    if (mode_ == ReductionMode::pca) {
        for (const auto& b : pca_.basis) {
            if (b.size() != inputs_.dim()) throw ValidationError("PCA basis dim does not match fitted inputs");
        }
    }
    standardized_.clear();
    standardized_.reserve(inputs_.data().size());
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
        auto s = standardizer_.apply(inputs_.row(i));
        standardized_.insert(standardized_.end(), s.begin(), s.end());
    }
    if (mode_ == ReductionMode::tsne) {
        oos_ = detail::out_of_sample_context(standardized_, inputs_.dim(), tsne_.sigma, points_);
    }

    Fnv1a h;
    h.add(static_cast<std::uint64_t>(mode_));
    h.add(static_cast<std::uint64_t>(standardizer_.enabled));
    h.add(standardizer_.mean);
    h.add(standardizer_.scale);
    h.add(inputs_.data());
    for (const auto& p : points_) {
        h.add(p.x);
        h.add(p.y);
    }
    if (mode_ == ReductionMode::pca) {
        h.add(pca_.center);
        h.add(pca_.basis[0]);
        h.add(pca_.basis[1]);
    } else {
        h.add(tsne_.sigma);
        h.add(static_cast<std::uint64_t>(tsne_.config.out_of_sample_steps));
        h.add(static_cast<std::uint64_t>(tsne_.config.out_of_sample));
    }
    id_ = h.value();
}

Point2 embed_point(const EmbeddingModel& model, std::span<const double> x) {
    if (x.size() != model.dim()) {
        throw ValidationError("dim mismatch: model expects " + std::to_string(model.dim()) + ", got " +
                              std::to_string(x.size()));
    }
    if (model.mode() == ReductionMode::tsne) return embed_out_of_sample(model, x);

    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!std::isfinite(x[k])) throw ValidationError("non-finite value at (0," + std::to_string(k) + ")");
    }
    return detail::pca_project(model.pca(), model.standardizer().apply(x));
}

Point2 detail::pca_project(const PcaState& pca, std::span<const double> standardized) {
    Point2 out;
    for (std::size_t k = 0; k < standardized.size(); ++k) {
        const double c = standardized[k] - pca.center[k];
        out.x += c * pca.basis[0][k];
        out.y += c * pca.basis[1][k];
    }
    return out;
}

JointEmbedding reembed_joint(const EmbeddingModel& model, const FeatureSet& batch) {
    if (model.mode() != ReductionMode::tsne) throw ConfigError("joint re-embedding needs a t-SNE model");
    if (!batch.empty() && batch.dim() != model.dim()) throw ValidationError("batch dim does not match model");
    FeatureSet joint = model.fitted_inputs();
    joint.set_labels({});
    for (std::size_t i = 0; i < batch.size(); ++i) joint.push_back(batch.row(i));
    auto refit = fit_tsne(joint, model.tsne().config, ReductionOptions{model.standardizer().enabled});
    JointEmbedding out;
    const auto& pts = refit.fitted_points();
    const auto n = model.size();
    out.reference.assign(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(n));
    out.batch.assign(pts.begin() + static_cast<std::ptrdiff_t>(n), pts.end());
    return out;
}

} // namespace pda
