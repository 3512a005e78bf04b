#pragma once

#include "pda/featstore.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace pda {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

enum class ReductionMode : std::uint8_t { tsne = 0, pca = 1 };

const char* to_string(ReductionMode mode);
ReductionMode parse_reduction_mode(std::string_view text);

/// How embed_out_of_sample weighs a new point's affinities.
/// mass: affinities keep their absolute scale, so a point far from every
/// reference input settles outside the map. normalized: affinities sum to 1
/// and the point settles among its nearest reference points.
enum class OutOfSampleMode : std::uint8_t { mass = 0, normalized = 1 };

const char* to_string(OutOfSampleMode mode);
OutOfSampleMode parse_out_of_sample_mode(std::string_view text);

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double exaggeration_factor = 12.0;
    int exaggeration_iters = 250;
    double learning_rate = 200.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    std::uint64_t seed = 0;
    /// Gradient steps taken when placing a new point against a fitted map.
    int out_of_sample_steps = 250;
    OutOfSampleMode out_of_sample = OutOfSampleMode::mass;

    /// Throws ConfigError if the configuration cannot be used for n points.
    void check(std::size_t n) const;
};

/// Per-dimension affine map x -> (x - mean) / scale fitted on the reference
/// inputs. Zero-variance dimensions keep scale 1. Disabled means identity.
struct Standardizer {
    bool enabled = true;
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const FeatureSet& set, bool enabled);
    std::vector<double> apply(std::span<const double> x) const;
    std::size_t dim() const noexcept { return mean.size(); }
};

struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> p; ///< n*n row-major, symmetric, zero diagonal, sums to 1
    std::vector<double> beta; ///< precision 1/(2 sigma^2) of each conditional row
    std::vector<double> sigma;
    std::vector<double> entropy_bits; ///< achieved Shannon entropy of each conditional row
    std::vector<std::uint8_t> infeasible; ///< 1 where the perplexity target was unreachable

    double operator()(std::size_t i, std::size_t j) const { return p[i * n + j]; }
};

/// Gaussian conditional affinities with per-row bandwidth found by bisection
/// on the entropy, then symmetrized as (P + P^T) / 2n. Rows whose target
/// cannot be met fall back to the median pairwise distance as bandwidth.
AffinityMatrix pairwise_affinities(const FeatureSet& x, double perplexity);

/// KL(P || Q) of the Student-t map Y against affinities P.
double tsne_kl(const AffinityMatrix& p, std::span<const Point2> y);

/// Analytic gradient of tsne_kl with respect to every map coordinate.
std::vector<Point2> tsne_gradient(const AffinityMatrix& p, std::span<const Point2> y);

struct PcaState {
    std::vector<double> center; ///< mean of the standardized inputs
    std::array<std::vector<double>, 2> basis;
    std::array<double, 2> explained_variance{};
    double total_variance = 0.0;
    bool rank_deficient = false;
};

/// Constants the out-of-sample objective derives from a t-SNE fit.
struct OutOfSampleContext {
    double beta = 0.0;         ///< 1 / (2 sigma^2) at the median bandwidth
    double log_row_mass = 0.0; ///< median over reference rows of log sum_j exp(-beta d_ij^2)
    double z = 0.0;            ///< sum of Student-t kernels over ordered fitted pairs
};

namespace detail {
/// Projection of an already standardized vector; shared by fit and embed so a
/// fitted input reproduces its coordinates exactly.
Point2 pca_project(const PcaState& pca, std::span<const double> standardized);
OutOfSampleContext out_of_sample_context(std::span<const double> standardized, std::size_t dim,
                                         std::span<const double> sigma, std::span<const Point2> points);
} // namespace detail

struct TsneState {
    TsneConfig config;
    std::vector<double> sigma; ///< affinity bandwidth of each reference point
    std::vector<double> kl_trace; ///< KL before every update, then after the last one
    std::vector<std::uint8_t> infeasible_rows;
};

/// A fitted 2D embedding. Immutable once built; use the fit_* factories or
/// the PDAM loader.
class EmbeddingModel {
public:
    ReductionMode mode() const noexcept { return mode_; }
    std::size_t dim() const noexcept { return inputs_.dim(); }
    std::size_t size() const noexcept { return points_.size(); }

    const FeatureSet& fitted_inputs() const noexcept { return inputs_; }
    const std::vector<Point2>& fitted_points() const noexcept { return points_; }
    const Standardizer& standardizer() const noexcept { return standardizer_; }
    const PcaState& pca() const noexcept { return pca_; }
    const TsneState& tsne() const noexcept { return tsne_; }

    /// Content hash identifying the model in threshold provenance.
    std::uint64_t id() const noexcept { return id_; }

    /// Standardized fitted inputs, row-major.
    std::span<const double> standardized_inputs() const noexcept { return standardized_; }

    /// t-SNE models only.
    const OutOfSampleContext& out_of_sample_context() const noexcept { return oos_; }

    static EmbeddingModel assemble(ReductionMode mode, FeatureSet inputs, Standardizer standardizer,
                                   std::vector<Point2> points, PcaState pca, TsneState tsne);

private:
    EmbeddingModel() = default;
    void finalize();

    ReductionMode mode_ = ReductionMode::pca;
    FeatureSet inputs_;
    Standardizer standardizer_;
    std::vector<Point2> points_;
    PcaState pca_;
    TsneState tsne_;
    std::vector<double> standardized_;
    OutOfSampleContext oos_;
    std::uint64_t id_ = 0;
};

struct ReductionOptions {
    bool standardize = true;
};

EmbeddingModel fit_tsne(const FeatureSet& x, const TsneConfig& cfg, ReductionOptions opts = {});
EmbeddingModel fit_pca(const FeatureSet& x, ReductionOptions opts = {});

/// Places x against the fixed reference map of a t-SNE model.
Point2 embed_out_of_sample(const EmbeddingModel& model, std::span<const double> x);

/// PCA: linear projection. t-SNE: embed_out_of_sample.
Point2 embed_point(const EmbeddingModel& model, std::span<const double> x);
inline Point2 embed_point(const EmbeddingModel& model, const FeatureVector& x) { return embed_point(model, x.values()); }

struct JointEmbedding {
    std::vector<Point2> reference;
    std::vector<Point2> batch;
};

/// Diagnostic only: refits t-SNE on reference inputs plus batch. The returned
/// reference coordinates differ from the model's, so distances against a
/// calibrated threshold are not meaningful.
JointEmbedding reembed_joint(const EmbeddingModel& model, const FeatureSet& batch);

} // namespace pda
