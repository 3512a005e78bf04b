#pragma once

#include "pda/featstore.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pda {

/// Axis-aligned Gaussian: per-dimension mean and standard deviation.
struct ClusterSpec {
    std::vector<double> mean;
    std::vector<double> sigma;
};

struct GeneratorSpec {
    std::string id;
    std::vector<double> signature; ///< artifact offset added to real content
};

struct RegenerationModel {
    double alignment_noise = 0.5; ///< std of the isotropic noise added by regeneration
    double residual_factor = 0.6; ///< fraction of the original signature that survives
};

struct WorldCounts {
    std::size_t reference = 3000;
    std::size_t calibration = 3000;
    std::size_t test_real = 1000;
    std::size_t test_known_fake = 1000;
    std::size_t test_unknown_per_generator = 1000;
};

/// Feature-space world: reals share a content distribution with unknown
/// fakes, which differ only by their generator's signature; known fakes carry
/// the known signature. Regeneration keeps content, implants the known
/// signature and leaves a residual of the original one.
struct SyntheticWorldConfig {
    std::size_t dim = 16;
    ClusterSpec real;
    ClusterSpec known_fake;
    std::vector<double> known_signature;
    std::vector<GeneratorSpec> unknown;
    RegenerationModel regeneration;
    WorldCounts counts;
    /// Reference-pool members drawn where regenerated unknown fakes land
    /// instead of from the known-fake cluster (they replace genuine members).
    std::size_t reference_outliers = 0;
    std::uint64_t seed = 7;

    /// Throws ConfigError on any invalid field.
    void check() const;
};

struct SyntheticWorld {
    FeatureSet reference_pool;  ///< known fakes (plus planted outliers)
    PairedSet calibration;      ///< held-out reals and their regenerations
    PairedSet test;             ///< labeled raw test features and their regenerations
    SyntheticWorldConfig config;
};

/// Canned worlds use a diagonal content covariance: a few wide content axes
/// and narrower detail axes. Signature norms and alignment noise are scaled
/// by the widest axis, kDefaultClusterSigma.
inline constexpr double kDefaultClusterSigma = 1.0;
inline constexpr double kDetailSigma = 0.25;
inline constexpr std::size_t kContentAxes = 4;

/// Zero-mean cluster with the canned diagonal covariance.
ClusterSpec content_cluster(std::size_t dim);

/// Direction from a seeded draw, scaled to `norm`. Components before
/// `first_axis` are zero.
std::vector<double> random_direction(std::size_t dim, double norm, std::uint64_t seed, std::size_t first_axis = 0);

/// d=16, content_cluster for reals and known fakes, signatures on the detail
/// axes, |s_known| = 8, two unknown generators with
/// |s_g| = 6, residual 0.6, alignment noise 0.5, 1000 test samples per class,
/// seed 7.
SyntheticWorldConfig default_world_config();
/// Default world whose single unknown generator reuses the known signature.
SyntheticWorldConfig aligned_generator_world_config();
/// Default world with outliers planted in the reference pool.
SyntheticWorldConfig outlier_world_config();

SyntheticWorld sample_world(const SyntheticWorldConfig& cfg);

/// Accuracy of the exact likelihood-ratio classifier (real vs fake, priors
/// from the test class counts) on the raw test features. A ceiling, not a
/// competitor.
double world_bayes_oracle(const SyntheticWorld& world);

SyntheticWorldConfig parse_world_config(std::string_view json_text);
std::string world_config_to_json(const SyntheticWorldConfig& cfg);

/// Binary ground truth of a test label: true for fakes.
bool is_fake_label(const Label& label);

struct ClusterSample {
    FeatureSet features;
    std::vector<int> cluster; ///< generating cluster of each row
};

/// Isotropic Gaussian blobs around the given centers.
ClusterSample sample_clusters(const std::vector<std::vector<double>>& centers, double sigma, std::size_t per_cluster,
                              std::uint64_t seed);

} // namespace pda
