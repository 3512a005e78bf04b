#pragma once

#include "pda/calibration.hpp"
#include "pda/detector.hpp"
#include "pda/featstore.hpp"
#include "pda/simulator.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pda {

struct GroupStats {
    std::size_t n = 0;
    std::size_t correct = 0;
    double acc = 0.0; ///< percentage
};

/// Counts of each decision branch split by ground truth.
struct BranchConfusion {
    std::size_t stage1_fake_on_fake = 0;
    std::size_t stage1_fake_on_real = 0;
    std::size_t stage2_real_on_real = 0;
    std::size_t stage2_real_on_fake = 0;
    std::size_t stage2_fake_on_fake = 0;
    std::size_t stage2_fake_on_real = 0;
};

/// Accuracy with correct decisions attributed to the stage that made them:
/// acc = 100 * (n_correct_stage1 + n_correct_stage2) / n_total.
struct EvalResult {
    std::size_t n_total = 0;
    std::size_t n_correct_stage1 = 0;
    std::size_t n_correct_stage2 = 0;
    double acc = 0.0;
    BranchConfusion confusion;
    std::map<std::string, GroupStats> per_label; ///< keyed by label text
};

EvalResult evaluate(std::span<const Verdict> verdicts, std::span<const Label> labels);

/// One result per fake label (known_fake, unknown_fake:<id>), each scored on
/// that label's fakes together with all reals.
std::map<std::string, EvalResult> per_generator_results(std::span<const Verdict> verdicts,
                                                        std::span<const Label> labels);

/// Unweighted mean of per-generator accuracies.
double mean_accuracy(std::span<const double> accuracies);
double mean_accuracy(const std::map<std::string, EvalResult>& results);

/// Adds independent N(0, sigma^2) noise to every entry.
FeatureSet perturb_features(const FeatureSet& set, double sigma, std::uint64_t seed);
PairedSet perturb_features(const PairedSet& set, double sigma, std::uint64_t seed);

struct PdaOptions {
    std::optional<PruneConfig> prune = PruneConfig{};
    ReductionMode reduce = ReductionMode::tsne;
    TsneConfig tsne;
    bool standardize = true;
    KnnConfig knn;
    double q = 95.0;
};

/// Fits the reduction on the pruned reference pool and calibrates tau on the
/// regenerated calibration reals.
Pipeline build_pipeline(const FeatureSet& reference_pool, const FeatureSet& pseudo_fake, const PdaOptions& opts);

struct WorldRun {
    Pipeline pipeline;
    BatchResult batch;
    EvalResult eval;
    std::size_t regenerator_calls = 0; ///< samples sent to the regenerator
};

/// Full detection on the world's test set through detect_batch and a paired
/// regenerator.
WorldRun run_world(const SyntheticWorld& world, const PdaOptions& opts);
/// Same, with an already built pipeline and an explicit test set.
WorldRun run_world(const Pipeline& pipeline, const PairedSet& test);

/// Accuracy over the subset of verdicts whose labels satisfy `keep`.
double subset_accuracy(std::span<const Verdict> verdicts, std::span<const Label> labels,
                       bool (*keep)(const Label&));
/// Share of known-fake samples rejected at stage 1.
double known_fake_stage1_recall(std::span<const Verdict> verdicts, std::span<const Label> labels);

enum class SweepAxis { k, q, prune, reduce };

SweepAxis parse_sweep_axis(std::string_view text);
const char* to_string(SweepAxis axis);

struct SweepSpec {
    SweepAxis axis = SweepAxis::q;
    /// k: integers; q: percentiles; prune: "on", "off" or a percentile;
    /// reduce: "tsne", "pca".
    std::vector<std::string> values;
    PdaOptions base;

    /// Throws ConfigError for values outside the axis's legal range.
    void check() const;
};

struct SweepRow {
    std::string value;
    double tau = 0.0;
    EvalResult eval;
    std::string error; ///< non-empty when the cell failed
};

/// One full evaluation per value. Embeddings are shared between cells whose
/// pruning and reduction settings agree; tau is recalibrated for every cell.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SyntheticWorld& world);

void write_sweep_table(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows);
void write_eval_table(std::ostream& out, const EvalResult& eval);

/// Histogram of d_raw and d_regen per label, as TSV plot data. Bins are
/// linear from 0, or log-spaced when the distances span more than three
/// decades (the first bin then also holds zeros).
void write_distance_histogram(std::ostream& out, std::span<const Verdict> verdicts, std::span<const Label> labels,
                              std::size_t bins);

} // namespace pda
