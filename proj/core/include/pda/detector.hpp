#pragma once

#include "pda/calibration.hpp"
#include "pda/featstore.hpp"
#include "pda/knn.hpp"
#include "pda/pruning.hpp"
#include "pda/reduction.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pda {

enum class Decision : std::uint8_t { real, fake };

const char* to_string(Decision d);

struct Verdict {
    Decision label = Decision::fake;
    int stage = 1;
    double d_raw = 0.0;
    std::optional<double> d_regen; ///< present iff stage 2 ran
    double tau = 0.0;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Stage 1: fake when the raw embedding aligns with the reference (d <= tau).
std::optional<Verdict> decide_stage_one(double d_raw, double tau);
/// Stage 2: real when the regenerated embedding aligns, fake otherwise.
Verdict decide_stage_two(double d_raw, double d_regen, double tau);

/// One sample handed to a regenerator. `id` is the row index within the batch
/// being detected, when there is one.
struct Sample {
    std::optional<std::size_t> id;
    std::span<const double> raw;
};

/// Maps raw features to the features of their regenerated counterpart.
/// Implementations are deterministic per input and preserve dim.
class Regenerator {
public:
    virtual ~Regenerator() = default;

    /// One output per sample, same order. Failures raise RegenerationError.
    virtual std::vector<FeatureVector> regenerate(std::span<const Sample> samples) = 0;
};

/// Lookup over precomputed (raw, regenerated) pairs. Samples with an id are
/// matched by index and their raw content is cross-checked; samples without
/// one are matched by exact content.
class PairedRegenerator final : public Regenerator {
public:
    explicit PairedRegenerator(PairedSet pairs);

    std::vector<FeatureVector> regenerate(std::span<const Sample> samples) override;

private:
    std::size_t locate(const Sample& s) const;

    PairedSet pairs_;
    std::unordered_multimap<std::uint64_t, std::size_t> by_content_;
};

std::unique_ptr<Regenerator> paired_regenerator(PairedSet pairs);

struct CommandSpec {
    /// Shell command with {in} and {out} placeholders, e.g. "regen {in} {out}".
    std::string command_template;
    std::chrono::seconds timeout{600};
};

/// Runs an external command per batch: raw samples go to a PDAF file at
/// {in}, regenerated features are read back from {out} and validated.
class CommandRegenerator final : public Regenerator {
public:
    explicit CommandRegenerator(CommandSpec spec);

    std::vector<FeatureVector> regenerate(std::span<const Sample> samples) override;

    std::size_t invocations() const noexcept { return invocations_; }

private:
    CommandSpec spec_;
    std::mutex mutex_; // one in-flight batch per instance
    std::size_t invocations_ = 0;
};

std::unique_ptr<Regenerator> command_regenerator(CommandSpec spec);

/// Fixed detection context: pruning, reduction model, reference set, k and
/// the threshold calibrated for exactly that combination.
class Pipeline {
public:
    Pipeline(std::optional<PruneConfig> prune, EmbeddingModel model, ReferenceSet ref, KnnConfig knn,
             Threshold threshold);

    ScoringPath path() const { return ScoringPath(prune_, *model_, *ref_, knn_); }
    const std::optional<PruneConfig>& prune() const noexcept { return prune_; }
    const EmbeddingModel& model() const noexcept { return *model_; }
    const ReferenceSet& reference() const noexcept { return *ref_; }
    const KnnConfig& knn() const noexcept { return knn_; }
    const Threshold& threshold() const noexcept { return threshold_; }
    double tau() const noexcept { return threshold_.tau; }

    /// Same context with a different threshold (provenance is re-checked).
    Pipeline with_threshold(Threshold threshold) const;

private:
    std::optional<PruneConfig> prune_;
    std::shared_ptr<const EmbeddingModel> model_;
    std::shared_ptr<const ReferenceSet> ref_;
    KnnConfig knn_;
    Threshold threshold_;
};

Verdict detect(std::span<const double> x, const Pipeline& pipe, Regenerator& regen,
               std::optional<std::size_t> id = std::nullopt);
inline Verdict detect(const FeatureVector& x, const Pipeline& pipe, Regenerator& regen) {
    return detect(x.values(), pipe, regen);
}

struct SampleError {
    std::size_t id = 0;
    std::string message;
};

struct BatchResult {
    std::vector<std::optional<Verdict>> verdicts; ///< one slot per input row
    std::vector<SampleError> errors;

    /// All verdicts; throws the first recorded error if any sample failed.
    std::vector<Verdict> require_all() const;
};

/// Stage 1 for every row, then a single regenerator call for the rows that
/// were not filtered. Per-sample failures are recorded and skipped.
BatchResult detect_batch(const FeatureSet& raws, const Pipeline& pipe, Regenerator& regen);

struct BranchCounts {
    std::size_t stage1_fake = 0;
    std::size_t stage2_real = 0;
    std::size_t stage2_fake = 0;
    std::size_t errors = 0;
};

BranchCounts count_branches(const BatchResult& batch);

/// Tab-separated report: header, one row per sample
/// (id, label, stage, d_raw, d_regen|NA, tau), then a '#'-prefixed summary.
void write_report(std::ostream& out, const BatchResult& batch);
BatchResult read_report(std::istream& in);

} // namespace pda
