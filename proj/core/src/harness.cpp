#include "pda/harness.hpp"

#include "pda/error.hpp"
#include "pda/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

namespace pda {

namespace {

bool is_correct(const Verdict& v, const Label& truth) { return (v.label == Decision::fake) == is_fake_label(truth); }

void check_lengths(std::size_t verdicts, std::size_t labels) {
    if (verdicts != labels) {
        throw ValidationError("length mismatch: " + std::to_string(verdicts) + " verdicts, " + std::to_string(labels) +
                              " labels");
    }
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

EvalResult evaluate(std::span<const Verdict> verdicts, std::span<const Label> labels) {
    check_lengths(verdicts.size(), labels.size());
    EvalResult r;
    r.n_total = verdicts.size();
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto& v = verdicts[i];
        const bool fake = is_fake_label(labels[i]);
        const bool ok = is_correct(v, labels[i]);
        if (ok) (v.stage == 1 ? r.n_correct_stage1 : r.n_correct_stage2)++;
        auto& c = r.confusion;
        if (v.stage == 1) {
            (fake ? c.stage1_fake_on_fake : c.stage1_fake_on_real)++;
        } else if (v.label == Decision::real) {
            (fake ? c.stage2_real_on_fake : c.stage2_real_on_real)++;
        } else {
            (fake ? c.stage2_fake_on_fake : c.stage2_fake_on_real)++;
        }
        auto& g = r.per_label[labels[i].to_string()];
        ++g.n;
        if (ok) ++g.correct;
    }
    for (auto& [_, g] : r.per_label) g.acc = 100.0 * static_cast<double>(g.correct) / static_cast<double>(g.n);
    r.acc = r.n_total == 0 ? 0.0
                           : 100.0 * static_cast<double>(r.n_correct_stage1 + r.n_correct_stage2) /
                                 static_cast<double>(r.n_total);
    return r;
}

std::map<std::string, EvalResult> per_generator_results(std::span<const Verdict> verdicts,
                                                        std::span<const Label> labels) {
    check_lengths(verdicts.size(), labels.size());
    std::map<std::string, std::vector<std::size_t>> members;
    std::vector<std::size_t> reals;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (is_fake_label(labels[i])) {
            members[labels[i].to_string()].push_back(i);
        } else {
            reals.push_back(i);
        }
    }
    std::map<std::string, EvalResult> out;
    for (const auto& [name, idx] : members) {
        std::vector<Verdict> v;
        std::vector<Label> l;
        for (auto i : reals) {
            v.push_back(verdicts[i]);
            l.push_back(labels[i]);
        }
        for (auto i : idx) {
            v.push_back(verdicts[i]);
            l.push_back(labels[i]);
        }
        out.emplace(name, evaluate(v, l));
    }
    return out;
}

double mean_accuracy(std::span<const double> accuracies) {
    if (accuracies.empty()) throw ValidationError("mean accuracy of zero generators");
    double s = 0.0;
    for (double a : accuracies) s += a;
    return s / static_cast<double>(accuracies.size());
}

double mean_accuracy(const std::map<std::string, EvalResult>& results) {
    std::vector<double> accs;
    for (const auto& [_, r] : results) accs.push_back(r.acc);
    return mean_accuracy(accs);
}

FeatureSet perturb_features(const FeatureSet& set, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ConfigError("perturbation sigma must be >= 0");
    if (sigma == 0.0) return set;
    Rng rng(seed);
    std::vector<double> data(set.data().begin(), set.data().end());
    for (auto& v : data) v += sigma * rng.normal();
    FeatureSet out(set.size(), set.dim(), std::move(data), set.labels());
    out.source = set.source;
    out.seed = set.seed;
    return out;
}

PairedSet perturb_features(const PairedSet& set, double sigma, std::uint64_t seed) {
    // Distinct streams for raw and regenerated features.
    return PairedSet{perturb_features(set.raw, sigma, seed), perturb_features(set.regenerated, sigma, seed ^ 0x9e3779b97f4a7c15ULL)};
}

namespace {

EmbeddingModel fit_model(const FeatureSet& pool, const PdaOptions& opts) {
    const auto inputs = opts.prune ? prune_set(pool, *opts.prune) : pool;
    ReductionOptions ro{opts.standardize};
    return opts.reduce == ReductionMode::tsne ? fit_tsne(inputs, opts.tsne, ro) : fit_pca(inputs, ro);
}

} // namespace

Pipeline build_pipeline(const FeatureSet& reference_pool, const FeatureSet& pseudo_fake, const PdaOptions& opts) {
    auto model = fit_model(reference_pool, opts);
    auto ref = ReferenceSet::from_model(model, reference_pool.source);
    auto threshold = calibrate_threshold(pseudo_fake, ScoringPath(opts.prune, model, ref, opts.knn), opts.q);
    return Pipeline(opts.prune, std::move(model), std::move(ref), opts.knn, std::move(threshold));
}

namespace {

/// Wraps a regenerator and counts the samples it is asked for.
class CountingRegenerator final : public Regenerator {
public:
    explicit CountingRegenerator(Regenerator& inner) : inner_(inner) {}
    std::vector<FeatureVector> regenerate(std::span<const Sample> samples) override {
        count += samples.size();
        return inner_.regenerate(samples);
    }
    std::size_t count = 0;

private:
    Regenerator& inner_;
};

} // namespace

WorldRun run_world(const Pipeline& pipeline, const PairedSet& test) {
    PairedRegenerator paired(test);
    CountingRegenerator counting(paired);
    auto batch = detect_batch(test.raw, pipeline, counting);
    auto verdicts = batch.require_all();
    auto eval = evaluate(verdicts, test.raw.labels());
    return WorldRun{pipeline, std::move(batch), std::move(eval), counting.count};
}

WorldRun run_world(const SyntheticWorld& world, const PdaOptions& opts) {
    auto pipeline = build_pipeline(world.reference_pool, world.calibration.regenerated, opts);
    return run_world(pipeline, world.test);
}

double subset_accuracy(std::span<const Verdict> verdicts, std::span<const Label> labels, bool (*keep)(const Label&)) {
    check_lengths(verdicts.size(), labels.size());
    std::size_t n = 0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (!keep(labels[i])) continue;
        ++n;
        if (is_correct(verdicts[i], labels[i])) ++ok;
    }
    if (n == 0) throw ValidationError("no samples in the requested subset");
    return 100.0 * static_cast<double>(ok) / static_cast<double>(n);
}

double known_fake_stage1_recall(std::span<const Verdict> verdicts, std::span<const Label> labels) {
    check_lengths(verdicts.size(), labels.size());
    std::size_t n = 0;
    std::size_t caught = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (labels[i].kind() != Label::Kind::known_fake) continue;
        ++n;
        if (verdicts[i].stage == 1) ++caught;
    }
    if (n == 0) throw ValidationError("no known-fake samples");
    return static_cast<double>(caught) / static_cast<double>(n);
}

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "k") return SweepAxis::k;
    if (text == "q") return SweepAxis::q;
    if (text == "prune") return SweepAxis::prune;
    if (text == "reduce") return SweepAxis::reduce;
    throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

const char* to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::k: return "k";
    case SweepAxis::q: return "q";
    case SweepAxis::prune: return "prune";
    case SweepAxis::reduce: return "reduce";
    }
    return "?";
}

namespace {

double parse_number(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ConfigError("bad sweep value '" + s + "'");
    return v;
}

// Applies one sweep value to a copy of the base options.
PdaOptions cell_options(const SweepSpec& spec, const std::string& value) {
    PdaOptions o = spec.base;
    switch (spec.axis) {
    case SweepAxis::k: {
        const double k = parse_number(value);
        if (k < 1 || k != std::floor(k)) throw ConfigError("k must be a positive integer, got " + value);
        o.knn.k = static_cast<std::size_t>(k);
        break;
    }
    case SweepAxis::q: {
        o.q = parse_number(value);
        if (!(o.q > 0.0 && o.q <= 100.0)) throw ConfigError("q must lie in (0, 100], got " + value);
        break;
    }
    case SweepAxis::prune:
        if (value == "off") {
            o.prune.reset();
        } else if (value == "on") {
            o.prune = spec.base.prune.value_or(PruneConfig{});
        } else {
            o.prune = PruneConfig{parse_number(value)};
            o.prune->check();
        }
        break;
    case SweepAxis::reduce: o.reduce = parse_reduction_mode(value); break;
    }
    return o;
}

struct WorldEmbedding {
    std::shared_ptr<Pipeline> pipeline; // tau here is a placeholder; cells recalibrate
    std::vector<Point2> calibration;
    std::vector<Point2> test_raw;
    std::vector<Point2> test_regen;
};

std::string embedding_key(const PdaOptions& o) {
    std::string key = to_string(o.reduce);
    key += o.prune ? "|p=" + fmt(o.prune->p) : "|noprune";
    key += o.standardize ? "|std" : "|raw";
    key += "|perp=" + fmt(o.tsne.perplexity) + "|it=" + std::to_string(o.tsne.iterations) +
           "|seed=" + std::to_string(o.tsne.seed) + "|oos=" + to_string(o.tsne.out_of_sample) +
           std::to_string(o.tsne.out_of_sample_steps);
    return key;
}

WorldEmbedding embed_world(const SyntheticWorld& world, const PdaOptions& opts) {
    auto model = fit_model(world.reference_pool, opts);
    auto ref = ReferenceSet::from_model(model, world.reference_pool.source);
    ScoringPath path(opts.prune, model, ref, KnnConfig{1});
    WorldEmbedding e;
    auto embed_all = [&](const FeatureSet& s, std::vector<Point2>& out) {
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) out.push_back(path.embed(s.row(i)));
    };
    embed_all(world.calibration.regenerated, e.calibration);
    embed_all(world.test.raw, e.test_raw);
    embed_all(world.test.regenerated, e.test_regen);
    std::optional<double> prune_p;
    if (opts.prune) prune_p = opts.prune->p;
    auto placeholder = Threshold::from_distances({0.0}, 100.0, KnnConfig{1}, model.id(), prune_p);
    e.pipeline = std::make_shared<Pipeline>(opts.prune, std::move(model), std::move(ref), KnnConfig{1}, placeholder);
    return e;
}

} // namespace

void SweepSpec::check() const {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    for (const auto& v : values) cell_options(*this, v);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const SyntheticWorld& world) {
    spec.check();
    std::map<std::string, std::shared_ptr<WorldEmbedding>> cache;
    std::vector<SweepRow> rows;
    const auto& labels = world.test.raw.labels();
    for (const auto& value : spec.values) {
        SweepRow row;
        row.value = value;
        try {
            const auto opts = cell_options(spec, value);
            const auto key = embedding_key(opts);
            auto& slot = cache[key];
            if (!slot) slot = std::make_shared<WorldEmbedding>(embed_world(world, opts));
            const auto& emb = *slot;
            const auto& ref = emb.pipeline->reference();
            opts.knn.check(ref.size());

            auto calib = knn_distance_batch(ref, emb.calibration, opts.knn);
            std::optional<double> prune_p;
            if (opts.prune) prune_p = opts.prune->p;
            const auto threshold =
                Threshold::from_distances(std::move(calib), opts.q, opts.knn, emb.pipeline->model().id(), prune_p);
            row.tau = threshold.tau;

            std::vector<Verdict> verdicts;
            verdicts.reserve(emb.test_raw.size());
            for (std::size_t i = 0; i < emb.test_raw.size(); ++i) {
                const double d_raw = knn_distance(ref, emb.test_raw[i], opts.knn);
                if (auto v = decide_stage_one(d_raw, threshold.tau)) {
                    verdicts.push_back(*v);
                } else {
                    verdicts.push_back(
                        decide_stage_two(d_raw, knn_distance(ref, emb.test_regen[i], opts.knn), threshold.tau));
                }
            }
            row.eval = evaluate(verdicts, labels);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_eval_table(std::ostream& out, const EvalResult& r) {
    out << "metric\tvalue\n";
    out << "n_total\t" << r.n_total << '\n';
    out << "n_correct_stage1\t" << r.n_correct_stage1 << '\n';
    out << "n_correct_stage2\t" << r.n_correct_stage2 << '\n';
    out << "acc\t" << fmt(r.acc) << '\n';
    const auto& c = r.confusion;
    out << "stage1_fake_on_fake\t" << c.stage1_fake_on_fake << '\n';
    out << "stage1_fake_on_real\t" << c.stage1_fake_on_real << '\n';
    out << "stage2_real_on_real\t" << c.stage2_real_on_real << '\n';
    out << "stage2_real_on_fake\t" << c.stage2_real_on_fake << '\n';
    out << "stage2_fake_on_fake\t" << c.stage2_fake_on_fake << '\n';
    out << "stage2_fake_on_real\t" << c.stage2_fake_on_real << '\n';
    for (const auto& [name, g] : r.per_label) {
        out << "acc[" << name << "]\t" << fmt(g.acc) << '\n';
    }
}

void write_sweep_table(std::ostream& out, SweepAxis axis, std::span<const SweepRow> rows) {
    out << to_string(axis) << "\ttau\tacc\tn_correct_stage1\tn_correct_stage2\tn_total\terror\n";
    for (const auto& r : rows) {
        out << r.value << '\t' << fmt(r.tau) << '\t' << fmt(r.eval.acc) << '\t' << r.eval.n_correct_stage1 << '\t'
            << r.eval.n_correct_stage2 << '\t' << r.eval.n_total << '\t' << (r.error.empty() ? "-" : r.error) << '\n';
    }
}

void write_distance_histogram(std::ostream& out, std::span<const Verdict> verdicts, std::span<const Label> labels,
                              std::size_t bins) {
    check_lengths(verdicts.size(), labels.size());
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity(); // smallest positive distance
    auto see = [&](double d) {
        hi = std::max(hi, d);
        if (d > 0.0) lo = std::min(lo, d);
    };
    for (const auto& v : verdicts) {
        see(v.d_raw);
        if (v.d_regen) see(*v.d_regen);
    }
    if (hi <= 0.0) hi = 1.0;
    // Log-spaced edges once the distances span more than three decades.
    const bool log_bins = std::isfinite(lo) && hi / lo > 1e3;
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        const double t = static_cast<double>(b) / static_cast<double>(bins);
        edges[b] = log_bins ? lo * std::pow(hi / lo, t) : hi * t;
    }
    if (log_bins) edges[0] = 0.0;
    edges[bins] = hi;
    std::map<std::string, std::vector<std::size_t>> counts;
    auto add = [&](const std::string& key, double d) {
        auto& c = counts[key];
        c.resize(bins, 0);
        const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, d);
        c[static_cast<std::size_t>(it - edges.begin()) - 1]++;
    };
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto name = labels[i].to_string();
        add("raw:" + name, verdicts[i].d_raw);
        if (verdicts[i].d_regen) add("regen:" + name, *verdicts[i].d_regen);
    }
    out << "bin_lo\tbin_hi";
    for (const auto& [key, _] : counts) out << '\t' << key;
    out << '\n';
    for (std::size_t b = 0; b < bins; ++b) {
        out << fmt(edges[b]) << '\t' << fmt(edges[b + 1]);
        for (const auto& [_, c] : counts) out << '\t' << c[b];
        out << '\n';
    }
}

} // namespace pda
