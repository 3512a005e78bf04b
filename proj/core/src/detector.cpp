#include "pda/detector.hpp"

#include "pda/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace pda {

namespace {

std::uint64_t content_hash(std::span<const double> v) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : v) {
        // +0.0 and -0.0 compare equal, so hash them equally.
        const auto bits = std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x);
        h ^= bits;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool same_content(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_real(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("bad number '" + s + "' on report line " + std::to_string(line));
    }
    return v;
}

} // namespace

const char* to_string(Decision d) { return d == Decision::real ? "real" : "fake"; }

std::optional<Verdict> decide_stage_one(double d_raw, double tau) {
    if (d_raw <= tau) return Verdict{Decision::fake, 1, d_raw, std::nullopt, tau};
    return std::nullopt;
}

Verdict decide_stage_two(double d_raw, double d_regen, double tau) {
    return Verdict{d_regen <= tau ? Decision::real : Decision::fake, 2, d_raw, d_regen, tau};
}

PairedRegenerator::PairedRegenerator(PairedSet pairs) : pairs_(std::move(pairs)) {
    pairs_.check();
    check(pairs_.raw);
    check(pairs_.regenerated);
    for (std::size_t i = 0; i < pairs_.raw.size(); ++i) by_content_.emplace(content_hash(pairs_.raw.row(i)), i);
}

std::size_t PairedRegenerator::locate(const Sample& s) const {
    if (s.id) {
        if (*s.id >= pairs_.raw.size()) {
            throw RegenerationError("no regenerated pair for sample id " + std::to_string(*s.id));
        }
        if (!same_content(pairs_.raw.row(*s.id), s.raw)) {
            throw RegenerationError("sample id " + std::to_string(*s.id) + " does not match its paired raw features");
        }
        return *s.id;
    }
    auto [lo, hi] = by_content_.equal_range(content_hash(s.raw));
    for (auto it = lo; it != hi; ++it) {
        if (same_content(pairs_.raw.row(it->second), s.raw)) return it->second;
    }
    throw RegenerationError("no regenerated pair for the supplied raw features");
}

std::vector<FeatureVector> PairedRegenerator::regenerate(std::span<const Sample> samples) {
    std::vector<FeatureVector> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(pairs_.regenerated.vector(locate(s)));
    return out;
}

std::unique_ptr<Regenerator> paired_regenerator(PairedSet pairs) {
    return std::make_unique<PairedRegenerator>(std::move(pairs));
}

Pipeline::Pipeline(std::optional<PruneConfig> prune, EmbeddingModel model, ReferenceSet ref, KnnConfig knn,
                   Threshold threshold)
    : prune_(prune), model_(std::make_shared<const EmbeddingModel>(std::move(model))),
      ref_(std::make_shared<const ReferenceSet>(std::move(ref))), knn_(knn), threshold_(std::move(threshold)) {
    threshold_.check_provenance(path());
}

Pipeline Pipeline::with_threshold(Threshold threshold) const {
    Pipeline copy = *this;
    copy.threshold_ = std::move(threshold);
    copy.threshold_.check_provenance(copy.path());
    return copy;
}

namespace {

double regenerated_distance(const ScoringPath& path, const FeatureVector& regen, std::size_t expected_dim) {
    if (regen.dim() != expected_dim) {
        throw RegenerationError("regenerator returned dim " + std::to_string(regen.dim()) + ", expected " +
                                std::to_string(expected_dim));
    }
    return path.distance(regen.values());
}

} // namespace

Verdict detect(std::span<const double> x, const Pipeline& pipe, Regenerator& regen, std::optional<std::size_t> id) {
    const auto path = pipe.path();
    const double d_raw = path.distance(x);
    if (auto v = decide_stage_one(d_raw, pipe.tau())) return *v;

    const Sample sample{id, x};
    auto out = regen.regenerate(std::span<const Sample>(&sample, 1));
    if (out.size() != 1) throw RegenerationError("regenerator returned " + std::to_string(out.size()) + " outputs for 1 sample");
    return decide_stage_two(d_raw, regenerated_distance(path, out.front(), x.size()), pipe.tau());
}

std::vector<Verdict> BatchResult::require_all() const {
    if (!errors.empty()) {
        throw Error("sample " + std::to_string(errors.front().id) + ": " + errors.front().message);
    }
    std::vector<Verdict> out;
    out.reserve(verdicts.size());
    for (const auto& v : verdicts) out.push_back(*v);
    return out;
}

BatchResult detect_batch(const FeatureSet& raws, const Pipeline& pipe, Regenerator& regen) {
    const auto path = pipe.path();
    const double tau = pipe.tau();
    BatchResult result;
    result.verdicts.resize(raws.size());

    std::vector<Sample> pending;
    std::vector<double> pending_d_raw;
    for (std::size_t i = 0; i < raws.size(); ++i) {
        try {
            const auto row = raws.row(i);
            const double d_raw = path.distance(row);
            if (auto v = decide_stage_one(d_raw, tau)) {
                result.verdicts[i] = *v;
            } else {
                pending.push_back(Sample{i, row});
                pending_d_raw.push_back(d_raw);
            }
        } catch (const std::exception& e) {
            result.errors.push_back({i, e.what()});
        }
    }
    if (pending.empty()) return result;

    std::vector<FeatureVector> regenerated;
    try {
        regenerated = regen.regenerate(pending);
        if (regenerated.size() != pending.size()) {
            throw RegenerationError("regenerator returned " + std::to_string(regenerated.size()) + " outputs for " +
                                    std::to_string(pending.size()) + " samples");
        }
    } catch (const std::exception& e) {
        for (const auto& s : pending) result.errors.push_back({*s.id, e.what()});
        return result;
    }
    for (std::size_t j = 0; j < pending.size(); ++j) {
        const auto id = *pending[j].id;
        try {
            const double d_regen = regenerated_distance(path, regenerated[j], raws.dim());
            result.verdicts[id] = decide_stage_two(pending_d_raw[j], d_regen, tau);
        } catch (const std::exception& e) {
            result.errors.push_back({id, e.what()});
        }
    }
    return result;
}

BranchCounts count_branches(const BatchResult& batch) {
    BranchCounts c;
    for (const auto& v : batch.verdicts) {
        if (!v) continue;
        if (v->stage == 1) {
            ++c.stage1_fake;
        } else if (v->label == Decision::real) {
            ++c.stage2_real;
        } else {
            ++c.stage2_fake;
        }
    }
    c.errors = batch.errors.size();
    return c;
}

void write_report(std::ostream& out, const BatchResult& batch) {
    out << "id\tlabel\tstage\td_raw\td_regen\ttau\n";
    for (std::size_t i = 0; i < batch.verdicts.size(); ++i) {
        const auto& v = batch.verdicts[i];
        if (!v) continue;
        out << i << '\t' << to_string(v->label) << '\t' << v->stage << '\t' << format_real(v->d_raw) << '\t'
            << (v->d_regen ? format_real(*v->d_regen) : std::string("NA")) << '\t' << format_real(v->tau) << '\n';
    }
    const auto c = count_branches(batch);
    out << "# summary\n";
    out << "# samples\t" << batch.verdicts.size() << '\n';
    out << "# stage1_fake\t" << c.stage1_fake << '\n';
    out << "# stage2_real\t" << c.stage2_real << '\n';
    out << "# stage2_fake\t" << c.stage2_fake << '\n';
    out << "# errors\t" << c.errors << '\n';
    for (const auto& e : batch.errors) {
        std::string msg = e.message;
        for (auto& ch : msg) {
            if (ch == '\n' || ch == '\t') ch = ' ';
        }
        out << "# error\t" << e.id << '\t' << msg << '\n';
    }
}

BatchResult read_report(std::istream& in) {
    BatchResult result;
    std::string line;
    std::size_t line_no = 0;
    std::size_t declared = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t')) cells.push_back(cell);
        if (!header) {
            if (cells.empty() || cells[0] != "id") throw FormatError("report lacks header line");
            header = true;
            continue;
        }
        if (line[0] == '#') {
            if (cells.size() >= 2 && cells[0] == "# samples") declared = std::stoull(cells[1]);
            if (cells.size() >= 3 && cells[0] == "# error") result.errors.push_back({std::stoull(cells[1]), cells[2]});
            continue;
        }
        if (cells.size() != 6) throw FormatError("report line " + std::to_string(line_no) + " has " +
                                                 std::to_string(cells.size()) + " fields, expected 6");
        Verdict v;
        const auto id = std::stoull(cells[0]);
        if (cells[1] == "real") {
            v.label = Decision::real;
        } else if (cells[1] == "fake") {
            v.label = Decision::fake;
        } else {
            throw FormatError("bad label '" + cells[1] + "' on report line " + std::to_string(line_no));
        }
        v.stage = std::stoi(cells[2]);
        v.d_raw = parse_real(cells[3], line_no);
        if (cells[4] != "NA") v.d_regen = parse_real(cells[4], line_no);
        v.tau = parse_real(cells[5], line_no);
        if (result.verdicts.size() <= id) result.verdicts.resize(id + 1);
        result.verdicts[id] = v;
    }
    if (!header) throw FormatError("empty report");
    if (result.verdicts.size() < declared) result.verdicts.resize(declared);
    return result;
}

} // namespace pda
