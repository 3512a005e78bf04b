#include "pda/container.hpp"

#include "pda/binary_io.hpp"
#include "pda/error.hpp"

#include <cmath>
#include <limits>

namespace pda {

namespace {

constexpr std::string_view kMagic = "PDAM";
constexpr std::uint16_t kVersion = 1;

void put_reals(io::ByteWriter& w, std::span<const double> v) {
    w.put_u64(v.size());
    for (double x : v) w.put_f64(x);
}

std::vector<double> get_reals(io::ByteReader& r, const char* what) {
    const auto n = r.get_u64(what);
    if (n > r.remaining() / 8) throw FormatError(std::string("truncated input reading ") + what);
    std::vector<double> out(n);
    for (auto& x : out) x = r.get_f64(what);
    return out;
}

std::string encode_model(const EmbeddingModel& m) {
    io::ByteWriter w;
    w.put_u8(static_cast<std::uint8_t>(m.mode()));
    const auto& st = m.standardizer();
    w.put_u8(st.enabled ? 1 : 0);
    put_reals(w, st.mean);
    put_reals(w, st.scale);
    const auto& in = m.fitted_inputs();
    w.put_string(in.source);
    w.put_u64(in.size());
    w.put_u32(static_cast<std::uint32_t>(in.dim()));
    for (double v : in.data()) w.put_f64(v);
    for (const auto& p : m.fitted_points()) {
        w.put_f64(p.x);
        w.put_f64(p.y);
    }
    if (m.mode() == ReductionMode::pca) {
        const auto& pca = m.pca();
        put_reals(w, pca.center);
        put_reals(w, pca.basis[0]);
        put_reals(w, pca.basis[1]);
        w.put_f64(pca.explained_variance[0]);
        w.put_f64(pca.explained_variance[1]);
        w.put_f64(pca.total_variance);
        w.put_u8(pca.rank_deficient ? 1 : 0);
    } else {
        const auto& ts = m.tsne();
        const auto& c = ts.config;
        w.put_f64(c.perplexity);
        w.put_i64(c.iterations);
        w.put_f64(c.exaggeration_factor);
        w.put_i64(c.exaggeration_iters);
        w.put_f64(c.learning_rate);
        w.put_f64(c.initial_momentum);
        w.put_f64(c.final_momentum);
        w.put_u64(c.seed);
        w.put_i64(c.out_of_sample_steps);
        w.put_u8(static_cast<std::uint8_t>(c.out_of_sample));
        put_reals(w, ts.sigma);
        put_reals(w, ts.kl_trace);
        w.put_u64(ts.infeasible_rows.size());
        for (auto b : ts.infeasible_rows) w.put_u8(b);
    }
    return w.take();
}

EmbeddingModel decode_model(std::string_view body) {
    io::ByteReader r(body);
    const auto mode_byte = r.get_u8("model mode");
    if (mode_byte > 1) throw FormatError("unknown reduction mode " + std::to_string(mode_byte));
    const auto mode = static_cast<ReductionMode>(mode_byte);
    Standardizer st;
    st.enabled = r.get_u8("standardize flag") != 0;
    st.mean = get_reals(r, "standardizer mean");
    st.scale = get_reals(r, "standardizer scale");
    auto source = r.get_string("model source");
    const auto n = r.get_u64("model rows");
    const auto d = r.get_u32("model dim");
    if (d == 0) throw FormatError("model dim must be positive");
    if (n > r.remaining() / (8ULL * (d + 2ULL))) throw FormatError("truncated model payload");
    std::vector<double> data(n * d);
    for (auto& v : data) {
        v = r.get_f64("model inputs");
        if (!std::isfinite(v)) throw FormatError("non-finite model input");
    }
    std::vector<Point2> points(n);
    for (auto& p : points) {
        p.x = r.get_f64("fitted point");
        p.y = r.get_f64("fitted point");
    }
    FeatureSet inputs(n, d, std::move(data));
    inputs.source = std::move(source);

    PcaState pca;
    TsneState ts;
    if (mode == ReductionMode::pca) {
        pca.center = get_reals(r, "pca center");
        pca.basis[0] = get_reals(r, "pca basis");
        pca.basis[1] = get_reals(r, "pca basis");
        pca.explained_variance[0] = r.get_f64("pca variance");
        pca.explained_variance[1] = r.get_f64("pca variance");
        pca.total_variance = r.get_f64("pca variance");
        pca.rank_deficient = r.get_u8("pca rank flag") != 0;
    } else {
        auto& c = ts.config;
        c.perplexity = r.get_f64("tsne config");
        c.iterations = static_cast<int>(r.get_i64("tsne config"));
        c.exaggeration_factor = r.get_f64("tsne config");
        c.exaggeration_iters = static_cast<int>(r.get_i64("tsne config"));
        c.learning_rate = r.get_f64("tsne config");
        c.initial_momentum = r.get_f64("tsne config");
        c.final_momentum = r.get_f64("tsne config");
        c.seed = r.get_u64("tsne config");
        c.out_of_sample_steps = static_cast<int>(r.get_i64("tsne config"));
        const auto oos = r.get_u8("tsne config");
        if (oos > static_cast<std::uint8_t>(OutOfSampleMode::normalized)) {
            throw FormatError("unknown out-of-sample mode " + std::to_string(oos));
        }
        c.out_of_sample = static_cast<OutOfSampleMode>(oos);
        ts.sigma = get_reals(r, "tsne bandwidths");
        ts.kl_trace = get_reals(r, "tsne kl trace");
        const auto flags = r.get_u64("infeasible rows");
        if (flags > r.remaining()) throw FormatError("truncated infeasible-row flags");
        ts.infeasible_rows.resize(flags);
        for (auto& b : ts.infeasible_rows) b = r.get_u8("infeasible rows");
    }
    if (!r.at_end()) throw FormatError("trailing bytes in model section");
    try {
        return EmbeddingModel::assemble(mode, std::move(inputs), std::move(st), std::move(points), std::move(pca),
                                        std::move(ts));
    } catch (const ValidationError& e) {
        throw FormatError(std::string("inconsistent model section: ") + e.what());
    }
}

std::string encode_reference(const ReferenceSet& ref) {
    io::ByteWriter w;
    w.put_string(ref.origin());
    w.put_u64(ref.size());
    for (const auto& p : ref.points()) {
        w.put_f64(p.x);
        w.put_f64(p.y);
    }
    return w.take();
}

ReferenceSet decode_reference(std::string_view body) {
    io::ByteReader r(body);
    auto origin = r.get_string("reference origin");
    const auto n = r.get_u64("reference count");
    if (n > r.remaining() / 16) throw FormatError("truncated reference payload");
    std::vector<Point2> pts(n);
    for (auto& p : pts) {
        p.x = r.get_f64("reference point");
        p.y = r.get_f64("reference point");
    }
    if (!r.at_end()) throw FormatError("trailing bytes in reference section");
    try {
        return ReferenceSet(std::move(pts), std::move(origin));
    } catch (const ValidationError& e) {
        throw FormatError(std::string("invalid reference section: ") + e.what());
    }
}

std::string encode_threshold(const Threshold& t) {
    io::ByteWriter w;
    w.put_f64(t.tau);
    w.put_f64(t.q);
    w.put_u64(t.knn.k);
    w.put_u64(t.model_id);
    w.put_u8(t.prune_p ? 1 : 0);
    w.put_f64(t.prune_p.value_or(0.0));
    put_reals(w, t.distances);
    return w.take();
}

Threshold decode_threshold(std::string_view body) {
    io::ByteReader r(body);
    Threshold t;
    t.tau = r.get_f64("tau");
    t.q = r.get_f64("tau percentile");
    t.knn.k = r.get_u64("tau k");
    t.model_id = r.get_u64("tau model id");
    const bool has_prune = r.get_u8("tau prune flag") != 0;
    const double p = r.get_f64("tau prune p");
    if (has_prune) t.prune_p = p;
    t.distances = get_reals(r, "tau distances");
    t.m = t.distances.size();
    if (!r.at_end()) throw FormatError("trailing bytes in threshold section");
    if (!(t.tau >= 0.0) || !std::isfinite(t.tau)) throw FormatError("threshold tau must be finite and >= 0");
    return t;
}

std::string encode_prune(const std::optional<PruneConfig>& prune) {
    io::ByteWriter w;
    w.put_u8(prune ? 1 : 0);
    w.put_f64(prune ? prune->p : 0.0);
    return w.take();
}

std::optional<PruneConfig> decode_prune(std::string_view body) {
    io::ByteReader r(body);
    const bool enabled = r.get_u8("prune flag") != 0;
    const double p = r.get_f64("prune p");
    if (!r.at_end()) throw FormatError("trailing bytes in prune section");
    if (!enabled) return std::nullopt;
    PruneConfig cfg{p};
    try {
        cfg.check();
    } catch (const ConfigError& e) {
        throw FormatError(e.what());
    }
    return cfg;
}

void put_section(io::ByteWriter& w, std::string_view tag, const std::string& body) {
    w.put_bytes(tag);
    w.put_u64(body.size());
    w.put_bytes(body);
}

} // namespace

std::string encode_pdam(const PdamContents& c) {
    std::uint32_t sections = 0;
    sections += c.model ? 1 : 0;
    sections += c.reference ? 1 : 0;
    sections += c.threshold ? 1 : 0;
    sections += c.prune ? 1 : 0;
    io::ByteWriter w;
    w.put_bytes(kMagic);
    w.put_u16(kVersion);
    w.put_u32(sections);
    if (c.model) put_section(w, "MODL", encode_model(*c.model));
    if (c.reference) put_section(w, "REFS", encode_reference(*c.reference));
    if (c.threshold) put_section(w, "TAUS", encode_threshold(*c.threshold));
    if (c.prune) put_section(w, "PRUN", encode_prune(*c.prune));
    return w.take();
}

PdamContents decode_pdam(std::string_view bytes) {
    if (bytes.size() < 4 || bytes.substr(0, 4) != kMagic) throw FormatError("unrecognized magic: expected PDAM");
    io::ByteReader r(bytes);
    r.get_bytes(4, "magic");
    const auto version = r.get_u16("version");
    if (version != kVersion) throw FormatError("unsupported PDAM version " + std::to_string(version));
    const auto count = r.get_u32("section count");
    PdamContents out;
    for (std::uint32_t s = 0; s < count; ++s) {
        const auto tag = std::string(r.get_bytes(4, "section tag"));
        const auto len = r.get_u64("section length");
        const auto body = r.get_bytes(len, "section body");
        auto once = [&](bool present) {
            if (present) throw FormatError("duplicate " + tag + " section");
        };
        if (tag == "MODL") {
            once(out.model.has_value());
            out.model = decode_model(body);
        } else if (tag == "REFS") {
            once(out.reference.has_value());
            out.reference = decode_reference(body);
        } else if (tag == "TAUS") {
            once(out.threshold.has_value());
            out.threshold = decode_threshold(body);
        } else if (tag == "PRUN") {
            once(out.prune.has_value());
            out.prune = decode_prune(body);
        }
        // Unknown tags are skipped.
    }
    if (!r.at_end()) throw FormatError("trailing bytes after last PDAM section");
    return out;
}

void save_pdam(const PdamContents& contents, const std::string& path) { io::write_file(path, encode_pdam(contents)); }

PdamContents load_pdam(const std::string& path) { return decode_pdam(io::read_file(path)); }

EmbeddingModel load_model(const std::string& path) {
    auto c = load_pdam(path);
    if (!c.model) throw FormatError("'" + path + "' holds no model section");
    return std::move(*c.model);
}

ReferenceSet load_reference(const std::string& path) {
    auto c = load_pdam(path);
    if (!c.reference) throw FormatError("'" + path + "' holds no reference section");
    return std::move(*c.reference);
}

Threshold load_threshold(const std::string& path) {
    auto c = load_pdam(path);
    if (!c.threshold) throw FormatError("'" + path + "' holds no threshold section");
    return std::move(*c.threshold);
}

} // namespace pda
