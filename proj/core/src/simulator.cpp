#include "pda/simulator.hpp"

#include "pda/error.hpp"
#include "pda/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace pda {

namespace {

using nlohmann::json;

constexpr std::uint64_t kKnownDirectionSeed = 101;
constexpr std::uint64_t kGeneratorASeed = 202;
constexpr std::uint64_t kGeneratorBSeed = 303;

std::vector<double> sample_cluster(Rng& rng, const ClusterSpec& c) {
    std::vector<double> v(c.mean.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = rng.normal(c.mean[k], c.sigma[k]);
    return v;
}

void add_scaled(std::vector<double>& v, const std::vector<double>& s, double factor) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += factor * s[k];
}

// Regenerated feature: content + s_known + beta * original signature + noise.
std::vector<double> regenerate(Rng& rng, const std::vector<double>& content, const std::vector<double>* signature,
                               const SyntheticWorldConfig& cfg) {
    auto out = content;
    add_scaled(out, cfg.known_signature, 1.0);
    if (signature) add_scaled(out, *signature, cfg.regeneration.residual_factor);
    for (auto& v : out) v += cfg.regeneration.alignment_noise * rng.normal();
    return out;
}

double diag_log_density(std::span<const double> x, const std::vector<double>& mean, const std::vector<double>& sigma) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - mean[k]) / sigma[k];
        s += -0.5 * z * z - std::log(sigma[k]);
    }
    return s;
}

double log_sum_exp(const std::vector<double>& v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> read_vector(const json& j, std::size_t dim, const char* what) {
    if (j.is_number()) return std::vector<double>(dim, j.get<double>());
    if (j.is_array()) {
        auto v = j.get<std::vector<double>>();
        if (v.size() != dim) {
            throw ConfigError(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                              std::to_string(dim));
        }
        return v;
    }
    throw ConfigError(std::string(what) + " must be a number or an array");
}

std::vector<double> read_signature(const json& j, std::size_t dim, const std::vector<double>* known,
                                   const char* what) {
    if (j.is_string()) {
        if (j.get<std::string>() == "known" && known) return *known;
        throw ConfigError(std::string(what) + ": only the string \"known\" is accepted");
    }
    if (j.is_object()) {
        return random_direction(dim, j.at("norm").get<double>(), j.at("direction_seed").get<std::uint64_t>(),
                                j.value("first_axis", std::size_t{0}));
    }
    return read_vector(j, dim, what);
}

void read_cluster(const json& j, std::size_t dim, ClusterSpec& c, const char* what) {
    if (j.contains("mean")) c.mean = read_vector(j.at("mean"), dim, what);
    if (j.contains("sigma")) c.sigma = read_vector(j.at("sigma"), dim, what);
}

} // namespace

void SyntheticWorldConfig::check() const {
    if (dim == 0) throw ConfigError("world dim must be positive");
    auto check_len = [&](const std::vector<double>& v, const std::string& what) {
        if (v.size() != dim) throw ConfigError(what + " dim " + std::to_string(v.size()) + " != " + std::to_string(dim));
        for (double x : v) {
            if (!std::isfinite(x)) throw ConfigError(what + " holds a non-finite value");
        }
    };
    auto check_cluster = [&](const ClusterSpec& c, const std::string& what) {
        check_len(c.mean, what + " mean");
        check_len(c.sigma, what + " sigma");
        for (double s : c.sigma) {
            if (!(s > 0.0)) throw ConfigError(what + " sigma must be > 0");
        }
    };
    check_cluster(real, "real");
    check_cluster(known_fake, "known_fake");
    check_len(known_signature, "known signature");
    for (const auto& g : unknown) {
        if (g.id.empty()) throw ConfigError("unknown generator id must be non-empty");
        check_len(g.signature, "signature of " + g.id);
    }
    if (!(regeneration.residual_factor >= 0.0 && regeneration.residual_factor <= 1.0)) {
        throw ConfigError("residual factor must lie in [0, 1]");
    }
    if (!(regeneration.alignment_noise >= 0.0)) throw ConfigError("alignment noise must be >= 0");
    if (reference_outliers > counts.reference) throw ConfigError("more reference outliers than reference samples");
    if (reference_outliers > 0 && unknown.empty()) throw ConfigError("reference outliers need an unknown generator");
}

std::vector<double> random_direction(std::size_t dim, double norm, std::uint64_t seed, std::size_t first_axis) {
    if (first_axis >= dim) throw ConfigError("direction subspace is empty");
    Rng rng(seed);
    std::vector<double> v(dim, 0.0);
    double len = 0.0;
    while (len == 0.0) {
        for (std::size_t k = first_axis; k < dim; ++k) v[k] = rng.normal();
        len = 0.0;
        for (double x : v) len += x * x;
        len = std::sqrt(len);
    }
    for (auto& x : v) x *= norm / len;
    return v;
}

namespace {

// Canned signatures live on the detail axes when there are any.
std::vector<double> signature_direction(std::size_t dim, double sigmas, std::uint64_t seed) {
    return random_direction(dim, sigmas * kDefaultClusterSigma, seed, dim > kContentAxes ? kContentAxes : 0);
}

} // namespace

ClusterSpec content_cluster(std::size_t dim) {
    ClusterSpec c{std::vector<double>(dim, 0.0), std::vector<double>(dim, kDetailSigma)};
    for (std::size_t k = 0; k < std::min(dim, kContentAxes); ++k) c.sigma[k] = kDefaultClusterSigma;
    return c;
}

SyntheticWorldConfig default_world_config() {
    SyntheticWorldConfig cfg;
    cfg.dim = 16;
    cfg.real = content_cluster(cfg.dim);
    cfg.known_fake = content_cluster(cfg.dim);
    cfg.known_signature = signature_direction(cfg.dim, 8.0, kKnownDirectionSeed);
    cfg.unknown = {
        {"gen_a", signature_direction(cfg.dim, 6.0, kGeneratorASeed)},
        {"gen_b", signature_direction(cfg.dim, 6.0, kGeneratorBSeed)},
    };
    cfg.regeneration = {0.5 * kDefaultClusterSigma, 0.6};
    cfg.counts = WorldCounts{};
    cfg.seed = 7;
    return cfg;
}

SyntheticWorldConfig aligned_generator_world_config() {
    auto cfg = default_world_config();
    cfg.unknown = {{"aligned", cfg.known_signature}};
    return cfg;
}

SyntheticWorldConfig outlier_world_config() {
    auto cfg = default_world_config();
    cfg.reference_outliers = 12;
    return cfg;
}

SyntheticWorld sample_world(const SyntheticWorldConfig& cfg) {
    cfg.check();
    Rng rng(cfg.seed);
    SyntheticWorld w;
    w.config = cfg;
    const auto d = cfg.dim;

    w.reference_pool = FeatureSet(d);
    const auto genuine = cfg.counts.reference - cfg.reference_outliers;
    for (std::size_t i = 0; i < genuine; ++i) {
        auto x = sample_cluster(rng, cfg.known_fake);
        add_scaled(x, cfg.known_signature, 1.0);
        w.reference_pool.push_back(x, Label::known_fake());
    }
    // Outliers sit where regenerated unknown fakes land, cycling generators.
    for (std::size_t i = 0; i < cfg.reference_outliers; ++i) {
        const auto& g = cfg.unknown[i % cfg.unknown.size()];
        w.reference_pool.push_back(regenerate(rng, sample_cluster(rng, cfg.real), &g.signature, cfg),
                                   Label::known_fake());
    }

    w.calibration.raw = FeatureSet(d);
    w.calibration.regenerated = FeatureSet(d);
    for (std::size_t i = 0; i < cfg.counts.calibration; ++i) {
        const auto content = sample_cluster(rng, cfg.real);
        w.calibration.raw.push_back(content, Label::real());
        w.calibration.regenerated.push_back(regenerate(rng, content, nullptr, cfg));
    }

    w.test.raw = FeatureSet(d);
    w.test.regenerated = FeatureSet(d);
    auto emit = [&](const std::vector<double>& content, const std::vector<double>* signature, Label label) {
        auto raw = content;
        if (signature) add_scaled(raw, *signature, 1.0);
        w.test.raw.push_back(raw, std::move(label));
        w.test.regenerated.push_back(regenerate(rng, content, signature, cfg));
    };
    for (std::size_t i = 0; i < cfg.counts.test_real; ++i) emit(sample_cluster(rng, cfg.real), nullptr, Label::real());
    for (std::size_t i = 0; i < cfg.counts.test_known_fake; ++i) {
        emit(sample_cluster(rng, cfg.known_fake), &cfg.known_signature, Label::known_fake());
    }
    for (const auto& g : cfg.unknown) {
        for (std::size_t i = 0; i < cfg.counts.test_unknown_per_generator; ++i) {
            emit(sample_cluster(rng, cfg.real), &g.signature, Label::unknown_fake(g.id));
        }
    }

    // Single precision, so the world survives a PDAF round trip unchanged.
    w.reference_pool = round_to_f32(std::move(w.reference_pool));
    w.calibration.raw = round_to_f32(std::move(w.calibration.raw));
    w.calibration.regenerated = round_to_f32(std::move(w.calibration.regenerated));
    w.test.raw = round_to_f32(std::move(w.test.raw));
    w.test.regenerated = round_to_f32(std::move(w.test.regenerated));
    const auto seed = static_cast<std::int64_t>(cfg.seed);
    for (auto* set : {&w.reference_pool, &w.calibration.raw, &w.calibration.regenerated, &w.test.raw,
                      &w.test.regenerated}) {
        set->seed = seed;
    }
    w.reference_pool.source = "synthetic:reference";
    w.calibration.raw.source = "synthetic:calibration_raw";
    w.calibration.regenerated.source = "synthetic:calibration_regenerated";
    w.test.raw.source = "synthetic:test_raw";
    w.test.regenerated.source = "synthetic:test_regenerated";
    return w;
}

bool is_fake_label(const Label& label) {
    if (label.kind() == Label::Kind::unlabeled) throw ValidationError("ground truth requires a labeled sample");
    return label.is_fake();
}

double world_bayes_oracle(const SyntheticWorld& world) {
    const auto& cfg = world.config;
    const auto& test = world.test.raw;
    if (test.empty()) throw ValidationError("world has no test samples");
    if (!test.has_labels()) throw ValidationError("world test set is unlabeled");

    const double n_real = static_cast<double>(cfg.counts.test_real);
    const double n_known = static_cast<double>(cfg.counts.test_known_fake);
    const double n_gen = static_cast<double>(cfg.counts.test_unknown_per_generator);
    const double total = n_real + n_known + n_gen * static_cast<double>(cfg.unknown.size());

    auto shifted = [](std::vector<double> mean, const std::vector<double>& s) {
        add_scaled(mean, s, 1.0);
        return mean;
    };
    struct Component {
        double log_prior;
        std::vector<double> mean;
        const std::vector<double>* sigma;
    };
    std::vector<Component> fakes;
    if (n_known > 0) {
        fakes.push_back({std::log(n_known / total), shifted(cfg.known_fake.mean, cfg.known_signature), &cfg.known_fake.sigma});
    }
    if (n_gen > 0) {
        for (const auto& g : cfg.unknown) {
            fakes.push_back({std::log(n_gen / total), shifted(cfg.real.mean, g.signature), &cfg.real.sigma});
        }
    }

    std::size_t correct = 0;
    std::vector<double> terms;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto x = test.row(i);
        bool predict_fake = false;
        if (n_real == 0) {
            predict_fake = true;
        } else if (!fakes.empty()) {
            const double real_score = std::log(n_real / total) + diag_log_density(x, cfg.real.mean, cfg.real.sigma);
            terms.clear();
            for (const auto& c : fakes) terms.push_back(c.log_prior + diag_log_density(x, c.mean, *c.sigma));
            predict_fake = log_sum_exp(terms) > real_score;
        }
        if (predict_fake == is_fake_label(test.label(i))) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

SyntheticWorldConfig parse_world_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("world config is not valid JSON: ") + e.what());
    }
    try {
        SyntheticWorldConfig cfg = default_world_config();
        const auto preset = j.value("preset", std::string("default"));
        if (preset == "aligned") {
            cfg = aligned_generator_world_config();
        } else if (preset == "outlier") {
            cfg = outlier_world_config();
        } else if (preset != "default") {
            throw ConfigError("unknown preset '" + preset + "'");
        }
        if (j.contains("dim")) {
            const auto dim = j.at("dim").get<std::size_t>();
            if (dim != cfg.dim) {
                cfg.dim = dim;
                cfg.real = content_cluster(dim);
                cfg.known_fake = content_cluster(dim);
                cfg.known_signature = signature_direction(dim, 8.0, kKnownDirectionSeed);
                cfg.unknown = {{"gen_a", signature_direction(dim, 6.0, kGeneratorASeed)},
                               {"gen_b", signature_direction(dim, 6.0, kGeneratorBSeed)}};
            }
        }
        const auto d = cfg.dim;
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("real")) read_cluster(j.at("real"), d, cfg.real, "real");
        if (j.contains("known_fake")) {
            const auto& k = j.at("known_fake");
            read_cluster(k, d, cfg.known_fake, "known_fake");
            if (k.contains("signature")) cfg.known_signature = read_signature(k.at("signature"), d, nullptr, "known signature");
        }
        if (j.contains("unknown")) {
            cfg.unknown.clear();
            for (const auto& g : j.at("unknown")) {
                cfg.unknown.push_back({g.at("id").get<std::string>(),
                                       read_signature(g.at("signature"), d, &cfg.known_signature, "unknown signature")});
            }
        }
        if (j.contains("regeneration")) {
            const auto& r = j.at("regeneration");
            cfg.regeneration.alignment_noise = r.value("alignment_noise", cfg.regeneration.alignment_noise);
            cfg.regeneration.residual_factor = r.value("residual_factor", cfg.regeneration.residual_factor);
        }
        if (j.contains("counts")) {
            const auto& c = j.at("counts");
            cfg.counts.reference = c.value("reference", cfg.counts.reference);
            cfg.counts.calibration = c.value("calibration", cfg.counts.calibration);
            cfg.counts.test_real = c.value("test_real", cfg.counts.test_real);
            cfg.counts.test_known_fake = c.value("test_known_fake", cfg.counts.test_known_fake);
            cfg.counts.test_unknown_per_generator =
                c.value("test_unknown_per_generator", cfg.counts.test_unknown_per_generator);
        }
        cfg.reference_outliers = j.value("reference_outliers", cfg.reference_outliers);
        cfg.check();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad world config field: ") + e.what());
    }
}

std::string world_config_to_json(const SyntheticWorldConfig& cfg) {
    json j;
    j["dim"] = cfg.dim;
    j["seed"] = cfg.seed;
    j["real"] = {{"mean", cfg.real.mean}, {"sigma", cfg.real.sigma}};
    j["known_fake"] = {{"mean", cfg.known_fake.mean}, {"sigma", cfg.known_fake.sigma}, {"signature", cfg.known_signature}};
    j["unknown"] = json::array();
    for (const auto& g : cfg.unknown) j["unknown"].push_back({{"id", g.id}, {"signature", g.signature}});
    j["regeneration"] = {{"alignment_noise", cfg.regeneration.alignment_noise},
                         {"residual_factor", cfg.regeneration.residual_factor}};
    j["counts"] = {{"reference", cfg.counts.reference},
                   {"calibration", cfg.counts.calibration},
                   {"test_real", cfg.counts.test_real},
                   {"test_known_fake", cfg.counts.test_known_fake},
                   {"test_unknown_per_generator", cfg.counts.test_unknown_per_generator}};
    j["reference_outliers"] = cfg.reference_outliers;
    return j.dump(2);
}

ClusterSample sample_clusters(const std::vector<std::vector<double>>& centers, double sigma, std::size_t per_cluster,
                              std::uint64_t seed) {
    if (centers.empty()) throw ConfigError("need at least one cluster center");
    if (!(sigma > 0.0)) throw ConfigError("cluster sigma must be > 0");
    const auto d = centers.front().size();
    Rng rng(seed);
    ClusterSample out;
    out.features = FeatureSet(d);
    for (std::size_t c = 0; c < centers.size(); ++c) {
        if (centers[c].size() != d) throw ConfigError("cluster centers differ in dim");
        for (std::size_t i = 0; i < per_cluster; ++i) {
            std::vector<double> v(d);
            for (std::size_t k = 0; k < d; ++k) v[k] = rng.normal(centers[c][k], sigma);
            out.features.push_back(v);
            out.cluster.push_back(static_cast<int>(c));
        }
    }
    return out;
}

} // namespace pda
