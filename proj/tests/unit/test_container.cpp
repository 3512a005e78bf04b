#include "pda/container.hpp"
#include "pda/detector.hpp"
#include "pda/error.hpp"
#include "pda/random.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace pda;

namespace {

FeatureSet blob(std::uint64_t seed, std::size_t n, std::size_t d) {
    Rng rng(seed);
    FeatureSet s(d);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = rng.normal(0.0, 1.0 + i % 3);
        s.push_back(std::span<const double>(row));
    }
    return s;
}

PdamContents full_bundle(ReductionMode mode) {
    const auto x = prune_set(blob(1, 40, 5), PruneConfig{80});
    TsneConfig cfg;
    cfg.perplexity = 8;
    cfg.iterations = 120;
    cfg.seed = 9;
    cfg.out_of_sample = OutOfSampleMode::normalized;
    auto model = mode == ReductionMode::tsne ? fit_tsne(x, cfg) : fit_pca(x);
    auto ref = ReferenceSet::from_model(model, "blob");
    auto t = calibrate_threshold(blob(2, 30, 5), model, ref, KnnConfig{3}, 93, PruneConfig{80});
    PdamContents c;
    c.model = std::move(model);
    c.reference = std::move(ref);
    c.threshold = std::move(t);
    c.prune = std::optional<PruneConfig>{PruneConfig{80}};
    return c;
}

void expect_same_model(const EmbeddingModel& a, const EmbeddingModel& b) {
    EXPECT_EQ(a.mode(), b.mode());
    EXPECT_EQ(a.id(), b.id());
    EXPECT_EQ(a.fitted_points(), b.fitted_points());
    EXPECT_EQ(a.fitted_inputs(), b.fitted_inputs());
    EXPECT_EQ(a.standardizer().mean, b.standardizer().mean);
    EXPECT_EQ(a.standardizer().scale, b.standardizer().scale);
    EXPECT_EQ(a.tsne().sigma, b.tsne().sigma);
    EXPECT_EQ(a.tsne().kl_trace, b.tsne().kl_trace);
    EXPECT_EQ(a.tsne().config.out_of_sample, b.tsne().config.out_of_sample);
    EXPECT_EQ(a.pca().basis, b.pca().basis);
}

} // namespace

class PdamModes : public ::testing::TestWithParam<ReductionMode> {};

TEST_P(PdamModes, RoundTripIsBitwise) {
    const auto c = full_bundle(GetParam());
    const auto bytes = encode_pdam(c);
    const auto back = decode_pdam(bytes);
    EXPECT_EQ(encode_pdam(back), bytes);
    ASSERT_TRUE(back.model && back.reference && back.threshold && back.prune);
    expect_same_model(*c.model, *back.model);
    EXPECT_EQ(*back.reference, *c.reference);
    EXPECT_EQ(back.threshold->tau, c.threshold->tau);
    EXPECT_EQ(back.threshold->distances, c.threshold->distances);
    EXPECT_EQ(back.threshold->model_id, c.model->id());
    EXPECT_EQ(back.threshold->prune_p, 80.0);
    EXPECT_EQ(**back.prune, PruneConfig{80});

    // A reloaded model embeds exactly like the original.
    const auto probe = blob(3, 5, 5);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        EXPECT_EQ(embed_point(*back.model, probe.row(i)), embed_point(*c.model, probe.row(i)));
    }
    EXPECT_NO_THROW(Pipeline(**back.prune, *back.model, *back.reference, back.threshold->knn, *back.threshold));
}

INSTANTIATE_TEST_SUITE_P(Both, PdamModes, ::testing::Values(ReductionMode::tsne, ReductionMode::pca),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Pdam, PartialBundlesAndFiles) {
    auto c = full_bundle(ReductionMode::pca);
    PdamContents only_ref;
    only_ref.reference = c.reference;
    const auto path = (std::filesystem::temp_directory_path() / "pda_container_ref.pdam").string();
    save_pdam(only_ref, path);
    EXPECT_EQ(load_reference(path), *c.reference);
    EXPECT_THROW(load_model(path), FormatError);
    EXPECT_THROW(load_threshold(path), FormatError);

    PdamContents no_prune;
    no_prune.prune = std::optional<PruneConfig>{};
    const auto back = decode_pdam(encode_pdam(no_prune));
    ASSERT_TRUE(back.prune.has_value());
    EXPECT_FALSE(back.prune->has_value());
}

TEST(Pdam, CorruptionsRejected) {
    const auto bytes = encode_pdam(full_bundle(ReductionMode::tsne));
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(decode_pdam(magic), FormatError);
    auto version = bytes;
    version[4] = 9;
    EXPECT_THROW(decode_pdam(version), FormatError);
    for (std::size_t cut = 0; cut < bytes.size(); cut += 1 + cut / 16) {
        EXPECT_THROW(decode_pdam(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
    }
    // Flipping a byte inside the fitted coordinates changes the content hash
    // recorded by the threshold; the bundle still decodes but no longer binds.
    auto flipped = bytes;
    flipped[bytes.size() / 3] ^= 0x01;
    try {
        auto c = decode_pdam(flipped);
        if (c.model && c.reference && c.threshold && c.prune) {
            EXPECT_THROW(Pipeline(*c.prune, *c.model, *c.reference, c.threshold->knn, *c.threshold), ConfigError);
        }
    } catch (const Error&) {
    }
}

TEST(Pdam, DuplicateAndUnknownSections) {
    PdamContents c;
    c.prune = std::optional<PruneConfig>{PruneConfig{}};
    const auto one = encode_pdam(c);
    // Header: magic, u16 version, u32 section count; then the sections.
    const std::string header = one.substr(0, 10);
    const std::string section = one.substr(10);
    auto twice = header + section + section;
    twice[6] = 2;
    EXPECT_THROW(decode_pdam(twice), FormatError);

    std::string unknown = "ZZZZ";
    unknown.append(std::string("\x03\0\0\0\0\0\0\0", 8));
    unknown += "abc";
    auto with_unknown = header + unknown + section;
    with_unknown[6] = 2;
    const auto back = decode_pdam(with_unknown);
    EXPECT_TRUE(back.prune.has_value());
}
