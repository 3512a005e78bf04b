#include "oracles.hpp"

#include "pda/error.hpp"
#include "pda/random.hpp"
#include "pda/spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace pda;

namespace {

Matrix random_image(std::uint64_t seed, std::size_t r, std::size_t c) {
    Rng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.values) v = rng.normal(0.0, 1.0);
    return m;
}

std::string tmp(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

} // namespace

TEST(Spectrum, ParsevalAndDirectDft) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t rows = 2 + seed % 7, cols = 8 - seed % 5;
        const auto f = random_image(seed, rows, cols);
        const auto F = fourier_magnitude(f);
        ASSERT_EQ(F.rows, rows);
        ASSERT_EQ(F.cols, cols);
        double energy = 0.0, spectral = 0.0;
        for (double v : f.values) energy += v * v;
        for (double v : F.values) spectral += v * v;
        EXPECT_NEAR(spectral, double(rows * cols) * energy, 1e-9 * spectral);

        const auto ref = oracle::dft_magnitude(f.values, rows, cols);
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(F.values[i], ref[i], 1e-9 * (1.0 + ref[i]));
    }
}

TEST(Spectrum, ConstantImageIsDcOnly) {
    for (auto [r, c] : {std::pair{8, 8}, std::pair{5, 6}, std::pair{7, 3}}) {
        const Matrix img(r, c, 2.5);
        const auto s = center_shift(fourier_magnitude(img));
        for (std::size_t y = 0; y < s.rows; ++y) {
            for (std::size_t x = 0; x < s.cols; ++x) {
                if (y == s.rows / 2 && x == s.cols / 2) {
                    EXPECT_NEAR(s(y, x), 2.5 * r * c, 1e-9);
                } else {
                    EXPECT_NEAR(s(y, x), 0.0, 1e-9);
                }
            }
        }
    }
}

TEST(Spectrum, CosineGivesTwinPeaks) {
    const std::size_t n = 16, freq = 3;
    Matrix img(n, n);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) img(y, x) = std::cos(2.0 * std::numbers::pi * freq * x / n);
    }
    const auto s = center_shift(fourier_magnitude(img));
    const std::size_t cy = n / 2, cx = n / 2;
    EXPECT_NEAR(s(cy, cx + freq), n * n / 2.0, 1e-9);
    EXPECT_NEAR(s(cy, cx - freq), n * n / 2.0, 1e-9);
    double rest = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            if (y == cy && (x == cx + freq || x == cx - freq)) continue;
            rest += s(y, x);
        }
    }
    EXPECT_LT(rest, 1e-8);
}

TEST(Spectrum, CenterShift) {
    Matrix m(3, 4);
    for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = double(i);
    const auto s = center_shift(m);
    EXPECT_EQ(s(1, 2), m(0, 0));
    for (std::size_t y = 0; y < 3; ++y) {
        for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(s((y + 1) % 3, (x + 2) % 4), m(y, x));
    }
}

TEST(Spectrum, AverageAppliesLogAfterMean) {
    const auto a = random_image(1, 6, 6);
    const auto b = random_image(2, 6, 6);
    const auto avg = average_fourier_spectrum({a, b});
    const auto fa = center_shift(fourier_magnitude(a));
    const auto fb = center_shift(fourier_magnitude(b));
    for (std::size_t i = 0; i < avg.values.size(); ++i) {
        EXPECT_NEAR(avg.values[i], std::log1p(0.5 * (fa.values[i] + fb.values[i])), 1e-12);
    }
    EXPECT_THROW(average_fourier_spectrum({}), ValidationError);
    EXPECT_THROW(average_fourier_spectrum({a, random_image(3, 6, 5)}), ValidationError);
    EXPECT_THROW(fourier_magnitude(Matrix{}), ValidationError);
}

TEST(Pgm, RoundTrip) {
    for (unsigned maxval : {255u, 4095u}) {
        Matrix img(5, 7);
        for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = double((i * 37) % (maxval + 1));
        const auto path = tmp("pda_spectrum_" + std::to_string(maxval) + ".pgm");
        write_pgm(path, img, maxval);
        const auto back = read_pgm(path);
        EXPECT_EQ(back.rows, 5u);
        EXPECT_EQ(back.cols, 7u);
        EXPECT_EQ(back.values, img.values);
    }
    EXPECT_THROW(write_pgm(tmp("bad.pgm"), Matrix(2, 2), 0), ConfigError);
}

TEST(Pgm, RejectsBadFiles) {
    const auto path = tmp("pda_spectrum_bad.pgm");
    auto put = [&](const std::string& bytes) {
        std::ofstream(path, std::ios::binary) << bytes;
    };
    put("P2\n2 2\n255\n1 2 3 4");
    EXPECT_THROW(read_pgm(path), FormatError);
    put("P5\n2 2\n255\nabc");
    EXPECT_THROW(read_pgm(path), FormatError);
    put("P5\n0 2\n255\n");
    EXPECT_THROW(read_pgm(path), FormatError);
    put("P5\n2 2\n70000\nabcdefgh");
    EXPECT_THROW(read_pgm(path), FormatError);
}

TEST(Spectrum, WriteMatrix) {
    Matrix m(2, 2);
    m.values = {1.0, 0.5, -2.0, 0.0};
    std::ostringstream out;
    write_matrix(out, m);
    EXPECT_EQ(out.str(), "1\t0.5\n-2\t0\n");
}
