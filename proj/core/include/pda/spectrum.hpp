#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace pda {

/// Dense row-major real matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// |F| of the unnormalized forward 2D DFT
///   F(u,v) = sum_{x,y} f(x,y) exp(-2 pi i (u x / rows + v y / cols)),
/// so sum |F|^2 = rows * cols * sum f^2.
Matrix fourier_magnitude(const Matrix& image);

/// Moves the zero-frequency bin to (rows/2, cols/2).
Matrix center_shift(const Matrix& m);

/// Per image: magnitude spectrum, centered; averaged over images; then
/// log(1 + x) applied elementwise.
Matrix average_fourier_spectrum(const std::vector<Matrix>& images);

/// Binary PGM (P5), 8- or 16-bit samples, as intensities in [0, maxval].
Matrix read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Matrix& image, unsigned maxval = 255);

/// Tab-separated rows.
void write_matrix(std::ostream& out, const Matrix& m);

} // namespace pda
