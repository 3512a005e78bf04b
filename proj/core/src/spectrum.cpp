#include "pda/spectrum.hpp"

#include "pda/binary_io.hpp"
#include "pda/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <ostream>

namespace pda {

namespace {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

struct PlanDestroy {
    void operator()(fftw_plan p) const { fftw_destroy_plan(p); }
};

using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

} // namespace

Matrix fourier_magnitude(const Matrix& image) {
    if (image.rows == 0 || image.cols == 0) throw ValidationError("empty image");
    const auto n = image.rows * image.cols;
    ComplexBuffer in(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
    ComplexBuffer out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
    if (!in || !out) throw std::bad_alloc();
    // FFTW_ESTIMATE never touches the arrays while planning.
    Plan plan(fftw_plan_dft_2d(static_cast<int>(image.rows), static_cast<int>(image.cols), in.get(), out.get(),
                               FFTW_FORWARD, FFTW_ESTIMATE));
    if (!plan) throw Error("FFTW could not create a plan");
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = image.values[i];
        in[i][1] = 0.0;
    }
    fftw_execute(plan.get());
    Matrix mag(image.rows, image.cols);
    for (std::size_t i = 0; i < n; ++i) mag.values[i] = std::hypot(out[i][0], out[i][1]);
    return mag;
}

Matrix center_shift(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            out((r + m.rows / 2) % m.rows, (c + m.cols / 2) % m.cols) = m(r, c);
        }
    }
    return out;
}

Matrix average_fourier_spectrum(const std::vector<Matrix>& images) {
    if (images.empty()) throw ValidationError("average spectrum of zero images");
    const auto rows = images.front().rows;
    const auto cols = images.front().cols;
    Matrix acc(rows, cols);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].rows != rows || images[i].cols != cols) {
            throw ValidationError("shape mismatch: image " + std::to_string(i) + " is " +
                                  std::to_string(images[i].rows) + "x" + std::to_string(images[i].cols) +
                                  ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        const auto spec = center_shift(fourier_magnitude(images[i]));
        for (std::size_t k = 0; k < acc.values.size(); ++k) acc.values[k] += spec.values[k];
    }
    const auto count = static_cast<double>(images.size());
    for (auto& v : acc.values) v = std::log1p(v / count);
    return acc;
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(io::ByteReader& r) {
    std::string tok;
    for (;;) {
        const char c = static_cast<char>(r.get_u8("PGM header"));
        if (c == '#') {
            while (static_cast<char>(r.get_u8("PGM comment")) != '\n') {
            }
            if (!tok.empty()) return tok;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(c);
    }
}

std::size_t header_number(io::ByteReader& r, const char* what) {
    const auto tok = header_token(r);
    std::size_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
        throw FormatError(std::string("bad PGM ") + what + " '" + tok + "'");
    }
    return v;
}

} // namespace

Matrix read_pgm(const std::string& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader r(bytes);
    if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") throw FormatError("'" + path + "' is not a binary PGM (P5)");
    r.get_bytes(2, "PGM magic");
    const auto width = header_number(r, "width");
    const auto height = header_number(r, "height");
    const auto maxval = header_number(r, "maxval");
    if (width == 0 || height == 0) throw FormatError("PGM has zero size");
    if (maxval == 0 || maxval > 65535) throw FormatError("PGM maxval out of range");
    // header_token consumed exactly one whitespace byte after maxval.
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    Matrix m(height, width);
    const auto raw = r.get_bytes(width * height * bpp, "PGM pixels");
    for (std::size_t i = 0; i < width * height; ++i) {
        if (bpp == 1) {
            m.values[i] = static_cast<unsigned char>(raw[i]);
        } else {
            // 16-bit PGM samples are big-endian.
            m.values[i] = static_cast<double>((static_cast<unsigned char>(raw[2 * i]) << 8) |
                                              static_cast<unsigned char>(raw[2 * i + 1]));
        }
    }
    return m;
}

void write_pgm(const std::string& path, const Matrix& image, unsigned maxval) {
    if (maxval == 0 || maxval > 65535) throw ConfigError("PGM maxval out of range");
    std::string out = "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n" +
                      std::to_string(maxval) + "\n";
    for (double v : image.values) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, static_cast<double>(maxval))));
        if (maxval < 256) {
            out.push_back(static_cast<char>(q));
        } else {
            out.push_back(static_cast<char>(q >> 8));
            out.push_back(static_cast<char>(q & 0xFF));
        }
    }
    io::write_file(path, out);
}

void write_matrix(std::ostream& out, const Matrix& m) {
    char buf[64];
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            auto res = std::to_chars(buf, buf + sizeof(buf), m(r, c));
            if (c) out << '\t';
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

} // namespace pda
