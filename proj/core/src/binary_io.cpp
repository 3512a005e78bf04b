#include "pda/binary_io.hpp"

#include "pda/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pda::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<char>(static_cast<std::uint8_t>(v >> (8 * i))));
    }
}

template <typename T>
T get_le(std::string_view bytes) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(static_cast<std::uint8_t>(bytes[i])) << (8 * i);
    }
    return v;
}

} // namespace

void ByteWriter::put_bytes(std::string_view bytes) { buf_.append(bytes); }
void ByteWriter::put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
void ByteWriter::put_u16(std::uint16_t v) { put_le(buf_, v); }
void ByteWriter::put_u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::put_u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::put_i64(std::int64_t v) { put_le(buf_, static_cast<std::uint64_t>(v)); }
void ByteWriter::put_f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::put_f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::put_string(std::string_view s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
}

std::string_view ByteReader::get_bytes(std::size_t n, const char* what) {
    if (remaining() < n) {
        std::ostringstream msg;
        msg << "truncated input reading " << what << ": need " << n << " bytes, have " << remaining();
        throw FormatError(msg.str());
    }
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::get_u8(const char* what) { return static_cast<std::uint8_t>(get_bytes(1, what)[0]); }
std::uint16_t ByteReader::get_u16(const char* what) { return get_le<std::uint16_t>(get_bytes(2, what)); }
std::uint32_t ByteReader::get_u32(const char* what) { return get_le<std::uint32_t>(get_bytes(4, what)); }
std::uint64_t ByteReader::get_u64(const char* what) { return get_le<std::uint64_t>(get_bytes(8, what)); }
std::int64_t ByteReader::get_i64(const char* what) { return static_cast<std::int64_t>(get_u64(what)); }
float ByteReader::get_f32(const char* what) { return std::bit_cast<float>(get_u32(what)); }
double ByteReader::get_f64(const char* what) { return std::bit_cast<double>(get_u64(what)); }

std::string ByteReader::get_string(const char* what) {
    auto n = get_u32(what);
    return std::string(get_bytes(n, what));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failure on '" + path + "'");
    }
    return std::move(ss).str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        throw IoError("write failure on '" + path + "'");
    }
}

} // namespace pda::io
