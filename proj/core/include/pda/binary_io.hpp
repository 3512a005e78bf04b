#pragma once

// Little-endian primitive encoding shared by the PDAF and PDAM containers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pda::io {

class ByteWriter {
public:
    void put_bytes(std::string_view bytes);
    void put_u8(std::uint8_t v);
    void put_u16(std::uint16_t v);
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i64(std::int64_t v);
    void put_f32(float v);
    void put_f64(double v);
    void put_string(std::string_view s); // u32 length prefix

    const std::string& bytes() const noexcept { return buf_; }
    std::string take() noexcept { return std::move(buf_); }

private:
    std::string buf_;
};

/// Bounds-checked reader; every overrun raises FormatError naming `what`.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::string_view get_bytes(std::size_t n, const char* what);
    std::uint8_t get_u8(const char* what);
    std::uint16_t get_u16(const char* what);
    std::uint32_t get_u32(const char* what);
    std::uint64_t get_u64(const char* what);
    std::int64_t get_i64(const char* what);
    float get_f32(const char* what);
    double get_f64(const char* what);
    std::string get_string(const char* what);

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

} // namespace pda::io
