#pragma once

// The TMCT binary container shared by every file the engine reads or writes.
//
//   bytes 0..3   magic "TMCT"
//   u32 LE       format version
//   u32 LE       header length in bytes
//   ...          UTF-8 JSON header
//   ...          array payloads, back to back, in header order, little-endian
//
// The header carries an "arrays" list of {name, dtype, rows, cols}; every
// other key is owned by the file kind (bank, stream, feasibility, ...).

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace czta {

inline constexpr char kMagic[4] = {'T', 'M', 'C', 'T'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class DataErrc {
    io,
    bad_magic,
    version_mismatch,
    truncated,
    invalid_header,
    non_finite,
    duplicate_pair,
    structural,
    degenerate_prototype,
    dimension_mismatch,
    label_out_of_range,
};

[[nodiscard]] const char* to_string(DataErrc code) noexcept;

class DataError : public std::runtime_error {
public:
    DataError(DataErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
    [[nodiscard]] DataErrc code() const noexcept { return code_; }

private:
    DataErrc code_;
};

enum class DType { f32, f64, i32 };

struct Array {
    std::string name;
    DType dtype = DType::f32;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> reals;        // f32 (widened) and f64
    std::vector<std::int32_t> ints;   // i32

    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
};

struct Container {
    nlohmann::json header = nlohmann::json::object();
    std::vector<Array> arrays;

    [[nodiscard]] const Array& array(const std::string& name) const;
    [[nodiscard]] const Array* find(const std::string& name) const noexcept;
};

[[nodiscard]] std::vector<std::uint8_t> encode(const Container& c);
[[nodiscard]] Container decode(const std::vector<std::uint8_t>& bytes);

void write_container(const std::filesystem::path& path, const Container& c);
[[nodiscard]] Container read_container(const std::filesystem::path& path);

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
[[nodiscard]] std::string sha256_hex(const void* data, std::size_t size);

}  // namespace czta
