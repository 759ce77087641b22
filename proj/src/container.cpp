#include "czta/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

namespace czta {

const char* to_string(DataErrc code) noexcept {
    switch (code) {
    case DataErrc::io: return "io error";
    case DataErrc::bad_magic: return "bad magic";
    case DataErrc::version_mismatch: return "version mismatch";
    case DataErrc::truncated: return "truncated payload";
    case DataErrc::invalid_header: return "invalid header";
    case DataErrc::non_finite: return "non-finite value";
    case DataErrc::duplicate_pair: return "duplicate pair";
    case DataErrc::structural: return "structural error";
    case DataErrc::degenerate_prototype: return "degenerate prototype";
    case DataErrc::dimension_mismatch: return "dimension mismatch";
    case DataErrc::label_out_of_range: return "label out of range";
    }
    return "unknown";
}

const Array* Container::find(const std::string& name) const noexcept {
    for (const auto& a : arrays) {
        if (a.name == name) {
            return &a;
        }
    }
    return nullptr;
}

const Array& Container::array(const std::string& name) const {
    if (const auto* a = find(name)) {
        return *a;
    }
    throw DataError(DataErrc::structural, "missing array '" + name + "'");
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bits.begin(), bits.end());
    }
    out.insert(out.end(), bits.begin(), bits.end());
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (in.size() - pos < sizeof(T)) {
        throw DataError(DataErrc::truncated, "unexpected end of file");
    }
    std::array<std::uint8_t, sizeof(T)> bits;
    std::memcpy(bits.data(), in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bits.begin(), bits.end());
    }
    pos += sizeof(T);
    return std::bit_cast<T>(bits);
}

const char* dtype_name(DType t) {
    switch (t) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::i32: return "i32";
    }
    return "?";
}

DType parse_dtype(const std::string& s) {
    if (s == "f32") return DType::f32;
    if (s == "f64") return DType::f64;
    if (s == "i32") return DType::i32;
    throw DataError(DataErrc::invalid_header, "unknown dtype '" + s + "'");
}

}  // namespace

std::vector<std::uint8_t> encode(const Container& c) {
    nlohmann::json header = c.header;
    auto& list = header["arrays"] = nlohmann::json::array();
    for (const auto& a : c.arrays) {
        const std::size_t have = a.dtype == DType::i32 ? a.ints.size() : a.reals.size();
        if (have != a.size()) {
            throw DataError(DataErrc::structural, "array '" + a.name + "' size does not match shape");
        }
        list.push_back({{"name", a.name}, {"dtype", dtype_name(a.dtype)}, {"rows", a.rows}, {"cols", a.cols}});
    }
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put<std::uint32_t>(out, kFormatVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& a : c.arrays) {
        switch (a.dtype) {
        case DType::f32:
            for (double v : a.reals) put<float>(out, static_cast<float>(v));
            break;
        case DType::f64:
            for (double v : a.reals) put<double>(out, v);
            break;
        case DType::i32:
            for (std::int32_t v : a.ints) put<std::int32_t>(out, v);
            break;
        }
    }
    return out;
}

Container decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DataError(DataErrc::bad_magic, "not a TMCT container");
    }
    std::size_t pos = 4;
    const auto version = get<std::uint32_t>(bytes, pos);
    if (version != kFormatVersion) {
        throw DataError(DataErrc::version_mismatch,
                        "file version " + std::to_string(version) + ", expected " +
                            std::to_string(kFormatVersion));
    }
    const auto header_len = get<std::uint32_t>(bytes, pos);
    if (bytes.size() - pos < header_len) {
        throw DataError(DataErrc::truncated, "header extends past end of file");
    }
    Container c;
    try {
        c.header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrc::invalid_header, e.what());
    }
    pos += header_len;
    if (!c.header.is_object() || !c.header.contains("arrays") || !c.header["arrays"].is_array()) {
        throw DataError(DataErrc::invalid_header, "header lacks an 'arrays' list");
    }
    try {
        for (const auto& desc : c.header["arrays"]) {
            Array a;
            a.name = desc.at("name").get<std::string>();
            a.dtype = parse_dtype(desc.at("dtype").get<std::string>());
            a.rows = desc.at("rows").get<std::size_t>();
            a.cols = desc.at("cols").get<std::size_t>();
            const std::size_t elem = a.dtype == DType::f64 ? 8 : 4;
            if (a.cols != 0 && a.rows > (bytes.size() - pos) / elem / a.cols) {
                throw DataError(DataErrc::truncated, "array '" + a.name + "' extends past end of file");
            }
            switch (a.dtype) {
            case DType::f32:
                a.reals.reserve(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) a.reals.push_back(get<float>(bytes, pos));
                break;
            case DType::f64:
                a.reals.reserve(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) a.reals.push_back(get<double>(bytes, pos));
                break;
            case DType::i32:
                a.ints.reserve(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) a.ints.push_back(get<std::int32_t>(bytes, pos));
                break;
            }
            c.arrays.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrc::invalid_header, e.what());
    }
    if (pos != bytes.size()) {
        throw DataError(DataErrc::structural, "trailing bytes after last array");
    }
    c.header.erase("arrays");
    return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataErrc::io, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_container(const std::filesystem::path& path, const Container& c) {
    const auto bytes = encode(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError(DataErrc::io, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError(DataErrc::io, "short write to " + path.string());
    }
}

Container read_container(const std::filesystem::path& path) { return decode(read_file_bytes(path)); }

std::string sha256_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

}  // namespace czta
