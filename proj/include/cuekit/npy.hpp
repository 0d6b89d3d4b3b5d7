#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

// Minimal NPY v1.0 reader/writer. Little-endian C-order arrays only, which is
// all the toolkit's file contracts use.

namespace cuekit {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <class T>
struct NpyDescr;
template <>
struct NpyDescr<float> {
    static constexpr const char* value = "<f4";
};
template <>
struct NpyDescr<std::int32_t> {
    static constexpr const char* value = "<i4";
};
template <>
struct NpyDescr<std::uint8_t> {
    static constexpr const char* value = "|u1";
};

namespace detail {

inline constexpr char kNpyMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

inline std::string shape_to_string(std::span<const std::size_t> shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) s += ",";
        if (i + 1 < shape.size()) s += " ";
    }
    s += ")";
    return s;
}

// Parses the python-literal header dict, e.g.
//   {'descr': '<f4', 'fortran_order': False, 'shape': (2, 3, 4), }
struct NpyHeader {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
};

inline NpyHeader parse_npy_header(const std::string& text) {
    NpyHeader h;
    auto find_key = [&](const std::string& key) {
        auto pos = text.find("'" + key + "'");
        if (pos == std::string::npos) throw DecodeError("npy header: missing key '" + key + "'");
        pos = text.find(':', pos);
        if (pos == std::string::npos) throw DecodeError("npy header: malformed entry for '" + key + "'");
        return pos + 1;
    };

    // descr
    {
        auto p = find_key("descr");
        auto q0 = text.find('\'', p);
        auto q1 = (q0 == std::string::npos) ? std::string::npos : text.find('\'', q0 + 1);
        if (q1 == std::string::npos) throw DecodeError("npy header: unterminated descr");
        h.descr = text.substr(q0 + 1, q1 - q0 - 1);
    }
    // fortran_order
    {
        auto p = find_key("fortran_order");
        while (p < text.size() && text[p] == ' ') ++p;
        if (text.compare(p, 4, "True") == 0)
            h.fortran_order = true;
        else if (text.compare(p, 5, "False") == 0)
            h.fortran_order = false;
        else
            throw DecodeError("npy header: bad fortran_order value");
    }
    // shape
    {
        auto p = find_key("shape");
        auto l = text.find('(', p);
        auto r = (l == std::string::npos) ? std::string::npos : text.find(')', l);
        if (r == std::string::npos) throw DecodeError("npy header: bad shape tuple");
        std::string tuple = text.substr(l + 1, r - l - 1);
        std::size_t i = 0;
        while (i < tuple.size()) {
            while (i < tuple.size() && (tuple[i] == ' ' || tuple[i] == ',')) ++i;
            if (i >= tuple.size()) break;
            std::size_t j = i;
            while (j < tuple.size() && tuple[j] >= '0' && tuple[j] <= '9') ++j;
            if (j == i) throw DecodeError("npy header: bad shape entry");
            h.shape.push_back(std::stoull(tuple.substr(i, j - i)));
            i = j;
        }
    }
    return h;
}

} // namespace detail

/// Raw array loaded from an .npy file, before any dtype check.
struct NpyFile {
    std::string descr;
    std::vector<std::size_t> shape;
    std::vector<std::byte> payload;

    std::size_t elements() const {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }
};

inline NpyFile load_npy_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open " + path);

    char magic[8];
    if (!in.read(magic, 8)) throw DecodeError(path + ": truncated npy magic");
    if (std::memcmp(magic, detail::kNpyMagic, 6) != 0) throw DecodeError(path + ": not an npy file");
    if (magic[6] != 1 || magic[7] != 0)
        throw UnsupportedFormat(path + ": npy version " + std::to_string(magic[6]) + "." +
                                std::to_string(magic[7]) + " (only 1.0 supported)");

    std::uint8_t lenb[2];
    if (!in.read(reinterpret_cast<char*>(lenb), 2)) throw DecodeError(path + ": truncated npy header length");
    const std::size_t header_len = lenb[0] | (std::size_t(lenb[1]) << 8);
    std::string header(header_len, '\0');
    if (!in.read(header.data(), static_cast<std::streamsize>(header_len)))
        throw DecodeError(path + ": truncated npy header");

    auto parsed = detail::parse_npy_header(header);
    if (parsed.fortran_order) throw UnsupportedFormat(path + ": fortran-order arrays not supported");

    NpyFile f;
    f.descr = parsed.descr;
    f.shape = std::move(parsed.shape);

    std::size_t item = 0;
    if (f.descr == "<f4" || f.descr == "<i4")
        item = 4;
    else if (f.descr == "|u1" || f.descr == "<u1" || f.descr == "u1")
        item = 1;
    else
        throw DTypeError(path + ": unsupported dtype '" + f.descr + "'");

    f.payload.resize(f.elements() * item);
    if (!in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(f.payload.size())))
        throw DecodeError(path + ": truncated npy payload");
    return f;
}

template <class T>
std::pair<std::vector<T>, std::vector<std::size_t>> load_npy(const std::string& path) {
    NpyFile f = load_npy_raw(path);
    const std::string want = NpyDescr<T>::value;
    bool ok = f.descr == want;
    if constexpr (std::is_same_v<T, std::uint8_t>)
        ok = ok || f.descr == "<u1" || f.descr == "u1";
    if (!ok) throw DTypeError(path + ": dtype '" + f.descr + "' where '" + want + "' expected");

    std::vector<T> data(f.elements());
    std::memcpy(data.data(), f.payload.data(), f.payload.size());
    return {std::move(data), std::move(f.shape)};
}

template <class T>
void save_npy(const std::string& path, std::span<const T> data, std::span<const std::size_t> shape) {
    std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    if (n != data.size()) throw ShapeError(path + ": shape does not match element count");

    std::string dict = "{'descr': '";
    dict += NpyDescr<T>::value;
    dict += "', 'fortran_order': False, 'shape': ";
    dict += detail::shape_to_string(shape);
    dict += ", }";
    // pad with spaces so magic+version+len+header is a multiple of 64, newline-terminated
    std::size_t unpadded = 6 + 2 + 2 + dict.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict += '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw EncodeError("cannot open " + path + " for writing");
    out.write(detail::kNpyMagic, 6);
    const char version[2] = {1, 0};
    out.write(version, 2);
    const std::uint8_t lenb[2] = {static_cast<std::uint8_t>(dict.size() & 0xff),
                                  static_cast<std::uint8_t>(dict.size() >> 8)};
    out.write(reinterpret_cast<const char*>(lenb), 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
    if (!out) throw EncodeError("write failed for " + path);
}

// ---- typed containers ----

inline ScoreMap load_scoremap(const std::string& path, MapKind kind = MapKind::raw) {
    auto [data, shape] = load_npy<float>(path);
    if (shape.size() != 3)
        throw ShapeError(path + ": expected rank-3 (K,H,W) array, got rank " +
                         std::to_string(shape.size()));
    ScoreMap m;
    m.classes = static_cast<int>(shape[0]);
    m.height = static_cast<int>(shape[1]);
    m.width = static_cast<int>(shape[2]);
    m.kind = kind;
    m.data = std::move(data);
    return m;
}

inline void save_scoremap(const ScoreMap& m, const std::string& path) {
    const std::size_t shape[3] = {static_cast<std::size_t>(m.classes),
                                  static_cast<std::size_t>(m.height),
                                  static_cast<std::size_t>(m.width)};
    save_npy<float>(path, m.data, shape);
}

inline CueSet load_cueset(const std::string& path) {
    auto [data, shape] = load_npy<std::uint8_t>(path);
    if (shape.size() != 3)
        throw ShapeError(path + ": expected rank-3 (K,H,W) cue array, got rank " +
                         std::to_string(shape.size()));
    CueSet c;
    c.classes = static_cast<int>(shape[0]);
    c.height = static_cast<int>(shape[1]);
    c.width = static_cast<int>(shape[2]);
    c.data = std::move(data);
    for (auto& v : c.data)
        if (v > 1) throw DecodeError(path + ": cue values must be 0 or 1");
    return c;
}

inline void save_cueset(const CueSet& c, const std::string& path) {
    const std::size_t shape[3] = {static_cast<std::size_t>(c.classes),
                                  static_cast<std::size_t>(c.height),
                                  static_cast<std::size_t>(c.width)};
    save_npy<std::uint8_t>(path, c.data, shape);
}

inline std::pair<std::vector<std::int32_t>, std::pair<int, int>> load_labeling_npy(
    const std::string& path) {
    auto [data, shape] = load_npy<std::int32_t>(path);
    if (shape.size() != 2)
        throw ShapeError(path + ": expected rank-2 (H,W) labeling, got rank " +
                         std::to_string(shape.size()));
    return {std::move(data), {static_cast<int>(shape[0]), static_cast<int>(shape[1])}};
}

inline LabelMask load_mask_npy(const std::string& path) {
    auto [data, shape] = load_npy<std::uint8_t>(path);
    if (shape.size() != 2)
        throw ShapeError(path + ": expected rank-2 (H,W) mask, got rank " +
                         std::to_string(shape.size()));
    LabelMask m;
    m.height = static_cast<int>(shape[0]);
    m.width = static_cast<int>(shape[1]);
    m.data = std::move(data);
    return m;
}

inline void save_mask_npy(const LabelMask& m, const std::string& path) {
    const std::size_t shape[2] = {static_cast<std::size_t>(m.height),
                                  static_cast<std::size_t>(m.width)};
    save_npy<std::uint8_t>(path, m.data, shape);
}

} // namespace cuekit
