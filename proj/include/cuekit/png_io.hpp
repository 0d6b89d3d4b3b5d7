#pragma once

#include <array>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "cuekit/errors.hpp"
#include "cuekit/types.hpp"

namespace cuekit {

/// The standard 256-entry PASCAL VOC colormap: the bits of each index are
/// distributed over R,G,B from the most significant palette bit downward.
inline const std::array<std::array<std::uint8_t, 3>, 256>& voc_palette() {
    static const auto table = [] {
        std::array<std::array<std::uint8_t, 3>, 256> t{};
        for (int i = 0; i < 256; ++i) {
            int id = i;
            std::uint8_t r = 0, g = 0, b = 0;
            for (int j = 0; j < 8 && id != 0; ++j) {
                r |= static_cast<std::uint8_t>(((id >> 0) & 1) << (7 - j));
                g |= static_cast<std::uint8_t>(((id >> 1) & 1) << (7 - j));
                b |= static_cast<std::uint8_t>(((id >> 2) & 1) << (7 - j));
                id >>= 3;
            }
            t[i] = {r, g, b};
        }
        return t;
    }();
    return table;
}

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

[[noreturn]] inline void png_error_to_exception(png_structp, png_const_charp msg) {
    throw DecodeError(std::string("libpng: ") + (msg ? msg : "unknown error"));
}
[[noreturn]] inline void png_write_error_to_exception(png_structp, png_const_charp msg) {
    throw EncodeError(std::string("libpng: ") + (msg ? msg : "unknown error"));
}
inline void png_warning_ignore(png_structp, png_const_charp) {}

struct DecodedPng {
    int height = 0;
    int width = 0;
    int color_type = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> rows;           // post-transform packed rows
    int channels = 0;
    std::vector<std::array<std::uint8_t, 3>> palette; // PLTE entries when paletted
};

// Decode with minimal transforms: paletted stays index data (expanded to 8-bit),
// everything else is read at its native channel layout.
inline DecodedPng decode_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw FileNotFound("cannot open " + path);

    std::uint8_t sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw DecodeError(path + ": not a PNG file");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_exception,
                                   png_warning_ignore);
    if (!r.png) throw DecodeError("png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw DecodeError("png_create_info_struct failed");

    png_init_io(r.png, fp.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    DecodedPng out;
    out.width = static_cast<int>(png_get_image_width(r.png, r.info));
    out.height = static_cast<int>(png_get_image_height(r.png, r.info));
    out.bit_depth = png_get_bit_depth(r.png, r.info);
    out.color_type = png_get_color_type(r.png, r.info);

    if (out.color_type == PNG_COLOR_TYPE_PALETTE) {
        if (out.bit_depth < 8) png_set_packing(r.png); // expand 1/2/4-bit indices to bytes
        png_colorp plte = nullptr;
        int n = 0;
        if (png_get_PLTE(r.png, r.info, &plte, &n) != PNG_INFO_PLTE)
            throw DecodeError(path + ": paletted PNG without PLTE chunk");
        out.palette.resize(n);
        for (int i = 0; i < n; ++i) out.palette[i] = {plte[i].red, plte[i].green, plte[i].blue};
    }

    png_read_update_info(r.png, r.info);
    out.channels = png_get_channels(r.png, r.info);

    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    out.rows.resize(rowbytes * out.height);
    std::vector<png_bytep> row_ptrs(out.height);
    for (int y = 0; y < out.height; ++y) row_ptrs[y] = out.rows.data() + y * rowbytes;
    png_read_image(r.png, row_ptrs.data());
    png_read_end(r.png, nullptr);
    return out;
}

} // namespace detail

/// Decodes an 8-bit RGB or RGBA PNG; alpha is discarded.
inline ImageRGB load_image(const std::string& path) {
    auto dec = detail::decode_png(path);
    if (dec.bit_depth != 8)
        throw UnsupportedFormat(path + ": bit depth " + std::to_string(dec.bit_depth) +
                                " (only 8-bit supported)");
    if (dec.color_type != PNG_COLOR_TYPE_RGB && dec.color_type != PNG_COLOR_TYPE_RGB_ALPHA)
        throw UnsupportedFormat(path + ": only RGB/RGBA PNGs are accepted as images");

    ImageRGB img(dec.height, dec.width);
    const int ch = dec.channels;
    for (std::size_t i = 0; i < img.pixels(); ++i) {
        img.data[i * 3 + 0] = dec.rows[i * ch + 0];
        img.data[i * 3 + 1] = dec.rows[i * ch + 1];
        img.data[i * 3 + 2] = dec.rows[i * ch + 2];
    }
    return img;
}

/// Writes an 8-bit RGB PNG (used by the viz renderers).
inline void save_image(const ImageRGB& img, const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw EncodeError("cannot open " + path + " for writing");

    detail::PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_write_error_to_exception,
                                    detail::png_warning_ignore);
    if (!w.png) throw EncodeError("png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw EncodeError("png_create_info_struct failed");

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(img.at(y, 0)));
    png_write_end(w.png, nullptr);
}

/// Writes a label mask as an indexed-color PNG carrying the VOC palette.
inline void save_mask_png(const LabelMask& mask, const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw EncodeError("cannot open " + path + " for writing");

    detail::PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_write_error_to_exception,
                                    detail::png_warning_ignore);
    if (!w.png) throw EncodeError("png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw EncodeError("png_create_info_struct failed");

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, mask.width, mask.height, 8, PNG_COLOR_TYPE_PALETTE,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    const auto& pal = voc_palette();
    std::array<png_color, 256> plte;
    for (int i = 0; i < 256; ++i) plte[i] = {pal[i][0], pal[i][1], pal[i][2]};
    png_set_PLTE(w.png, w.info, plte.data(), 256);

    png_write_info(w.png, w.info);
    for (int y = 0; y < mask.height; ++y)
        png_write_row(w.png, const_cast<png_bytep>(mask.data.data() +
                                                   static_cast<std::size_t>(y) * mask.width));
    png_write_end(w.png, nullptr);
}

/// Loads an indexed-color mask PNG, checking the palette against the VOC table.
inline LabelMask load_mask_png(const std::string& path) {
    auto dec = detail::decode_png(path);
    if (dec.color_type != PNG_COLOR_TYPE_PALETTE)
        throw PaletteMismatch(path + ": mask PNGs must be indexed-color");
    if (dec.bit_depth > 8)
        throw UnsupportedFormat(path + ": bit depth " + std::to_string(dec.bit_depth));

    const auto& pal = voc_palette();
    for (std::size_t i = 0; i < dec.palette.size(); ++i) {
        if (dec.palette[i] != pal[i])
            throw PaletteMismatch(path + ": palette entry " + std::to_string(i) +
                                  " differs from the VOC colormap");
    }

    LabelMask mask(dec.height, dec.width);
    const std::size_t rowbytes = dec.rows.size() / dec.height;
    for (int y = 0; y < dec.height; ++y)
        for (int x = 0; x < dec.width; ++x) {
            std::uint8_t idx = dec.rows[y * rowbytes + x];
            if (idx >= dec.palette.size() && idx != LabelMask::ignore_value)
                throw DecodeError(path + ": pixel index beyond palette");
            mask.at(y, x) = idx;
        }
    return mask;
}

} // namespace cuekit
