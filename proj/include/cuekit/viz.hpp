#pragma once

#include "cuekit/felzenszwalb.hpp"
#include "cuekit/png_io.hpp"
#include "cuekit/types.hpp"

namespace cuekit {

/// Renders a label mask to RGB through the VOC palette.
inline ImageRGB mask_to_rgb(const LabelMask& mask) {
    ImageRGB out(mask.height, mask.width);
    const auto& pal = voc_palette();
    for (std::size_t i = 0; i < mask.pixels(); ++i) {
        const auto& c = pal[mask.data[i]];
        out.data[i * 3] = c[0];
        out.data[i * 3 + 1] = c[1];
        out.data[i * 3 + 2] = c[2];
    }
    return out;
}

/// Renders one cue channel: set pixels in the channel's palette color.
inline ImageRGB cue_channel_to_rgb(const CueSet& cues, int channel) {
    if (channel < 0 || channel >= cues.classes)
        throw ClassOutOfRange("viz: cue channel out of range");
    ImageRGB out(cues.height, cues.width);
    const auto& color = voc_palette()[channel == 0 ? 255 : channel];
    const auto plane = cues.channel(channel);
    for (std::size_t i = 0; i < plane.size(); ++i)
        if (plane[i]) {
            out.data[i * 3] = color[0];
            out.data[i * 3 + 1] = color[1];
            out.data[i * 3 + 2] = color[2];
        }
    return out;
}

/// Copies the image and paints segment boundaries (4-neighbor id changes).
inline ImageRGB superpixel_overlay(const ImageRGB& img, const SuperPixelLabeling& sp) {
    require_same_grid(img.height, img.width, sp.height, sp.width, "superpixel_overlay");
    ImageRGB out = img;
    for (int y = 0; y < sp.height; ++y)
        for (int x = 0; x < sp.width; ++x) {
            const std::int32_t id = sp.at(y, x);
            const bool edge = (x + 1 < sp.width && sp.at(y, x + 1) != id) ||
                              (y + 1 < sp.height && sp.at(y + 1, x) != id);
            if (edge) {
                auto* p = out.at(y, x);
                p[0] = 255;
                p[1] = 255;
                p[2] = 0;
            }
        }
    return out;
}

} // namespace cuekit
