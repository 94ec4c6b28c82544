// Plain byte images: planar RGB frames and binary lane masks.
#pragma once

#include <cstdint>
#include <vector>

namespace lanenum {

// Planar, channel-major storage (channel c occupies a contiguous h*w block),
// matching the dataset file layout.
struct ImageU8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int h, int w, int c, std::uint8_t fill = 0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::uint8_t& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    std::uint8_t at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    bool operator==(const ImageU8&) const = default;
};

// Binary mask, values are exactly 0 or 255.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t positive_count() const {
        std::size_t k = 0;
        for (const auto v : data) k += (v != 0);
        return k;
    }
    bool operator==(const Mask&) const = default;
};

}  // namespace lanenum
