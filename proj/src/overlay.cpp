#include "lanenum/overlay.hpp"

#include <fstream>

#include "lanenum/common.hpp"

namespace lanenum {
namespace {

// 5x7 digits 0..4, one byte per row, low 5 bits used, msb-left.
constexpr std::uint8_t kGlyphs[5][7] = {
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
    {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
};

constexpr int kGlyphX = 4, kGlyphY = 4;
constexpr std::uint8_t kPurple[3] = {160, 32, 240};

}  // namespace

ImageU8 render_overlay(const ImageU8& image, const Mask& mask, int label) {
    if (label < 0 || label > 4) throw DataError("overlay label must be 0..4");
    if (image.height != mask.height || image.width != mask.width)
        throw DataError("overlay image and mask sizes differ");

    ImageU8 out = image;
    const std::size_t plane = static_cast<std::size_t>(out.height) * out.width;
    for (std::size_t i = 0; i < plane; ++i) {
        if (!mask.data[i]) continue;
        out.data[i] = static_cast<std::uint8_t>(out.data[i] / 2);
        out.data[plane + i] = static_cast<std::uint8_t>(out.data[plane + i] / 2 + 127);
        out.data[2 * plane + i] = static_cast<std::uint8_t>(out.data[2 * plane + i] / 2);
    }
    for (int gy = 0; gy < 7; ++gy)
        for (int gx = 0; gx < 5; ++gx) {
            if (!(kGlyphs[label][gy] & (0x10 >> gx))) continue;
            const int y = kGlyphY + gy, x = kGlyphX + gx;
            if (y >= out.height || x >= out.width) continue;
            for (int c = 0; c < 3; ++c)
                out.data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * out.width + x] =
                    kPurple[c];
        }
    return out;
}

void write_ppm(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 3) throw DataError("PPM output needs a 3-channel image");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    std::string row(static_cast<std::size_t>(img.width) * 3, '\0');
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<char>(img.data[static_cast<std::size_t>(c) * plane +
                                               static_cast<std::size_t>(y) * img.width + x]);
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw DataError("write failed for " + path.string());
}

ImageU8 read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P6") throw DataError("not a P6 PPM: " + path.string());
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval != 255) throw DataError("bad PPM header");
    in.get();  // single whitespace before the raster

    ImageU8 img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.data.resize(static_cast<std::size_t>(3) * w * h);
    std::string raster(static_cast<std::size_t>(3) * w * h, '\0');
    in.read(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (in.gcount() != static_cast<std::streamsize>(raster.size()))
        throw DataError("PPM raster truncated");
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.data[static_cast<std::size_t>(c) * plane + static_cast<std::size_t>(y) * w + x] =
                    static_cast<std::uint8_t>(
                        raster[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)]);
    return img;
}

}  // namespace lanenum
