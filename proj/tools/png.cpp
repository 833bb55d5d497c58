#include "cli.hpp"

#include <png.h>

#include "cesagan/error.hpp"

namespace cesagan::cli {

Rgb tile_color(Tile tile) noexcept {
    switch (tile) {
        case Tile::Wall: return {60, 60, 68};
        case Tile::Empty: return {232, 222, 196};
        case Tile::Key: return {242, 196, 36};
        case Tile::Door: return {136, 78, 32};
        case Tile::Enemy1: return {214, 48, 48};
        case Tile::Enemy2: return {150, 60, 200};
        case Tile::Enemy3: return {240, 128, 24};
        case Tile::Avatar: return {40, 112, 230};
    }
    return {0, 0, 0};
}

void write_png(const std::filesystem::path& path, const LevelGrid& grid, unsigned scale) {
    const std::size_t w = grid.width() * scale;
    const std::size_t h = grid.height() * scale;
    std::vector<unsigned char> pixels(w * h * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const Rgb c = tile_color(grid.at(y / scale, x / scale));
            unsigned char* p = &pixels[(y * w + x) * 3];
            p[0] = c.r;
            p[1] = c.g;
            p[2] = c.b;
        }
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot write PNG " + path.string() + ": " + msg);
    }
}

}  // namespace cesagan::cli
