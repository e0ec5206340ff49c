#include "motionforge/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

namespace motionforge::imaging {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& file, const char* what) {
    throw std::runtime_error(std::string(what) + ": " + file.string());
}

// Decodes any PNG into interleaved 8-bit samples with `channels` output
// channels (3 = RGB). Row-major, top to bottom.
std::vector<std::uint8_t> decode_png(const std::filesystem::path& file,
                                     int& width, int& height, int out_channels) {
    FilePtr fp(std::fopen(file.string().c_str(), "rb"));
    if (!fp) fail(file, "cannot open PNG");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(file, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(file, "libpng init failed");
    }
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(file, "corrupt PNG");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);  // palette -> rgb, gray<8 -> 8, tRNS -> alpha
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_color_type(png, info) & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const auto color_type = png_get_color_type(png, info);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int src_channels = png_get_channels(png, info);
    if (width < 1 || height < 1 || src_channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(file, "unsupported PNG layout");
    }

    pixels.resize(static_cast<std::size_t>(width) * height * 3);
    rows.resize(height);
    for (int y = 0; y < height; ++y) {
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (out_channels == 3) return pixels;
    // Mask path: keep channel 0 only.
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = pixels[i * 3];
    return gray;
}

void encode_png(const std::filesystem::path& file, const std::uint8_t* data,
                int width, int height, int channels) {
    FilePtr fp(std::fopen(file.string().c_str(), "wb"));
    if (!fp) fail(file, "cannot write PNG");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(file, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(file, "libpng init failed");
    }
    std::vector<png_const_bytep> rows(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(file, "PNG write failed");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        rows[y] = data + static_cast<std::size_t>(y) * width * channels;
    }
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& file) {
    int w = 0, h = 0;
    auto data = decode_png(file, w, h, 3);
    ImageBuffer img(w, h);
    img.data = std::move(data);
    return img;
}

void write_png(const std::filesystem::path& file, const ImageBuffer& image) {
    encode_png(file, image.data.data(), image.width, image.height, 3);
}

MaskBuffer read_mask_png(const std::filesystem::path& file) {
    int w = 0, h = 0;
    auto data = decode_png(file, w, h, 1);
    MaskBuffer mask(w, h);
    for (std::size_t i = 0; i < data.size(); ++i) {
        mask.data[i] = data[i] >= 128 ? 255 : 0;
    }
    return mask;
}

void write_mask_png(const std::filesystem::path& file, const MaskBuffer& mask) {
    encode_png(file, mask.data.data(), mask.width, mask.height, 1);
}

}  // namespace motionforge::imaging
