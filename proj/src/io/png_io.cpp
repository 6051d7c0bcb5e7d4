#include "lsplat/io/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace lsplat {

double linear_to_srgb(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double srgb_to_linear(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

unsigned char quantize(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_png_impl(const std::string& path, int width, int height, int channels,
                    const std::vector<unsigned char>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("png: cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: write struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png: info struct allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png: encode failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<unsigned char*>(
                               bytes.data() + static_cast<size_t>(y) * width * channels));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<unsigned char> read_png_impl(const std::string& path, int want_channels,
                                         int* width, int* height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("png: cannot open for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: read struct allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png: info struct allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png: decode failed: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (want_channels == 3) png_set_gray_to_rgb(png);
    else png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * want_channels);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, bytes.data() + static_cast<size_t>(y) * w * want_channels, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    *width = w;
    *height = h;
    return bytes;
}

}  // namespace

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<double>& linear_rgb) {
    if (static_cast<size_t>(width) * height * 3 != linear_rgb.size()) {
        throw std::invalid_argument("write_png_rgb: size mismatch");
    }
    std::vector<unsigned char> bytes(linear_rgb.size());
    for (size_t i = 0; i < linear_rgb.size(); ++i) bytes[i] = quantize(linear_to_srgb(linear_rgb[i]));
    write_png_impl(path, width, height, 3, bytes);
}

Image read_png_rgb(const std::string& path) {
    Image img;
    const auto bytes = read_png_impl(path, 3, &img.width, &img.height);
    img.rgb.resize(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i) img.rgb[i] = srgb_to_linear(bytes[i] / 255.0);
    return img;
}

void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<double>& values) {
    if (static_cast<size_t>(width) * height != values.size()) {
        throw std::invalid_argument("write_png_gray: size mismatch");
    }
    std::vector<unsigned char> bytes(values.size());
    for (size_t i = 0; i < values.size(); ++i) bytes[i] = quantize(values[i]);
    write_png_impl(path, width, height, 1, bytes);
}

std::vector<double> read_png_gray(const std::string& path, int* width, int* height) {
    const auto bytes = read_png_impl(path, 1, width, height);
    std::vector<double> values(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i) values[i] = bytes[i] / 255.0;
    return values;
}

}  // namespace lsplat
