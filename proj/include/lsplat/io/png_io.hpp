#pragma once

#include <string>
#include <vector>

namespace lsplat {

/// Linear-light image, interleaved RGB in [0,1].
struct Image {
    int width = 0, height = 0;
    std::vector<double> rgb;
};

double linear_to_srgb(double c);
double srgb_to_linear(double c);

/// 8-bit sRGB PNG out; conversion from linear happens at this boundary.
void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<double>& linear_rgb);
Image read_png_rgb(const std::string& path);

/// 8-bit grayscale, values taken as-is in [0,1] (masks, alpha maps).
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<double>& values);
std::vector<double> read_png_gray(const std::string& path, int* width, int* height);

}  // namespace lsplat
