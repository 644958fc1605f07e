#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "goalcomp/tensor.hpp"

namespace goalcomp {

// Binary 8-bit grayscale PGM (P5). Pixel values are expected in [0,1] and
// mapped to round(255·x), clamped.
inline void write_pgm(const std::string& path, const Tensor& image) {
    require(image.rows() >= 1 && image.cols() >= 1, "write_pgm: empty image");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    for (std::size_t r = 0; r < image.rows(); ++r) {
        for (std::size_t c = 0; c < image.cols(); ++c) {
            const double v = std::clamp(image(r, c), 0.0, 1.0);
            const auto byte = static_cast<std::uint8_t>(std::lround(255.0 * v));
            out.put(static_cast<char>(byte));
        }
    }
    out.flush();
    if (!out) throw std::runtime_error(path + ": write failed");
}

// Reshapes a flat length-(rows·cols) vector into an image tensor.
inline Tensor as_image(const Tensor& flat, std::size_t rows, std::size_t cols) {
    require(flat.size() == rows * cols, "as_image: size does not match raster shape");
    Tensor img(rows, cols);
    for (std::size_t i = 0; i < flat.size(); ++i) img.values()[i] = flat.values()[i];
    return img;
}

}  // namespace goalcomp
