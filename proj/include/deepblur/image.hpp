#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepblur {

// H x W x C raster, row-major, channel-interleaved, intensities in [0, 1].
// The unit scale is the only one used internally; the 0..255 byte scale
// exists solely at the PNG boundary.
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    double& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

// File-level failures: missing input, unwritable output, broken stream.
struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// PNG flavors outside the supported set (8-bit gray or RGB, no alpha).
struct ImageFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument unless every element is finite and in [0, 1].
void validate_image(const ImageTensor& img);

// 8-bit grayscale or RGB PNG only; byte v maps to v/255 exactly.
// Alpha channels, palettes and 16-bit depth are rejected with ImageFormatError.
ImageTensor load_image(const std::filesystem::path& path);

// Writes round(v * 255) per element, half away from zero.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

// In-memory PNG codec used by the wire protocol; same format rules as above.
std::vector<unsigned char> encode_png(const ImageTensor& img);
ImageTensor decode_png(const unsigned char* bytes, std::size_t len);

// Central largest-square crop followed by bilinear resize to size x size.
// Odd margins lean toward the top-left. size must be >= 8 and <= min(H, W).
ImageTensor center_crop_resize(const ImageTensor& img, int size);

}  // namespace deepblur
