// Minimal image loading (PPM/PGM) and the canonical backbone preprocessing:
// resize shorter side, center-crop, scale to [0,1], channel-normalize.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dve/errors.hpp"

namespace dve {

// Interleaved 8-bit pixels, `channels` in {1, 3}.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

// Reads P2/P3 (ascii) and P5/P6 (binary) netpbm files.
Image read_pnm(const std::string& path);
Image decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& origin);

// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& src, int out_width, int out_height);

Image center_crop(const Image& src, int size);

struct PreprocessConfig {
    int resize_shorter = 256;
    int crop = 224;
    // ImageNet channel statistics, the pretraining recipe of the visual backbone.
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> stddev{0.229, 0.224, 0.225};
};

// Full recipe; returns CHW float data of shape [3, crop, crop]. Grayscale
// inputs are replicated across channels.
std::vector<float> preprocess_for_backbone(const Image& image, const PreprocessConfig& config);

}  // namespace dve
