#include "dve/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace dve {

namespace {

// Skips whitespace and '#' comments between header tokens.
std::size_t next_token(const std::vector<std::uint8_t>& bytes, std::size_t pos, std::string& token) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    token.clear();
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        token.push_back(static_cast<char>(bytes[pos]));
        ++pos;
    }
    return pos;
}

int parse_header_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                     const std::string& origin) {
    std::string token;
    pos = next_token(bytes, pos, token);
    if (token.empty()) {
        throw ImageDecodeError(origin + ": truncated netpbm header");
    }
    try {
        return std::stoi(token);
    } catch (const std::exception&) {
        throw ImageDecodeError(origin + ": bad header token '" + token + "'");
    }
}

}  // namespace

Image decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < 2 || bytes[0] != 'P') {
        throw ImageDecodeError(origin + ": not a netpbm image");
    }
    const char kind = static_cast<char>(bytes[1]);
    const bool ascii = (kind == '2' || kind == '3');
    const bool binary = (kind == '5' || kind == '6');
    if (!ascii && !binary) {
        throw ImageDecodeError(origin + ": unsupported netpbm variant P" + std::string(1, kind));
    }
    const int channels = (kind == '3' || kind == '6') ? 3 : 1;

    std::size_t pos = 2;
    Image img;
    img.width = parse_header_int(bytes, pos, origin);
    img.height = parse_header_int(bytes, pos, origin);
    const int maxval = parse_header_int(bytes, pos, origin);
    if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255) {
        throw ImageDecodeError(origin + ": unsupported netpbm geometry or maxval");
    }
    img.channels = channels;
    const std::size_t count = img.pixel_count() * static_cast<std::size_t>(channels);
    img.pixels.resize(count);

    if (binary) {
        ++pos;  // single whitespace after maxval
        if (bytes.size() - pos < count) {
            throw ImageDecodeError(origin + ": truncated pixel data");
        }
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), count, img.pixels.begin());
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = parse_header_int(bytes, pos, origin);
            if (v < 0 || v > maxval) {
                throw ImageDecodeError(origin + ": sample out of range");
            }
            img.pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return img;
}

Image read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageDecodeError(path + ": cannot open image");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_pnm(bytes, path);
}

Image resize_bilinear(const Image& src, int out_width, int out_height) {
    if (src.width <= 0 || src.height <= 0) {
        throw ImageDecodeError("resize_bilinear: empty source image");
    }
    Image dst;
    dst.width = out_width;
    dst.height = out_height;
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<std::size_t>(out_width) * out_height * src.channels);

    const double sx = static_cast<double>(src.width) / out_width;
    const double sy = static_cast<double>(src.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        // Pixel-center alignment: src = (dst + 0.5) * scale - 0.5.
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < src.channels; ++c) {
                auto at = [&](int px, int py) {
                    return static_cast<double>(
                        src.pixels[(static_cast<std::size_t>(py) * src.width + px) * src.channels +
                                   c]);
                };
                const double top = at(x0, y0) * (1.0 - wx) + at(x1, y0) * wx;
                const double bottom = at(x0, y1) * (1.0 - wx) + at(x1, y1) * wx;
                const double v = top * (1.0 - wy) + bottom * wy;
                dst.pixels[(static_cast<std::size_t>(y) * out_width + x) * src.channels + c] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return dst;
}

Image center_crop(const Image& src, int size) {
    if (src.width < size || src.height < size) {
        throw ImageDecodeError("center_crop: image smaller than crop size");
    }
    const int x0 = (src.width - size) / 2;
    const int y0 = (src.height - size) / 2;
    Image dst;
    dst.width = size;
    dst.height = size;
    dst.channels = src.channels;
    dst.pixels.resize(static_cast<std::size_t>(size) * size * src.channels);
    for (int y = 0; y < size; ++y) {
        const auto* row =
            &src.pixels[(static_cast<std::size_t>(y0 + y) * src.width + x0) * src.channels];
        std::copy_n(row, static_cast<std::size_t>(size) * src.channels,
                    &dst.pixels[static_cast<std::size_t>(y) * size * src.channels]);
    }
    return dst;
}

std::vector<float> preprocess_for_backbone(const Image& image, const PreprocessConfig& config) {
    if (image.channels != 1 && image.channels != 3) {
        throw ImageDecodeError("preprocess: expected 1 or 3 channels, got " +
                               std::to_string(image.channels));
    }
    // Resize so the shorter side hits the target, preserving aspect ratio.
    const int shorter = std::min(image.width, image.height);
    const double scale = static_cast<double>(config.resize_shorter) / shorter;
    const int rw = std::max(config.resize_shorter,
                            static_cast<int>(std::lround(image.width * scale)));
    const int rh = std::max(config.resize_shorter,
                            static_cast<int>(std::lround(image.height * scale)));
    Image resized = resize_bilinear(image, rw, rh);
    Image cropped = center_crop(resized, config.crop);

    const std::size_t plane = static_cast<std::size_t>(config.crop) * config.crop;
    std::vector<float> out(3 * plane);
    for (int y = 0; y < config.crop; ++y) {
        for (int x = 0; x < config.crop; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * config.crop + x;
            for (int c = 0; c < 3; ++c) {
                const int sc = cropped.channels == 1 ? 0 : c;
                const double raw =
                    cropped.pixels[p * cropped.channels + static_cast<std::size_t>(sc)] / 255.0;
                out[static_cast<std::size_t>(c) * plane + p] =
                    static_cast<float>((raw - config.mean[c]) / config.stddev[c]);
            }
        }
    }
    return out;
}

}  // namespace dve
