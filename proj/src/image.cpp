#include "mrecnn/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mrecnn/error.hpp"

namespace mrecnn {

namespace {

// skips whitespace and '#' comment lines between header tokens
int next_header_int(std::istream& in, const std::string& path) {
    while (true) {
        const int c = in.peek();
        if (c == EOF) throw DataError("\"" + path + "\": truncated PNM header");
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw DataError("\"" + path + "\": malformed PNM header");
    return value;
}

} // namespace

ImageBuffer read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image \"" + path + "\"");

    char p = 0, kind = 0;
    in.get(p);
    in.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6')) {
        throw DataError("\"" + path + "\": not a binary PGM/PPM file");
    }
    ImageBuffer img;
    img.channels = kind == '5' ? 1 : 3;
    img.width = next_header_int(in, path);
    img.height = next_header_int(in, path);
    const int maxval = next_header_int(in, path);
    if (img.width < 1 || img.height < 1) throw DataError("\"" + path + "\": bad image extents");
    if (maxval != 255) throw DataError("\"" + path + "\": only maxval 255 is supported");
    in.get(); // single whitespace byte after maxval

    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
        throw DataError("\"" + path + "\": truncated pixel payload");
    }
    return img;
}

void write_pnm(const ImageBuffer& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3) {
        throw DataError("image must have 1 or 3 channels to write \"" + path + "\"");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw DataError("write to \"" + path + "\" failed");
}

Tensor to_tensor(const ImageBuffer& img, const std::array<float, 3>& mean) {
    if (img.channels != 1 && img.channels != 3) {
        throw DataError("to_tensor expects 1 or 3 channels, got " + std::to_string(img.channels));
    }
    Tensor t({1, 3, img.height, img.width});
    for (int c = 0; c < 3; ++c) {
        const int src_c = img.channels == 1 ? 0 : c;
        float* dst = t.data() + static_cast<std::size_t>(c) * img.height * img.width;
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                dst[static_cast<std::size_t>(y) * img.width + x] =
                    static_cast<float>(img.at(x, y, src_c)) / 255.0f - mean[c];
            }
        }
    }
    return t;
}

ImageBuffer from_tensor(const Tensor& t, const std::array<float, 3>& mean) {
    if (t.rank() != 4 || t.extent(0) != 1 || t.extent(1) != 3) {
        throw std::invalid_argument("from_tensor expects a 1x3xHxW tensor, got " +
                                    shape_str(t.shape()));
    }
    const int h = t.extent(2), w = t.extent(3);
    ImageBuffer img(w, h, 3);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const float v = (t.at4(0, c, y, x) + mean[c]) * 255.0f;
                img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return img;
}

} // namespace mrecnn
