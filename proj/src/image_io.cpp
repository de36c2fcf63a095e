#include "simret/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <vector>

#include "simret/error.hpp"

namespace simret {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

void check_depth_hint(int actual, std::optional<int> hint, const std::string& path) {
    if (hint && *hint != actual)
        throw DataError(path + ": sample depth " + std::to_string(actual) +
                        " does not match requested " + std::to_string(*hint));
}

GrayRaster load_png(const std::string& path, std::optional<int> hint) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw DataError(path + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             nullptr, nullptr);
    if (!png) throw InternalError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw InternalError("png_create_info_struct failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> data;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": PNG decode error");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    int depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);
    if (w == 0 || h == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": zero-dimension image");
    }

    // Normalize to either GRAY 8/16 or RGB 8.
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);
    color = png_get_color_type(png, info);

    const bool rgb = (color == PNG_COLOR_TYPE_RGB);
    if (!rgb && color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": unsupported PNG color type");
    }
    if (rgb && depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path + ": only 8-bit RGB PNG is supported");
    }

    const int channels = rgb ? 3 : 1;
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = data.data() + y * rowbytes;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    check_depth_hint(depth, hint, path);

    GrayRaster out(static_cast<int>(w), static_cast<int>(h), file_stem(path));
    const float maxv = (depth == 16) ? 65535.0f : 255.0f;
    for (png_uint_32 y = 0; y < h; ++y) {
        const png_byte* row = data.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < w; ++x) {
            float v;
            if (rgb) {
                const png_byte* p = row + 3 * x;
                v = (p[0] + p[1] + p[2]) / 3.0f;
            } else if (depth == 16) {
                // PNG stores 16-bit samples big-endian.
                v = static_cast<float>((row[2 * x] << 8) | row[2 * x + 1]);
            } else {
                v = row[x * channels];
            }
            out.at(static_cast<int>(x), static_cast<int>(y)) = v / maxv;
        }
    }
    return out;
}

int pgm_token(std::FILE* f) {
    // Skips whitespace and '#' comments, then parses a decimal integer.
    int c = std::fgetc(f);
    for (;;) {
        while (c != EOF && std::isspace(c)) c = std::fgetc(f);
        if (c == '#') {
            while (c != EOF && c != '\n') c = std::fgetc(f);
            continue;
        }
        break;
    }
    if (c == EOF || !std::isdigit(c)) return -1;
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = std::fgetc(f);
    }
    return v;
}

GrayRaster load_pgm(const std::string& path, std::optional<int> hint) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DataError("cannot open " + path);
    char magic[2];
    if (std::fread(magic, 1, 2, fp.get()) != 2 || magic[0] != 'P' || magic[1] != '5')
        throw DataError(path + ": not a binary PGM (P5) file");
    const int w = pgm_token(fp.get());
    const int h = pgm_token(fp.get());
    const int maxval = pgm_token(fp.get());
    if (w <= 0 || h <= 0)
        throw DataError(path + ": zero-dimension image");
    if (maxval <= 0 || maxval > 65535)
        throw DataError(path + ": bad PGM maxval");
    check_depth_hint(maxval > 255 ? 16 : 8, hint, path);

    const std::size_t n = static_cast<std::size_t>(w) * h;
    GrayRaster out(w, h, file_stem(path));
    if (maxval > 255) {
        // 16-bit PGM samples are big-endian.
        std::vector<unsigned char> buf(n * 2);
        if (std::fread(buf.data(), 1, buf.size(), fp.get()) != buf.size())
            throw DataError(path + ": truncated PGM pixel data");
        for (std::size_t i = 0; i < n; ++i)
            out.pixels[i] = static_cast<float>((buf[2 * i] << 8) | buf[2 * i + 1]) / maxval;
    } else {
        std::vector<unsigned char> buf(n);
        if (std::fread(buf.data(), 1, buf.size(), fp.get()) != buf.size())
            throw DataError(path + ": truncated PGM pixel data");
        for (std::size_t i = 0; i < n; ++i)
            out.pixels[i] = static_cast<float>(buf[i]) / maxval;
    }
    return out;
}

unsigned quantize(float v, unsigned maxv) {
    const long q = std::lround(static_cast<double>(v) * maxv);
    return static_cast<unsigned>(std::clamp<long>(q, 0, maxv));
}

}  // namespace

bool is_supported_raster(const std::string& path) {
    const std::string e = lower_ext(path);
    return e == ".png" || e == ".pgm";
}

std::string file_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

GrayRaster load_raster(const std::string& path, std::optional<int> hint) {
    const std::string e = lower_ext(path);
    if (e == ".png") return load_png(path, hint);
    if (e == ".pgm") return load_pgm(path, hint);
    throw DataError(path + ": unsupported raster format (PNG and PGM only)");
}

void save_pgm(const GrayRaster& r, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("save_pgm: bit depth must be 8 or 16");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write " + path);
    const unsigned maxv = (bit_depth == 16) ? 65535u : 255u;
    std::fprintf(fp.get(), "P5\n%d %d\n%u\n", r.width, r.height, maxv);
    if (bit_depth == 16) {
        std::vector<unsigned char> buf(r.size() * 2);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const unsigned q = quantize(r.pixels[i], maxv);
            buf[2 * i] = static_cast<unsigned char>(q >> 8);
            buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
        std::fwrite(buf.data(), 1, buf.size(), fp.get());
    } else {
        std::vector<unsigned char> buf(r.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            buf[i] = static_cast<unsigned char>(quantize(r.pixels[i], maxv));
        std::fwrite(buf.data(), 1, buf.size(), fp.get());
    }
}

namespace {

void save_png_impl(const std::string& path, int w, int h, int color_type,
                   int depth, const std::vector<unsigned char>& bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DataError("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) throw InternalError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw InternalError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError(path + ": PNG encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + y * rowbytes);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png_gray(const GrayRaster& r, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("save_png_gray: bit depth must be 8 or 16");
    const unsigned maxv = (bit_depth == 16) ? 65535u : 255u;
    if (bit_depth == 16) {
        std::vector<unsigned char> buf(r.size() * 2);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const unsigned q = quantize(r.pixels[i], maxv);
            buf[2 * i] = static_cast<unsigned char>(q >> 8);
            buf[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
        save_png_impl(path, r.width, r.height, PNG_COLOR_TYPE_GRAY, 16, buf);
    } else {
        std::vector<unsigned char> buf(r.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            buf[i] = static_cast<unsigned char>(quantize(r.pixels[i], maxv));
        save_png_impl(path, r.width, r.height, PNG_COLOR_TYPE_GRAY, 8, buf);
    }
}

void save_png_rgb(const GrayRaster& red, const GrayRaster& green,
                  const GrayRaster& blue, const std::string& path) {
    if (red.width != green.width || red.width != blue.width ||
        red.height != green.height || red.height != blue.height)
        throw std::invalid_argument("save_png_rgb: channel dimensions differ");
    std::vector<unsigned char> buf(red.size() * 3);
    for (std::size_t i = 0; i < red.size(); ++i) {
        buf[3 * i + 0] = static_cast<unsigned char>(quantize(red.pixels[i], 255));
        buf[3 * i + 1] = static_cast<unsigned char>(quantize(green.pixels[i], 255));
        buf[3 * i + 2] = static_cast<unsigned char>(quantize(blue.pixels[i], 255));
    }
    save_png_impl(path, red.width, red.height, PNG_COLOR_TYPE_RGB, 8, buf);
}

}  // namespace simret
