#include "logmosaic/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "logmosaic/error.hpp"

#ifdef LOGMOSAIC_HAVE_PNG
#include <png.h>
#endif

namespace logmosaic {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
    throw Error(ErrorCode::io_error, path.string() + ": " + why);
}

std::uint8_t to_u8(double v) {
    return std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
}

// Skips PGM whitespace and '#' comment lines, then parses one decimal field.
int read_pgm_int(std::istream& in) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF || !std::isdigit(ch)) return -1;
    int value = 0;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1 << 20) return -1;
        ch = in.get();
    }
    if (ch != EOF && !std::isspace(ch)) return -1;
    return value;
}

}  // namespace

Raster read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') fail(path, "not a binary PGM (P5)");

    const int width = read_pgm_int(in);
    const int height = read_pgm_int(in);
    const int maxval = read_pgm_int(in);
    if (width <= 0 || height <= 0) fail(path, "bad dimensions");
    if (maxval <= 0 || maxval > 255) fail(path, "only 8-bit PGM is supported");

    std::vector<std::uint8_t> bytes(std::size_t(width) * height);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (std::size_t(in.gcount()) != bytes.size()) fail(path, "truncated pixel data");

    return Raster::from_u8(width, height, bytes.data());
}

void write_pgm(const Raster& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");

    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<std::uint8_t> row(std::size_t(img.width()));
    for (int y = 0; y < img.height(); ++y) {
        const double* src = img.row(y);
        for (int x = 0; x < img.width(); ++x) row[std::size_t(x)] = to_u8(src[x]);
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!out) fail(path, "write failed");
}

bool png_supported() {
#ifdef LOGMOSAIC_HAVE_PNG
    return true;
#else
    return false;
#endif
}

#ifdef LOGMOSAIC_HAVE_PNG

Raster read_png(const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "rb");
    if (!fp) fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "libpng initialization failed");
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "libpng decode error");
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail(path, "bad dimensions");
    }

    // Normalize every layout to 8-bit RGB so one luminance pass suffices.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    std::vector<double> samples(std::size_t(width) * height);
    for (png_uint_32 y = 0; y < height; ++y) {
        const std::uint8_t* row = pixels.data() + stride * y;
        for (png_uint_32 x = 0; x < width; ++x) {
            const double r = row[3 * x + 0];
            const double g = row[3 * x + 1];
            const double b = row[3 * x + 2];
            samples[std::size_t(y) * width + x] = 0.299 * r + 0.587 * g + 0.114 * b;
        }
    }
    return Raster(int(width), int(height), std::move(samples));
}

void write_png(const Raster& img, const std::filesystem::path& path) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) fail(path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail(path, "libpng initialization failed");
    }

    std::vector<std::uint8_t> bytes(std::size_t(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        const double* src = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            bytes[std::size_t(y) * img.width() + x] = to_u8(src[x]);
        }
    }
    std::vector<png_bytep> rows(std::size_t(img.height()));
    for (int y = 0; y < img.height(); ++y) {
        rows[std::size_t(y)] = bytes.data() + std::size_t(y) * img.width();
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail(path, "libpng encode error");
    }

    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width()), png_uint_32(img.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

#else

Raster read_png(const std::filesystem::path& path) {
    fail(path, "built without PNG support");
}

void write_png(const Raster&, const std::filesystem::path& path) {
    fail(path, "built without PNG support");
}

#endif

Raster read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    unsigned char head[8] = {};
    in.read(reinterpret_cast<char*>(head), 8);
    in.close();

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::equal(std::begin(png_sig), std::end(png_sig), head)) return read_png(path);
    if (head[0] == 'P' && head[1] == '5') return read_pgm(path);
    fail(path, "unrecognized image format");
}

void write_image(const Raster& img, const std::filesystem::path& path) {
    if (path.extension() == ".png") {
        write_png(img, path);
    } else {
        write_pgm(img, path);
    }
}

RegionMask read_mask(const std::filesystem::path& path) {
    const Raster img = read_image(path);
    std::vector<std::uint8_t> valid(std::size_t(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            valid[std::size_t(y) * img.width() + x] = img.at(x, y) > 0.0 ? 1 : 0;
        }
    }
    return RegionMask(img.width(), img.height(), std::move(valid));
}

void write_mask(const RegionMask& mask, const std::filesystem::path& path) {
    Raster img(mask.width(), mask.height(), 0.0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.valid(x, y)) img.at(x, y) = 255.0;
        }
    }
    write_image(img, path);
}

}  // namespace logmosaic
