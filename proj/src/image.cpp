#include "deepblur/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace deepblur {

void validate_image(const ImageTensor& img) {
    if (img.height < 1 || img.width < 1 || (img.channels != 1 && img.channels != 3))
        throw std::invalid_argument("image: bad shape");
    if (img.data.size() != static_cast<std::size_t>(img.height) * img.width * img.channels)
        throw std::invalid_argument("image: data size does not match shape");
    for (double v : img.data)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::invalid_argument("image: element outside [0, 1]");
}

namespace {

struct PngReadCtx {
    const unsigned char* bytes;
    std::size_t len;
    std::size_t pos;
};

void mem_read(png_structp png, png_bytep out, png_size_t n) {
    auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
    if (ctx->pos + n > ctx->len) {
        png_error(png, "unexpected end of PNG stream");
        return;
    }
    std::memcpy(out, ctx->bytes + ctx->pos, n);
    ctx->pos += n;
}

void mem_write(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void mem_flush(png_structp) {}

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

ImageTensor read_png_stream(PngReadCtx& ctx) {
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw ImageIoError("png: failed to allocate read struct");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw ImageIoError("png: failed to allocate info struct");

    if (setjmp(png_jmpbuf(r.png)))
        throw ImageIoError("png: corrupt or truncated stream");

    png_set_read_fn(r.png, &ctx, mem_read);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);

    if (depth != 8)
        throw ImageFormatError("png: unsupported bit depth " + std::to_string(depth) +
                               " (only 8-bit supported)");
    if (color == PNG_COLOR_TYPE_PALETTE)
        throw ImageFormatError("png: palette color mode not supported");
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        png_get_valid(r.png, r.info, PNG_INFO_tRNS))
        throw ImageFormatError("png: alpha channel not supported");
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)
        throw ImageFormatError("png: unsupported color mode");

    png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);

    const int channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    std::vector<unsigned char> raw(static_cast<std::size_t>(h) * w * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    ImageTensor img(static_cast<int>(h), static_cast<int>(w), channels);
    for (std::size_t i = 0; i < raw.size(); ++i)
        img.data[i] = raw[i] / 255.0;
    return img;
}

std::vector<unsigned char> write_png_stream(const ImageTensor& img) {
    validate_image(img);

    std::vector<unsigned char> out;
    PngWriter wtr;
    wtr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!wtr.png) throw ImageIoError("png: failed to allocate write struct");
    wtr.info = png_create_info_struct(wtr.png);
    if (!wtr.info) throw ImageIoError("png: failed to allocate info struct");

    if (setjmp(png_jmpbuf(wtr.png)))
        throw ImageIoError("png: write failure");

    png_set_write_fn(wtr.png, &out, mem_write, mem_flush);
    const int color = (img.channels == 1) ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(wtr.png, wtr.info, img.width, img.height, 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wtr.png, wtr.info);

    std::vector<unsigned char> raw(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        double q = std::floor(img.data[i] * 255.0 + 0.5);
        if (q < 0.0) q = 0.0;
        if (q > 255.0) q = 255.0;
        raw[i] = static_cast<unsigned char>(q);
    }
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = raw.data() + static_cast<std::size_t>(y) * img.width * img.channels;
    png_write_image(wtr.png, rows.data());
    png_write_end(wtr.png, nullptr);
    return out;
}

}  // namespace

ImageTensor decode_png(const unsigned char* bytes, std::size_t len) {
    PngReadCtx ctx{bytes, len, 0};
    return read_png_stream(ctx);
}

std::vector<unsigned char> encode_png(const ImageTensor& img) { return write_png_stream(img); }

ImageTensor load_image(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) throw ImageIoError("cannot open file: " + path.string());
    std::vector<unsigned char> bytes;
    unsigned char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0)
        bytes.insert(bytes.end(), buf, buf + n);
    std::fclose(f);
    return decode_png(bytes.data(), bytes.size());
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = encode_png(img);
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw ImageIoError("cannot open file for writing: " + path.string());
    const std::size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
    if (std::fclose(f) != 0 || written != bytes.size())
        throw ImageIoError("short write: " + path.string());
}

ImageTensor center_crop_resize(const ImageTensor& img, int size) {
    validate_image(img);
    if (size < 8) throw std::invalid_argument("center_crop_resize: size must be >= 8");
    const int side = std::min(img.height, img.width);
    if (size > side)
        throw std::invalid_argument("center_crop_resize: size exceeds cropped side");

    const int top = (img.height - side) / 2;   // integer division: ties go top-left
    const int left = (img.width - side) / 2;

    ImageTensor out(size, size, img.channels);
    const double scale = static_cast<double>(side) / size;
    for (int y = 0; y < size; ++y) {
        double sy = (y + 0.5) * scale - 0.5;
        if (sy < 0.0) sy = 0.0;
        if (sy > side - 1) sy = side - 1;
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, side - 1);
        const double fy = sy - y0;
        for (int x = 0; x < size; ++x) {
            double sx = (x + 0.5) * scale - 0.5;
            if (sx < 0.0) sx = 0.0;
            if (sx > side - 1) sx = side - 1;
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, side - 1);
            const double fx = sx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double v00 = img.at(top + y0, left + x0, c);
                const double v01 = img.at(top + y0, left + x1, c);
                const double v10 = img.at(top + y1, left + x0, c);
                const double v11 = img.at(top + y1, left + x1, c);
                const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                                 fy * ((1 - fx) * v10 + fx * v11);
                out.at(y, x, c) = v;
            }
        }
    }
    return out;
}

}  // namespace deepblur
