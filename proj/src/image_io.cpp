#include "fcid/image_io.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

// jpeglib.h needs size_t/FILE declared first.
#include <jpeglib.h>

#include "fcid/error.hpp"

namespace fcid {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
    if (!f) throw Error("cannot open '" + path.string() + "'");
    return f;
}

RgbImage read_png(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw Error("cannot decode PNG '" + path.string() + "': " + img.message);

    const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
    img.format = PNG_FORMAT_RGB;
    if (img.width < 1 || img.height < 1) {
        png_image_free(&img);
        throw Error("empty PNG '" + path.string() + "'");
    }
    RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr))
        throw Error("cannot decode PNG '" + path.string() + "': " + img.message);
    out.from_grayscale = gray;
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

RgbImage read_jpeg(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;

    // Everything touched after setjmp lives outside this frame's locals that
    // longjmp could clobber.
    auto out = std::make_unique<RgbImage>();
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw Error("cannot decode JPEG '" + path.string() + "': " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    const bool gray = cinfo.num_components == 1;
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    out->width = static_cast<int>(cinfo.output_width);
    out->height = static_cast<int>(cinfo.output_height);
    out->pixels.resize(static_cast<std::size_t>(out->width) * out->height);
    out->from_grayscale = gray;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = reinterpret_cast<JSAMPROW>(
            out->pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out->width);
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    if (out->width < 1 || out->height < 1) throw Error("empty JPEG '" + path.string() + "'");
    return std::move(*out);
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
    std::array<unsigned char, 8> sig{};
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open '" + path.string() + "'");
        in.read(reinterpret_cast<char*>(sig.data()), sig.size());
        if (in.gcount() < 3) throw Error("unrecognized image format '" + path.string() + "'");
    }
    static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed");
    if (png_sig_cmp(sig.data(), 0, sig.size()) == 0) return read_png(path);
    if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return read_jpeg(path);
    throw Error("unrecognized image format '" + path.string() + "'");
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr))
        throw Error("cannot write PNG '" + path.string() + "': " + img.message);
}

}  // namespace fcid
