#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vlpr/imaging.hpp"

namespace vlpr::imaging {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!token.empty()) break;
        } else {
            token.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return token;
}

int parse_dim(const std::string& token, const std::string& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(token, &used);
        if (used == token.size() && v >= 1) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::Format, path + ": bad PGM header field '" + token + "'");
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, path + ": cannot open for reading");
    }
    if (pgm_token(in) != "P5") {
        fail(ErrorCode::Format, path + ": not a binary PGM (P5) file");
    }
    const int w = parse_dim(pgm_token(in), path);
    const int h = parse_dim(pgm_token(in), path);
    const int maxval = parse_dim(pgm_token(in), path);
    if (maxval != 255) {
        fail(ErrorCode::Format, path + ": only maxval 255 is supported");
    }
    std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size())) {
        fail(ErrorCode::Format, path + ": truncated PGM payload");
    }
    return GrayImage(w, h, std::move(data));
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::Io, path + ": cannot open for writing");
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data()),
              static_cast<std::streamsize>(img.size()));
    if (!out) {
        fail(ErrorCode::Io, path + ": write failed");
    }
}

GrayImage read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::Format, path + ": " + msg);
    }
    // libpng applies the sRGB-to-luma conversion when the source is colour.
    image.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::Format, path + ": " + msg);
    }
    return GrayImage(static_cast<int>(image.width), static_cast<int>(image.height),
                     std::move(data));
}

void write_png(const GrayImage& img, const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorCode::Io, path + ": " + msg);
    }
}

GrayImage read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::Io, path + ": cannot open for reading");
    }
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), sizeof sig);
    if (in.gcount() >= 2 && sig[0] == 'P' && sig[1] == '5') {
        return read_pgm(path);
    }
    if (in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0) {
        return read_png(path);
    }
    fail(ErrorCode::Format, path + ": unrecognized image format");
}

void write_image(const GrayImage& img, const std::string& path) {
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".png") {
        write_png(img, path);
    } else {
        write_pgm(img, path);
    }
}

}  // namespace vlpr::imaging
