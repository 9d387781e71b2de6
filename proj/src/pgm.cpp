#include "msnn/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "msnn/error.hpp"

namespace msnn {

namespace {

// next whitespace-delimited token, skipping '#' comment lines
std::string next_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int parse_int(const std::string& tok, const std::string& path) {
    if (tok.empty()) throw IoError("'" + path + "': truncated header");
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw IoError("'" + path + "': malformed header token '" + tok + "'");
    return std::stoi(tok);
}

} // namespace

PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    if (next_token(in) != "P5") throw IoError("'" + path + "': not a binary PGM (P5)");
    PgmImage img;
    img.width = parse_int(next_token(in), path);
    img.height = parse_int(next_token(in), path);
    const int maxval = parse_int(next_token(in), path);
    if (img.width < 1 || img.height < 1) throw IoError("'" + path + "': bad dimensions");
    if (maxval < 1 || maxval > 255) throw IoError("'" + path + "': unsupported maxval");
    // the token reader consumed exactly one whitespace byte after maxval

    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw IoError("'" + path + "': truncated pixel data");
    return img;
}

void write_pgm(const std::string& path, const PgmImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write failed on '" + path + "'");
}

RescaledMap rescale_to_bytes(const Tensor2& map) {
    RescaledMap out;
    out.image.width = map.cols;
    out.image.height = map.rows;
    out.image.pixels.resize(map.v.size());
    const auto [lo_it, hi_it] = std::minmax_element(map.v.begin(), map.v.end());
    out.lo = *lo_it;
    out.hi = *hi_it;
    if (out.hi - out.lo < 1e-300) {
        std::fill(out.image.pixels.begin(), out.image.pixels.end(), std::uint8_t{128});
        return out;
    }
    const double scale = 255.0 / (out.hi - out.lo);
    for (std::size_t i = 0; i < map.v.size(); ++i)
        out.image.pixels[i] =
            static_cast<std::uint8_t>(std::lround((map.v[i] - out.lo) * scale));
    return out;
}

} // namespace msnn
