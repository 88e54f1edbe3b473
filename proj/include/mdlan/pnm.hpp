#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace mdlan {

/// 8-bit PGM (P5) / PPM (P6) image, row-major, channels interleaved.
struct PnmImage {
    long h = 0;
    long w = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;
};

namespace detail {

inline int pnm_read_token(std::istream& in, const std::filesystem::path& path) {
    // skips whitespace and '#' comments between header fields
    int ch = in.get();
    while (in) {
        if (ch == '#') {
            while (in && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
            continue;
        } else {
            break;
        }
        ch = in.get();
    }
    if (!in || !std::isdigit(ch))
        throw std::runtime_error("pnm: malformed header in " + path.string());
    long value = 0;
    while (in && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1'000'000'000)
            throw std::runtime_error("pnm: implausible header value in " + path.string());
        ch = in.get();
    }
    if (in) in.unget();
    return static_cast<int>(value);
}

}  // namespace detail

inline PnmImage read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pnm: cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
        throw std::runtime_error("pnm: unsupported format in " + path.string() +
                                 " (expected binary P5 or P6)");
    PnmImage img;
    img.channels = magic[1] == '5' ? 1 : 3;
    img.w = detail::pnm_read_token(in, path);
    img.h = detail::pnm_read_token(in, path);
    const int maxval = detail::pnm_read_token(in, path);
    if (img.w < 1 || img.h < 1) throw std::runtime_error("pnm: empty image in " + path.string());
    if (maxval < 1 || maxval > 255)
        throw std::runtime_error("pnm: only 8-bit images supported, maxval=" +
                                 std::to_string(maxval) + " in " + path.string());
    in.get();  // single whitespace before the binary payload
    const std::size_t count = static_cast<std::size_t>(img.w) * static_cast<std::size_t>(img.h) *
                              static_cast<std::size_t>(img.channels);
    img.data.resize(count);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(count));
    if (!in) throw std::runtime_error("pnm: truncated payload in " + path.string());
    return img;
}

inline void write_pnm(const std::filesystem::path& path, long h, long w, int channels,
                      std::span<const std::uint8_t> data) {
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("pnm: channels must be 1 or 3");
    const std::size_t count =
        static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(channels);
    if (data.size() != count) throw std::invalid_argument("pnm: payload size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pnm: cannot open " + path.string());
    out << (channels == 1 ? "P5\n" : "P6\n") << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(count));
    if (!out) throw std::runtime_error("pnm: write failed for " + path.string());
}

}  // namespace mdlan
