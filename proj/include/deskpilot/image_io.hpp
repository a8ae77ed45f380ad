#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "deskpilot/image.hpp"

namespace deskpilot {

// Binary PPM (P6), the 8-bit RGB frame format used for all frame dumps.
inline void write_ppm(const ImageU8& img, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_ppm: cannot open " + path);
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (!f) throw std::runtime_error("write_ppm: short write to " + path);
}

inline ImageU8 read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_ppm: cannot open " + path);
    std::string magic;
    f >> magic;
    if (magic != "P6") throw std::runtime_error("read_ppm: " + path + " is not binary PPM");
    auto next_int = [&]() {
        // skip whitespace and '#' comments
        int ch = f.peek();
        while (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '#') {
            if (ch == '#') {
                std::string line;
                std::getline(f, line);
            } else {
                f.get();
            }
            ch = f.peek();
        }
        int v = 0;
        f >> v;
        return v;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (w <= 0 || h <= 0 || maxval != 255)
        throw std::runtime_error("read_ppm: unsupported header in " + path);
    f.get();  // single whitespace after maxval
    ImageU8 img(w, h);
    f.read(reinterpret_cast<char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw std::runtime_error("read_ppm: truncated pixel data in " + path);
    return img;
}

// Grayscale PGM (P5), used for activation-map dumps.
inline void write_pgm(const std::vector<std::uint8_t>& gray, int w, int h,
                      const std::string& path) {
    if (static_cast<std::size_t>(w) * h != gray.size())
        throw std::invalid_argument("write_pgm: size mismatch");
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
}

}  // namespace deskpilot
