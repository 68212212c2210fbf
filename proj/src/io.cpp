#include "mapflow/io.hpp"

#include "mapflow/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace mapflow {

namespace {

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return __builtin_bswap32(v);
}

void write_u32(std::ofstream& f, std::uint32_t v) {
    const std::uint32_t le = to_le(v);
    f.write(reinterpret_cast<const char*>(&le), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return to_le(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for reading: " + path.string());
    return f;
}

// Skips PNM whitespace and '#' comment lines, then parses one integer.
int read_pnm_int(std::ifstream& f) {
    int c = f.get();
    while (c == '#' || std::isspace(c)) {
        if (c == '#')
            while (c != '\n' && c != EOF) c = f.get();
        c = f.get();
    }
    int v = 0;
    bool any = false;
    while (std::isdigit(c)) {
        v = v * 10 + (c - '0');
        any = true;
        c = f.get();
    }
    if (!any) throw ConfigError("malformed PNM header");
    return v;
}

} // namespace

void write_tsr(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream f = open_out(path);
    f.write("TSR1", 4);
    write_u32(f, static_cast<std::uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) write_u32(f, static_cast<std::uint32_t>(t.extent(d)));
    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(t.data()), t.size() * 4);
    } else {
        for (std::int64_t i = 0; i < t.size(); ++i) {
            std::uint32_t bits;
            std::memcpy(&bits, t.data() + i, 4);
            const std::uint32_t le = to_le(bits);
            f.write(reinterpret_cast<const char*>(&le), 4);
        }
    }
    if (!f) throw ConfigError("write failed: " + path.string());
}

Tensor read_tsr(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TSR1", 4) != 0)
        throw ConfigError("not a TSR1 file: " + path.string());
    const std::uint32_t rank = read_u32(f);
    if (rank < 1 || rank > 4) throw ConfigError("TSR1 rank out of range: " + path.string());
    std::vector<int> shape(rank);
    std::int64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
        shape[d] = static_cast<int>(read_u32(f));
        if (shape[d] < 1) throw ConfigError("TSR1 bad extent: " + path.string());
        n *= shape[d];
    }
    Tensor t(shape);
    if constexpr (std::endian::native == std::endian::little) {
        f.read(reinterpret_cast<char*>(t.data()), n * 4);
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            const std::uint32_t bits = read_u32(f);
            std::memcpy(t.data() + i, &bits, 4);
        }
    }
    if (!f) throw ConfigError("truncated TSR1 file: " + path.string());
    return t;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
    std::ofstream f = open_out(path);
    f << "P5\n" << labels.width << " " << labels.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(labels.labels.data()),
            static_cast<std::streamsize>(labels.labels.size()));
    if (!f) throw ConfigError("write failed: " + path.string());
}

LabelMap read_pgm_labels(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    char p, five;
    f.get(p);
    f.get(five);
    if (p != 'P' || five != '5') throw ConfigError("not a binary PGM: " + path.string());
    const int w = read_pnm_int(f);
    const int h = read_pnm_int(f);
    const int maxval = read_pnm_int(f);
    if (maxval != 255) throw ConfigError("unsupported PGM maxval: " + path.string());
    LabelMap m(h, w);
    f.read(reinterpret_cast<char*>(m.labels.data()), static_cast<std::streamsize>(m.labels.size()));
    if (!f) throw ConfigError("truncated PGM: " + path.string());
    return m;
}

void write_pgm_gray(const std::filesystem::path& path, const Tensor& field) {
    if (field.rank() != 3 || field.extent(2) != 1)
        throw std::invalid_argument("write_pgm_gray: expected H x W x 1");
    const int h = field.extent(0), w = field.extent(1);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w);
    for (std::int64_t i = 0; i < field.size(); ++i) {
        const float v = std::clamp(field[i], 0.0f, 1.0f);
        bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    std::ofstream f = open_out(path);
    f << "P5\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ConfigError("write failed: " + path.string());
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
    if (image.rank() != 3 || image.extent(2) != 3)
        throw std::invalid_argument("write_ppm: expected H x W x 3");
    const int h = image.extent(0), w = image.extent(1);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w * 3);
    for (std::int64_t i = 0; i < image.size(); ++i) {
        const float v = std::clamp(image[i], 0.0f, 1.0f);
        bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    std::ofstream f = open_out(path);
    f << "P6\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ConfigError("write failed: " + path.string());
}

Tensor read_ppm(const std::filesystem::path& path) {
    std::ifstream f = open_in(path);
    char p, six;
    f.get(p);
    f.get(six);
    if (p != 'P' || six != '6') throw ConfigError("not a binary PPM: " + path.string());
    const int w = read_pnm_int(f);
    const int h = read_pnm_int(f);
    const int maxval = read_pnm_int(f);
    if (maxval != 255) throw ConfigError("unsupported PPM maxval: " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w * 3);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ConfigError("truncated PPM: " + path.string());
    Tensor img({h, w, 3});
    for (std::int64_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<float>(bytes[static_cast<std::size_t>(i)]) / 255.0f;
    return img;
}

} // namespace mapflow
