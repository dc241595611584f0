#include "deepblur/latent_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>

namespace deepblur {

namespace {

constexpr char kMagic[4] = {'D', 'B', 'L', 'T'};

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<unsigned char> latent_to_bytes(const LatentCode& w) {
    if (w.rows < 1 || w.cols < 1 ||
        w.v.size() != static_cast<std::size_t>(w.rows) * w.cols)
        throw std::invalid_argument("latent file: malformed latent");
    std::vector<unsigned char> out;
    out.reserve(14 + 8 * w.v.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kLatentFileVersion);
    put_u32(out, static_cast<std::uint32_t>(w.rows));
    put_u32(out, static_cast<std::uint32_t>(w.cols));
    for (double x : w.v) {
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        for (int i = 0; i < 8; ++i)
            out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xFF));
    }
    return out;
}

LatentCode latent_from_bytes(const unsigned char* bytes, std::size_t len) {
    if (len < 4 || std::memcmp(bytes, kMagic, 4) != 0)
        throw LatentFileError(LatentFileErrorCode::bad_magic, "latent file: bad magic");
    if (len < 14)
        throw LatentFileError(LatentFileErrorCode::truncated_payload,
                              "latent file: truncated header");
    const std::uint16_t version = get_u16(bytes + 4);
    if (version != kLatentFileVersion)
        throw LatentFileError(LatentFileErrorCode::version_mismatch,
                              "latent file: version " + std::to_string(version) +
                                  " not supported");
    const std::uint32_t rows = get_u32(bytes + 6);
    const std::uint32_t cols = get_u32(bytes + 10);
    const std::size_t expected = 14 + 8 * static_cast<std::size_t>(rows) * cols;
    if (len < expected)
        throw LatentFileError(LatentFileErrorCode::truncated_payload,
                              "latent file: truncated payload");
    if (len > expected)
        throw LatentFileError(LatentFileErrorCode::trailing_bytes,
                              "latent file: unexpected trailing bytes");

    LatentCode w(static_cast<int>(rows), static_cast<int>(cols));
    const unsigned char* p = bytes + 14;
    for (std::size_t i = 0; i < w.v.size(); ++i, p += 8) {
        std::uint64_t bits = 0;
        for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(p[j]) << (8 * j);
        w.v[i] = std::bit_cast<double>(bits);
    }
    return w;
}

void write_latent_file(const LatentCode& w, const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = latent_to_bytes(w);
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f)
        throw LatentFileError(LatentFileErrorCode::io,
                              "latent file: cannot open for writing: " + path.string());
    const std::size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
    if (std::fclose(f) != 0 || written != bytes.size())
        throw LatentFileError(LatentFileErrorCode::io, "latent file: short write");
}

LatentCode read_latent_file(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f)
        throw LatentFileError(LatentFileErrorCode::io,
                              "latent file: cannot open: " + path.string());
    std::vector<unsigned char> bytes;
    unsigned char buf[65536];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    std::fclose(f);
    return latent_from_bytes(bytes.data(), bytes.size());
}

}  // namespace deepblur
