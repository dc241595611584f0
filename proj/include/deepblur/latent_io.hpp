#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "deepblur/generator.hpp"

namespace deepblur {

// Binary latent container: magic "DBLT", u16 version (= 1), u32 rows, u32
// cols, then rows*cols float64, all little-endian, row-major. Total length is
// exactly 14 + 8*rows*cols bytes.
inline constexpr std::uint16_t kLatentFileVersion = 1;

enum class LatentFileErrorCode { io, bad_magic, version_mismatch, truncated_payload, trailing_bytes };

struct LatentFileError : std::runtime_error {
    LatentFileErrorCode code;
    LatentFileError(LatentFileErrorCode c, const std::string& msg)
        : std::runtime_error(msg), code(c) {}
};

std::vector<unsigned char> latent_to_bytes(const LatentCode& w);
LatentCode latent_from_bytes(const unsigned char* bytes, std::size_t len);

void write_latent_file(const LatentCode& w, const std::filesystem::path& path);
LatentCode read_latent_file(const std::filesystem::path& path);

}  // namespace deepblur
