#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vlmplan::util {

// --- string helpers ---

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// --- hashing / encoding ---

// SHA-256 of the input bytes as a lowercase hex string.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view encoded);

// --- filesystem ---

// Reads the whole file in binary mode. Throws std::runtime_error naming the
// path on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// --- image sniffing ---

bool has_png_magic(std::string_view bytes);
bool has_jpeg_magic(std::string_view bytes);

// Media type ("png" or "jpeg") inferred from the file extension; empty string
// when the extension is not a supported image type.
std::string media_type_from_extension(const std::filesystem::path& path);

// RFC 3339 UTC timestamp for the current time, e.g. "2024-05-01T12:00:00Z".
std::string utc_timestamp();

}  // namespace vlmplan::util
