#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace imblab {

// Shortest decimal form that parses back to the same double. Keeps text
// outputs stable across reruns.
std::string format_double(double v);

double parse_double(const std::string& s, const std::filesystem::path& path,
                    std::size_t line_no);
std::size_t parse_size(const std::string& s, const std::filesystem::path& path,
                       std::size_t line_no);
int parse_int(const std::string& s, const std::filesystem::path& path,
              std::size_t line_no);

std::vector<std::string> split_csv_line(const std::string& line);

// Writes to a sibling temp file and renames over the target, so readers never
// observe a half-written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

// FNV-1a 64-bit, hex-encoded; used to stamp reports with a config fingerprint.
std::uint64_t fnv1a(std::string_view s);
std::string fnv1a_hex(std::string_view s);

}  // namespace imblab
