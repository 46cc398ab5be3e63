#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dgcn {

std::vector<std::string_view> split_whitespace(std::string_view line);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text);

/// 64-bit FNV-1a, stable across platforms and runs.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Minimal CSV table: header row plus string cells. No quoting; cells must
/// not contain commas or newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  // throws lookup_error
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dgcn
