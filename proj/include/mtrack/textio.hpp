#pragma once

#include "mtrack/common.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace mtrack::textio {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
double parse_double(std::string_view text);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

// "key = value" lines, one per entry, sorted by key.
void write_manifest(const std::filesystem::path& path, const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> read_manifest(const std::filesystem::path& path);

/// SHA-1 of "blob <size>\0<content>", i.e. what `git hash-object` prints.
std::string git_blob_sha1(std::string_view content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

} // namespace mtrack::textio
