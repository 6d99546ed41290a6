#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sqakit::io {

std::string read_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, std::string_view content);

/// Writes via a temp file in the same directory followed by a rename, so a
/// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::ordered_json>& rows);

std::string iso8601_utc_now();

std::string sha256_hex(std::string_view data);

uint64_t fnv1a64(std::string_view data);

} // namespace sqakit::io
