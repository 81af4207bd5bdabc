#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace chiploop {

using ordered_json = nlohmann::ordered_json;

// Append-only JSONL sink. Each record is one compact line, flushed on write so
// an interrupted run leaves a readable prefix. Safe for concurrent writers.
class JsonlWriter {
 public:
  /// Truncates any existing file at `path`.
  explicit JsonlWriter(const std::filesystem::path& path);

  void write(const ordered_json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace chiploop
