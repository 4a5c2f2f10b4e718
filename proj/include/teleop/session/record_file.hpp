#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace teleop::session {

/// Replaces `path` with `content` via a sibling temp file, fsync and
/// rename. On failure the previous file is left as it was.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Line-structured store file: one header object naming the format and the
/// record count, then exactly that many newline-terminated JSON records.
struct RecordFile {
  nlohmann::ordered_json header;
  std::vector<nlohmann::ordered_json> records;
};

std::string serialize_records(std::string_view format, nlohmann::ordered_json meta,
                              const std::vector<nlohmann::ordered_json>& records);

/// Empty optional when the file is missing or zero-length. Truncated or
/// corrupt content throws Error(store) naming the first bad record.
std::optional<RecordFile> read_records(const std::filesystem::path& path, std::string_view format);

}  // namespace teleop::session
