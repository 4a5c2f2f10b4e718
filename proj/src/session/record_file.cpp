#include "teleop/session/record_file.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop::session {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void io_failure(const std::string& what, const std::filesystem::path& path) {
  throw Error(Errc::store, what + " '" + path.string() + "': " + std::strerror(errno));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("cannot create", tmp);
  std::size_t written = 0;
  while (written < content.size()) {
    const ssize_t n = ::write(fd, content.data() + written, content.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_failure("cannot write", tmp);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_failure("cannot sync", tmp);
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) io_failure("cannot replace", path);
}

std::string serialize_records(std::string_view format, json meta, const std::vector<json>& records) {
  json header;
  header["format"] = format;
  header["version"] = 1;
  for (auto& [k, v] : meta.items()) header[k] = v;
  header["records"] = records.size();
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::optional<RecordFile> read_records(const std::filesystem::path& path, std::string_view format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    throw Error(Errc::store, "cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.empty()) return std::nullopt;

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string::npos) {
      // Unterminated final line: the write was cut short.
      const auto index = lines.size();
      throw Error(Errc::store, path.string() + ": " +
                                   (index == 0 ? std::string("header") : "record " + std::to_string(index)) +
                                   " truncated");
    }
    lines.emplace_back(text.data() + start, nl - start);
    start = nl + 1;
  }

  RecordFile file;
  try {
    file.header = json::parse(lines.front());
  } catch (const json::parse_error& e) {
    throw Error(Errc::store, path.string() + ": header corrupt: " + e.what());
  }
  if (!file.header.is_object() || file.header.value("format", "") != format || !file.header.contains("records") ||
      !file.header["records"].is_number_unsigned()) {
    throw Error(Errc::store, path.string() + ": header is not a '" + std::string(format) + "' header");
  }
  const auto expected = file.header["records"].get<std::size_t>();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      file.records.push_back(json::parse(lines[i]));
    } catch (const json::parse_error& e) {
      throw Error(Errc::store, path.string() + ": record " + std::to_string(i) + " corrupt: " + e.what());
    }
  }
  if (file.records.size() != expected) {
    throw Error(Errc::store, path.string() + ": record " + std::to_string(file.records.size() + 1) +
                                 " missing (header announces " + std::to_string(expected) + ")");
  }
  return file;
}

}  // namespace teleop::session
