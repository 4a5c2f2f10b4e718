#pragma once

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/wire/messages.hpp"

namespace teleop::wire {

inline constexpr std::size_t kMaxFrameBytes = 16u * 1024u * 1024u;
inline constexpr std::size_t kHeaderBytes = 4;

using Bytes = std::vector<std::uint8_t>;

/// 4-byte big-endian length followed by canonical JSON. Throws
/// Error(schema) when the body does not match msg_type, Error(size) above
/// 16 MiB.
Bytes encode_frame(const Envelope& msg);

struct DecodeResult {
  std::optional<Envelope> envelope;  // empty: need more bytes
  std::size_t consumed = 0;

  bool need_more() const { return !envelope.has_value(); }
};

/// Decodes one frame from the front of `bytes`. A partial frame yields
/// need_more() with zero bytes consumed.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Canonical JSON text without the length prefix (message transports).
std::string encode_payload(const Envelope& msg);
Envelope decode_payload(std::string_view json_text);

// Canonical JSON fragments shared with persistence.
nlohmann::ordered_json to_json(const WorldSnapshot& snapshot);
WorldSnapshot snapshot_from_json(const nlohmann::ordered_json& j, const std::string& path = "snapshot");
nlohmann::ordered_json to_json(const ShareableObject& object);
ShareableObject object_from_json(const nlohmann::ordered_json& j, const std::string& path = "object");

}  // namespace teleop::wire
