#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace teleop {

enum class Errc {
  schema,
  size,
  protocol,
  version,
  duplicate,
  limit,
  session,
  not_found,
  ownership,
  delivery,
  busy,
  store,
  conflict,
  variant,
  capability,
  range,
  composition,
  compatibility,
  validation,
  unreachable,
  setup,
};

std::string_view to_string(Errc code);

/// Single exception type for every failure surfaced by the library; `code()`
/// is the stable discriminator, `what()` is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace teleop
