#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "teleop/proto/descriptor.hpp"
#include "teleop/proto/registry.hpp"

namespace teleop::proto {

struct AppModule {
  ModuleDescriptor descriptor;  // full copy taken at compose time
  Variant variant = Variant::classic;
  int requested_units = 1;
  bool operator==(const AppModule&) const = default;
};

/// The composed application consumed by the core at startup.
struct AppSpec {
  std::string name;
  Platform platform = Platform::web;
  std::vector<std::pair<std::string, std::string>> options;
  std::vector<AppModule> modules;
  std::vector<std::string> degradation_priority;

  const AppModule* find(std::string_view module) const;
  bool operator==(const AppSpec&) const = default;
};

/// One user pick. Without units the descriptor's default_units is used.
struct Selection {
  std::string name;
  Variant variant = Variant::classic;
  std::optional<int> units;
};

/// Parses "name:VARIANT[:units]".
Selection parse_selection(std::string_view text);

struct ComposeRequest {
  std::string app_name = "app";
  Platform platform = Platform::web;
  std::vector<Selection> selection;
  std::vector<std::pair<std::string, std::string>> options;
  /// Empty means degradable modules in selection order.
  std::vector<std::string> degradation_priority;
};

/// Builds the AppSpec from registered descriptors. Unknown names, repeated
/// picks and out-of-range units throw Error(composition); a variant the
/// module lacks throws Error(variant); a non-MOBILE pick for the MOBILE
/// platform throws Error(compatibility).
AppSpec compose(const ModuleRegistry& registry, const ComposeRequest& request);

/// compose() followed by canonical emission.
std::string compose_app(const ModuleRegistry& registry, const ComposeRequest& request);

std::string app_xml(const AppSpec& spec);
AppSpec parse_app(std::string_view xml_text);
AppSpec load_app(const std::string& path);

/// Every invariant violation found, in a stable order. Empty when valid.
std::vector<std::string> validate_app(const AppSpec& spec);

}  // namespace teleop::proto
