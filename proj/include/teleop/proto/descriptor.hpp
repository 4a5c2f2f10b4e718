#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "teleop/types.hpp"
#include "teleop/xml.hpp"

namespace teleop::proto {

struct MethodArg {
  std::string name;
  std::string type;
  bool operator==(const MethodArg&) const = default;
};

struct Method {
  std::string name;
  std::vector<MethodArg> args;
  bool operator==(const Method&) const = default;
};

/// XML description shipped inside a module package.
struct ModuleDescriptor {
  std::string name;
  std::string version;
  std::vector<Variant> variants;  // sorted, unique, non-empty
  std::vector<Method> methods;
  bool degradable = false;
  std::string unit_name = "unit";
  int max_units = 1;
  int default_units = 1;

  bool has_variant(Variant v) const;
  bool operator==(const ModuleDescriptor&) const = default;
};

/// Strict parse of a <module> document. Unknown elements or attributes,
/// missing required ones and duplicate method names are rejected with the
/// element and line in the message.
ModuleDescriptor parse_descriptor(std::string_view xml_text);
ModuleDescriptor parse_descriptor(const xml::Element& module);

void write_descriptor(xml::Writer& writer, const ModuleDescriptor& descriptor);
std::string descriptor_xml(const ModuleDescriptor& descriptor);

/// Throws Error(validation) when a descriptor built in code breaks the
/// invariants the parser enforces.
void check_descriptor(const ModuleDescriptor& descriptor);

}  // namespace teleop::proto
