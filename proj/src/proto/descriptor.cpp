#include "teleop/proto/descriptor.hpp"

#include <algorithm>
#include <set>

#include "teleop/error.hpp"

namespace teleop::proto {

namespace {

bool valid_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

int units_attribute(xml::StrictElement& e, std::string_view key) {
  const std::int64_t v = e.required_integer(key);
  if (v < 0 || v > 1'000'000) e.fail("attribute '" + std::string(key) + "' out of range");
  return static_cast<int>(v);
}

std::string identifier_attribute(xml::StrictElement& e, std::string_view key) {
  std::string v = e.required(key);
  if (!valid_identifier(v)) e.fail("attribute '" + std::string(key) + "' is not an identifier: '" + v + "'");
  return v;
}

}  // namespace

bool ModuleDescriptor::has_variant(Variant v) const {
  return std::find(variants.begin(), variants.end(), v) != variants.end();
}

void check_descriptor(const ModuleDescriptor& d) {
  if (!valid_identifier(d.name)) throw Error(Errc::validation, "invalid module name '" + d.name + "'");
  if (d.version.empty()) throw Error(Errc::validation, "module '" + d.name + "' has no version");
  if (d.variants.empty()) throw Error(Errc::validation, "module '" + d.name + "' declares no variant");
  if (!std::is_sorted(d.variants.begin(), d.variants.end()) ||
      std::adjacent_find(d.variants.begin(), d.variants.end()) != d.variants.end()) {
    throw Error(Errc::validation, "module '" + d.name + "' variants must be sorted and unique");
  }
  std::set<std::string> names;
  for (const auto& m : d.methods) {
    if (!names.insert(m.name).second) {
      throw Error(Errc::validation, "module '" + d.name + "' declares method '" + m.name + "' twice");
    }
  }
  if (d.max_units < 1 || d.default_units < 0 || d.default_units > d.max_units) {
    throw Error(Errc::validation, "module '" + d.name + "' needs 0 <= default_units <= max_units, max_units >= 1");
  }
}

ModuleDescriptor parse_descriptor(const xml::Element& root) {
  if (root.name != "module") {
    throw Error(Errc::schema, "line " + std::to_string(root.line) + ": expected <module>, found <" + root.name + ">");
  }
  xml::StrictElement module(root);
  ModuleDescriptor d;
  d.name = identifier_attribute(module, "name");
  d.version = module.required("version");
  if (d.version.empty()) module.fail("attribute 'version' is empty");

  const xml::Element& variants_el = module.required_child("variants");
  xml::StrictElement variants(variants_el);
  for (const auto* v : variants.children("variant")) {
    xml::StrictElement ve(*v);
    const std::string text = ve.required("name");
    Variant variant;
    try {
      variant = parse_variant(text);
    } catch (const Error&) {
      ve.fail("unknown variant '" + text + "'");
    }
    if (d.has_variant(variant)) ve.fail("variant '" + text + "' listed twice");
    d.variants.push_back(variant);
    ve.finish();
  }
  if (d.variants.empty()) variants.fail("at least one <variant> is required");
  variants.finish();
  std::sort(d.variants.begin(), d.variants.end());

  if (const auto* methods_el = module.optional_child("methods")) {
    xml::StrictElement methods(*methods_el);
    std::set<std::string> seen;
    for (const auto* m : methods.children("method")) {
      xml::StrictElement me(*m);
      Method method;
      method.name = identifier_attribute(me, "name");
      if (!seen.insert(method.name).second) {
        throw Error(Errc::validation, "line " + std::to_string(m->line) + ": duplicate method '" + method.name + "'");
      }
      std::set<std::string> arg_names;
      for (const auto* a : me.children("arg")) {
        xml::StrictElement ae(*a);
        MethodArg arg;
        arg.name = identifier_attribute(ae, "name");
        arg.type = identifier_attribute(ae, "type");
        if (!arg_names.insert(arg.name).second) ae.fail("duplicate argument '" + arg.name + "'");
        ae.finish();
        method.args.push_back(std::move(arg));
      }
      me.finish();
      d.methods.push_back(std::move(method));
    }
    methods.finish();
  }

  if (const auto* deg_el = module.optional_child("degradation")) {
    xml::StrictElement deg(*deg_el);
    const std::string flag = deg.required("degradable");
    if (flag != "true" && flag != "false") deg.fail("attribute 'degradable' must be true or false");
    d.degradable = flag == "true";
    d.unit_name = identifier_attribute(deg, "unit");
    d.max_units = units_attribute(deg, "max_units");
    d.default_units = units_attribute(deg, "default_units");
    if (d.max_units < 1) deg.fail("max_units must be at least 1");
    if (d.default_units > d.max_units) deg.fail("default_units exceeds max_units");
    deg.finish();
  }
  module.finish();
  return d;
}

ModuleDescriptor parse_descriptor(std::string_view xml_text) { return parse_descriptor(xml::parse(xml_text)); }

void write_descriptor(xml::Writer& w, const ModuleDescriptor& d) {
  w.open("module", {{"name", d.name}, {"version", d.version}});
  w.open("variants");
  for (Variant v : d.variants) w.leaf("variant", {{"name", std::string(to_string(v))}});
  w.close("variants");
  if (!d.methods.empty()) {
    w.open("methods");
    for (const auto& m : d.methods) {
      if (m.args.empty()) {
        w.leaf("method", {{"name", m.name}});
        continue;
      }
      w.open("method", {{"name", m.name}});
      for (const auto& a : m.args) w.leaf("arg", {{"name", a.name}, {"type", a.type}});
      w.close("method");
    }
    w.close("methods");
  }
  w.leaf("degradation", {{"degradable", d.degradable ? "true" : "false"},
                         {"unit", d.unit_name},
                         {"max_units", std::to_string(d.max_units)},
                         {"default_units", std::to_string(d.default_units)}});
  w.close("module");
}

std::string descriptor_xml(const ModuleDescriptor& d) {
  xml::Writer w;
  write_descriptor(w, d);
  return w.str();
}

}  // namespace teleop::proto
