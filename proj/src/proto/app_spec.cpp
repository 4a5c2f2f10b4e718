#include "teleop/proto/app_spec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop::proto {

namespace {

bool platform_allows(Platform platform, Variant variant) {
  return platform != Platform::mobile || variant == Variant::mobile;
}

}  // namespace

const AppModule* AppSpec::find(std::string_view module) const {
  for (const auto& m : modules) {
    if (m.descriptor.name == module) return &m;
  }
  return nullptr;
}

Selection parse_selection(std::string_view text) {
  Selection s;
  const auto first = text.find(':');
  if (first == std::string_view::npos || first == 0) {
    throw Error(Errc::composition, "selection '" + std::string(text) + "' must be name:VARIANT[:units]");
  }
  s.name = std::string(text.substr(0, first));
  std::string_view rest = text.substr(first + 1);
  const auto second = rest.find(':');
  std::string_view variant = rest.substr(0, second);
  try {
    s.variant = parse_variant(variant);
  } catch (const Error&) {
    throw Error(Errc::composition, "selection '" + std::string(text) + "' has unknown variant");
  }
  if (second != std::string_view::npos) {
    std::string_view units = rest.substr(second + 1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(units.data(), units.data() + units.size(), value);
    if (ec != std::errc() || ptr != units.data() + units.size() || units.empty()) {
      throw Error(Errc::composition, "selection '" + std::string(text) + "' has malformed units");
    }
    s.units = value;
  }
  return s;
}

AppSpec compose(const ModuleRegistry& registry, const ComposeRequest& request) {
  AppSpec spec;
  spec.name = request.app_name;
  spec.platform = request.platform;
  spec.options = request.options;
  std::set<std::string> picked;
  for (const auto& sel : request.selection) {
    auto descriptor = registry.find(sel.name);
    if (!descriptor) throw Error(Errc::composition, "module '" + sel.name + "' is not registered");
    if (!picked.insert(sel.name).second) throw Error(Errc::composition, "module '" + sel.name + "' selected twice");
    if (!descriptor->has_variant(sel.variant)) {
      throw Error(Errc::variant,
                  "module '" + sel.name + "' has no " + std::string(to_string(sel.variant)) + " variant");
    }
    if (!platform_allows(request.platform, sel.variant)) {
      throw Error(Errc::compatibility, "platform MOBILE cannot use the " + std::string(to_string(sel.variant)) +
                                           " variant of '" + sel.name + "'");
    }
    const int units = sel.units.value_or(descriptor->default_units);
    if (units < 0 || units > descriptor->max_units) {
      throw Error(Errc::composition, "module '" + sel.name + "' requests " + std::to_string(units) + " units, max is " +
                                         std::to_string(descriptor->max_units));
    }
    spec.modules.push_back({*descriptor, sel.variant, units});
  }
  if (request.degradation_priority.empty()) {
    for (const auto& m : spec.modules) {
      if (m.descriptor.degradable) spec.degradation_priority.push_back(m.descriptor.name);
    }
  } else {
    spec.degradation_priority = request.degradation_priority;
    for (const auto& name : spec.degradation_priority) {
      if (!spec.find(name)) throw Error(Errc::composition, "priority names unselected module '" + name + "'");
    }
  }
  return spec;
}

std::string compose_app(const ModuleRegistry& registry, const ComposeRequest& request) {
  return app_xml(compose(registry, request));
}

std::string app_xml(const AppSpec& spec) {
  xml::Writer w;
  w.open("application", {{"name", spec.name}, {"platform", std::string(to_string(spec.platform))}});
  w.open("options");
  for (const auto& [k, v] : spec.options) w.leaf("option", {{"key", k}, {"value", v}});
  w.close("options");
  w.open("modules");
  for (const auto& m : spec.modules) {
    w.open("entry", {{"variant", std::string(to_string(m.variant))}, {"units", std::to_string(m.requested_units)}});
    write_descriptor(w, m.descriptor);
    w.close("entry");
  }
  w.close("modules");
  w.open("degradation_priority");
  for (const auto& name : spec.degradation_priority) w.leaf("ref", {{"module", name}});
  w.close("degradation_priority");
  w.close("application");
  return w.str();
}

AppSpec parse_app(std::string_view xml_text) {
  const xml::Element root = xml::parse(xml_text);
  if (root.name != "application") {
    throw Error(Errc::schema,
                "line " + std::to_string(root.line) + ": expected <application>, found <" + root.name + ">");
  }
  xml::StrictElement app(root);
  AppSpec spec;
  spec.name = app.required("name");
  const std::string platform = app.required("platform");
  try {
    spec.platform = parse_platform(platform);
  } catch (const Error&) {
    app.fail("unknown platform '" + platform + "'");
  }

  if (const auto* options_el = app.optional_child("options")) {
    xml::StrictElement options(*options_el);
    for (const auto* o : options.children("option")) {
      xml::StrictElement oe(*o);
      std::string key = oe.required("key");
      std::string value = oe.required("value");
      oe.finish();
      spec.options.emplace_back(std::move(key), std::move(value));
    }
    options.finish();
  }

  xml::StrictElement modules(app.required_child("modules"));
  for (const auto* e : modules.children("entry")) {
    xml::StrictElement entry(*e);
    AppModule m;
    const std::string variant = entry.required("variant");
    try {
      m.variant = parse_variant(variant);
    } catch (const Error&) {
      entry.fail("unknown variant '" + variant + "'");
    }
    const std::int64_t units = entry.required_integer("units");
    if (units < 0 || units > 1'000'000) entry.fail("attribute 'units' out of range");
    m.requested_units = static_cast<int>(units);
    m.descriptor = parse_descriptor(entry.required_child("module"));
    entry.finish();
    spec.modules.push_back(std::move(m));
  }
  modules.finish();

  if (const auto* prio_el = app.optional_child("degradation_priority")) {
    xml::StrictElement prio(*prio_el);
    for (const auto* r : prio.children("ref")) {
      xml::StrictElement re(*r);
      spec.degradation_priority.push_back(re.required("module"));
      re.finish();
    }
    prio.finish();
  }
  app.finish();
  return spec;
}

AppSpec load_app(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::setup, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_app(ss.str());
}

std::vector<std::string> validate_app(const AppSpec& spec) {
  std::vector<std::string> out;
  std::set<std::string> names;
  for (const auto& m : spec.modules) {
    const auto& d = m.descriptor;
    if (!names.insert(d.name).second) out.push_back("module '" + d.name + "' appears more than once");
    try {
      check_descriptor(d);
    } catch (const Error& e) {
      out.push_back(std::string(e.what()));
    }
    if (!d.has_variant(m.variant)) {
      out.push_back("module '" + d.name + "' has no " + std::string(to_string(m.variant)) + " variant");
    }
    if (!platform_allows(spec.platform, m.variant)) {
      out.push_back("module '" + d.name + "' uses variant " + std::string(to_string(m.variant)) +
                    " on platform MOBILE");
    }
    if (m.requested_units < 0 || m.requested_units > d.max_units) {
      out.push_back("module '" + d.name + "' requests " + std::to_string(m.requested_units) + " units, max is " +
                    std::to_string(d.max_units));
    }
  }
  std::set<std::string> prioritized;
  for (const auto& name : spec.degradation_priority) {
    if (!prioritized.insert(name).second) out.push_back("priority lists module '" + name + "' twice");
    if (!names.count(name)) out.push_back("priority names unknown module '" + name + "'");
  }
  for (const auto& m : spec.modules) {
    if (m.descriptor.degradable && !prioritized.count(m.descriptor.name)) {
      out.push_back("degradable module '" + m.descriptor.name + "' is missing from the degradation priority");
    }
  }
  return out;
}

}  // namespace teleop::proto
