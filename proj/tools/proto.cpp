#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "teleop/error.hpp"
#include "teleop/proto/app_spec.hpp"
#include "teleop/proto/registry.hpp"
#include "teleop/session/record_file.hpp"

using namespace teleop;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::setup, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, std::string> split_option(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(Errc::composition, "option '" + text + "' is not KEY=VALUE");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototyper: module registry and application composition"};
  app.require_subcommand(1);
  std::string registry_path = "registry.db";
  app.add_option("--registry", registry_path, "Registry record file");

  auto* reg = app.add_subcommand("register", "Register module descriptor XML files");
  std::vector<std::string> descriptor_files;
  reg->add_option("files", descriptor_files, "Descriptor XML")->required();

  auto* list = app.add_subcommand("list", "List registered modules");

  auto* comp = app.add_subcommand("compose", "Compose an application");
  std::string platform = "WEB";
  std::vector<std::string> selections;
  std::vector<std::string> options;
  std::vector<std::string> priority;
  std::string out_path;
  std::string app_name = "app";
  comp->add_option("--platform", platform, "WEB, VR or MOBILE");
  comp->add_option("--select", selections, "name:VARIANT[:units], repeatable")->required();
  comp->add_option("--option", options, "KEY=VALUE, repeatable");
  comp->add_option("--priority", priority, "Degradation priority, first degrades first");
  comp->add_option("--out", out_path, "Write the application here instead of stdout");
  comp->add_option("--name", app_name, "Application name");

  auto* val = app.add_subcommand("validate", "Check a composed application");
  std::string app_path;
  val->add_option("app", app_path, "Application XML")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*val) {
      const auto problems = proto::validate_app(proto::parse_app(read_file(app_path)));
      for (const auto& p : problems) std::cout << p << '\n';
      if (!problems.empty()) return 1;
      std::cout << "ok\n";
      return 0;
    }

    proto::ModuleRegistry registry(registry_path);
    if (*reg) {
      for (const auto& f : descriptor_files) {
        const auto d = proto::parse_descriptor(read_file(f));
        registry.register_module(d);
        std::cout << "registered " << d.name << ' ' << d.version << '\n';
      }
    } else if (*list) {
      for (const auto& d : registry.list_modules()) {
        std::cout << d.name << ' ' << d.version;
        for (auto v : d.variants) std::cout << ' ' << to_string(v);
        if (d.degradable) std::cout << " degradable " << d.unit_name << '=' << d.default_units << '/' << d.max_units;
        std::cout << '\n';
      }
    } else if (*comp) {
      proto::ComposeRequest req;
      req.app_name = app_name;
      req.platform = parse_platform(platform);
      for (const auto& s : selections) req.selection.push_back(proto::parse_selection(s));
      for (const auto& o : options) req.options.push_back(split_option(o));
      req.degradation_priority = priority;
      const std::string xml = proto::compose_app(registry, req);
      if (out_path.empty()) {
        std::cout << xml;
      } else {
        session::write_file_atomic(out_path, xml);
      }
    }
  } catch (const Error& e) {
    std::cerr << "proto: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
