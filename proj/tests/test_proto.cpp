#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <regex>

#include "teleop/error.hpp"
#include "teleop/proto/app_spec.hpp"
#include "teleop/proto/registry.hpp"
#include "teleop/runtime/modules.hpp"

using namespace teleop;
using namespace teleop::proto;

namespace {

const char* kCamera = R"(<?xml version="1.0"?>
<module name="camera" version="1.0">
  <variants><variant name="MOBILE"/><variant name="CLASSIC"/></variants>
  <methods>
    <method name="select_view"><arg name="index" type="int"/></method>
  </methods>
  <degradation degradable="true" unit="camera" max_units="5" default_units="5"/>
</module>)";

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::setup;
}

std::unique_ptr<ModuleRegistry> standard_registry() {
  auto r = std::make_unique<ModuleRegistry>();
  for (const auto& d : runtime::standard_descriptors()) r->register_module(d);
  return r;
}

}  // namespace

TEST(Descriptor, MinimalGetsDefaults) {
  const auto d =
      parse_descriptor(R"(<module name="m" version="0.1"><variants><variant name="CLASSIC"/></variants></module>)");
  EXPECT_EQ(d.name, "m");
  EXPECT_TRUE(d.methods.empty());
  EXPECT_FALSE(d.degradable);
  EXPECT_EQ(d.max_units, 1);
  EXPECT_EQ(d.default_units, 1);
}

TEST(Descriptor, CameraFieldsAsWritten) {
  const auto d = parse_descriptor(kCamera);
  EXPECT_TRUE(d.degradable);
  EXPECT_EQ(d.max_units, 5);
  EXPECT_EQ(d.unit_name, "camera");
  EXPECT_EQ(d.variants, (std::vector<Variant>{Variant::classic, Variant::mobile}));
  ASSERT_EQ(d.methods.size(), 1u);
  EXPECT_EQ(d.methods[0].args[0].type, "int");
}

TEST(Descriptor, MissingVariantsCitesElement) {
  try {
    parse_descriptor(R"(<module name="m" version="1"></module>)");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("variants"), std::string::npos) << e.what();
  }
}

TEST(Descriptor, CanonicalFixedPoint) {
  for (const auto& d : runtime::standard_descriptors()) {
    const std::string xml = descriptor_xml(d);
    EXPECT_EQ(parse_descriptor(xml), d);
    EXPECT_EQ(descriptor_xml(parse_descriptor(xml)), xml);
  }
}

TEST(Descriptor, EveryAttributeNameMutationRejected) {
  const std::string valid = descriptor_xml(parse_descriptor(kCamera));
  const std::regex attr(R"(([A-Za-z_]+)=")");
  int mutations = 0, rejected = 0;
  // Attributes of the XML declaration are not part of the descriptor.
  const auto decl = valid.find("?>");
  const auto body = valid.begin() + static_cast<std::ptrdiff_t>(decl == std::string::npos ? 0 : decl + 2);
  for (auto it = std::sregex_iterator(body, valid.end(), attr); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(body - valid.begin() + it->position(1));
    const auto len = static_cast<std::size_t>(it->length(1));
    for (std::size_t i = pos; i < pos + len; ++i) {
      for (char c : std::string("aqzXZ_")) {
        if (valid[i] == c) continue;
        std::string text = valid;
        text[i] = c;
        ++mutations;
        try {
          parse_descriptor(text);
        } catch (const Error&) {
          ++rejected;
          continue;
        }
        ADD_FAILURE() << "accepted mutation at " << i << ": " << text.substr(pos, len);
      }
    }
  }
  EXPECT_GT(mutations, 200);
  EXPECT_EQ(rejected, mutations);
}

TEST(Descriptor, DuplicateMethodIsValidationError) {
  const std::string xml = R"(<module name="m" version="1"><variants><variant name="CLASSIC"/></variants>
<methods><method name="go"/><method name="go"/></methods></module>)";
  EXPECT_EQ(code_of([&] { parse_descriptor(xml); }), Errc::validation);
}

TEST(Registry, SortedReplaceAndFresh) {
  const auto path = temp_file("teleop_registry_a.db");
  {
    ModuleRegistry r(path);
    EXPECT_TRUE(r.list_modules().empty());
    auto ds = runtime::standard_descriptors();
    for (auto it = ds.rbegin(); it != ds.rend(); ++it) r.register_module(*it);
    auto cam = ds[0];
    cam.max_units = 7;
    cam.default_units = 7;
    r.register_module(cam);
  }
  ModuleRegistry again(path);
  const auto list = again.list_modules();
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0].name, "camera");
  EXPECT_EQ(list[1].name, "teleop");
  EXPECT_EQ(list[2].name, "trajectory");
  EXPECT_EQ(list[0].max_units, 7);
  std::filesystem::remove(path);
}

TEST(Registry, TruncatedFileRefused) {
  const auto path = temp_file("teleop_registry_b.db");
  {
    ModuleRegistry r(path);
    for (const auto& d : runtime::standard_descriptors()) r.register_module(d);
  }
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  EXPECT_EQ(code_of([&] { ModuleRegistry r(path); }), Errc::store);
  std::filesystem::remove(path);
}

TEST(Compose, CameraAndTeleopForWeb) {
  ComposeRequest req;
  req.platform = Platform::web;
  req.selection = {parse_selection("camera:CLASSIC:5"), parse_selection("teleop:CLASSIC")};
  const AppSpec spec = compose(*standard_registry(), req);
  ASSERT_EQ(spec.modules.size(), 2u);
  EXPECT_EQ(spec.modules[0].requested_units, 5);
  EXPECT_EQ(spec.degradation_priority, std::vector<std::string>{"camera"});
  EXPECT_TRUE(validate_app(spec).empty());
}

TEST(Compose, Errors) {
  const auto reg = standard_registry();
  auto run = [&](Platform p, std::vector<std::string> picks) {
    ComposeRequest req;
    req.platform = p;
    for (const auto& s : picks) req.selection.push_back(parse_selection(s));
    compose(*reg, req);
  };
  EXPECT_EQ(code_of([&] { run(Platform::mobile, {"trajectory:CLASSIC"}); }), Errc::compatibility);
  EXPECT_EQ(code_of([&] { run(Platform::web, {"trajectory:MOBILE"}); }), Errc::variant);
  EXPECT_EQ(code_of([&] { run(Platform::web, {"ghost:CLASSIC"}); }), Errc::composition);
  EXPECT_EQ(code_of([&] { run(Platform::web, {"camera:CLASSIC", "camera:MOBILE"}); }), Errc::composition);
  EXPECT_EQ(code_of([&] { run(Platform::web, {"camera:CLASSIC:6"}); }), Errc::composition);
  EXPECT_EQ(code_of([&] { parse_selection("camera"); }), Errc::composition);
  EXPECT_EQ(code_of([&] { parse_selection("camera:CLASSIC:x"); }), Errc::composition);
}

TEST(Compose, RandomSelectionsRoundTrip) {
  std::mt19937 rng(2024);
  auto ident = [&](const std::string& prefix) { return prefix + std::to_string(rng() % 1000); };
  const std::string nasty = "a<&>\"' b=c";
  for (int round = 0; round < 500; ++round) {
    ModuleRegistry reg;
    std::vector<ModuleDescriptor> ds;
    const int n = 1 + int(rng() % 6);
    for (int i = 0; i < n; ++i) {
      ModuleDescriptor d;
      d.name = "m" + std::to_string(i) + "_" + ident("x");
      d.version = std::to_string(rng() % 5) + "." + std::to_string(rng() % 10);
      d.variants = rng() % 2 ? std::vector<Variant>{Variant::classic, Variant::mobile}
                             : std::vector<Variant>{rng() % 2 ? Variant::classic : Variant::mobile};
      for (int m = int(rng() % 3); m > 0; --m) {
        Method meth{ident("op") + "_" + std::to_string(m), {}};
        for (int a = int(rng() % 3); a > 0; --a)
          meth.args.push_back({"a" + std::to_string(a), rng() % 2 ? "int" : "float"});
        d.methods.push_back(meth);
      }
      d.degradable = rng() % 2;
      d.unit_name = ident("u");
      d.max_units = 1 + int(rng() % 8);
      d.default_units = int(rng() % (d.max_units + 1));
      reg.register_module(d);
      ds.push_back(d);
    }
    ComposeRequest req;
    req.app_name = ident("app");
    req.platform = rng() % 3 == 0 ? Platform::mobile : (rng() % 2 ? Platform::web : Platform::vr);
    std::shuffle(ds.begin(), ds.end(), rng);
    for (const auto& d : ds) {
      if (rng() % 3 == 0) continue;
      Variant v = d.variants[rng() % d.variants.size()];
      if (req.platform == Platform::mobile) {
        if (!d.has_variant(Variant::mobile)) continue;
        v = Variant::mobile;
      }
      Selection s{d.name, v, std::nullopt};
      if (rng() % 2) s.units = int(rng() % (d.max_units + 1));
      req.selection.push_back(s);
    }
    for (int o = int(rng() % 3); o > 0; --o) req.options.push_back({ident("k"), nasty.substr(0, rng() % nasty.size())});

    const AppSpec spec = compose(reg, req);
    const std::string xml = app_xml(spec);
    ASSERT_EQ(compose_app(reg, req), xml);
    const AppSpec parsed = parse_app(xml);
    ASSERT_EQ(parsed, spec) << xml;
    ASSERT_EQ(app_xml(parsed), xml);
    ASSERT_TRUE(validate_app(parsed).empty()) << validate_app(parsed).front();
  }
}

TEST(ValidateApp, SingleFindings) {
  ComposeRequest req;
  req.selection = {parse_selection("camera:CLASSIC:5"), parse_selection("teleop:CLASSIC")};
  AppSpec spec = compose(*standard_registry(), req);

  AppSpec over = spec;
  over.modules[0].requested_units = 6;
  auto problems = validate_app(over);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("camera"), std::string::npos);

  AppSpec unlisted = spec;
  unlisted.degradation_priority.clear();
  EXPECT_EQ(validate_app(unlisted).size(), 1u);

  AppSpec mobile = spec;
  mobile.platform = Platform::mobile;
  EXPECT_EQ(validate_app(mobile).size(), 2u);
}

TEST(AppFile, LoadShippedConfig) {
  const AppSpec spec = load_app(std::string(TELEOP_SOURCE_DIR) + "/config/app.xml");
  EXPECT_TRUE(validate_app(spec).empty());
  EXPECT_EQ(spec.find("camera")->requested_units, 5);
  EXPECT_EQ(code_of([] { load_app("/nonexistent/app.xml"); }), Errc::setup);
}
