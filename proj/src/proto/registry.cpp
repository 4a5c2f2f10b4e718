#include "teleop/proto/registry.hpp"

#include <algorithm>

#include "teleop/error.hpp"
#include "teleop/session/record_file.hpp"

namespace teleop::proto {

namespace {
constexpr std::string_view kFormat = "teleop-registry";
}

ModuleRegistry::ModuleRegistry(std::filesystem::path path) : path_(std::move(path)) {
  auto file = session::read_records(*path_, kFormat);
  if (!file) return;
  for (std::size_t i = 0; i < file->records.size(); ++i) {
    const auto& rec = file->records[i];
    if (!rec.is_object() || !rec.contains("descriptor") || !rec["descriptor"].is_string()) {
      throw Error(Errc::store, "record " + std::to_string(i + 1) + " in " + path_->string() + " has no descriptor");
    }
    try {
      modules_.push_back(parse_descriptor(rec["descriptor"].get<std::string>()));
    } catch (const Error& e) {
      throw Error(Errc::store, "record " + std::to_string(i + 1) + " in " + path_->string() + ": " + e.what());
    }
  }
  std::sort(modules_.begin(), modules_.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
}

void ModuleRegistry::register_module(const ModuleDescriptor& descriptor) {
  check_descriptor(descriptor);
  std::lock_guard lock(mu_);
  auto it = std::lower_bound(modules_.begin(), modules_.end(), descriptor.name,
                             [](const ModuleDescriptor& m, const std::string& n) { return m.name < n; });
  if (it != modules_.end() && it->name == descriptor.name) {
    *it = descriptor;
  } else {
    modules_.insert(it, descriptor);
  }
  persist();
}

std::vector<ModuleDescriptor> ModuleRegistry::list_modules() const {
  std::lock_guard lock(mu_);
  return modules_;
}

std::optional<ModuleDescriptor> ModuleRegistry::find(const std::string& name) const {
  std::lock_guard lock(mu_);
  for (const auto& m : modules_) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

void ModuleRegistry::persist() const {
  if (!path_) return;
  std::vector<nlohmann::ordered_json> records;
  records.reserve(modules_.size());
  for (const auto& m : modules_) {
    nlohmann::ordered_json rec;
    rec["name"] = m.name;
    rec["descriptor"] = descriptor_xml(m);
    records.push_back(std::move(rec));
  }
  session::write_file_atomic(*path_, session::serialize_records(kFormat, nlohmann::ordered_json::object(), records));
}

}  // namespace teleop::proto
