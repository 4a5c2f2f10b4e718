#include "teleop/scenario/scenario.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "teleop/error.hpp"
#include "teleop/robot/config.hpp"
#include "teleop/runtime/modules.hpp"
#include "teleop/session/scene.hpp"
#include "teleop/xml.hpp"

namespace teleop::scenario {

namespace {

constexpr double kDeg = M_PI / 180.0;

[[noreturn]] void invalid(int line, const std::string& what) {
  throw Error(Errc::validation, "line " + std::to_string(line) + ": " + what);
}

JointConfig parse_degrees(const std::string& text, int line) {
  std::istringstream in(text);
  JointConfig q;
  for (int i = 0; i < kJointCount; ++i) {
    double v = 0.0;
    if (!(in >> v) || !std::isfinite(v)) invalid(line, "expected six joint angles in degrees, got '" + text + "'");
    q(i) = v * kDeg;
  }
  std::string rest;
  if (in >> rest) invalid(line, "expected six joint angles in degrees, got '" + text + "'");
  return q;
}

std::vector<JointConfig> parse_waypoints(const std::string& text, int line) {
  std::vector<JointConfig> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(';', start), text.size());
    const std::string part = text.substr(start, end - start);
    if (part.find_first_not_of(" \t\n") != std::string::npos) out.push_back(parse_degrees(part, line));
    start = end + 1;
  }
  if (out.empty()) invalid(line, "trajectory needs at least one waypoint");
  return out;
}

const std::map<std::string, ActionKind>& action_names() {
  static const std::map<std::string, ActionKind> names = {{"join", ActionKind::join},
                                                          {"phantom", ActionKind::phantom},
                                                          {"jog", ActionKind::jog},
                                                          {"lock", ActionKind::lock},
                                                          {"release", ActionKind::release},
                                                          {"validate", ActionKind::validate},
                                                          {"trajectory", ActionKind::trajectory},
                                                          {"disconnect", ActionKind::disconnect}};
  return names;
}

Action parse_action(const xml::Element& el, ActionKind kind, const WorldSnapshot& scene) {
  xml::StrictElement e(el);
  Action a;
  a.kind = kind;
  a.line = el.line;
  a.t_ms = e.required_integer("t_ms");
  if (a.t_ms < 0) e.fail("t_ms must be non-negative");
  switch (kind) {
    case ActionKind::phantom:
      a.q = parse_degrees(e.required("q_deg"), el.line);
      break;
    case ActionKind::jog:
      a.count = static_cast<int>(e.optional_integer("count", 1));
      a.rate_hz = e.optional_number("rate_hz", 100.0);
      a.joint = static_cast<int>(e.optional_integer("joint", 0));
      a.step_rad = e.optional_number("step_deg", 0.5) * kDeg;
      if (a.count < 1) e.fail("count must be at least 1");
      if (!(a.rate_hz > 0.0 && a.rate_hz <= 1000.0)) e.fail("rate_hz must lie in (0, 1000]");
      if (a.joint < 0 || a.joint > kJointCount) e.fail("joint must be 0 (random) or 1..6");
      break;
    case ActionKind::lock:
    case ActionKind::release:
      a.object = e.required("object");
      if (!scene.find(a.object)) invalid(el.line, "object '" + a.object + "' is not in the scene");
      break;
    case ActionKind::trajectory:
      a.waypoints = parse_waypoints(e.required("q_deg"), el.line);
      break;
    default:
      break;
  }
  e.finish();
  return a;
}

ClientScript parse_client(const xml::Element& el, const WorldSnapshot& scene) {
  xml::StrictElement e(el);
  ClientScript c;
  c.user_id = e.required("user");
  if (c.user_id.empty()) e.fail("empty user");
  const std::string platform = e.optional("platform").value_or("WEB");
  try {
    c.platform = parse_platform(platform);
  } catch (const Error&) {
    e.fail("unknown platform '" + platform + "'");
  }
  for (const auto& child : el.children) {
    auto it = action_names().find(child.name);
    if (it == action_names().end()) invalid(child.line, "unknown action <" + child.name + ">");
    c.actions.push_back(parse_action(child, it->second, scene));
  }
  for (const auto& [name, kind] : action_names()) e.children(name);
  e.finish();
  return c;
}

std::vector<CoreAction> parse_core(const xml::Element& el) {
  xml::StrictElement e(el);
  std::vector<CoreAction> out;
  for (const auto& child : el.children) {
    xml::StrictElement ce(child);
    CoreAction a;
    a.line = child.line;
    a.t_ms = ce.required_integer("t_ms");
    a.module = ce.required("module");
    if (child.name == "hot_add") {
      a.kind = CoreActionKind::hot_add;
      const std::string variant = ce.optional("variant").value_or("CLASSIC");
      try {
        a.variant = parse_variant(variant);
      } catch (const Error&) {
        ce.fail("unknown variant '" + variant + "'");
      }
      if (auto u = ce.optional("units")) a.units = static_cast<int>(std::stol(*u));
    } else if (child.name == "unload") {
      a.kind = CoreActionKind::unload;
    } else if (child.name == "safe") {
      a.kind = CoreActionKind::safe;
      a.degree = static_cast<int>(ce.required_integer("degree"));
    } else {
      invalid(child.line, "unknown core action <" + child.name + ">");
    }
    ce.finish();
    out.push_back(std::move(a));
  }
  e.children("hot_add");
  e.children("unload");
  e.children("safe");
  e.finish();
  return out;
}

const proto::ModuleDescriptor* find_descriptor(const Scenario& s, const std::string& name,
                                               const std::vector<proto::ModuleDescriptor>& library) {
  for (const auto& m : s.app.modules) {
    if (m.descriptor.name == name) return &m.descriptor;
  }
  for (const auto& d : library) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace

const std::vector<std::string>& assertion_names() {
  static const std::vector<std::string> names = {
      "convergence",       "ordering",     "gap_free",      "robot_provenance",
      "robot_commands",    "single_grant", "receipts",      "trajectory_accepted",
      "degradation_trace", "first_safe",   "module_status", "no_errors"};
  return names;
}

proto::AppSpec default_app(int cameras) {
  proto::AppSpec app;
  app.name = "default";
  app.platform = Platform::web;
  for (const auto& d : runtime::standard_descriptors()) {
    if (d.name == "camera" && cameras > 0) {
      proto::ModuleDescriptor cam = d;
      cam.max_units = std::max(cam.max_units, cameras);
      app.modules.push_back({cam, Variant::classic, cameras});
      app.degradation_priority.push_back("camera");
    } else if (d.name == "teleop") {
      app.modules.push_back({d, Variant::classic, d.default_units});
    }
  }
  return app;
}

Scenario parse_scenario(std::string_view xml_text, const std::filesystem::path& base_dir) {
  const xml::Element root = xml::parse(xml_text);
  if (root.name != "scenario") {
    throw Error(Errc::schema, "line " + std::to_string(root.line) + ": expected <scenario>, found <" + root.name + ">");
  }
  xml::StrictElement sc(root);
  Scenario s;
  s.name = sc.required("name");
  s.seed = static_cast<std::uint64_t>(sc.optional_integer("seed", 1));
  s.until_ms = sc.required_integer("until_ms");
  if (s.until_ms < 0) sc.fail("until_ms must be non-negative");

  if (const auto* st = sc.optional_child("stack")) {
    xml::StrictElement e(*st);
    auto& k = s.stack;
    k.cameras = static_cast<int>(e.optional_integer("cameras", k.cameras));
    k.camera_rate_hz = e.optional_number("camera_rate_hz", k.camera_rate_hz);
    k.frame_bytes =
        static_cast<std::size_t>(e.optional_integer("frame_bytes", static_cast<std::int64_t>(k.frame_bytes)));
    k.tick_ms = e.optional_integer("tick_ms", k.tick_ms);
    k.probe_ms = e.optional_integer("probe_ms", k.probe_ms);
    k.controller.control_period_ms = e.optional_integer("control_ms", k.controller.control_period_ms);
    k.controller.high_ms = e.optional_number("high_ms", k.controller.high_ms);
    k.controller.low_ms = e.optional_number("low_ms", k.controller.low_ms);
    k.controller.beta = e.optional_number("beta", k.controller.beta);
    k.relay.queue_bound =
        static_cast<std::size_t>(e.optional_integer("queue_bound", static_cast<std::int64_t>(k.relay.queue_bound)));
    k.wire_roundtrip = e.optional_bool("wire_roundtrip", k.wire_roundtrip);
    if (auto robot = e.optional("robot")) k.robot = robot::load_robot_config((base_dir / *robot).string());
    e.finish();
  }
  if (const auto* sceneel = sc.optional_child("scene")) {
    xml::StrictElement e(*sceneel);
    s.stack.scene = session::load_scene((base_dir / e.required("path")).string());
    e.finish();
  }
  const WorldSnapshot scene = s.stack.scene.objects.empty() ? session::default_scene() : s.stack.scene;

  if (const auto* appel = sc.optional_child("app")) {
    xml::StrictElement e(*appel);
    s.app = proto::load_app((base_dir / e.required("path")).string());
    e.finish();
    const auto problems = proto::validate_app(s.app);
    if (!problems.empty()) invalid(appel->line, "application is invalid: " + problems.front());
  } else {
    s.app = default_app(s.stack.cameras);
  }

  if (const auto* lat = sc.optional_child("latency")) {
    xml::StrictElement e(*lat);
    std::vector<LatencyStep> steps;
    for (const auto* step : e.children("step")) {
      xml::StrictElement se(*step);
      steps.push_back({se.required_integer("t_ms"), se.required_integer("delay_ms")});
      se.finish();
    }
    e.finish();
    try {
      s.stack.latency = LatencyProfile(std::move(steps));
    } catch (const Error& err) {
      invalid(lat->line, err.what());
    }
  }

  std::set<std::string> users;
  for (const auto* c : sc.children("client")) {
    s.clients.push_back(parse_client(*c, scene));
    if (!users.insert(s.clients.back().user_id).second) {
      invalid(c->line, "user '" + s.clients.back().user_id + "' declared twice");
    }
  }
  if (const auto* core = sc.optional_child("core")) s.core_actions = parse_core(*core);

  for (const auto* a : sc.children("assert")) {
    Assertion as;
    as.line = a->line;
    for (const auto& [k, v] : a->attributes) {
      if (k == "name") {
        as.name = v;
      } else {
        as.args[k] = v;
      }
    }
    const auto& names = assertion_names();
    if (std::find(names.begin(), names.end(), as.name) == names.end()) {
      invalid(a->line, "unknown assertion '" + as.name + "'");
    }
    if (!a->children.empty() || !a->text.empty()) invalid(a->line, "<assert> takes attributes only");
    s.assertions.push_back(std::move(as));
  }
  sc.finish();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::setup, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

bool ScenarioReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const AssertionResult& r) { return r.passed; });
}

std::optional<std::string> check_provenance(const std::vector<robot::CommandRecord>& executed,
                                            const std::vector<session::ValidationRecord>& receipts,
                                            std::size_t unexplained_motion) {
  if (unexplained_motion != 0) {
    return std::to_string(unexplained_motion) + " ticks of motion without an executing command";
  }
  std::map<std::uint64_t, const session::ValidationRecord*> accepted;
  for (const auto& r : receipts) {
    if (r.receipt.status != RobotEventKind::accepted) continue;
    if (!accepted.emplace(r.receipt.command_id, &r).second) {
      return "command " + std::to_string(r.receipt.command_id) + " acknowledged twice";
    }
  }
  std::set<std::uint64_t> seen;
  for (const auto& c : executed) {
    if (!seen.insert(c.command_id).second) return "command " + std::to_string(c.command_id) + " executed twice";
    auto it = accepted.find(c.command_id);
    if (it == accepted.end()) return "command " + std::to_string(c.command_id) + " has no ACCEPTED receipt";
    if (it->second->origin != c.origin || it->second->user_id != c.user_id) {
      return "command " + std::to_string(c.command_id) + " differs from its receipt";
    }
  }
  if (seen.size() != accepted.size()) {
    return std::to_string(accepted.size()) + " ACCEPTED receipts but " + std::to_string(seen.size()) +
           " executed commands";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Event {
  std::int64_t t_ms = 0;
  std::size_t order = 0;
  std::function<void()> fn;
};

struct ClientRun {
  const ClientScript* script = nullptr;
  ScriptedClient* client = nullptr;
  ClientTransport* transport = nullptr;
  std::unique_ptr<ScriptedClient> owned_client;
  std::unique_ptr<ClientTransport> owned_transport;
  std::mt19937_64 rng;
  bool joined = false;
  std::vector<std::pair<std::string, std::int64_t>> lock_requests;  // (object, t_ms)
  std::vector<CommandOrigin> commands;
};

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (auto& s : out) {
    s.erase(0, s.find_first_not_of(' '));
    s.erase(s.find_last_not_of(' ') + 1);
  }
  return out;
}

class Runner {
 public:
  Runner(const Scenario& s, const RunOptions& o) : s_(s), opt_(o), seed_(o.seed.value_or(s.seed)) {}

  ScenarioReport run() {
    if (opt_.server) {
      run_remote();
    } else {
      run_local();
    }
    return evaluate();
  }

 private:
  void build_clients(const std::function<std::unique_ptr<ClientTransport>(ScriptedClient&)>& make) {
    runs_.reserve(s_.clients.size());
    for (std::size_t i = 0; i < s_.clients.size(); ++i) {
      ClientRun r;
      r.script = &s_.clients[i];
      r.rng.seed(seed_ * 0x9e3779b97f4a7c15ull + i + 1);
      if (stack_) {
        r.client = &stack_->add_client(r.script->user_id, r.script->platform);
        r.transport = &stack_->transport(r.script->user_id);
      } else {
        r.owned_client = std::make_unique<ScriptedClient>(r.script->user_id, r.script->platform);
        r.client = r.owned_client.get();
        r.owned_transport = make(*r.client);
        r.transport = r.owned_transport.get();
      }
      runs_.push_back(std::move(r));
    }
  }

  void client_error(const ClientRun& r, const Action& a, const std::exception& e) {
    action_errors_.push_back(r.script->user_id + " line " + std::to_string(a.line) + ": " + e.what());
  }

  void perform(ClientRun& r, const Action& a) {
    try {
      switch (a.kind) {
        case ActionKind::join:
          r.transport->join();
          r.joined = true;
          break;
        case ActionKind::phantom:
          r.transport->send(wire::PhantomUpdateBody{phantom_object_id(r.script->user_id), a.q, 0});
          break;
        case ActionKind::jog: {
          auto q = r.client->phantom();
          if (!q) throw Error(Errc::session, "jog before the join snapshot");
          const int j = a.joint > 0 ? a.joint - 1 : static_cast<int>(r.rng() % kJointCount);
          double delta = (r.rng() & 1) ? a.step_rad : -a.step_rad;
          const auto& lim = s_.stack.robot.limits;
          if ((*q)(j) + delta > lim.upper(j) || (*q)(j) + delta < lim.lower(j)) delta = -delta;
          (*q)(j) += delta;
          r.transport->send(wire::PhantomUpdateBody{phantom_object_id(r.script->user_id), *q, 0});
          break;
        }
        case ActionKind::lock:
          r.lock_requests.emplace_back(a.object, a.t_ms);
          r.transport->send(wire::LockReqBody{a.object, LockAction::acquire});
          break;
        case ActionKind::release:
          r.transport->send(wire::LockReqBody{a.object, LockAction::release});
          break;
        case ActionKind::validate:
          r.commands.push_back(CommandOrigin::validate);
          r.transport->send(wire::ValidateBody{});
          break;
        case ActionKind::trajectory:
          r.commands.push_back(CommandOrigin::trajectory);
          r.transport->send(wire::RobotCmdBody{0, CommandOrigin::trajectory, r.script->user_id, a.waypoints});
          break;
        case ActionKind::disconnect:
          r.transport->leave();
          r.joined = false;
          break;
      }
    } catch (const std::exception& e) {
      client_error(r, a, e);
    }
  }

  std::vector<Event> timeline(bool with_core) {
    std::vector<Event> events;
    std::size_t order = 0;
    for (auto& r : runs_) {
      for (const auto& a : r.script->actions) {
        if (a.kind == ActionKind::jog) {
          const double interval = 1000.0 / a.rate_hz;
          for (int k = 0; k < a.count; ++k) {
            const auto t = a.t_ms + static_cast<std::int64_t>(std::llround(k * interval));
            events.push_back({t, order++, [this, &r, &a] { perform(r, a); }});
          }
        } else {
          events.push_back({a.t_ms, order++, [this, &r, &a] { perform(r, a); }});
        }
      }
    }
    if (with_core) {
      for (const auto& c : s_.core_actions) {
        events.push_back({c.t_ms, order++, [this, &c] { perform_core(c); }});
      }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.t_ms < b.t_ms || (a.t_ms == b.t_ms && a.order < b.order);
    });
    return events;
  }

  void perform_core(const CoreAction& c) {
    try {
      switch (c.kind) {
        case CoreActionKind::hot_add: {
          const auto library = runtime::standard_descriptors();
          const auto* d = find_descriptor(s_, c.module, library);
          if (!d) throw Error(Errc::not_found, "no descriptor for module '" + c.module + "'");
          stack_->core().hot_add(*d, c.variant, c.units);
          break;
        }
        case CoreActionKind::unload:
          stack_->core().unload_module(c.module);
          break;
        case CoreActionKind::safe:
          stack_->core().send_safe(c.module, c.degree);
          break;
      }
    } catch (const std::exception& e) {
      action_errors_.push_back("core line " + std::to_string(c.line) + ": " + e.what());
    }
  }

  void run_local() {
    stack_ = std::make_unique<LocalStack>(s_.stack);
    for (const auto& report : stack_->core().start(s_.app)) {
      if (report.status == ModuleStatus::failed) {
        action_errors_.push_back("module '" + report.module + "' failed to load: " + report.detail);
      }
    }
    build_clients({});
    auto events = timeline(true);
    std::size_t next = 0;
    while (stack_->now_ms() <= s_.until_ms) {
      const std::int64_t t = stack_->now_ms();
      while (next < events.size() && events[next].t_ms <= t) events[next++].fn();
      stack_->tick();
    }
  }

  void run_remote() {
    if (!s_.core_actions.empty()) {
      action_errors_.push_back("core actions need the in-process stack (--spawn-local)");
    }
    const net::Endpoint server = *opt_.server;
    build_clients([server](ScriptedClient& c) { return std::make_unique<RemoteTransport>(server, c); });
    auto events = timeline(false);
    const auto start = std::chrono::steady_clock::now();
    for (auto& e : events) {
      std::this_thread::sleep_until(start + std::chrono::milliseconds(e.t_ms));
      e.fn();
    }
    std::this_thread::sleep_until(start + std::chrono::milliseconds(s_.until_ms));
    // Quiescence: wait until no client has received anything for a while.
    std::size_t last = 0;
    for (int i = 0; i < 50; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      std::size_t total = 0;
      for (const auto& r : runs_) total += r.client->received();
      if (i > 0 && total == last) break;
      last = total;
    }
  }

  AssertionResult check(const Assertion& a) {
    AssertionResult res{a.name, false, {}};
    auto need_stack = [&]() {
      if (stack_) return true;
      res.detail = "needs the in-process stack (--spawn-local)";
      return false;
    };
    auto arg = [&](const std::string& k) -> std::optional<std::string> {
      auto it = a.args.find(k);
      if (it == a.args.end()) return std::nullopt;
      return it->second;
    };
    auto require_arg = [&](const std::string& k) {
      auto v = arg(k);
      if (!v) throw Error(Errc::validation, "line " + std::to_string(a.line) + ": assertion needs '" + k + "'");
      return *v;
    };

    if (a.name == "convergence") {
      std::optional<WorldSnapshot> reference;
      if (stack_) reference = stack_->server().snapshot();
      for (const auto& r : runs_) {
        if (!r.joined) continue;
        const WorldSnapshot snap = r.client->snapshot();
        if (!reference) reference = snap;
        if (!(snap == *reference)) {
          res.detail = r.script->user_id + " diverges (world_seq " + std::to_string(snap.world_seq) + " vs " +
                       std::to_string(reference->world_seq) + ")";
          return res;
        }
      }
      res.passed = true;
      res.detail = reference ? "world_seq " + std::to_string(reference->world_seq) : "no connected clients";
    } else if (a.name == "ordering" || a.name == "gap_free") {
      for (const auto& r : runs_) {
        bool ok = true;
        r.client->inspect([&](const session::WorldReplica& rep) {
          ok = a.name == "ordering" ? rep.per_object_ordered() : rep.gap_free();
        });
        if (!ok) {
          res.detail = r.script->user_id + " log fails the check";
          return res;
        }
      }
      res.passed = true;
    } else if (a.name == "robot_provenance") {
      if (!need_stack()) return res;
      auto problem = check_provenance(stack_->robot().command_log(), stack_->server().validation_log(),
                                      stack_->robot().unexplained_motion());
      res.passed = !problem;
      res.detail = problem.value_or(std::to_string(stack_->robot().command_log().size()) + " commands accounted for");
    } else if (a.name == "robot_commands") {
      if (!need_stack()) return res;
      const auto want = std::stoul(require_arg("count"));
      const auto got = stack_->robot().command_log().size();
      res.passed = got == want;
      res.detail = std::to_string(got) + " executed, expected " + std::to_string(want);
    } else if (a.name == "single_grant") {
      const auto object = arg("object");
      // contest key (object, t_ms) -> outcomes
      std::map<std::pair<std::string, std::int64_t>, std::vector<std::optional<bool>>> contests;
      for (const auto& r : runs_) {
        const auto responses = r.client->lock_responses();
        std::map<std::string, std::size_t> used;
        std::map<std::string, std::vector<bool>> by_object;
        for (const auto& [obj, granted] : responses) by_object[obj].push_back(granted);
        for (const auto& [obj, t] : r.lock_requests) {
          const std::size_t k = used[obj]++;
          std::optional<bool> outcome;
          if (k < by_object[obj].size()) outcome = by_object[obj][k];
          contests[{obj, t}].push_back(outcome);
        }
      }
      std::size_t checked = 0;
      for (const auto& [key, outcomes] : contests) {
        if (outcomes.size() < 2 || (object && key.first != *object)) continue;
        ++checked;
        std::size_t grants = 0;
        for (const auto& o : outcomes) {
          if (!o) {
            res.detail = "a request on '" + key.first + "' at t=" + std::to_string(key.second) + " got no answer";
            return res;
          }
          grants += *o ? 1 : 0;
        }
        if (grants != 1) {
          res.detail = std::to_string(grants) + " grants on '" + key.first + "' at t=" + std::to_string(key.second);
          return res;
        }
      }
      res.passed = checked > 0;
      res.detail = checked > 0 ? std::to_string(checked) + " contests, one grant each" : "no contested lock";
    } else if (a.name == "receipts") {
      const std::string user = require_arg("user");
      const auto expect = split_list(require_arg("expect"));
      for (const auto& r : runs_) {
        if (r.script->user_id != user) continue;
        std::vector<std::string> got;
        for (const auto& rc : r.client->receipts()) got.emplace_back(to_string(rc.event));
        res.passed = got == expect;
        res.detail = "got [" + join_list(got) + "]";
        return res;
      }
      res.detail = "no client '" + user + "'";
    } else if (a.name == "trajectory_accepted") {
      std::size_t n = 0;
      for (const auto& r : runs_) {
        const auto receipts = r.client->receipts();
        for (std::size_t i = 0; i < r.commands.size(); ++i) {
          if (r.commands[i] != CommandOrigin::trajectory) continue;
          ++n;
          if (i >= receipts.size() || receipts[i].event != RobotEventKind::accepted) {
            res.detail = r.script->user_id + " trajectory request " + std::to_string(i + 1) + " was " +
                         (i < receipts.size() ? std::string(to_string(receipts[i].event)) : "unanswered");
            return res;
          }
        }
      }
      res.passed = n > 0;
      res.detail = std::to_string(n) + " trajectory requests accepted";
    } else if (a.name == "degradation_trace") {
      if (!need_stack()) return res;
      const auto expect = split_list(require_arg("expect"));
      std::vector<std::string> got;
      for (const auto& rec : stack_->core().signal_log()) {
        if (rec.signal.kind == SignalKind::safe && !rec.timed_out && !rec.deferred)
          got.push_back(to_string(rec.signal));
      }
      res.passed = got == expect;
      res.detail = "got [" + join_list(got) + "]";
    } else if (a.name == "first_safe") {
      if (!need_stack()) return res;
      const int degree = std::stoi(require_arg("degree"));
      const std::int64_t after = std::stoll(require_arg("after_ms"));
      const std::int64_t within = std::stoll(require_arg("within_ms"));
      for (const auto& rec : stack_->core().signal_log()) {
        if (rec.signal.kind != SignalKind::safe || rec.timed_out || rec.deferred) continue;
        res.passed = rec.signal.degree == degree && rec.t_ms > after && rec.t_ms <= after + within;
        res.detail = "first " + to_string(rec.signal) + " at t=" + std::to_string(rec.t_ms);
        return res;
      }
      res.detail = "no SAFE signal";
    } else if (a.name == "module_status") {
      if (!need_stack()) return res;
      const std::string name = require_arg("module");
      auto m = stack_->core().module(name);
      if (!m) {
        res.passed = arg("loaded") == std::optional<std::string>("false");
        res.detail = "module not loaded";
        return res;
      }
      res.passed = arg("loaded") != std::optional<std::string>("false");
      if (auto st = arg("status")) res.passed = res.passed && *st == to_string(m->status);
      if (auto u = arg("active_units")) res.passed = res.passed && std::stoi(*u) == m->active_units;
      if (auto md = arg("mode")) res.passed = res.passed && *md == runtime::to_string(m->mode);
      res.detail = std::string(to_string(m->status)) + " " + std::to_string(m->active_units) + "/" +
                   std::to_string(m->requested_units) + " " + std::string(runtime::to_string(m->mode));
    } else if (a.name == "no_errors") {
      std::vector<std::string> problems = action_errors_;
      for (const auto& r : runs_) {
        for (const auto& e : r.client->errors())
          problems.push_back(r.script->user_id + ": " + e.code + " " + e.message);
      }
      res.passed = problems.empty();
      res.detail =
          problems.empty()
              ? "none"
              : problems.front() + (problems.size() > 1 ? " (+" + std::to_string(problems.size() - 1) + " more)" : "");
    }
    return res;
  }

  ScenarioReport evaluate() {
    ScenarioReport report;
    report.scenario = s_.name;
    report.seed = seed_;
    for (const auto& a : s_.assertions) {
      try {
        report.results.push_back(check(a));
      } catch (const std::exception& e) {
        report.results.push_back({a.name, false, e.what()});
      }
    }
    if (stack_) {
      for (const auto& rec : stack_->core().signal_log()) {
        if (rec.deferred) continue;
        report.signals.push_back("t=" + std::to_string(rec.t_ms) + " " + rec.module + " " + to_string(rec.signal) +
                                 (rec.timed_out ? " (timed out)" : ""));
      }
      report.robot_commands = stack_->robot().command_log().size();
    }
    for (auto& r : runs_) {
      if (r.joined && !stack_) r.transport->leave();
    }
    for (const auto& e : action_errors_) spdlog::debug("{}: {}", s_.name, e);
    return report;
  }

  const Scenario& s_;
  const RunOptions& opt_;
  std::uint64_t seed_;
  std::unique_ptr<LocalStack> stack_;
  std::vector<ClientRun> runs_;
  std::vector<std::string> action_errors_;
};

}  // namespace

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  return Runner(scenario, options).run();
}

std::string report_jsonl(const ScenarioReport& report) {
  std::string out;
  for (const auto& r : report.results) {
    nlohmann::ordered_json j;
    j["scenario"] = report.scenario;
    j["seed"] = report.seed;
    j["assertion"] = r.name;
    j["passed"] = r.passed;
    j["detail"] = r.detail;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace teleop::scenario
