#include "teleop/session/scene.hpp"

#include <algorithm>

#include "teleop/error.hpp"

namespace teleop::session {

namespace {

ShareableObject block(std::string id, double x, double y, double z) {
  ShareableObject o;
  o.object_id = std::move(id);
  o.kind = ObjectKind::scene_object;
  Pose p;
  p.position = Eigen::Vector3d(x, y, z);
  o.state = p;
  return o;
}

}  // namespace

WorldSnapshot parse_scene(const xml::Element& root) {
  if (root.name != "scene") {
    throw Error(Errc::schema, "line " + std::to_string(root.line) + ": expected <scene>, found <" + root.name + ">");
  }
  xml::StrictElement scene(root);
  WorldSnapshot snapshot;
  for (const auto* el : scene.children("object")) {
    xml::StrictElement e(*el);
    ShareableObject o;
    o.object_id = e.required("id");
    if (o.object_id.empty() || o.object_id.rfind("phantom:", 0) == 0) e.fail("invalid object id '" + o.object_id + "'");
    Pose p;
    p.position = Eigen::Vector3d(e.required_number("x"), e.required_number("y"), e.required_number("z"));
    Eigen::Quaterniond q(e.optional_number("qw", 1.0), e.optional_number("qx", 0.0), e.optional_number("qy", 0.0),
                         e.optional_number("qz", 0.0));
    if (q.norm() < 1e-12) e.fail("zero quaternion");
    p.orientation = q.normalized();
    o.state = p;
    e.finish();
    snapshot.objects.push_back(std::move(o));
  }
  scene.finish();
  std::sort(snapshot.objects.begin(), snapshot.objects.end(),
            [](const ShareableObject& a, const ShareableObject& b) { return a.object_id < b.object_id; });
  for (std::size_t i = 1; i < snapshot.objects.size(); ++i) {
    if (snapshot.objects[i].object_id == snapshot.objects[i - 1].object_id) {
      throw Error(Errc::schema, "duplicate scene object '" + snapshot.objects[i].object_id + "'");
    }
  }
  return snapshot;
}

WorldSnapshot load_scene(const std::string& path) { return parse_scene(xml::parse_file(path)); }

WorldSnapshot default_scene() {
  WorldSnapshot s;
  s.objects.push_back(block("block_a", 0.35, -0.15, 0.05));
  s.objects.push_back(block("block_b", 0.40, 0.00, 0.05));
  s.objects.push_back(block("block_c", 0.35, 0.15, 0.05));
  return s;
}

}  // namespace teleop::session
