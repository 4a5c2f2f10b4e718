#pragma once

#include <string>

#include "teleop/types.hpp"
#include "teleop/xml.hpp"

namespace teleop::session {

/// <scene> with <object id x y z [qw qx qy qz]/> children. Orientation
/// defaults to identity and is normalized.
WorldSnapshot parse_scene(const xml::Element& root);
WorldSnapshot load_scene(const std::string& path);

/// Three reference blocks on the work table.
WorldSnapshot default_scene();

}  // namespace teleop::session
