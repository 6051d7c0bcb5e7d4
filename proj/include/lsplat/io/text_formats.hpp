#pragma once

#include <string>
#include <vector>

#include "lsplat/geometry/skeleton.hpp"
#include "lsplat/splatting/camera.hpp"

namespace lsplat {

/// Whitespace-delimited text formats, each with a "<name> <version>" header
/// line and '#' comments. See docs/formats.md for the schemas.

void save_skeleton(const std::string& path, const Skeleton& skeleton);
Skeleton load_skeleton(const std::string& path);

void save_camera(const std::string& path, const Camera& cam);
Camera load_camera(const std::string& path);

/// Pose sequence: one frame per line, root translation then per-joint
/// axis-angle triples.
void save_poses(const std::string& path, const std::vector<Pose>& poses);
std::vector<Pose> load_poses(const std::string& path);

}  // namespace lsplat
