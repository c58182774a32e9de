#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "stage/bus/value.hpp"
#include "stage/capture/bvh.hpp"
#include "stage/capture/device_frame.hpp"
#include "stage/pathfind/navmesh.hpp"
#include "stage/retarget/retarget.hpp"

namespace stage::testing {

using Rng = std::mt19937_64;

// Procedural rigs. The device rig uses inertial-suit joint names and is 5% shorter
// than the neutral rig; the avatar is 10% taller and carries 17 extra joints.
// Both are uniform scalings of the neutral proportions so foot level survives
// retargeting. Their heights equal the joint extent, so a BVH round trip keeps them.
inline constexpr double kDeviceScale = 0.95;
inline constexpr double kAvatarScale = 1.10;
Skeleton device32();
Skeleton avatar40();
// The neutral rig scaled by `s`, with a head-top joint so its extent is s * 1.80.
Skeleton scaled_neutral(double s);

// Copy of `s` with every bind rotation replaced by a random unit quaternion.
Skeleton with_random_binds(Skeleton s, Rng& rng);

// 600 frames at 60 fps of a character walking a 1.5 m circle while waving.
capture::MotionClip walking_replay(const Skeleton& device, std::size_t frames = 600, double frame_time = 1.0 / 60.0);

Quat random_unit_quat(Rng& rng);
Pose random_pose(const Skeleton& s, Rng& rng, double root_range = 3.0);

// Independent world transforms by 4x4 homogeneous matrix products.
std::vector<Transform> fk_by_matrices(const Skeleton& s, const Pose& pose);

// Independent shortest-path oracle over the mesh's 8-connected grid, with exact
// comparison of a + b*sqrt(2) costs. Empty when the goal cell is unreachable.
std::optional<pathfind::StepCount> dijkstra_steps(const pathfind::NavMesh& mesh, std::size_t from, std::size_t to);

// Random grid of at most max_side x max_side cells with the given obstacle density.
// At least one cell is walkable.
pathfind::NavMesh random_mesh(Rng& rng, std::size_t max_side, double density, double cell = 0.25);
// Uniformly chosen walkable cell.
std::size_t random_walkable(const pathfind::NavMesh& mesh, Rng& rng);
// Checks that `path` is a connected chain of legal moves whose step count is path.steps.
bool path_is_legal(const pathfind::NavMesh& mesh, const pathfind::Path& path);

// Minimal signed turn from `current` to `target` by checking every candidate
// target - current + 360k. Ties go to the positive turn.
double brute_force_correction(double current_deg, double target_deg);

// Device datagram writer; the server only ever decodes these.
std::vector<std::uint8_t> encode_device_frame(const capture::DeviceFrame& frame);
capture::DeviceFrame random_device_frame(Rng& rng, std::size_t joints);

// Random Value whose depth is at most `max_depth`. Floats include NaN and
// infinities; strings include multi-byte UTF-8.
bus::Value random_value(Rng& rng, std::size_t max_depth);

std::string read_text(const std::string& path);

}  // namespace stage::testing
