#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stage/core/math.hpp"

namespace stage {

struct Joint {
    std::string name;
    std::optional<std::size_t> parent;  // none for the root
    Vec3 bind_offset;                   // offset from parent in bind pose
    Quat bind_rotation;
};

// Joints are topologically sorted: every parent index is lower than its child's.
struct Skeleton {
    std::vector<Joint> joints;
    double height = 0.0;  // bind-pose vertical extent, meters

    std::size_t size() const { return joints.size(); }
    std::optional<std::size_t> find(std::string_view name) const;
};

// Root translation is the absolute position of the root joint.
struct Pose {
    std::vector<Quat> local_rotations;
    Vec3 root_translation;
    double timestamp = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

// Identity local rotations with the root at its bind offset.
Pose rest_pose(const Skeleton& skeleton);

struct Transform {
    Quat rotation;
    Vec3 position;
};

class PoseMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// World transform of every joint. Throws PoseMismatch when the pose is not bound to the skeleton.
std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose);

enum class ViolationKind { Empty, NoRoot, MultipleRoots, Cycle, DuplicateName, NonUnitBindRotation, NonPositiveHeight };

struct Violation {
    ViolationKind kind;
    std::optional<std::size_t> joint;
    std::string message;
};

std::string_view to_string(ViolationKind kind);

// Every invariant violation; empty means the skeleton is valid.
std::vector<Violation> validate_skeleton(const Skeleton& skeleton);

// True when the pose carries one unit quaternion per joint of `skeleton`.
bool is_bound(const Pose& pose, const Skeleton& skeleton, double tol = 1e-6);

}  // namespace stage
