#include "stage/core/skeleton.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

namespace stage {

std::optional<std::size_t> Skeleton::find(std::string_view name) const {
    for (std::size_t i = 0; i < joints.size(); ++i) {
        if (joints[i].name == name) return i;
    }
    return std::nullopt;
}

Pose rest_pose(const Skeleton& skeleton) {
    Pose pose;
    pose.local_rotations.assign(skeleton.size(), Quat::identity());
    if (!skeleton.joints.empty()) pose.root_translation = skeleton.joints.front().bind_offset;
    return pose;
}

std::vector<Transform> forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
    if (pose.local_rotations.size() != skeleton.size()) {
        throw PoseMismatch("pose has " + std::to_string(pose.local_rotations.size()) + " rotations, skeleton has " +
                           std::to_string(skeleton.size()) + " joints");
    }
    std::vector<Transform> world(skeleton.size());
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        const Joint& joint = skeleton.joints[i];
        const Quat local = joint.bind_rotation * pose.local_rotations[i];
        if (!joint.parent) {
            world[i] = {local, pose.root_translation};
            continue;
        }
        const std::size_t p = *joint.parent;
        if (p >= i) throw PoseMismatch("skeleton is not topologically sorted at joint " + joint.name);
        const Transform& parent = world[p];
        world[i] = {parent.rotation * local, parent.position + parent.rotation.rotate(joint.bind_offset)};
    }
    return world;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Empty: return "empty";
        case ViolationKind::NoRoot: return "no root";
        case ViolationKind::MultipleRoots: return "multiple roots";
        case ViolationKind::Cycle: return "cycle";
        case ViolationKind::DuplicateName: return "duplicate name";
        case ViolationKind::NonUnitBindRotation: return "non-unit bind rotation";
        case ViolationKind::NonPositiveHeight: return "non-positive height";
    }
    return "unknown";
}

std::vector<Violation> validate_skeleton(const Skeleton& skeleton) {
    std::vector<Violation> out;
    if (skeleton.joints.empty()) {
        out.push_back({ViolationKind::Empty, std::nullopt, "skeleton has no joints"});
    }
    if (!(skeleton.height > 0.0)) {
        out.push_back({ViolationKind::NonPositiveHeight, std::nullopt,
                       "height " + std::to_string(skeleton.height) + " is not positive"});
    }

    std::size_t roots = 0;
    std::unordered_map<std::string_view, std::size_t> seen;
    for (std::size_t i = 0; i < skeleton.joints.size(); ++i) {
        const Joint& j = skeleton.joints[i];
        if (!j.parent) {
            ++roots;
        } else if (*j.parent >= i) {
            // a parent at or after its child means a self-reference, a forward edge or a loop
            out.push_back({ViolationKind::Cycle, i,
                           "joint '" + j.name + "' has parent index " + std::to_string(*j.parent) +
                               " which does not precede it"});
        }
        if (auto [it, inserted] = seen.emplace(j.name, i); !inserted) {
            out.push_back({ViolationKind::DuplicateName, i,
                           "joint name '" + j.name + "' already used by joint " + std::to_string(it->second)});
        }
        if (std::abs(j.bind_rotation.norm() - 1.0) > 1e-6) {
            out.push_back({ViolationKind::NonUnitBindRotation, i, "bind rotation of '" + j.name + "' is not unit"});
        }
    }
    if (!skeleton.joints.empty() && roots == 0) {
        out.push_back({ViolationKind::NoRoot, std::nullopt, "skeleton has no root joint"});
    }
    if (roots > 1) {
        out.push_back({ViolationKind::MultipleRoots, std::nullopt, std::to_string(roots) + " root joints"});
    }
    return out;
}

bool is_bound(const Pose& pose, const Skeleton& skeleton, double tol) {
    if (pose.local_rotations.size() != skeleton.size()) return false;
    for (const Quat& q : pose.local_rotations) {
        if (std::abs(q.norm() - 1.0) > tol) return false;
    }
    return true;
}

}  // namespace stage
