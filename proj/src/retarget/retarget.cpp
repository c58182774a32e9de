#include "stage/retarget/retarget.hpp"

namespace stage::retarget {

JointMap build_joint_map(const Skeleton& source, const Skeleton& dest, const AliasTable& aliases) {
    JointMap map;
    map.source_of.resize(dest.size());
    for (std::size_t d = 0; d < dest.size(); ++d) {
        const std::string& name = dest.joints[d].name;
        std::optional<std::size_t> found = source.find(name);
        if (!found) {
            for (const auto& [a, b] : aliases) {
                if (b == name) found = source.find(a);
                else if (a == name) found = source.find(b);
                if (found) break;
            }
        }
        map.source_of[d] = found;
        if (!found) map.unmapped.push_back(d);
    }
    if (!dest.joints.empty() && !map.source_of.front()) {
        throw RetargetError("destination root '" + dest.joints.front().name + "' has no source joint");
    }
    return map;
}

RetargetProfile::RetargetProfile(Skeleton source, Skeleton dest, JointMap map)
    : source_(std::move(source)), dest_(std::move(dest)), map_(std::move(map)) {
    if (!(source_.height > 0.0) || !(dest_.height > 0.0)) throw RetargetError("skeleton heights must be positive");
    if (map_.source_of.size() != dest_.size()) throw RetargetError("joint map does not cover the destination rig");
    height_ratio_ = dest_.height / source_.height;
    correction_.resize(dest_.size(), Quat::identity());
    for (std::size_t d = 0; d < dest_.size(); ++d) {
        const auto& s = map_.source_of[d];
        if (!s) continue;
        if (*s >= source_.size()) throw RetargetError("joint map index out of range");
        const Quat& db = dest_.joints[d].bind_rotation;
        const Quat& sb = source_.joints[*s].bind_rotation;
        if (db == sb) continue;  // exact identity, not a rounded one
        const Quat c = db.conjugate() * sb;
        correction_[d] = c == Quat::identity() ? c : c.normalized();
    }
}

RetargetProfile RetargetProfile::identity(const Skeleton& skeleton) {
    return make_profile(skeleton, skeleton, {});
}

RetargetProfile make_profile(const Skeleton& source, const Skeleton& dest, const AliasTable& aliases) {
    return RetargetProfile(source, dest, build_joint_map(source, dest, aliases));
}

Pose retarget(const Pose& pose, const RetargetProfile& profile) {
    const Skeleton& src = profile.source();
    if (pose.local_rotations.size() != src.size()) {
        throw PoseMismatch("pose has " + std::to_string(pose.local_rotations.size()) +
                           " rotations, profile source has " + std::to_string(src.size()) + " joints");
    }
    const auto& source_of = profile.joint_map().source_of;
    const auto& correction = profile.bind_corrections();

    Pose out;
    out.timestamp = pose.timestamp;
    out.local_rotations.resize(profile.dest().size(), Quat::identity());
    for (std::size_t d = 0; d < source_of.size(); ++d) {
        if (!source_of[d]) continue;
        const Quat& local = pose.local_rotations[*source_of[d]];
        out.local_rotations[d] = correction[d] == Quat::identity() ? local : (correction[d] * local).normalized();
    }
    const double ratio = profile.height_ratio();
    out.root_translation = ratio == 1.0 ? pose.root_translation : ratio * pose.root_translation;
    return out;
}

}  // namespace stage::retarget
