#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stage/core/skeleton.hpp"

namespace stage::retarget {

// Name equivalences between rigs; each pair is symmetric ("Hip" <-> "Hips").
using AliasTable = std::vector<std::pair<std::string, std::string>>;

struct JointMap {
    // source joint driving each destination joint, indexed by destination joint
    std::vector<std::optional<std::size_t>> source_of;
    std::vector<std::size_t> unmapped;  // destination joints with no source

    std::size_t mapped_count() const { return source_of.size() - unmapped.size(); }
};

class RetargetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Matches destination joints by exact name first, then through the alias table.
// Throws RetargetError when the destination root finds no source.
JointMap build_joint_map(const Skeleton& source, const Skeleton& dest, const AliasTable& aliases);

// Precomputed once per rig pair; per-frame work is rotation composition only.
class RetargetProfile {
public:
    RetargetProfile(Skeleton source, Skeleton dest, JointMap map);

    static RetargetProfile identity(const Skeleton& skeleton);

    const Skeleton& source() const { return source_; }
    const Skeleton& dest() const { return dest_; }
    const JointMap& joint_map() const { return map_; }
    double height_ratio() const { return height_ratio_; }
    const std::vector<Quat>& bind_corrections() const { return correction_; }

private:
    Skeleton source_;
    Skeleton dest_;
    JointMap map_;
    double height_ratio_;
    std::vector<Quat> correction_;  // dest bind^-1 * source bind, per destination joint
};

RetargetProfile make_profile(const Skeleton& source, const Skeleton& dest, const AliasTable& aliases);

// Copies mapped rotations with bind-pose correction, leaves unmapped joints at rest
// and scales the root translation by the height ratio.
Pose retarget(const Pose& pose, const RetargetProfile& profile);

}  // namespace stage::retarget
