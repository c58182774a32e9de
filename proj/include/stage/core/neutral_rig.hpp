#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "stage/core/skeleton.hpp"

namespace stage {

// The fixed intermediate character every capture source is normalized onto.
// 23 joints, 1.80 m tall, T-pose, facing +X with its left side towards -Z.
namespace neutral {

inline constexpr std::size_t kJointCount = 23;
inline constexpr double kHeight = 1.80;

enum Joint : std::size_t {
    Hips,
    Spine,
    Spine1,
    Spine2,
    Spine3,
    Neck,
    Head,
    LeftShoulder,
    LeftUpperArm,
    LeftForearm,
    LeftHand,
    RightShoulder,
    RightUpperArm,
    RightForearm,
    RightHand,
    LeftUpperLeg,
    LeftLowerLeg,
    LeftFoot,
    LeftToe,
    RightUpperLeg,
    RightLowerLeg,
    RightFoot,
    RightToe,
};

extern const std::array<std::string_view, kJointCount> kJointNames;

}  // namespace neutral

const Skeleton& neutral_skeleton();

}  // namespace stage
