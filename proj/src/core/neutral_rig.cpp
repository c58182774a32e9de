#include "stage/core/neutral_rig.hpp"

namespace stage {

namespace neutral {

const std::array<std::string_view, kJointCount> kJointNames = {
    "Hips",          "Spine",         "Spine1",        "Spine2",       "Spine3",        "Neck",
    "Head",          "LeftShoulder",  "LeftUpperArm",  "LeftForearm",  "LeftHand",      "RightShoulder",
    "RightUpperArm", "RightForearm",  "RightHand",     "LeftUpperLeg", "LeftLowerLeg",  "LeftFoot",
    "LeftToe",       "RightUpperLeg", "RightLowerLeg", "RightFoot",    "RightToe",
};

}  // namespace neutral

namespace {

Skeleton build_neutral() {
    using namespace neutral;
    struct Row {
        std::optional<std::size_t> parent;
        Vec3 offset;
    };
    // clang-format off
    const std::array<Row, kJointCount> rows = {{
        {std::nullopt,   {0.0, 0.98, 0.0}},    // Hips
        {Hips,           {0.0, 0.10, 0.0}},    // Spine
        {Spine,          {0.0, 0.10, 0.0}},    // Spine1
        {Spine1,         {0.0, 0.10, 0.0}},    // Spine2
        {Spine2,         {0.0, 0.12, 0.0}},    // Spine3
        {Spine3,         {0.0, 0.10, 0.0}},    // Neck
        {Neck,           {0.0, 0.12, 0.0}},    // Head
        {Spine3,         {0.0, 0.05, -0.04}},  // LeftShoulder
        {LeftShoulder,   {0.0, 0.0, -0.14}},   // LeftUpperArm
        {LeftUpperArm,   {0.0, 0.0, -0.30}},   // LeftForearm
        {LeftForearm,    {0.0, 0.0, -0.26}},   // LeftHand
        {Spine3,         {0.0, 0.05, 0.04}},   // RightShoulder
        {RightShoulder,  {0.0, 0.0, 0.14}},    // RightUpperArm
        {RightUpperArm,  {0.0, 0.0, 0.30}},    // RightForearm
        {RightForearm,   {0.0, 0.0, 0.26}},    // RightHand
        {Hips,           {0.0, -0.06, -0.10}}, // LeftUpperLeg
        {LeftUpperLeg,   {0.0, -0.42, 0.0}},   // LeftLowerLeg
        {LeftLowerLeg,   {0.0, -0.42, 0.0}},   // LeftFoot
        {LeftFoot,       {0.14, -0.08, 0.0}},  // LeftToe
        {Hips,           {0.0, -0.06, 0.10}},  // RightUpperLeg
        {RightUpperLeg,  {0.0, -0.42, 0.0}},   // RightLowerLeg
        {RightLowerLeg,  {0.0, -0.42, 0.0}},   // RightFoot
        {RightFoot,      {0.14, -0.08, 0.0}},  // RightToe
    }};
    // clang-format on

    Skeleton s;
    s.height = kHeight;
    s.joints.reserve(kJointCount);
    for (std::size_t i = 0; i < kJointCount; ++i) {
        s.joints.push_back({std::string(kJointNames[i]), rows[i].parent, rows[i].offset, Quat::identity()});
    }
    return s;
}

}  // namespace

const Skeleton& neutral_skeleton() {
    static const Skeleton skeleton = build_neutral();
    return skeleton;
}

}  // namespace stage
