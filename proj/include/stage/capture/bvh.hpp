#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stage/core/skeleton.hpp"

namespace stage::capture {

struct MotionClip {
    Skeleton skeleton;
    std::vector<Pose> frames;
    double frame_time = 0.0;  // seconds

    double duration() const { return frames.empty() ? 0.0 : frame_time * static_cast<double>(frames.size() - 1); }
};

class BvhError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnsupportedChannel, FrameCountMismatch, InvalidSkeleton };

    BvhError(Kind kind, std::size_t line, const std::string& message);

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }  // 1-based; 0 when the input is empty

private:
    Kind kind_;
    std::size_t line_;
};

// Parses HIERARCHY/MOTION text. Rotation channels must come as one of the
// Z-X-Y, X-Y-Z or Z-Y-X triples. Position channels on the root drive the root
// translation; on other joints they are read and ignored. End Site blocks
// contribute to the skeleton height but not to the joint list.
MotionClip parse_bvh(std::string_view text);

// Serializes with Xposition Yposition Zposition on the root and
// Zrotation Xrotation Yrotation on every joint.
std::string write_bvh(const MotionClip& clip);

class ClipError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Pose at time `t` by slerp between bracketing frames, clamped at the last frame.
Pose sample_clip(const MotionClip& clip, double t);

}  // namespace stage::capture
