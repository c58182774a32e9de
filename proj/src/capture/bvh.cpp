#include "stage/capture/bvh.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

namespace stage::capture {

BvhError::BvhError(Kind kind, std::size_t line, const std::string& message)
    : std::runtime_error("bvh line " + std::to_string(line) + ": " + message), kind_(kind), line_(line) {}

namespace {

struct Token {
    std::string_view text;
    std::size_t line;
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
        } else if (c == '{' || c == '}') {
            out.push_back({text.substr(i, 1), line});
            ++i;
        } else {
            const std::size_t start = i;
            while (i < text.size()) {
                const char d = text[i];
                if (d == ' ' || d == '\t' || d == '\r' || d == '\n' || d == '\f' || d == '\v' || d == '{' || d == '}')
                    break;
                ++i;
            }
            out.push_back({text.substr(start, i - start), line});
        }
    }
    return out;
}

enum class Channel { PosX, PosY, PosZ, RotX, RotY, RotZ };

struct JointChannels {
    std::vector<Channel> channels;
};

class Cursor {
public:
    Cursor(const std::vector<Token>& tokens, std::size_t last_line) : tokens_(tokens), last_line_(last_line) {}

    bool at_end() const { return pos_ >= tokens_.size(); }
    std::size_t line() const { return at_end() ? last_line_ : tokens_[pos_].line; }

    const Token& next(std::string_view what) {
        if (at_end()) throw BvhError(BvhError::Kind::Syntax, last_line_, "unexpected end of input, expected " + std::string(what));
        return tokens_[pos_++];
    }

    std::optional<std::string_view> peek() const {
        if (at_end()) return std::nullopt;
        return tokens_[pos_].text;
    }

    void expect(std::string_view keyword) {
        const Token& t = next(keyword);
        if (t.text != keyword) {
            throw BvhError(BvhError::Kind::Syntax, t.line,
                           "expected '" + std::string(keyword) + "', found '" + std::string(t.text) + "'");
        }
    }

    double number(std::string_view what) {
        const Token& t = next(what);
        double v = 0.0;
        const char* end = t.text.data() + t.text.size();
        auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            throw BvhError(BvhError::Kind::Syntax, t.line,
                           "expected " + std::string(what) + ", found '" + std::string(t.text) + "'");
        }
        return v;
    }

    std::size_t count(std::string_view what, std::size_t max) {
        const Token& t = next(what);
        std::size_t v = 0;
        const char* end = t.text.data() + t.text.size();
        auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
        if (ec != std::errc() || ptr != end || v > max) {
            throw BvhError(BvhError::Kind::Syntax, t.line,
                           "invalid " + std::string(what) + " '" + std::string(t.text) + "'");
        }
        return v;
    }

private:
    const std::vector<Token>& tokens_;
    std::size_t pos_ = 0;
    std::size_t last_line_;
};

JointChannels read_channels(Cursor& cur) {
    JointChannels out;
    if (cur.peek() != std::string_view("CHANNELS")) return out;
    const std::size_t keyword_line = cur.line();
    cur.expect("CHANNELS");
    const std::size_t n = cur.count("channel count", 6);
    std::string rotation_order;
    bool seen[6] = {};
    for (std::size_t i = 0; i < n; ++i) {
        const Token& t = cur.next("channel name");
        Channel c;
        if (t.text == "Xposition") c = Channel::PosX;
        else if (t.text == "Yposition") c = Channel::PosY;
        else if (t.text == "Zposition") c = Channel::PosZ;
        else if (t.text == "Xrotation") c = Channel::RotX;
        else if (t.text == "Yrotation") c = Channel::RotY;
        else if (t.text == "Zrotation") c = Channel::RotZ;
        else throw BvhError(BvhError::Kind::UnsupportedChannel, t.line, "unsupported channel '" + std::string(t.text) + "'");
        if (seen[static_cast<int>(c)]) {
            throw BvhError(BvhError::Kind::UnsupportedChannel, t.line, "channel '" + std::string(t.text) + "' repeated");
        }
        seen[static_cast<int>(c)] = true;
        if (c == Channel::RotX) rotation_order += 'X';
        if (c == Channel::RotY) rotation_order += 'Y';
        if (c == Channel::RotZ) rotation_order += 'Z';
        out.channels.push_back(c);
    }
    if (!rotation_order.empty() && rotation_order != "ZXY" && rotation_order != "XYZ" && rotation_order != "ZYX") {
        throw BvhError(BvhError::Kind::UnsupportedChannel, keyword_line,
                       "unsupported rotation order " + rotation_order + " (supported: ZXY, XYZ, ZYX)");
    }
    return out;
}

Vec3 read_offset(Cursor& cur) {
    cur.expect("OFFSET");
    Vec3 v;
    v.x = cur.number("offset x");
    v.y = cur.number("offset y");
    v.z = cur.number("offset z");
    return v;
}

struct EndSite {
    std::size_t parent;
    Vec3 offset;
};

double bind_height(const Skeleton& skeleton, const std::vector<EndSite>& end_sites) {
    std::vector<Vec3> world(skeleton.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto extend = [&](const Vec3& p) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
    };
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
        const Joint& j = skeleton.joints[i];
        world[i] = j.parent ? world[*j.parent] + j.bind_offset : j.bind_offset;
        extend(world[i]);
    }
    for (const EndSite& e : end_sites) extend(world[e.parent] + e.offset);
    return hi - lo;
}

Quat axis_rotation(Channel c, double degrees) {
    const double r = deg_to_rad(degrees);
    switch (c) {
        case Channel::RotX: return Quat::from_axis_angle({1, 0, 0}, r);
        case Channel::RotY: return Quat::from_axis_angle({0, 1, 0}, r);
        case Channel::RotZ: return Quat::from_axis_angle({0, 0, 1}, r);
        default: return Quat::identity();
    }
}

}  // namespace

MotionClip parse_bvh(std::string_view text) {
    const std::vector<Token> tokens = tokenize(text);
    std::size_t last_line = 1;
    for (char c : text) last_line += (c == '\n');
    if (tokens.empty()) throw BvhError(BvhError::Kind::Syntax, 1, "empty input");

    Cursor cur(tokens, last_line);
    cur.expect("HIERARCHY");

    MotionClip clip;
    std::vector<JointChannels> channels;
    std::vector<std::size_t> joint_lines;
    std::vector<EndSite> end_sites;
    std::vector<std::size_t> open;  // joints whose block is not yet closed

    auto open_joint = [&](std::optional<std::size_t> parent) {
        const Token& name = cur.next("joint name");
        if (name.text == "{" || name.text == "}") {
            throw BvhError(BvhError::Kind::Syntax, name.line, "missing joint name");
        }
        cur.expect("{");
        Joint j;
        j.name = std::string(name.text);
        j.parent = parent;
        j.bind_offset = read_offset(cur);
        clip.skeleton.joints.push_back(std::move(j));
        channels.push_back(read_channels(cur));
        joint_lines.push_back(name.line);
        open.push_back(clip.skeleton.joints.size() - 1);
    };

    const std::size_t root_line = cur.line();
    cur.expect("ROOT");
    open_joint(std::nullopt);
    while (!open.empty()) {
        const Token& t = cur.next("JOINT, End Site or '}'");
        if (t.text == "JOINT") {
            open_joint(open.back());
        } else if (t.text == "End") {
            cur.expect("Site");
            cur.expect("{");
            end_sites.push_back({open.back(), read_offset(cur)});
            cur.expect("}");
        } else if (t.text == "}") {
            open.pop_back();
        } else {
            throw BvhError(BvhError::Kind::Syntax, t.line, "unexpected token '" + std::string(t.text) + "' in hierarchy");
        }
    }

    clip.skeleton.height = bind_height(clip.skeleton, end_sites);
    for (const Violation& v : validate_skeleton(clip.skeleton)) {
        const std::size_t line = v.joint ? joint_lines[*v.joint] : root_line;
        throw BvhError(BvhError::Kind::InvalidSkeleton, line, v.message);
    }

    if (cur.peek() == std::string_view("ROOT")) {
        throw BvhError(BvhError::Kind::Syntax, cur.line(), "multiple ROOT hierarchies are not supported");
    }
    cur.expect("MOTION");
    cur.expect("Frames:");
    constexpr std::size_t kMaxFrames = 10'000'000;
    const std::size_t frame_count = cur.count("frame count", kMaxFrames);
    cur.expect("Frame");
    cur.expect("Time:");
    const std::size_t time_line = cur.line();
    clip.frame_time = cur.number("frame time");
    if (!(clip.frame_time > 0.0)) throw BvhError(BvhError::Kind::Syntax, time_line, "frame time must be positive");

    std::size_t per_frame = 0;
    for (const JointChannels& jc : channels) per_frame += jc.channels.size();

    // Count the remaining values before allocating anything proportional to the header.
    {
        Cursor probe = cur;
        std::size_t remaining = 0;
        while (!probe.at_end()) {
            probe.next("value");
            ++remaining;
        }
        if (remaining != frame_count * per_frame) {
            throw BvhError(BvhError::Kind::FrameCountMismatch, cur.line(),
                           "header declares " + std::to_string(frame_count) + " frames of " +
                               std::to_string(per_frame) + " values, found " + std::to_string(remaining) + " values");
        }
    }

    const Vec3 root_offset = clip.skeleton.joints.front().bind_offset;
    clip.frames.reserve(frame_count);
    for (std::size_t f = 0; f < frame_count; ++f) {
        Pose pose;
        pose.timestamp = clip.frame_time * static_cast<double>(f);
        pose.root_translation = root_offset;
        pose.local_rotations.resize(clip.skeleton.size());
        for (std::size_t j = 0; j < channels.size(); ++j) {
            Quat q = Quat::identity();
            for (Channel c : channels[j].channels) {
                const double v = cur.number("channel value");
                switch (c) {
                    case Channel::PosX:
                        if (j == 0) pose.root_translation.x = v;
                        break;
                    case Channel::PosY:
                        if (j == 0) pose.root_translation.y = v;
                        break;
                    case Channel::PosZ:
                        if (j == 0) pose.root_translation.z = v;
                        break;
                    default: q = q * axis_rotation(c, v); break;
                }
            }
            pose.local_rotations[j] = q.normalized();
        }
        clip.frames.push_back(std::move(pose));
    }
    return clip;
}

namespace {

// Z-X-Y Euler angles in degrees such that q == Rz * Rx * Ry.
std::array<double, 3> to_euler_zxy(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    const double m01 = 2.0 * (x * y - w * z);
    const double m11 = 1.0 - 2.0 * (x * x + z * z);
    const double m20 = 2.0 * (x * z - w * y);
    const double m21 = 2.0 * (y * z + w * x);
    const double m22 = 1.0 - 2.0 * (x * x + y * y);
    const double rx = std::asin(std::clamp(m21, -1.0, 1.0));
    const double rz = std::atan2(-m01, m11);
    const double ry = std::atan2(-m20, m22);
    return {rad_to_deg(rz), rad_to_deg(rx), rad_to_deg(ry)};
}

void append_number(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

void append_offset(std::string& out, const std::string& indent, const Vec3& o) {
    out += indent + "OFFSET ";
    append_number(out, o.x);
    out += ' ';
    append_number(out, o.y);
    out += ' ';
    append_number(out, o.z);
    out += '\n';
}

}  // namespace

std::string write_bvh(const MotionClip& clip) {
    const Skeleton& s = clip.skeleton;
    std::vector<std::vector<std::size_t>> children(s.size());
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s.joints[i].parent) children[*s.joints[i].parent].push_back(i);
    }

    std::string out = "HIERARCHY\n";
    // explicit stack: (joint, next child slot)
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    auto emit_open = [&](std::size_t j) {
        const std::string indent(2 * stack.size(), ' ');
        out += indent + (j == 0 ? "ROOT " : "JOINT ") + s.joints[j].name + "\n" + indent + "{\n";
        append_offset(out, indent + "  ", s.joints[j].bind_offset);
        out += indent + (j == 0 ? "  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                                : "  CHANNELS 3 Zrotation Xrotation Yrotation\n");
        stack.emplace_back(j, 0);
    };
    if (!s.joints.empty()) emit_open(0);
    while (!stack.empty()) {
        auto& [j, slot] = stack.back();
        if (slot < children[j].size()) {
            const std::size_t child = children[j][slot++];
            emit_open(child);
            continue;
        }
        const std::string indent(2 * (stack.size() - 1), ' ');
        if (children[j].empty()) {
            out += indent + "  End Site\n" + indent + "  {\n";
            append_offset(out, indent + "    ", {0.0, 0.0, 0.0});
            out += indent + "  }\n";
        }
        out += indent + "}\n";
        stack.pop_back();
    }

    out += "MOTION\nFrames: " + std::to_string(clip.frames.size()) + "\nFrame Time: ";
    append_number(out, clip.frame_time);
    out += '\n';
    for (const Pose& p : clip.frames) {
        append_number(out, p.root_translation.x);
        out += ' ';
        append_number(out, p.root_translation.y);
        out += ' ';
        append_number(out, p.root_translation.z);
        for (const Quat& q : p.local_rotations) {
            for (double a : to_euler_zxy(q)) {
                out += ' ';
                append_number(out, a);
            }
        }
        out += '\n';
    }
    return out;
}

Pose sample_clip(const MotionClip& clip, double t) {
    if (clip.frames.empty()) throw ClipError("cannot sample an empty clip");
    if (!(t >= 0.0)) throw ClipError("sample time must be non-negative");

    const double u = t / clip.frame_time;
    const auto last = clip.frames.size() - 1;
    const double nearest = std::round(u);
    if (std::abs(u - nearest) < 1e-9) {
        const auto k = static_cast<std::size_t>(std::min(nearest, static_cast<double>(last)));
        Pose p = clip.frames[k];
        p.timestamp = t;
        return p;
    }
    if (u >= static_cast<double>(last)) {
        Pose p = clip.frames[last];
        p.timestamp = t;
        return p;
    }

    const auto k = static_cast<std::size_t>(std::floor(u));
    const double frac = u - static_cast<double>(k);
    const Pose& a = clip.frames[k];
    const Pose& b = clip.frames[k + 1];
    Pose out;
    out.timestamp = t;
    out.root_translation = lerp(a.root_translation, b.root_translation, frac);
    out.local_rotations.resize(a.local_rotations.size());
    for (std::size_t j = 0; j < a.local_rotations.size(); ++j) {
        out.local_rotations[j] = slerp(a.local_rotations[j], b.local_rotations[j], frac);
    }
    return out;
}

}  // namespace stage::capture
