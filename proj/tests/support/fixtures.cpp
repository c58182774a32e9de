#include "fixtures.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stage/core/neutral_rig.hpp"

namespace stage::testing {

namespace {

struct Bone {
    const char* name;
    int parent;
    Vec3 offset;  // unscaled, neutral proportions
};

Skeleton build(const std::vector<Bone>& bones, double scale) {
    Skeleton s;
    std::vector<Vec3> world;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Bone& b : bones) {
        Joint j;
        j.name = b.name;
        if (b.parent >= 0) j.parent = static_cast<std::size_t>(b.parent);
        j.bind_offset = scale * b.offset;
        world.push_back(j.parent ? world[*j.parent] + j.bind_offset : j.bind_offset);
        lo = std::min(lo, world.back().y);
        hi = std::max(hi, world.back().y);
        s.joints.push_back(std::move(j));
    }
    s.height = hi - lo;
    return s;
}

std::vector<Bone> neutral_bones() {
    std::vector<Bone> out;
    for (const Joint& j : neutral_skeleton().joints) {
        out.push_back({j.name.c_str(), j.parent ? static_cast<int>(*j.parent) : -1, j.bind_offset});
    }
    return out;
}

}  // namespace

Skeleton device32() {
    // clang-format off
    const std::vector<Bone> bones = {
        {"Hips",             -1, {0.0, 0.98, 0.0}},
        {"Spine",             0, {0.0, 0.10, 0.0}},
        {"Spine1",            1, {0.0, 0.10, 0.0}},
        {"Spine2",            2, {0.0, 0.10, 0.0}},
        {"Spine3",            3, {0.0, 0.12, 0.0}},
        {"Neck",              4, {0.0, 0.10, 0.0}},
        {"Neck1",             5, {0.0, 0.06, 0.0}},
        {"Head",              6, {0.0, 0.24, 0.0}},   // top of the head
        {"LeftShoulder",      4, {0.0, 0.05, -0.04}},
        {"LeftArm",           8, {0.0, 0.0, -0.14}},
        {"LeftForeArm",       9, {0.0, 0.0, -0.30}},
        {"LeftHand",         10, {0.0, 0.0, -0.26}},
        {"LeftHandThumb1",   11, {0.03, 0.0, -0.03}},
        {"LeftHandIndex1",   11, {0.02, 0.0, -0.09}},
        {"LeftHandMiddle1",  11, {0.0, 0.0, -0.09}},
        {"LeftHandRing1",    11, {-0.02, 0.0, -0.08}},
        {"RightShoulder",     4, {0.0, 0.05, 0.04}},
        {"RightArm",         16, {0.0, 0.0, 0.14}},
        {"RightForeArm",     17, {0.0, 0.0, 0.30}},
        {"RightHand",        18, {0.0, 0.0, 0.26}},
        {"RightHandThumb1",  19, {0.03, 0.0, 0.03}},
        {"RightHandIndex1",  19, {0.02, 0.0, 0.09}},
        {"RightHandMiddle1", 19, {0.0, 0.0, 0.09}},
        {"RightHandRing1",   19, {-0.02, 0.0, 0.08}},
        {"LeftUpLeg",         0, {0.0, -0.06, -0.10}},
        {"LeftLeg",          24, {0.0, -0.42, 0.0}},
        {"LeftFoot",         25, {0.0, -0.42, 0.0}},
        {"LeftToeBase",      26, {0.14, -0.08, 0.0}},
        {"RightUpLeg",        0, {0.0, -0.06, 0.10}},
        {"RightLeg",         28, {0.0, -0.42, 0.0}},
        {"RightFoot",        29, {0.0, -0.42, 0.0}},
        {"RightToeBase",     30, {0.14, -0.08, 0.0}},
    };
    // clang-format on
    return build(bones, kDeviceScale);
}

Skeleton scaled_neutral(double s) {
    auto bones = neutral_bones();
    bones.push_back({"HeadTop", static_cast<int>(neutral::Head), {0.0, 0.18, 0.0}});
    return build(bones, s);
}

Skeleton avatar40() {
    auto bones = neutral_bones();
    auto n = [](neutral::Joint j) { return static_cast<int>(j); };
    constexpr int base = static_cast<int>(neutral::kJointCount);
    const std::vector<Bone> extras = {
        {"HeadTop", n(neutral::Head), {0.0, 0.18, 0.0}},
        {"Jaw", n(neutral::Head), {0.05, -0.04, 0.0}},
        {"LeftEye", n(neutral::Head), {0.08, 0.06, -0.03}},
        {"RightEye", n(neutral::Head), {0.08, 0.06, 0.03}},
        {"LeftShoulderPad", n(neutral::LeftShoulder), {0.0, 0.06, -0.08}},
        {"RightShoulderPad", n(neutral::RightShoulder), {0.0, 0.06, 0.08}},
        {"LeftThumb1", n(neutral::LeftHand), {0.03, 0.0, -0.03}},
        {"LeftThumb2", base + 6, {0.02, 0.0, -0.02}},
        {"LeftIndex1", n(neutral::LeftHand), {0.02, 0.0, -0.09}},
        {"LeftIndex2", base + 8, {0.0, 0.0, -0.03}},
        {"RightThumb1", n(neutral::RightHand), {0.03, 0.0, 0.03}},
        {"RightThumb2", base + 10, {0.02, 0.0, 0.02}},
        {"RightIndex1", n(neutral::RightHand), {0.02, 0.0, 0.09}},
        {"RightIndex2", base + 12, {0.0, 0.0, 0.03}},
        {"LeftKneePad", n(neutral::LeftLowerLeg), {0.06, 0.02, 0.0}},
        {"RightKneePad", n(neutral::RightLowerLeg), {0.06, 0.02, 0.0}},
        {"Tail", n(neutral::Hips), {-0.12, -0.05, 0.0}},
    };
    for (const Bone& b : extras) bones.push_back(b);
    return build(bones, kAvatarScale);
}

Skeleton with_random_binds(Skeleton s, Rng& rng) {
    for (Joint& j : s.joints) j.bind_rotation = random_unit_quat(rng);
    return s;
}

capture::MotionClip walking_replay(const Skeleton& device, std::size_t frames, double frame_time) {
    capture::MotionClip clip;
    clip.skeleton = device;
    clip.frame_time = frame_time;
    auto at = [&](const char* name) { return *device.find(name); };
    const std::size_t left_arm = at("LeftArm"), right_arm = at("RightArm");
    const std::size_t left_fore = at("LeftForeArm"), right_fore = at("RightForeArm");
    const std::size_t left_up = at("LeftUpLeg"), right_up = at("RightUpLeg");
    const std::size_t left_knee = at("LeftLeg"), right_knee = at("RightLeg");
    const std::size_t neck = at("Neck1");
    const double hips = device.joints[0].bind_offset.y;
    constexpr double radius = 1.5;
    constexpr double angular = 0.3;  // rad/s around the circle
    for (std::size_t f = 0; f < frames; ++f) {
        const double t = static_cast<double>(f) * frame_time;
        const double a = angular * t;
        const double stride = 2.0 * kPi * 1.6 * t;
        Pose p = rest_pose(device);
        p.timestamp = t;
        p.root_translation = {radius * std::cos(a), hips + 0.02 * std::sin(2.0 * stride), radius * std::sin(a)};
        // Tangent of a counter-clockwise circle in the (x, z) chart.
        p.local_rotations[0] = Quat::from_yaw(rad_to_deg(a) + 90.0);
        const Vec3 side{0.0, 0.0, 1.0};
        p.local_rotations[left_up] = Quat::from_axis_angle(side, 0.45 * std::sin(stride));
        p.local_rotations[right_up] = Quat::from_axis_angle(side, -0.45 * std::sin(stride));
        p.local_rotations[left_knee] = Quat::from_axis_angle(side, -0.5 * std::max(0.0, std::sin(stride + 1.2)));
        p.local_rotations[right_knee] = Quat::from_axis_angle(side, -0.5 * std::max(0.0, -std::sin(stride + 1.2)));
        p.local_rotations[left_arm] = Quat::from_axis_angle({1.0, 0.0, 0.0}, 1.1 + 0.6 * std::sin(3.0 * t));
        p.local_rotations[right_arm] = Quat::from_axis_angle({1.0, 0.0, 0.0}, -0.3 * std::sin(stride));
        p.local_rotations[left_fore] = Quat::from_axis_angle({0.0, 1.0, 0.0}, 0.4 + 0.4 * std::sin(6.0 * t));
        p.local_rotations[right_fore] = Quat::from_axis_angle({0.0, 1.0, 0.0}, -0.2);
        p.local_rotations[neck] = Quat::from_axis_angle({0.0, 1.0, 0.0}, 0.2 * std::sin(0.7 * t));
        clip.frames.push_back(std::move(p));
    }
    return clip;
}

Quat random_unit_quat(Rng& rng) {
    std::normal_distribution<double> n;
    Quat q{n(rng), n(rng), n(rng), n(rng)};
    return q.normalized();
}

Pose random_pose(const Skeleton& s, Rng& rng, double root_range) {
    std::uniform_real_distribution<double> u(-root_range, root_range);
    Pose p;
    for (std::size_t i = 0; i < s.size(); ++i) p.local_rotations.push_back(random_unit_quat(rng));
    p.root_translation = {u(rng), std::abs(u(rng)), u(rng)};
    return p;
}

namespace {

using Mat4 = std::array<std::array<double, 4>, 4>;

Mat4 matrix_of(const Quat& q, const Vec3& t) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat4 m{};
    m[0] = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y), t.x};
    m[1] = {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x), t.y};
    m[2] = {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y), t.z};
    m[3] = {0, 0, 0, 1};
    return m;
}

Mat4 multiply(const Mat4& a, const Mat4& b) {
    Mat4 m{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) m[i][j] += a[i][k] * b[k][j];
    return m;
}

Quat quat_of(const Mat4& m) {
    // Shepperd's method on the upper 3x3 block.
    const double tr = m[0][0] + m[1][1] + m[2][2];
    Quat q;
    if (tr > 0) {
        const double s = std::sqrt(tr + 1.0) * 2;
        q = {0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s};
    } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
        const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2;
        q = {(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s};
    } else if (m[1][1] > m[2][2]) {
        const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2;
        q = {(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s};
    } else {
        const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2;
        q = {(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s};
    }
    return q;
}

}  // namespace

std::vector<Transform> fk_by_matrices(const Skeleton& s, const Pose& pose) {
    std::vector<Mat4> world(s.size());
    std::vector<Transform> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Joint& j = s.joints[i];
        const Quat local = j.bind_rotation * pose.local_rotations[i];
        if (!j.parent) {
            world[i] = matrix_of(local, pose.root_translation);
        } else {
            world[i] = multiply(world[*j.parent], matrix_of(local, j.bind_offset));
        }
        out[i].rotation = quat_of(world[i]);
        out[i].position = {world[i][0][3], world[i][1][3], world[i][2][3]};
    }
    return out;
}

namespace {

// a1 + b1*r2 < a2 + b2*r2 over integers, with r2 = sqrt(2), decided without rounding.
bool cost_less(std::int64_t a1, std::int64_t b1, std::int64_t a2, std::int64_t b2) {
    const std::int64_t da = a2 - a1;  // need: (b1 - b2) * r2 < da
    const std::int64_t db = b1 - b2;
    if (db == 0) return da > 0;
    if (db < 0) {
        if (da >= 0) return true;
        return 2 * db * db > da * da;  // |db| r2 > |da|
    }
    if (da <= 0) return false;
    return 2 * db * db < da * da;
}

}  // namespace

std::optional<pathfind::StepCount> dijkstra_steps(const pathfind::NavMesh& mesh, std::size_t from, std::size_t to) {
    struct Cost {
        std::int64_t a, b;
    };
    const auto w = static_cast<long>(mesh.width());
    const auto h = static_cast<long>(mesh.height());
    auto free = [&](long c, long r) {
        return c >= 0 && r >= 0 && c < w && r < h && mesh.walkable(static_cast<std::size_t>(r * w + c));
    };
    std::vector<std::optional<Cost>> best(mesh.cell_count());
    std::vector<bool> done(mesh.cell_count(), false);
    auto cmp = [&](std::size_t x, std::size_t y) {
        const Cost& p = *best[x];
        const Cost& q = *best[y];
        if (cost_less(p.a, p.b, q.a, q.b)) return true;
        if (cost_less(q.a, q.b, p.a, p.b)) return false;
        return x < y;
    };
    std::set<std::size_t, decltype(cmp)> open(cmp);
    best[from] = Cost{0, 0};
    open.insert(from);
    while (!open.empty()) {
        const std::size_t cell = *open.begin();
        open.erase(open.begin());
        done[cell] = true;
        if (cell == to) return pathfind::StepCount{best[cell]->a, best[cell]->b};
        const long c = static_cast<long>(cell) % w;
        const long r = static_cast<long>(cell) / w;
        for (long dr = -1; dr <= 1; ++dr) {
            for (long dc = -1; dc <= 1; ++dc) {
                if ((dr == 0 && dc == 0) || !free(c + dc, r + dr)) continue;
                const bool diag = dr != 0 && dc != 0;
                if (diag && (!free(c + dc, r) || !free(c, r + dr))) continue;
                const auto next = static_cast<std::size_t>((r + dr) * w + (c + dc));
                if (done[next]) continue;
                const Cost nc{best[cell]->a + (diag ? 0 : 1), best[cell]->b + (diag ? 1 : 0)};
                if (best[next] && !cost_less(nc.a, nc.b, best[next]->a, best[next]->b)) continue;
                if (best[next]) open.erase(next);
                best[next] = nc;
                open.insert(next);
            }
        }
    }
    return std::nullopt;
}

pathfind::NavMesh random_mesh(Rng& rng, std::size_t max_side, double density, double cell) {
    std::uniform_int_distribution<std::size_t> side(1, max_side);
    const std::size_t w = side(rng), h = side(rng);
    std::bernoulli_distribution blocked(density);
    std::vector<std::uint8_t> walkable(w * h);
    for (auto& c : walkable) c = blocked(rng) ? 0 : 1;
    walkable[std::uniform_int_distribution<std::size_t>(0, w * h - 1)(rng)] = 1;
    return pathfind::NavMesh({-0.5 * cell * w, -0.5 * cell * h}, cell, w, h, std::move(walkable));
}

std::size_t random_walkable(const pathfind::NavMesh& mesh, Rng& rng) {
    std::uniform_int_distribution<std::size_t> any(0, mesh.cell_count() - 1);
    for (;;) {
        const std::size_t c = any(rng);
        if (mesh.walkable(c)) return c;
    }
}

bool path_is_legal(const pathfind::NavMesh& mesh, const pathfind::Path& path) {
    if (path.cells.empty()) return false;
    pathfind::StepCount steps;
    const auto w = static_cast<long>(mesh.width());
    for (std::size_t i = 0; i < path.cells.size(); ++i) {
        if (!mesh.walkable(path.cells[i])) return false;
        if (i == 0) continue;
        const long c0 = static_cast<long>(path.cells[i - 1]) % w, r0 = static_cast<long>(path.cells[i - 1]) / w;
        const long c1 = static_cast<long>(path.cells[i]) % w, r1 = static_cast<long>(path.cells[i]) / w;
        const long dc = c1 - c0, dr = r1 - r0;
        if (std::abs(dc) > 1 || std::abs(dr) > 1 || (dc == 0 && dr == 0)) return false;
        if (dc != 0 && dr != 0) {
            if (!mesh.walkable(static_cast<std::size_t>(r0 * w + c1)) ||
                !mesh.walkable(static_cast<std::size_t>(r1 * w + c0))) {
                return false;
            }
            ++steps.diagonal;
        } else {
            ++steps.straight;
        }
    }
    return steps == path.steps;
}

double brute_force_correction(double current_deg, double target_deg) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = -5; k <= 5; ++k) {
        const double c = target_deg - current_deg + 360.0 * k;
        if (std::abs(c) < std::abs(best) || (std::abs(c) == std::abs(best) && c > best)) best = c;
    }
    return best;
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    const auto bits = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    out.insert(out.end(), bits.begin(), bits.end());  // little-endian host
}

}  // namespace

std::vector<std::uint8_t> encode_device_frame(const capture::DeviceFrame& frame) {
    std::vector<std::uint8_t> out = {'A', 'K', 'N', '1', 1};
    std::string id = frame.stream_id;
    id.resize(8, ' ');
    out.insert(out.end(), id.begin(), id.end());
    put<std::uint16_t>(out, static_cast<std::uint16_t>(frame.local_rotations.size()));
    put<std::uint64_t>(out, frame.sequence);
    put<double>(out, frame.timestamp);
    put<float>(out, static_cast<float>(frame.root_translation.x));
    put<float>(out, static_cast<float>(frame.root_translation.y));
    put<float>(out, static_cast<float>(frame.root_translation.z));
    for (const Quat& q : frame.local_rotations) {
        put<float>(out, static_cast<float>(q.x));
        put<float>(out, static_cast<float>(q.y));
        put<float>(out, static_cast<float>(q.z));
        put<float>(out, static_cast<float>(q.w));
    }
    return out;
}

capture::DeviceFrame random_device_frame(Rng& rng, std::size_t joints) {
    std::uniform_real_distribution<float> u(-5.0f, 5.0f);
    std::uniform_int_distribution<std::uint64_t> seq(0, std::numeric_limits<std::uint64_t>::max());
    capture::DeviceFrame f;
    static constexpr char kIdChars[] = "abcdefghijklmnopqrstuvwxyz0123456789-_";
    std::uniform_int_distribution<std::size_t> len(1, 8), ch(0, sizeof(kIdChars) - 2);
    for (std::size_t i = len(rng); i > 0; --i) f.stream_id += kIdChars[ch(rng)];
    f.sequence = seq(rng);
    f.timestamp = std::uniform_real_distribution<double>(0.0, 1e6)(rng);
    f.root_translation = {u(rng), u(rng), u(rng)};
    for (std::size_t j = 0; j < joints; ++j) {
        // Quaternions at f32 precision and unit norm there, so they survive exactly.
        Quat q = random_unit_quat(rng);
        for (;;) {
            const float x = static_cast<float>(q.x), y = static_cast<float>(q.y), z = static_cast<float>(q.z),
                        w = static_cast<float>(q.w);
            const double n = double(x) * x + double(y) * y + double(z) * z + double(w) * w;
            if (std::abs(n - 1.0) < 1e-6) {
                f.local_rotations.push_back({w, x, y, z});
                break;
            }
            q = random_unit_quat(rng);
        }
    }
    return f;
}

bus::Value random_value(Rng& rng, std::size_t max_depth) {
    std::uniform_int_distribution<int> kind(0, max_depth > 1 ? 5 : 4);
    switch (kind(rng)) {
        case 0: {
            std::uniform_int_distribution<int> special(0, 9);
            switch (special(rng)) {
                case 0: return bus::Value(std::numeric_limits<double>::quiet_NaN());
                case 1: return bus::Value(-std::numeric_limits<double>::infinity());
                case 2: return bus::Value(-0.0);
                default: return bus::Value(std::uniform_real_distribution<double>(-1e9, 1e9)(rng));
            }
        }
        case 1:
            return bus::Value(std::uniform_int_distribution<std::int64_t>(std::numeric_limits<std::int64_t>::min(),
                                                                          std::numeric_limits<std::int64_t>::max())(rng));
        case 2: return bus::Value(std::bernoulli_distribution(0.5)(rng));
        case 3: {
            static const char* const kPieces[] = {"a", "Z", "/", " ", "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x8e\xad", "0"};
            std::string s;
            for (int i = std::uniform_int_distribution<int>(0, 12)(rng); i > 0; --i) {
                s += kPieces[std::uniform_int_distribution<int>(0, 7)(rng)];
            }
            return bus::Value(std::move(s));
        }
        case 4: {
            bus::Float32Array a(std::uniform_int_distribution<std::size_t>(0, 16)(rng));
            for (float& x : a) x = std::uniform_real_distribution<float>(-100.0f, 100.0f)(rng);
            if (!a.empty() && std::bernoulli_distribution(0.1)(rng)) a[0] = std::numeric_limits<float>::quiet_NaN();
            return bus::Value(std::move(a));
        }
        default: {
            bus::ValueMap m;
            for (int i = std::uniform_int_distribution<int>(0, 4)(rng); i > 0; --i) {
                std::string key = "k" + std::to_string(std::uniform_int_distribution<int>(0, 99)(rng));
                m.insert_or_assign(std::move(key), random_value(rng, max_depth - 1));
            }
            return bus::Value(std::move(m));
        }
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace stage::testing
