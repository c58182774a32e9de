#include "stage/puppeteer/puppeteer.hpp"

#include <algorithm>
#include <cmath>

#include "stage/core/neutral_rig.hpp"

namespace stage::puppeteer {

namespace {

using namespace stage::neutral;

constexpr std::size_t kRootJoints[] = {Hips};
constexpr std::size_t kSpineJoints[] = {Spine, Spine1, Spine2, Spine3};
constexpr std::size_t kHeadJoints[] = {Neck, Head};
constexpr std::size_t kLeftArmJoints[] = {LeftShoulder, LeftUpperArm, LeftForearm};
constexpr std::size_t kRightArmJoints[] = {RightShoulder, RightUpperArm, RightForearm};
constexpr std::size_t kLeftLegJoints[] = {LeftUpperLeg, LeftLowerLeg, LeftFoot, LeftToe};
constexpr std::size_t kRightLegJoints[] = {RightUpperLeg, RightLowerLeg, RightFoot, RightToe};
constexpr std::size_t kLeftHandJoints[] = {LeftHand};
constexpr std::size_t kRightHandJoints[] = {RightHand};

constexpr std::array<std::string_view, kRegionCount> kRegionNames = {
    "Root", "Spine", "Head", "LeftArm", "RightArm", "LeftLeg", "RightLeg", "LeftHand", "RightHand",
};

}  // namespace

std::string_view to_string(BodyRegion region) { return kRegionNames[index_of(region)]; }

std::optional<BodyRegion> region_from_string(std::string_view name) {
    for (BodyRegion r : kAllRegions) {
        if (to_string(r) == name) return r;
    }
    return std::nullopt;
}

std::span<const std::size_t> joints_of(BodyRegion region) {
    switch (region) {
        case BodyRegion::Root: return kRootJoints;
        case BodyRegion::Spine: return kSpineJoints;
        case BodyRegion::Head: return kHeadJoints;
        case BodyRegion::LeftArm: return kLeftArmJoints;
        case BodyRegion::RightArm: return kRightArmJoints;
        case BodyRegion::LeftLeg: return kLeftLegJoints;
        case BodyRegion::RightLeg: return kRightLegJoints;
        case BodyRegion::LeftHand: return kLeftHandJoints;
        case BodyRegion::RightHand: return kRightHandJoints;
    }
    return {};
}

BodyRegion region_of(std::size_t neutral_joint) {
    for (BodyRegion r : kAllRegions) {
        for (std::size_t j : joints_of(r)) {
            if (j == neutral_joint) return r;
        }
    }
    throw PuppeteerError("joint index " + std::to_string(neutral_joint) + " is not a neutral joint");
}

std::string_view to_string(InputKind kind) {
    switch (kind) {
        case InputKind::MocapStream: return "mocap";
        case InputKind::Replay: return "replay";
        case InputKind::Gamepad: return "gamepad";
        case InputKind::Pathfinder: return "pathfinder";
    }
    return "unknown";
}

std::optional<InputKind> input_kind_from_string(std::string_view name) {
    for (InputKind k : {InputKind::MocapStream, InputKind::Replay, InputKind::Gamepad, InputKind::Pathfinder}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

InputHandle InputRegistry::register_input(std::string id, InputKind kind, RegionSet regions) {
    if (id.empty()) throw PuppeteerError("input id must not be empty");
    if (find(id)) throw PuppeteerError("input id '" + id + "' is already registered");
    inputs_.push_back({std::move(id), kind, regions});
    return inputs_.size() - 1;
}

const ActingInput* InputRegistry::find(std::string_view id) const {
    for (const ActingInput& in : inputs_) {
        if (in.id == id) return &in;
    }
    return nullptr;
}

PuppeteerConfig PuppeteerConfig::single(std::string input) {
    PuppeteerConfig c;
    for (auto& region : c.regions) region.push_back({input, 1.0});
    return c;
}

bool PuppeteerConfig::empty() const {
    for (const auto& region : regions) {
        if (!region.empty()) return false;
    }
    return true;
}

PuppeteerConfig normalized(PuppeteerConfig config) {
    for (BodyRegion r : kAllRegions) {
        auto& sources = config[r];
        if (sources.empty()) continue;
        double sum = 0.0;
        for (const WeightedSource& s : sources) {
            if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
                throw PuppeteerError("region " + std::string(to_string(r)) + ": weight of '" + s.input +
                                     "' must be a finite non-negative number");
            }
            sum += s.weight;
        }
        if (sum <= 0.0) throw PuppeteerError("region " + std::string(to_string(r)) + ": weights sum to zero");
        for (WeightedSource& s : sources) s.weight /= sum;
    }
    return config;
}

void validate(const PuppeteerConfig& config, const InputRegistry& registry) {
    for (BodyRegion r : kAllRegions) {
        const auto& sources = config[r];
        double sum = 0.0;
        for (const WeightedSource& s : sources) {
            const ActingInput* in = registry.find(s.input);
            if (!in) throw PuppeteerError("region " + std::string(to_string(r)) + " references unknown input '" + s.input + "'");
            if (!in->regions.contains(r)) {
                throw PuppeteerError("input '" + s.input + "' cannot drive region " + std::string(to_string(r)));
            }
            if (!(s.weight >= 0.0)) throw PuppeteerError("negative weight for '" + s.input + "'");
            sum += s.weight;
        }
        if (!sources.empty() && std::abs(sum - 1.0) > 1e-9) {
            throw PuppeteerError("region " + std::string(to_string(r)) + " weights sum to " + std::to_string(sum));
        }
    }
}

namespace {

std::vector<WeightedSource> parse_sources(std::string_view text) {
    std::vector<WeightedSource> out;
    for (const std::string& word : split_words(text)) {
        const auto colon = word.find(':');
        WeightedSource s;
        if (colon == std::string::npos) {
            s.input = word;
        } else {
            s.input = word.substr(0, colon);
            s.weight = parse_double(std::string_view(word).substr(colon + 1), "weight");
        }
        if (s.input.empty()) throw KvError(0, "source '" + word + "' has no input id");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

PuppeteerConfig config_from_section(const KvSection& section) {
    PuppeteerConfig config;
    std::optional<std::vector<WeightedSource>> fallback;
    std::array<bool, kRegionCount> set{};
    for (const KvEntry& e : section.entries) {
        if (e.key == "all") {
            fallback = parse_sources(e.value);
            continue;
        }
        const auto region = region_from_string(e.key);
        if (!region) throw KvError(0, "unknown body region '" + e.key + "'");
        config[*region] = parse_sources(e.value);
        set[index_of(*region)] = true;
    }
    if (fallback) {
        for (BodyRegion r : kAllRegions) {
            if (!set[index_of(r)]) config[r] = *fallback;
        }
    }
    try {
        return normalized(std::move(config));
    } catch (const PuppeteerError& e) {
        throw KvError(0, e.what());
    }
}

PuppeteerConfig parse_puppeteer_config(std::string_view text) {
    const KvDocument doc = parse_kv(text);
    const KvSection* section = doc.section("puppeteer");
    if (!section) throw KvError(0, "missing [puppeteer] section");
    return config_from_section(*section);
}

BlendResult blend(const PuppeteerConfig& config, const InputSnapshots& inputs, const Pose* previous,
                  const Skeleton& neutral) {
    if (neutral.size() != kJointCount) {
        throw PoseMismatch("blending needs the " + std::to_string(kJointCount) + "-joint neutral skeleton");
    }
    BlendResult result;
    result.pose = rest_pose(neutral);
    if (previous) result.pose.timestamp = previous->timestamp;

    std::vector<const Pose*> available;
    std::vector<double> weights;
    for (BodyRegion region : kAllRegions) {
        const auto& sources = config[region];
        if (sources.empty()) continue;

        available.clear();
        weights.clear();
        for (const WeightedSource& s : sources) {
            auto it = inputs.find(s.input);
            if (it == inputs.end()) continue;
            if (it->second.local_rotations.size() != kJointCount) {
                throw PoseMismatch("input '" + s.input + "' is not a neutral-space pose");
            }
            available.push_back(&it->second);
            weights.push_back(s.weight);
        }

        const auto joints = joints_of(region);
        if (available.empty()) {
            if (previous) {
                result.held.insert(region);
                for (std::size_t j : joints) result.pose.local_rotations[j] = previous->local_rotations[j];
                if (region == BodyRegion::Root) result.pose.root_translation = previous->root_translation;
            } else {
                result.rest.insert(region);
            }
            continue;
        }
        if (available.size() < sources.size()) result.partial.insert(region);

        for (std::size_t j : joints) {
            Quat acc = available[0]->local_rotations[j];
            double cumulative = weights[0];
            for (std::size_t k = 1; k < available.size(); ++k) {
                cumulative += weights[k];
                const double t = cumulative > 0.0 ? weights[k] / cumulative : 0.0;
                acc = slerp(acc, available[k]->local_rotations[j], t);
            }
            result.pose.local_rotations[j] = acc;
        }
        if (region == BodyRegion::Root) {
            Vec3 acc = available[0]->root_translation;
            double cumulative = weights[0];
            double stamp = available[0]->timestamp;
            for (std::size_t k = 1; k < available.size(); ++k) {
                cumulative += weights[k];
                const double t = cumulative > 0.0 ? weights[k] / cumulative : 0.0;
                const Vec3& next = available[k]->root_translation;
                if (!(next == acc)) acc = (1.0 - t) * acc + t * next;
                stamp = std::max(stamp, available[k]->timestamp);
            }
            result.pose.root_translation = acc;
            result.pose.timestamp = stamp;
        }
    }
    return result;
}

Pose apply_ref_move(const Pose& pose, const RefMove& delta) {
    Pose out = pose;
    if (delta.yaw_deg != 0.0 && !out.local_rotations.empty()) {
        out.local_rotations[0] = (Quat::from_yaw(delta.yaw_deg) * out.local_rotations[0]).normalized();
    }
    // pivot is the root itself, so the yaw leaves the position in place
    out.root_translation = out.root_translation + delta.translation;
    return out;
}

RefMove gamepad_delta(const GamepadAxes& axes, const GamepadMapping& mapping, double dt) {
    auto dz = [&](double v) {
        v = std::clamp(v, -1.0, 1.0);
        return std::abs(v) < mapping.dead_zone ? 0.0 : v;
    };
    RefMove d;
    d.translation = Vec3{dz(axes.left_x), 0.0, dz(axes.left_y)} * (mapping.speed * dt);
    d.yaw_deg = dz(axes.right_x) * mapping.yaw_rate * dt;
    return d;
}

}  // namespace stage::puppeteer
