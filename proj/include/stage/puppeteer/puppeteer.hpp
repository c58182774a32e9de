#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stage/core/kvdoc.hpp"
#include "stage/core/skeleton.hpp"

namespace stage::puppeteer {

// Body regions partition the 23 neutral joints.
enum class BodyRegion : std::uint8_t { Root, Spine, Head, LeftArm, RightArm, LeftLeg, RightLeg, LeftHand, RightHand };

inline constexpr std::size_t kRegionCount = 9;

inline constexpr std::array<BodyRegion, kRegionCount> kAllRegions = {
    BodyRegion::Root,    BodyRegion::Spine,    BodyRegion::Head,     BodyRegion::LeftArm,   BodyRegion::RightArm,
    BodyRegion::LeftLeg, BodyRegion::RightLeg, BodyRegion::LeftHand, BodyRegion::RightHand,
};

constexpr std::size_t index_of(BodyRegion r) { return static_cast<std::size_t>(r); }

std::string_view to_string(BodyRegion region);
std::optional<BodyRegion> region_from_string(std::string_view name);

// Neutral joint indices owned by `region`.
std::span<const std::size_t> joints_of(BodyRegion region);
BodyRegion region_of(std::size_t neutral_joint);

class RegionSet {
public:
    RegionSet() = default;
    RegionSet(std::initializer_list<BodyRegion> regions) {
        for (BodyRegion r : regions) insert(r);
    }
    static RegionSet all() {
        RegionSet s;
        s.bits_.set();
        return s;
    }

    void insert(BodyRegion r) { bits_.set(index_of(r)); }
    bool contains(BodyRegion r) const { return bits_.test(index_of(r)); }
    bool empty() const { return bits_.none(); }
    std::size_t size() const { return bits_.count(); }

    friend bool operator==(const RegionSet&, const RegionSet&) = default;

private:
    std::bitset<kRegionCount> bits_;
};

enum class InputKind { MocapStream, Replay, Gamepad, Pathfinder };

std::string_view to_string(InputKind kind);
std::optional<InputKind> input_kind_from_string(std::string_view name);

struct ActingInput {
    std::string id;
    InputKind kind;
    RegionSet regions;  // regions this input is able to drive
};

class PuppeteerError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using InputHandle = std::size_t;

// Registration happens between ticks only.
class InputRegistry {
public:
    // Throws PuppeteerError on a duplicate or empty id.
    InputHandle register_input(std::string id, InputKind kind, RegionSet regions);

    const ActingInput* find(std::string_view id) const;
    const ActingInput& at(InputHandle h) const { return inputs_.at(h); }
    const std::vector<ActingInput>& inputs() const { return inputs_; }
    std::size_t size() const { return inputs_.size(); }

private:
    std::vector<ActingInput> inputs_;
};

struct WeightedSource {
    std::string input;
    double weight = 1.0;

    friend bool operator==(const WeightedSource&, const WeightedSource&) = default;
};

// Per-region source lists. The order inside a region is significant: sources are
// folded left to right.
struct PuppeteerConfig {
    std::array<std::vector<WeightedSource>, kRegionCount> regions;

    std::vector<WeightedSource>& operator[](BodyRegion r) { return regions[index_of(r)]; }
    const std::vector<WeightedSource>& operator[](BodyRegion r) const { return regions[index_of(r)]; }

    // Every region driven by one input with weight 1.
    static PuppeteerConfig single(std::string input);
    bool empty() const;
};

// Rescales each non-empty region's weights to sum to 1. Throws PuppeteerError on
// negative or all-zero weights.
PuppeteerConfig normalized(PuppeteerConfig config);

// Throws PuppeteerError when a referenced input is unknown, cannot drive the
// region, or the weights are not normalized within 1e-9.
void validate(const PuppeteerConfig& config, const InputRegistry& registry);

// Declarative text form:
//
//   [puppeteer]
//   all = neuron1                  # default for regions not listed
//   LeftArm = neuron2:0.3 replay:0.7
//
// Omitted weights are 1; weights are normalized per region.
PuppeteerConfig parse_puppeteer_config(std::string_view text);
PuppeteerConfig config_from_section(const KvSection& section);

// Latest neutral-space pose of every input that has produced data.
using InputSnapshots = std::map<std::string, Pose, std::less<>>;

struct BlendResult {
    Pose pose;
    RegionSet held;     // sources silent, previous blended value held
    RegionSet rest;     // sources silent and nothing to hold: rest pose
    RegionSet partial;  // some but not all sources had data
};

// Weighted-slerp fold per joint: acc <- slerp(acc, next, w_next / cumulative weight).
// The Root region also blends the root translation linearly. Regions without any
// configured source hold the rest pose.
BlendResult blend(const PuppeteerConfig& config, const InputSnapshots& inputs, const Pose* previous,
                  const Skeleton& neutral);

// Planar manipulation of the whole avatar pivoting on its root.
struct RefMove {
    Vec3 translation;    // meters, world frame
    double yaw_deg = 0;  // floor-plan yaw

    RefMove operator-() const { return {-translation, -yaw_deg}; }
};

// Root rotation pre-multiplied by the yaw, root translation offset; limbs untouched.
Pose apply_ref_move(const Pose& pose, const RefMove& delta);

struct GamepadAxes {
    double left_x = 0.0;   // translation along +X
    double left_y = 0.0;   // translation along +Z
    double right_x = 0.0;  // yaw rate
};

struct GamepadMapping {
    double speed = 1.0;        // m/s at full deflection
    double yaw_rate = 90.0;    // deg/s at full deflection
    double dead_zone = 0.1;
};

RefMove gamepad_delta(const GamepadAxes& axes, const GamepadMapping& mapping, double dt);

}  // namespace stage::puppeteer
