#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stage/bus/session.hpp"
#include "stage/pathfind/control.hpp"
#include "stage/puppeteer/puppeteer.hpp"
#include "stage/retarget/retarget.hpp"
#include "stage/server/composition.hpp"
#include "stage/server/stations.hpp"
#include "stage/space/stagespace.hpp"

namespace stage::server {

inline constexpr double kDefaultTickRate = 60.0;
inline constexpr double kDefaultCellSize = 0.25;
inline constexpr std::size_t kDefaultDecimation = 6;

struct InputSpec {
    std::string id;
    puppeteer::InputKind kind = puppeteer::InputKind::MocapStream;
    puppeteer::RegionSet regions = puppeteer::RegionSet::all();
    std::string stream;  // device stream id, mocap inputs only
};

struct NamedRect {
    std::string name;
    pathfind::Rect rect;
};

struct NetworkConfig {
    std::optional<bus::Endpoint> bus;
    std::vector<bus::Endpoint> peers;
    std::optional<bus::Endpoint> mocap;
    std::optional<bus::Endpoint> console;
    std::size_t decimation = kDefaultDecimation;
    std::uint32_t station_id = 1;
};

// Everything a stage-server session is configured with. See scenes/demo.scene for
// the text format.
struct SceneConfig {
    double tick_rate = kDefaultTickRate;

    std::string device_rig = "builtin:neutral";  // builtin:neutral or a BVH path
    std::string avatar_rig = "builtin:neutral";
    retarget::AliasTable device_aliases;  // device joint <-> neutral joint
    retarget::AliasTable avatar_aliases;  // neutral joint <-> avatar joint

    space::SpaceCalibration calibration;
    pathfind::Rect stage_bounds{{-5.0, -5.0}, {5.0, 5.0}};
    double cell_size = kDefaultCellSize;
    std::vector<NamedRect> obstacles;
    pathfind::ZoneMap zones;
    pathfind::PresetTable presets;

    std::vector<InputSpec> inputs;
    puppeteer::PuppeteerConfig puppeteer;  // empty: everything from the first input
    puppeteer::GamepadMapping gamepad;
    double smoothing_alpha = 0.8;
    double walk_speed = pathfind::kDefaultWalkSpeed;

    std::vector<std::pair<std::string, Role>> stations;  // registered at startup
    CompositionState composition;
    RoleGates gates;
    NetworkConfig network;
};

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Throws SceneError naming the offending section and key. Relative rig paths are
// resolved against `base_dir`.
SceneConfig parse_scene(std::string_view text, const std::filesystem::path& base_dir = {});
SceneConfig load_scene(const std::filesystem::path& file);

// A 10 x 10 m stage with no obstacles, one preset per corner and the usual device
// joint names aliased onto the neutral rig.
SceneConfig default_scene();

// Device naming used by common inertial suits, mapped onto the neutral rig.
const retarget::AliasTable& standard_device_aliases();

}  // namespace stage::server
