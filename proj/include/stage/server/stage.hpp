#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "stage/bus/value.hpp"
#include "stage/capture/bvh.hpp"
#include "stage/capture/device_frame.hpp"
#include "stage/capture/mailbox.hpp"
#include "stage/capture/smoother.hpp"
#include "stage/pathfind/control.hpp"
#include "stage/server/scene.hpp"

namespace stage::server {

enum class CommandSource { Script, Console, Bus, Local };

struct Command {
    std::uint32_t station = 0;
    Role role = Role::Console;
    std::string topic;
    bus::Value payload;
    std::int64_t seq = 0;  // sender's sequence, echoed in the result
    CommandSource source = CommandSource::Local;
};

struct CommandResult {
    std::uint64_t tick = 0;
    std::uint32_t station = 0;
    CommandSource source = CommandSource::Local;
    std::int64_t seq = 0;
    std::string topic;
    bool ok = true;
    std::string code;  // error code name when !ok
    std::string message;
};

enum class Health { Fresh, Stale, Missing };
std::string_view to_string(Health health);

struct PathProgress {
    double progress = 0.0;
    double total = 0.0;
    bool complete = false;
};

struct FramePacket {
    std::uint64_t tick = 0;
    double time = 0.0;
    Pose avatar_pose;   // avatar rig, stage D
    pathfind::Owner owner = pathfind::Owner::MocaptorFull;
    space::Disposition disposition;
    CompositionState composition;
    std::vector<std::pair<std::string, Health>> health;  // per acting input, registration order
    std::optional<PathProgress> path;
    std::vector<CommandResult> results;
    std::vector<std::pair<std::string, bus::Value>> events;  // notifications for the bus
};

// "builtin:neutral" or a BVH file path. Throws SceneError.
Skeleton load_rig(const std::string& spec);

// The whole stage: inputs, puppeteer, space corrections, control handoff and the
// avatar output, advanced one fixed step per run_tick(). Only submit() and
// offer_device_frame() may be called from other threads.
class Stage {
public:
    explicit Stage(SceneConfig scene);

    // Registers `input_id` as a replay input when the scene does not declare it.
    void attach_replay(const std::string& input_id, capture::MotionClip clip);

    // Latest-wins deposit for a mocap stream. False when no input listens to the
    // stream or the frame is not newer than the last one.
    bool offer_device_frame(capture::DeviceFrame frame);

    void submit(Command command);

    FramePacket run_tick();

    StationRegistry& stations() { return stations_; }
    const SceneConfig& scene() const { return scene_; }
    const puppeteer::InputRegistry& inputs() const { return registry_; }
    const pathfind::NavMesh& navmesh() const { return *mesh_; }
    const pathfind::ControlState& control() const { return control_; }
    const space::SpaceBAdjust& adjust() const { return adjust_; }
    const space::SpaceCalibration& calibration() const { return calibration_; }
    const puppeteer::PuppeteerConfig& puppeteer_config() const { return puppeteer_; }
    const Skeleton& avatar_skeleton() const { return avatar_to_.dest(); }
    const Skeleton& device_skeleton() const { return device_to_neutral_.source(); }
    double dt() const { return dt_; }
    std::uint64_t next_tick() const { return tick_; }

    // Neutral-space poses of the last tick: the blended mocaptor pose before any space
    // correction, and the composed pose in D.
    const Pose& raw_pose() const { return raw_; }
    const Pose& composed_pose() const { return composed_; }

    // True when every replay input has played past its last frame.
    bool replays_finished() const;

private:
    struct ReplayInput {
        capture::MotionClip clip;
        retarget::RetargetProfile to_neutral;
    };
    struct MocapInput {
        std::unique_ptr<capture::FrameMailbox> mailbox;
        std::optional<capture::SmootherState> smoother;
        std::optional<Pose> last;  // smoothed, retargeted to neutral
    };
    struct GamepadInput {
        puppeteer::GamepadAxes axes;
        bool ever = false;
        bool fresh = false;
    };

    void apply_immediate(const Command& c, CommandResult& r);
    void apply_space(const Command& c, CommandResult& r);
    void apply_control(const Command& c, CommandResult& r);
    bool gate(const Command& c, CommandGroup group, CommandResult& r) const;
    space::Disposition current_disposition() const;
    void land_at(const space::Disposition& target);

    SceneConfig scene_;
    double dt_;
    StationRegistry stations_;
    puppeteer::InputRegistry registry_;
    puppeteer::PuppeteerConfig puppeteer_;
    retarget::RetargetProfile device_to_neutral_;
    retarget::RetargetProfile avatar_to_;
    std::unique_ptr<pathfind::NavMesh> mesh_;

    std::map<std::string, ReplayInput, std::less<>> replays_;
    std::map<std::string, MocapInput, std::less<>> mocap_;        // by input id
    std::map<std::string, std::string, std::less<>> stream_to_input_;
    std::map<std::string, GamepadInput, std::less<>> gamepads_;

    std::mutex command_mutex_;
    std::vector<Command> incoming_;
    std::deque<Command> control_queue_;

    std::uint64_t tick_ = 0;
    space::SpaceCalibration calibration_;
    space::SpaceBAdjust adjust_;
    pathfind::ControlState control_;
    CompositionState composition_;
    std::optional<Vec2> actor_in_a_;
    std::optional<Pose> previous_blend_;
    Pose raw_;
    Pose composed_;
    std::vector<std::pair<std::string, bus::Value>> events_;
};

}  // namespace stage::server
