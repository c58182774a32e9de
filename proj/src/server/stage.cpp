#include "stage/server/stage.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "stage/core/kvdoc.hpp"
#include "stage/core/neutral_rig.hpp"

namespace stage::server {

using bus::Value;
using bus::ValueMap;
using pathfind::Owner;
using puppeteer::InputKind;

std::string_view to_string(Health health) {
    switch (health) {
        case Health::Fresh: return "fresh";
        case Health::Stale: return "stale";
        case Health::Missing: return "missing";
    }
    return "missing";
}

Skeleton load_rig(const std::string& spec) {
    if (spec == "builtin:neutral") return neutral_skeleton();
    if (spec.starts_with("builtin:")) throw SceneError("unknown builtin rig '" + spec + "'");
    std::ifstream in(spec, std::ios::binary);
    if (!in) throw SceneError("cannot open rig " + spec);
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return capture::parse_bvh(text.str()).skeleton;
    } catch (const capture::BvhError& e) {
        throw SceneError("rig " + spec + ": " + e.what());
    }
}

namespace {

class PayloadError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

retarget::RetargetProfile profile_or_throw(const Skeleton& source, const Skeleton& dest,
                                           const retarget::AliasTable& aliases, std::string_view what) {
    try {
        return retarget::make_profile(source, dest, aliases);
    } catch (const retarget::RetargetError& e) {
        throw SceneError(std::string(what) + ": " + e.what());
    }
}

double number(const Value& payload, std::string_view key) {
    const Value* v = payload.find(key);
    if (!v) throw PayloadError("missing '" + std::string(key) + "'");
    if (const auto* d = v->get_if<double>()) return *d;
    if (const auto* i = v->get_if<std::int64_t>()) return static_cast<double>(*i);
    throw PayloadError("'" + std::string(key) + "' must be a number");
}

std::optional<double> optional_number(const Value& payload, std::string_view key) {
    if (!payload.find(key)) return std::nullopt;
    return number(payload, key);
}

std::string text(const Value& payload, std::string_view key) {
    const Value* v = payload.find(key);
    if (!v || !v->is<std::string>()) throw PayloadError("'" + std::string(key) + "' must be a string");
    return v->as<std::string>();
}

std::vector<double> numbers(const Value& payload, std::string_view key, std::size_t n) {
    const Value* v = payload.find(key);
    const auto* a = v ? v->get_if<bus::Float32Array>() : nullptr;
    if (!a || a->size() != n) throw PayloadError("'" + std::string(key) + "' must hold " + std::to_string(n) + " numbers");
    return {a->begin(), a->end()};
}

// [x, z] array or a map with x and z.
Vec2 point(const Value& payload, std::string_view key) {
    const Value* v = payload.find(key);
    if (!v) throw PayloadError("missing '" + std::string(key) + "'");
    if (v->is<ValueMap>()) return {number(*v, "x"), number(*v, "z")};
    const auto n = numbers(payload, key, 2);
    return {n[0], n[1]};
}

std::string code_of(pathfind::ControlError::Code c) {
    switch (c) {
        case pathfind::ControlError::Code::AlreadyOwned: return "AlreadyOwned";
        case pathfind::ControlError::Code::WrongOwner: return "WrongOwner";
        case pathfind::ControlError::Code::NoPath: return "NoPath";
    }
    return "ControlError";
}

std::string code_of(CompositionError::Code c) {
    switch (c) {
        case CompositionError::Code::CompositionLocked: return "CompositionLocked";
        case CompositionError::Code::OutOfRange: return "OutOfRange";
        case CompositionError::Code::UnknownLight: return "UnknownLight";
    }
    return "CompositionError";
}

void reject(CommandResult& r, std::string code, std::string message) {
    r.ok = false;
    r.code = std::move(code);
    r.message = std::move(message);
}

bool is_control_topic(std::string_view t) {
    return t == "pathfind/takeover" || t == "pathfind/release" || t == "preset/apply";
}

bool is_space_topic(std::string_view t) { return t == "space/calibration" || t == "space/actor-pos"; }

Pose mocap_pose(const capture::DeviceFrame& f) {
    return {f.local_rotations, f.root_translation, f.timestamp};
}

}  // namespace

Stage::Stage(SceneConfig scene)
    : scene_(std::move(scene)),
      dt_(1.0 / scene_.tick_rate),
      puppeteer_(scene_.puppeteer),
      device_to_neutral_(profile_or_throw(load_rig(scene_.device_rig), neutral_skeleton(), scene_.device_aliases,
                                          "device rig")),
      avatar_to_(profile_or_throw(neutral_skeleton(), load_rig(scene_.avatar_rig), scene_.avatar_aliases,
                                  "avatar rig")) {
    if (!(scene_.tick_rate >= 10.0 && scene_.tick_rate <= 240.0)) throw SceneError("tick rate must be in [10, 240]");
    std::vector<pathfind::Rect> obstacles;
    for (const NamedRect& o : scene_.obstacles) obstacles.push_back(o.rect);
    try {
        mesh_ = std::make_unique<pathfind::NavMesh>(pathfind::build_navmesh(scene_.stage_bounds, obstacles, scene_.cell_size));
    } catch (const pathfind::PathError& e) {
        throw SceneError(std::string("stage navmesh: ") + e.what());
    }

    for (const InputSpec& in : scene_.inputs) {
        registry_.register_input(in.id, in.kind, in.regions);
        if (in.kind == InputKind::MocapStream) {
            if (stream_to_input_.contains(in.stream)) throw SceneError("two inputs read stream " + in.stream);
            stream_to_input_[in.stream] = in.id;
            mocap_[in.id].mailbox = std::make_unique<capture::FrameMailbox>();
        } else if (in.kind == InputKind::Gamepad) {
            gamepads_[in.id];
        }
    }
    if (!puppeteer_.empty()) {
        try {
            puppeteer::validate(puppeteer_, registry_);
        } catch (const puppeteer::PuppeteerError& e) {
            throw SceneError(std::string("[puppeteer] ") + e.what());
        }
    }
    for (const auto& [name, role] : scene_.stations) stations_.register_station(role, name);

    calibration_ = scene_.calibration;
    composition_ = scene_.composition;
    control_.speed = scene_.walk_speed;
    raw_ = rest_pose(neutral_skeleton());
    composed_ = raw_;
}

void Stage::attach_replay(const std::string& input_id, capture::MotionClip clip) {
    if (const auto* in = registry_.find(input_id)) {
        if (in->kind != InputKind::Replay) throw SceneError("input '" + input_id + "' is not a replay input");
    } else {
        registry_.register_input(input_id, InputKind::Replay, puppeteer::RegionSet::all());
    }
    if (clip.frames.empty()) throw SceneError("replay clip for '" + input_id + "' has no frames");
    auto profile = profile_or_throw(clip.skeleton, neutral_skeleton(), scene_.device_aliases, "replay rig");
    replays_.insert_or_assign(input_id, ReplayInput{std::move(clip), std::move(profile)});
}

bool Stage::offer_device_frame(capture::DeviceFrame frame) {
    auto it = stream_to_input_.find(frame.stream_id);
    if (it == stream_to_input_.end()) return false;
    return mocap_.at(it->second).mailbox->offer(std::move(frame));
}

void Stage::submit(Command command) {
    std::lock_guard lock(command_mutex_);
    incoming_.push_back(std::move(command));
}

bool Stage::replays_finished() const {
    const double t = static_cast<double>(tick_) * dt_;
    for (const auto& [id, r] : replays_) {
        if (t <= r.clip.duration()) return false;
    }
    return true;
}

bool Stage::gate(const Command& c, CommandGroup group, CommandResult& r) const {
    if (scene_.gates.allowed(group, c.role)) return true;
    reject(r, "Unauthorized",
           std::string(bus::to_string(c.role)) + " may not issue " + c.topic);
    return false;
}

space::Disposition Stage::current_disposition() const {
    if (control_.owner == Owner::PathfinderLocomotion) return {control_.current.position, control_.current.yaw_deg};
    return space::disposition_of(space::map_pose_B_to_D(space::apply_adjust(raw_, adjust_), calibration_));
}

void Stage::land_at(const space::Disposition& target) {
    const Quat root = raw_.local_rotations.empty() ? Quat{} : raw_.local_rotations[0];
    adjust_ = space::adjust_for_placement(raw_.root_translation.planar(), facing_yaw(root), calibration_, target);
}

void Stage::apply_immediate(const Command& c, CommandResult& r) {
    const Value& p = c.payload;
    if (c.topic == "composition/mode") {
        if (!gate(c, CommandGroup::Composition, r)) return;
        const auto mode = composition_mode_from_string(text(p, "mode"));
        if (!mode) throw PayloadError("mode must be Fixed or Manipulated");
        if (set_composition_mode(composition_, *mode)) {
            events_.emplace_back("composition/mode", Value(ValueMap{{"mode", Value(std::string(to_string(*mode)))}}));
        }
    } else if (c.topic == "composition/camera") {
        if (!gate(c, CommandGroup::Camera, r)) return;
        CameraDelta d;
        d.position = {optional_number(p, "dx").value_or(0.0), optional_number(p, "dy").value_or(0.0),
                      optional_number(p, "dz").value_or(0.0)};
        d.yaw_deg = optional_number(p, "dyaw").value_or(0.0);
        d.pitch_deg = optional_number(p, "dpitch").value_or(0.0);
        d.fov_deg = optional_number(p, "dfov").value_or(0.0);
        move_camera(composition_, d);
    } else if (c.topic == "composition/light") {
        if (!gate(c, CommandGroup::Lights, r)) return;
        LightChange change;
        change.id = text(p, "id");
        if (p.find("position")) {
            const auto v = numbers(p, "position", 3);
            change.position = Vec3{v[0], v[1], v[2]};
        }
        change.intensity = optional_number(p, "intensity");
        change_light(composition_, change);
    } else if (c.topic == "composition/param") {
        if (!gate(c, CommandGroup::Params, r)) return;
        set_param(composition_, text(p, "name"), number(p, "value"));
    } else if (c.topic == "puppeteer/config") {
        if (!gate(c, CommandGroup::Puppeteer, r)) return;
        const auto* m = p.get_if<ValueMap>();
        if (!m) throw PayloadError("puppeteer config must be a map of region to sources");
        KvSection section{"puppeteer", {}};
        for (const auto& [key, v] : *m) {
            if (!v.is<std::string>()) throw PayloadError("sources for '" + key + "' must be a string");
            section.entries.push_back({key, v.as<std::string>()});
        }
        puppeteer::PuppeteerConfig next;
        try {
            next = puppeteer::config_from_section(section);
            puppeteer::validate(next, registry_);
        } catch (const std::exception& e) {
            throw PayloadError(e.what());
        }
        puppeteer_ = std::move(next);
    } else if (c.topic == "gamepad/axes") {
        if (!gate(c, CommandGroup::RefMove, r)) return;
        if (gamepads_.empty()) throw PayloadError("no gamepad input on this stage");
        auto it = p.find("input") ? gamepads_.find(text(p, "input")) : gamepads_.begin();
        if (it == gamepads_.end()) throw PayloadError("unknown gamepad input");
        it->second.axes = {optional_number(p, "lx").value_or(0.0), optional_number(p, "ly").value_or(0.0),
                           optional_number(p, "rx").value_or(0.0)};
        it->second.ever = true;
        it->second.fresh = true;
    } else {
        reject(r, "UnknownTopic", "no command on topic " + c.topic);
    }
}

void Stage::apply_space(const Command& c, CommandResult& r) {
    const Value& p = c.payload;
    if (c.topic == "space/actor-pos") {
        if (!gate(c, CommandGroup::Calibration, r)) return;
        actor_in_a_ = Vec2{number(p, "x"), number(p, "z")};
        return;
    }
    if (p.find("b_to_d")) {
        if (!gate(c, CommandGroup::Calibration, r)) return;
        const auto n = numbers(p, "b_to_d", 4);
        space::SpaceCalibration next = calibration_;
        next.b_to_d = {n[0], n[1], {n[2], n[3]}};
        try {
            space::validate(next);
        } catch (const space::CalibrationError& e) {
            throw PayloadError(e.what());
        }
        calibration_ = next;
        return;
    }
    if (!gate(c, CommandGroup::RefMove, r)) return;
    if (control_.owner != Owner::MocaptorFull) {
        throw pathfind::ControlError(pathfind::ControlError::Code::WrongOwner, "the pathfinder owns the avatar root");
    }
    const Vec2 avatar_b = space::apply_adjust(raw_, adjust_).root_translation.planar();
    if (p.find("ref_move")) {
        const auto n = numbers(p, "ref_move", 3);
        const space::Disposition now = current_disposition();
        land_at({now.position + Vec2{n[0], n[1]}, wrap_degrees(now.yaw_deg + n[2])});
    } else if (p.find("rotate")) {
        const double theta = number(p, "rotate");
        const Vec2 pivot = p.find("pivot") ? point(p, "pivot") : avatar_b;
        adjust_ = adjust_.rotated(theta, pivot);
    } else if (p.find("face_actor")) {
        if (!actor_in_a_) throw PayloadError("no actor position has been reported");
        const space::Disposition now = current_disposition();
        const double target = space::solve_disposition(now.position, space::map_point_A_to_D(*actor_in_a_, calibration_));
        adjust_ = adjust_.rotated(space::disposition_correction(now.yaw_deg, target), avatar_b);
    } else {
        throw PayloadError("space/calibration needs b_to_d, ref_move, rotate or face_actor");
    }
}

void Stage::apply_control(const Command& c, CommandResult& r) {
    const Value& p = c.payload;
    pathfind::TransitionContext ctx{mesh_.get(), {}};
    const space::Disposition here = current_disposition();
    ctx.avatar = {here.position, here.yaw_deg};

    std::optional<pathfind::ControlCommand> command;
    if (c.topic == "pathfind/takeover") {
        if (!gate(c, CommandGroup::Pathfind, r)) return;
        pathfind::TakeOver take{point(p, "goal"), optional_number(p, "speed")};
        if (take.speed && !(*take.speed > 0.0)) throw PayloadError("speed must be positive");
        if (!take.speed) take.speed = scene_.walk_speed;
        command = take;
    } else if (c.topic == "pathfind/release") {
        if (!gate(c, CommandGroup::Pathfind, r)) return;
        pathfind::Release release;
        if (p.find("preset")) {
            const std::string name = text(p, "preset");
            const auto* preset = scene_.presets.find(name);
            if (!preset) return reject(r, "UnknownPreset", "no preset '" + name + "'");
            release.preset = *preset;
        }
        command = release;
    } else {  // preset/apply
        if (!gate(c, CommandGroup::Preset, r)) return;
        const std::string name = text(p, "name");
        const auto* preset = scene_.presets.find(name);
        if (!preset) return reject(r, "UnknownPreset", "no preset '" + name + "'");
        if (control_.owner == Owner::MocaptorFull) {
            land_at({preset->position, preset->yaw_deg});
            return;
        }
        command = pathfind::Release{*preset};
    }

    pathfind::TransitionResult t = pathfind::control_transition(control_, *command, ctx);
    control_ = std::move(t.state);
    if (t.snap) land_at({t.snap->position, t.snap->yaw_deg});
    ValueMap note{{"owner", Value(std::string(pathfind::to_string(control_.owner)))}};
    events_.emplace_back(control_.owner == Owner::PathfinderLocomotion ? "pathfind/takeover" : "pathfind/release",
                         Value(std::move(note)));
}

FramePacket Stage::run_tick() {
    FramePacket packet;
    packet.tick = tick_;
    packet.time = static_cast<double>(tick_) * dt_;
    events_.clear();

    std::vector<Command> batch;
    {
        std::lock_guard lock(command_mutex_);
        batch.swap(incoming_);
    }

    auto run = [&](const Command& c, auto&& fn) {
        CommandResult r{tick_, c.station, c.source, c.seq, c.topic, true, {}, {}};
        try {
            fn(c, r);
        } catch (const PayloadError& e) {
            reject(r, "BadPayload", e.what());
        } catch (const CompositionError& e) {
            reject(r, code_of(e.code()), e.what());
        } catch (const pathfind::ControlError& e) {
            reject(r, code_of(e.code()), e.what());
        } catch (const space::DegenerateGeometry& e) {
            reject(r, "DegenerateGeometry", e.what());
        }
        packet.results.push_back(std::move(r));
    };

    // 1. commands that do not depend on this tick's pose
    std::vector<Command> space_batch;
    for (Command& c : batch) {
        if (is_control_topic(c.topic)) {
            control_queue_.push_back(std::move(c));
        } else if (is_space_topic(c.topic)) {
            space_batch.push_back(std::move(c));
        } else {
            run(c, [this](const Command& cmd, CommandResult& r) { apply_immediate(cmd, r); });
        }
    }

    // 2. snapshot inputs into neutral space
    puppeteer::InputSnapshots snapshots;
    for (const puppeteer::ActingInput& in : registry_.inputs()) {
        Health h = Health::Missing;
        switch (in.kind) {
            case InputKind::MocapStream: {
                MocapInput& m = mocap_.at(in.id);
                const auto snap = m.mailbox->snapshot();
                if (snap.frame && snap.fresh) {
                    if (snap.frame->joint_count() != device_to_neutral_.source().size()) {
                        spdlog::warn("stream {} sends {} joints, the device rig has {}", snap.frame->stream_id,
                                     snap.frame->joint_count(), device_to_neutral_.source().size());
                    } else {
                        if (!m.smoother) m.smoother = capture::make_smoother(*snap.frame, scene_.smoothing_alpha);
                        auto [state, smoothed] = capture::smooth(std::move(*m.smoother), *snap.frame);
                        m.smoother = std::move(state);
                        m.last = retarget::retarget(mocap_pose(smoothed), device_to_neutral_);
                        events_.emplace_back(
                            "mocap/frame-meta",
                            Value(ValueMap{{"input", Value(in.id)},
                                           {"stream", Value(snap.frame->stream_id)},
                                           {"sequence", Value(static_cast<std::int64_t>(snap.frame->sequence))},
                                           {"timestamp", Value(snap.frame->timestamp)},
                                           {"joints", Value(static_cast<std::int64_t>(snap.frame->joint_count()))}}));
                    }
                }
                if (m.last) {
                    h = snap.fresh ? Health::Fresh : Health::Stale;
                    snapshots.emplace(in.id, *m.last);
                }
                break;
            }
            case InputKind::Replay: {
                auto it = replays_.find(in.id);
                if (it == replays_.end()) break;
                h = packet.time <= it->second.clip.duration() ? Health::Fresh : Health::Stale;
                Pose pose = retarget::retarget(capture::sample_clip(it->second.clip, packet.time), it->second.to_neutral);
                pose.timestamp = packet.time;
                snapshots.emplace(in.id, std::move(pose));
                break;
            }
            case InputKind::Gamepad: {
                GamepadInput& g = gamepads_.at(in.id);
                h = g.fresh ? Health::Fresh : (g.ever ? Health::Stale : Health::Missing);
                g.fresh = false;
                break;
            }
            case InputKind::Pathfinder:
                h = control_.owner == Owner::PathfinderLocomotion ? Health::Fresh : Health::Stale;
                break;
        }
        packet.health.emplace_back(in.id, h);
    }

    // 3. blend
    puppeteer::PuppeteerConfig config = puppeteer_;
    if (config.empty()) {
        for (const puppeteer::ActingInput& in : registry_.inputs()) {
            if (in.kind == InputKind::MocapStream || in.kind == InputKind::Replay) {
                config = puppeteer::PuppeteerConfig::single(in.id);
                break;
            }
        }
    }
    const auto blended = puppeteer::blend(config, snapshots, previous_blend_ ? &*previous_blend_ : nullptr,
                                          neutral_skeleton());
    previous_blend_ = blended.pose;
    raw_ = blended.pose;
    raw_.timestamp = packet.time;

    // 4. space corrections, gamepad nudges, then at most one control transition
    for (const Command& c : space_batch) {
        run(c, [this](const Command& cmd, CommandResult& r) { apply_space(cmd, r); });
    }
    if (control_.owner == Owner::MocaptorFull) {
        for (auto& [id, g] : gamepads_) {
            const auto d = puppeteer::gamepad_delta(g.axes, scene_.gamepad, dt_);
            if (d.translation == Vec3{} && d.yaw_deg == 0.0) continue;
            const space::Disposition now = current_disposition();
            land_at({now.position + d.translation.planar(), wrap_degrees(now.yaw_deg + d.yaw_deg)});
        }
    }
    if (!control_queue_.empty()) {
        const Command c = std::move(control_queue_.front());
        control_queue_.pop_front();
        run(c, [this](const Command& cmd, CommandResult& r) { apply_control(cmd, r); });
    }

    // 5. into D, locomotion, composition of the final pose
    const Pose mocap_d = space::map_pose_B_to_D(space::apply_adjust(raw_, adjust_), calibration_);
    if (control_.owner == Owner::PathfinderLocomotion) {
        const auto step = pathfind::step_locomotion(control_, control_.speed, dt_);
        control_ = step.state;
        composed_ = pathfind::compose_final_pose(control_, mocap_d, {step.position, step.yaw_deg});
        packet.path = PathProgress{control_.progress, control_.active_path->total_cost, step.path_complete};
        events_.emplace_back("pathfind/progress",
                             Value(ValueMap{{"progress", Value(control_.progress)},
                                            {"total", Value(control_.active_path->total_cost)},
                                            {"complete", Value(step.path_complete)}}));
    } else {
        composed_ = mocap_d;
    }

    // 6. onto the avatar; the floor placement stays where D put it
    packet.avatar_pose = retarget::retarget(composed_, avatar_to_);
    packet.avatar_pose.root_translation.x = composed_.root_translation.x;
    packet.avatar_pose.root_translation.z = composed_.root_translation.z;
    packet.avatar_pose.timestamp = packet.time;

    packet.owner = control_.owner;
    packet.disposition = space::disposition_of(composed_);
    packet.composition = composition_;
    packet.events = std::move(events_);
    events_.clear();
    ++tick_;
    return packet;
}

}  // namespace stage::server
