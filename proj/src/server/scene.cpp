#include "stage/server/scene.hpp"

#include <fstream>
#include <sstream>

#include "stage/core/kvdoc.hpp"
#include "stage/retarget/profile_document.hpp"

namespace stage::server {

using puppeteer::BodyRegion;
using puppeteer::RegionSet;

namespace {

[[noreturn]] void fail(std::string_view section, std::string_view key, const std::string& what) {
    throw SceneError("[" + std::string(section) + "] " + std::string(key) + ": " + what);
}

// Wraps kvdoc's number parsing so errors carry the section and key.
template <typename Fn>
auto in_entry(std::string_view section, std::string_view key, Fn&& fn) {
    try {
        return fn();
    } catch (const KvError& e) {
        fail(section, key, e.what());
    } catch (const std::invalid_argument& e) {
        fail(section, key, e.what());
    }
}

pathfind::Rect rect_from(const std::vector<double>& v, std::size_t at = 0) {
    return {{v[at], v[at + 1]}, {v[at + 2], v[at + 3]}};
}

std::string resolve_rig(std::string_view value, const std::filesystem::path& base_dir) {
    if (value.starts_with("builtin:")) return std::string(value);
    std::filesystem::path p{std::string(value)};
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p.string();
}

RegionSet regions_from(std::string_view text) {
    if (text == "all") return RegionSet::all();
    RegionSet out;
    std::string token;
    std::istringstream in{std::string(text)};
    while (std::getline(in, token, ',')) {
        const auto r = puppeteer::region_from_string(token);
        if (!r) throw std::invalid_argument("unknown body region '" + token + "'");
        out.insert(*r);
    }
    if (out.empty()) throw std::invalid_argument("no body regions");
    return out;
}

std::set<Role> roles_from(std::string_view text) {
    std::set<Role> out;
    for (const std::string& w : split_words(text)) {
        const auto r = bus::role_from_string(w);
        if (!r) throw std::invalid_argument("unknown role '" + w + "'");
        out.insert(*r);
    }
    return out;
}

}  // namespace

const retarget::AliasTable& standard_device_aliases() {
    static const retarget::AliasTable table = {
        {"LeftArm", "LeftUpperArm"},   {"RightArm", "RightUpperArm"}, {"LeftForeArm", "LeftForearm"},
        {"RightForeArm", "RightForearm"}, {"LeftUpLeg", "LeftUpperLeg"}, {"RightUpLeg", "RightUpperLeg"},
        {"LeftLeg", "LeftLowerLeg"},   {"RightLeg", "RightLowerLeg"}, {"LeftToeBase", "LeftToe"},
        {"RightToeBase", "RightToe"},
    };
    return table;
}

SceneConfig default_scene() {
    SceneConfig scene;
    scene.device_aliases = standard_device_aliases();
    scene.presets.add({"Dig1", {-3.0, -3.0}, 45.0});
    scene.presets.add({"Dig2", {3.0, 3.0}, -135.0});
    scene.presets.add({"Dig3", {3.0, -3.0}, 135.0});
    scene.presets.add({"Dig4", {-3.0, 3.0}, -45.0});
    scene.composition.lights = {{"key", {2.0, 4.0, -2.0}, 1.0}, {"fill", {-2.0, 3.0, -2.0}, 0.5}};
    return scene;
}

SceneConfig parse_scene(std::string_view text, const std::filesystem::path& base_dir) {
    KvDocument doc;
    try {
        doc = parse_kv(text);
    } catch (const KvError& e) {
        throw SceneError(std::string("scene file: ") + e.what());
    }

    SceneConfig scene;
    scene.device_aliases = standard_device_aliases();

    static const std::set<std::string, std::less<>> kKnown = {
        "scene",  "rigs",     "aliases", "avatar_aliases", "spaces", "stage",      "obstacles",
        "zones",  "presets",  "inputs",  "puppeteer",      "gamepad", "smoothing", "locomotion",
        "stations", "composition", "lights", "roles",       "network",
    };
    for (const KvSection& s : doc.sections) {
        if (!kKnown.contains(s.name)) throw SceneError("unknown section [" + s.name + "]");
    }

    if (const KvSection* s = doc.section("scene")) {
        if (auto v = s->get("version"); v && *v != "1") fail("scene", "version", "unsupported version");
        if (auto v = s->get("tick_rate")) {
            scene.tick_rate = in_entry("scene", "tick_rate", [&] { return parse_double(*v, "tick_rate"); });
            if (!(scene.tick_rate >= 10.0 && scene.tick_rate <= 240.0)) fail("scene", "tick_rate", "must be in [10, 240]");
        }
    }

    if (const KvSection* s = doc.section("rigs")) {
        if (auto v = s->get("device")) scene.device_rig = resolve_rig(*v, base_dir);
        if (auto v = s->get("avatar")) scene.avatar_rig = resolve_rig(*v, base_dir);
    }
    if (const KvSection* s = doc.section("aliases")) {
        scene.device_aliases = in_entry("aliases", "", [&] { return retarget::aliases_from_section(s); });
    }
    scene.avatar_aliases =
        in_entry("avatar_aliases", "", [&] { return retarget::aliases_from_section(doc.section("avatar_aliases")); });

    if (const KvSection* s = doc.section("spaces")) {
        auto similarity = [&](std::string_view key, space::Similarity2& out) {
            if (auto v = s->get(key)) {
                const auto n = in_entry("spaces", key, [&] { return parse_doubles(*v, 4, key); });
                out = {n[0], n[1], {n[2], n[3]}};
            }
        };
        similarity("b_to_d", scene.calibration.b_to_d);
        similarity("a_to_d", scene.calibration.a_to_d);
        try {
            space::validate(scene.calibration);
        } catch (const space::CalibrationError& e) {
            fail("spaces", "", e.what());
        }
    }

    if (const KvSection* s = doc.section("stage")) {
        if (auto v = s->get("bounds")) {
            scene.stage_bounds = rect_from(in_entry("stage", "bounds", [&] { return parse_doubles(*v, 4, "bounds"); }));
            if (scene.stage_bounds.degenerate()) fail("stage", "bounds", "degenerate rectangle");
        }
        if (auto v = s->get("cell")) {
            scene.cell_size = in_entry("stage", "cell", [&] { return parse_double(*v, "cell"); });
            if (!(scene.cell_size > 0.0)) fail("stage", "cell", "must be positive");
        }
    }
    if (const KvSection* s = doc.section("obstacles")) {
        for (const KvEntry& e : s->entries) {
            const auto r = rect_from(in_entry("obstacles", e.key, [&] { return parse_doubles(e.value, 4, e.key); }));
            if (r.degenerate()) fail("obstacles", e.key, "degenerate rectangle");
            scene.obstacles.push_back({e.key, r});
        }
    }
    if (const KvSection* s = doc.section("zones")) {
        for (const KvEntry& e : s->entries) {
            const auto n = in_entry("zones", e.key, [&] { return parse_doubles(e.value, 9, e.key); });
            in_entry("zones", e.key, [&] {
                scene.zones.add({e.key, rect_from(n, 0), rect_from(n, 4), n[8]});
                return 0;
            });
        }
    }
    if (const KvSection* s = doc.section("presets")) {
        for (const KvEntry& e : s->entries) {
            const auto n = in_entry("presets", e.key, [&] { return parse_doubles(e.value, 3, e.key); });
            in_entry("presets", e.key, [&] {
                scene.presets.add({e.key, {n[0], n[1]}, n[2]});
                return 0;
            });
        }
    }

    if (const KvSection* s = doc.section("inputs")) {
        for (const KvEntry& e : s->entries) {
            const auto words = split_words(e.value);
            if (words.empty()) fail("inputs", e.key, "needs a kind");
            InputSpec in;
            in.id = e.key;
            const auto kind = puppeteer::input_kind_from_string(words[0]);
            if (!kind) fail("inputs", e.key, "unknown input kind '" + words[0] + "'");
            in.kind = *kind;
            for (std::size_t i = 1; i < words.size(); ++i) {
                if (words[i].starts_with("stream:")) {
                    in.stream = words[i].substr(7);
                } else {
                    in.regions = in_entry("inputs", e.key, [&] { return regions_from(words[i]); });
                }
            }
            if (in.kind == puppeteer::InputKind::MocapStream && in.stream.empty()) {
                fail("inputs", e.key, "mocap inputs need stream:<id>");
            }
            for (const InputSpec& other : scene.inputs) {
                if (other.id == in.id) fail("inputs", e.key, "duplicate input");
            }
            scene.inputs.push_back(std::move(in));
        }
    }
    if (const KvSection* s = doc.section("puppeteer")) {
        scene.puppeteer = in_entry("puppeteer", "", [&] { return puppeteer::config_from_section(*s); });
    }
    if (const KvSection* s = doc.section("gamepad")) {
        auto number = [&](std::string_view key, double& out) {
            if (auto v = s->get(key)) out = in_entry("gamepad", key, [&] { return parse_double(*v, key); });
        };
        number("speed", scene.gamepad.speed);
        number("yaw_rate", scene.gamepad.yaw_rate);
        number("dead_zone", scene.gamepad.dead_zone);
    }
    if (const KvSection* s = doc.section("smoothing")) {
        if (auto v = s->get("alpha")) {
            scene.smoothing_alpha = in_entry("smoothing", "alpha", [&] { return parse_double(*v, "alpha"); });
            if (!(scene.smoothing_alpha >= 0.0 && scene.smoothing_alpha <= 1.0)) fail("smoothing", "alpha", "must be in [0, 1]");
        }
    }
    if (const KvSection* s = doc.section("locomotion")) {
        if (auto v = s->get("speed")) {
            scene.walk_speed = in_entry("locomotion", "speed", [&] { return parse_double(*v, "speed"); });
            if (!(scene.walk_speed > 0.0)) fail("locomotion", "speed", "must be positive");
        }
    }

    if (const KvSection* s = doc.section("stations")) {
        for (const KvEntry& e : s->entries) {
            const auto role = bus::role_from_string(e.value);
            if (!role) fail("stations", e.key, "unknown role '" + e.value + "'");
            scene.stations.emplace_back(e.key, *role);
        }
    }
    if (const KvSection* s = doc.section("composition")) {
        if (auto v = s->get("mode")) {
            const auto mode = composition_mode_from_string(*v);
            if (!mode) fail("composition", "mode", "expected Fixed or Manipulated");
            scene.composition.mode = *mode;
        }
        if (auto v = s->get("camera")) {
            const auto n = in_entry("composition", "camera", [&] { return parse_doubles(*v, 6, "camera"); });
            scene.composition.camera = {{n[0], n[1], n[2]}, n[3], n[4], n[5]};
        }
    }
    if (const KvSection* s = doc.section("lights")) {
        for (const KvEntry& e : s->entries) {
            const auto n = in_entry("lights", e.key, [&] { return parse_doubles(e.value, 4, e.key); });
            scene.composition.lights.push_back({e.key, {n[0], n[1], n[2]}, n[3]});
        }
    }
    try {
        validate(scene.composition);
    } catch (const CompositionError& e) {
        fail("composition", "", e.what());
    }
    if (const KvSection* s = doc.section("roles")) {
        for (const KvEntry& e : s->entries) {
            const auto group = command_group_from_string(e.key);
            if (!group) fail("roles", e.key, "unknown command group");
            scene.gates.set(*group, in_entry("roles", e.key, [&] { return roles_from(e.value); }));
        }
    }

    if (const KvSection* s = doc.section("network")) {
        auto endpoint = [&](std::string_view key) -> std::optional<bus::Endpoint> {
            if (auto v = s->get(key)) return in_entry("network", key, [&] { return bus::parse_endpoint(*v); });
            return std::nullopt;
        };
        scene.network.bus = endpoint("bus");
        scene.network.mocap = endpoint("mocap");
        scene.network.console = endpoint("console");
        if (auto v = s->get("peers")) {
            for (const std::string& w : split_words(*v)) {
                scene.network.peers.push_back(in_entry("network", "peers", [&] { return bus::parse_endpoint(w); }));
            }
        }
        if (auto v = s->get("decimation")) {
            const double d = in_entry("network", "decimation", [&] { return parse_double(*v, "decimation"); });
            if (!(d >= 1.0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
                fail("network", "decimation", "must be a positive integer");
            }
            scene.network.decimation = static_cast<std::size_t>(d);
        }
        if (auto v = s->get("station_id")) {
            const double d = in_entry("network", "station_id", [&] { return parse_double(*v, "station_id"); });
            if (!(d >= 0.0 && d <= 4294967295.0) || d != static_cast<double>(static_cast<std::uint32_t>(d))) {
                fail("network", "station_id", "must be a 32-bit unsigned integer");
            }
            scene.network.station_id = static_cast<std::uint32_t>(d);
        }
    }
    return scene;
}

SceneConfig load_scene(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw SceneError("cannot open scene file " + file.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scene(text.str(), file.parent_path());
}

}  // namespace stage::server
