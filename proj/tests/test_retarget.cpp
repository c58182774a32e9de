#include <doctest.h>

#include "stage/core/neutral_rig.hpp"
#include "stage/retarget/profile_document.hpp"
#include "stage/server/scene.hpp"
#include "support/fixtures.hpp"

using namespace stage;
using namespace stage::retarget;
using stage::testing::Rng;

namespace {

double lowest_foot(const Skeleton& s, const Pose& p) {
    const auto world = forward_kinematics(s, p);
    double lo = 1e9;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const std::string& n = s.joints[j].name;
        if (n.find("Foot") != std::string::npos || n.find("Toe") != std::string::npos) lo = std::min(lo, world[j].position.y);
    }
    return lo;
}

// Random limb motion with the root placed so the lowest foot joint touches the floor.
Pose grounded_pose(const Skeleton& s, Rng& rng) {
    Pose p = testing::random_pose(s, rng);
    for (Quat& q : p.local_rotations) q = slerp(Quat::identity(), q, 0.3);
    p.root_translation.y = 0.0;
    p.root_translation.y = -lowest_foot(s, p);
    return p;
}

}  // namespace

TEST_CASE("joint map: names first, then aliases in either direction") {
    const Skeleton dev = testing::device32();
    const JointMap m = build_joint_map(dev, neutral_skeleton(), server::standard_device_aliases());
    CHECK(m.unmapped.empty());
    CHECK(m.source_of[neutral::LeftUpperArm] == dev.find("LeftArm"));
    CHECK(m.source_of[neutral::RightToe] == dev.find("RightToeBase"));

    AliasTable reversed;
    for (const auto& [a, b] : server::standard_device_aliases()) reversed.emplace_back(b, a);
    const JointMap r = build_joint_map(dev, neutral_skeleton(), reversed);
    CHECK(r.source_of == m.source_of);

    const JointMap bare = build_joint_map(dev, neutral_skeleton(), {});
    CHECK(bare.mapped_count() < neutral::kJointCount);

    Skeleton rootless = dev;
    rootless.joints[0].name = "Pelvis";
    CHECK_THROWS_AS(build_joint_map(rootless, neutral_skeleton(), {}), RetargetError);
}

TEST_CASE("identity retarget is exact") {
    Rng rng(10);
    const Skeleton s = testing::with_random_binds(testing::avatar40(), rng);
    const RetargetProfile id = RetargetProfile::identity(s);
    for (int i = 0; i < 100; ++i) {
        const Pose p = testing::random_pose(s, rng);
        CHECK(retarget::retarget(p, id) == p);
    }
}

TEST_CASE("bind corrections carry world orientation across rigs") {
    Rng rng(11);
    const Skeleton src = testing::with_random_binds(neutral_skeleton(), rng);
    const Skeleton dst = testing::with_random_binds(neutral_skeleton(), rng);
    const RetargetProfile prof = make_profile(src, dst, {});
    for (int i = 0; i < 50; ++i) {
        const Pose p = testing::random_pose(src, rng);
        const Pose q = retarget::retarget(p, prof);
        // Each joint's bind * local product is preserved, so the root's world frame matches.
        const auto a = forward_kinematics(src, p);
        const auto b = forward_kinematics(dst, q);
        CHECK(same_rotation(a[0].rotation, b[0].rotation, 1e-9));
    }
}

TEST_CASE("two-stage retarget equals one-stage") {
    Rng rng(12);
    const Skeleton dev = testing::with_random_binds(testing::device32(), rng);
    const Skeleton ava = testing::with_random_binds(testing::avatar40(), rng);
    const auto& aliases = server::standard_device_aliases();
    const RetargetProfile d2n = make_profile(dev, neutral_skeleton(), aliases);
    const RetargetProfile n2a = make_profile(neutral_skeleton(), ava, {});
    const RetargetProfile d2a = make_profile(dev, ava, aliases);
    for (std::size_t d = 0; d < ava.size(); ++d) {
        const auto via = n2a.joint_map().source_of[d];
        CHECK(d2a.joint_map().source_of[d] == (via ? d2n.joint_map().source_of[*via] : std::nullopt));
    }
    for (int i = 0; i < 100; ++i) {
        const Pose p = testing::random_pose(dev, rng);
        const Pose two = retarget::retarget(retarget::retarget(p, d2n), n2a);
        const Pose one = retarget::retarget(p, d2a);
        REQUIRE(two.local_rotations.size() == one.local_rotations.size());
        for (std::size_t j = 0; j < one.local_rotations.size(); ++j) {
            CHECK(same_rotation(two.local_rotations[j], one.local_rotations[j], 1e-9));
        }
        CHECK((two.root_translation - one.root_translation).length() < 1e-9);
    }
}

TEST_CASE("foot level survives scaled rigs") {
    Rng rng(13);
    for (double scale : {0.7, 0.95, 1.1, 1.4}) {
        const Skeleton src = testing::scaled_neutral(1.0);
        const Skeleton dst = testing::scaled_neutral(scale);
        const RetargetProfile prof = make_profile(src, dst, {});
        CHECK(prof.height_ratio() == doctest::Approx(scale));
        for (int i = 0; i < 50; ++i) {
            const Pose p = grounded_pose(src, rng);
            CHECK(std::abs(lowest_foot(dst, retarget::retarget(p, prof))) < 1e-9);
        }
    }
}

TEST_CASE("unmapped destination joints stay at rest") {
    Rng rng(14);
    const RetargetProfile prof = make_profile(neutral_skeleton(), testing::avatar40(), {});
    CHECK(prof.joint_map().unmapped.size() == 17);
    const Pose out = retarget::retarget(testing::random_pose(neutral_skeleton(), rng), prof);
    for (std::size_t j : prof.joint_map().unmapped) CHECK(out.local_rotations[j] == Quat::identity());
    CHECK_THROWS_AS(retarget::retarget(rest_pose(testing::avatar40()), prof), PoseMismatch);
}

TEST_CASE("profile documents") {
    const auto doc = parse_profile_document(
        "[profile]\nversion = 1\nsource = builtin:neutral\ndestination = rigs/a.bvh\n[aliases]\nLeftArm = LeftUpperArm\n");
    CHECK(doc.source == "builtin:neutral");
    CHECK(doc.destination == "rigs/a.bvh");
    REQUIRE(doc.aliases.size() == 1);
    CHECK(doc.aliases[0] == std::pair<std::string, std::string>{"LeftArm", "LeftUpperArm"});
    CHECK_THROWS_AS(parse_profile_document("[profile]\nversion = 2\nsource = a\ndestination = b\n"), KvError);
    CHECK_THROWS_AS(parse_profile_document("[profile]\nversion = 1\nsource = a\n"), KvError);
}
