#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "deskpilot/sim/scenario.hpp"

namespace dp = deskpilot;
namespace fs = std::filesystem;

namespace {

// Axis-aligned rectangle loop, counterclockwise in screen terms: +x then +y.
dp::TrackScenario rectangle_track(double w = 60.0, double h = 40.0, double half_width = 4.0) {
    dp::TrackScenario scn;
    scn.id = "rect";
    scn.centerline = {
        {0.0, 0.0, half_width, dp::Surface::road},
        {w, 0.0, half_width, dp::Surface::road},
        {w, h, half_width, dp::Surface::road},
        {0.0, h, half_width, dp::Surface::road},
    };
    scn.spawn = {1.0, 0.0, 0.0};
    return scn;
}

}  // namespace

TEST(Factories, AllThreeScenariosValidate) {
    const dp::TrackScenario a = dp::make_simplistic_scenario();
    EXPECT_EQ(a.tag, dp::BehaviorTag::simplistic);
    EXPECT_FALSE(a.lane_keep);
    EXPECT_TRUE(a.obstacles.empty());
    EXPECT_DOUBLE_EQ(a.speed_limit_kmh, 30.0);
    bool has_bridge = false;
    for (const auto& v : a.centerline) has_bridge |= v.surface == dp::Surface::bridge;
    EXPECT_TRUE(has_bridge);

    const dp::TrackScenario b = dp::make_rigorous_scenario();
    EXPECT_TRUE(b.lane_keep);
    EXPECT_GT(b.props.size(), 10u);
    EXPECT_DOUBLE_EQ(b.centerline.front().half_width, 4.5);

    const dp::TrackScenario c = dp::make_collision_scenario();
    EXPECT_EQ(c.obstacles.size(), 20u);
    EXPECT_FALSE(c.lane_keep);
    EXPECT_THROW(dp::make_scenario("unknown"), std::invalid_argument);
}

TEST(Factories, CollisionConesAlternateSidesAndLeaveHalfRoadFree) {
    const dp::TrackScenario scn = dp::make_collision_scenario();
    const auto& idx = scn.index();
    int prev_sign = 0;
    for (const auto& cone : scn.obstacles) {
        const auto q = idx.nearest({cone.x, cone.y});
        ASSERT_TRUE(q.has_value());
        // each cone sits near the middle of one road half
        EXPECT_NEAR(std::abs(q->lateral), q->half_width / 2.0, 0.3);
        const int sign = q->lateral > 0 ? 1 : -1;
        if (prev_sign != 0) {
            EXPECT_EQ(sign, -prev_sign);
        }
        prev_sign = sign;
    }
    // the factory is seeded, so two builds agree exactly
    const dp::TrackScenario again = dp::make_collision_scenario();
    for (std::size_t i = 0; i < scn.obstacles.size(); ++i) {
        EXPECT_DOUBLE_EQ(scn.obstacles[i].x, again.obstacles[i].x);
        EXPECT_DOUBLE_EQ(scn.obstacles[i].y, again.obstacles[i].y);
    }
    // a different seed moves them
    const dp::TrackScenario other = dp::make_collision_scenario(7);
    bool moved = false;
    for (std::size_t i = 0; i < scn.obstacles.size() && !moved; ++i)
        moved = scn.obstacles[i].x != other.obstacles[i].x;
    EXPECT_TRUE(moved);
}

TEST(TrackIndex, LengthAndWrapOnRectangle) {
    const auto scn = rectangle_track(60.0, 40.0);
    const auto& idx = scn.index();
    EXPECT_DOUBLE_EQ(idx.length(), 200.0);
    EXPECT_DOUBLE_EQ(idx.wrap_s(205.0), 5.0);
    EXPECT_DOUBLE_EQ(idx.wrap_s(-5.0), 195.0);
    EXPECT_DOUBLE_EQ(idx.s_delta(195.0, 5.0), 10.0);   // crossing the seam forward
    EXPECT_DOUBLE_EQ(idx.s_delta(5.0, 195.0), -10.0);  // and backward
}

TEST(TrackIndex, AtWalksTheRectangle) {
    const auto scn = rectangle_track(60.0, 40.0);
    const auto& idx = scn.index();
    const auto p0 = idx.at(10.0);  // on the bottom edge heading +x
    EXPECT_NEAR(p0.pos.x, 10.0, 1e-12);
    EXPECT_NEAR(p0.pos.y, 0.0, 1e-12);
    EXPECT_NEAR(p0.yaw, 0.0, 1e-12);
    const auto p1 = idx.at(70.0);  // 10 m up the right edge heading +y
    EXPECT_NEAR(p1.pos.x, 60.0, 1e-12);
    EXPECT_NEAR(p1.pos.y, 10.0, 1e-12);
    EXPECT_NEAR(p1.yaw, dp::kPi / 2.0, 1e-12);
}

TEST(TrackIndex, NearestGivesSignedLateral) {
    const auto scn = rectangle_track(60.0, 40.0);
    const auto& idx = scn.index();
    // travel along +x on the bottom edge: +y is to the right of travel
    const auto right = idx.nearest({10.0, 1.5});
    ASSERT_TRUE(right.has_value());
    EXPECT_NEAR(right->lateral, 1.5, 1e-12);
    EXPECT_NEAR(right->s, 10.0, 1e-12);
    EXPECT_NEAR(right->dist, 1.5, 1e-12);
    const auto left = idx.nearest({10.0, -2.0});
    ASSERT_TRUE(left.has_value());
    EXPECT_NEAR(left->lateral, -2.0, 1e-12);
    EXPECT_FALSE(idx.nearest({300.0, 300.0}).has_value());
}

TEST(Validation, RejectsBrokenGeometry) {
    auto scn = rectangle_track();
    scn.centerline[1].half_width = 0.0;
    EXPECT_THROW(dp::validate_scenario(scn), std::invalid_argument);

    // bow-tie self-intersection
    dp::TrackScenario bow;
    bow.centerline = {
        {0.0, 0.0, 4.0, dp::Surface::road},
        {10.0, 10.0, 4.0, dp::Surface::road},
        {10.0, 0.0, 4.0, dp::Surface::road},
        {0.0, 10.0, 4.0, dp::Surface::road},
    };
    EXPECT_THROW(dp::validate_scenario(bow), std::invalid_argument);

    auto ok = rectangle_track();
    ok.speed_limit_kmh = 0.0;
    EXPECT_THROW(dp::validate_scenario(ok), std::invalid_argument);

    // a cone fully blocking the road center is rejected
    auto blocked = rectangle_track();
    blocked.obstacles.push_back({30.0, 0.0, 3.9});
    EXPECT_THROW(dp::validate_scenario(blocked), std::invalid_argument);

    // while a half-lane cone passes
    auto fine = rectangle_track();
    fine.obstacles.push_back({30.0, 2.0, 0.45});
    EXPECT_NO_THROW(dp::validate_scenario(fine));
}

TEST(PlaceCones, CountSpacingAndAlternation) {
    auto scn = rectangle_track(80.0, 60.0);
    dp::Rng rng(5);
    dp::place_cones(scn, 12, rng);
    ASSERT_EQ(scn.obstacles.size(), 12u);
    const auto& idx = scn.index();
    double prev_s = -1.0;
    int prev_sign = 0;
    for (const auto& cone : scn.obstacles) {
        const auto q = idx.nearest({cone.x, cone.y});
        ASSERT_TRUE(q.has_value());
        EXPECT_GT(q->s, prev_s);  // ordered along the track
        prev_s = q->s;
        const int sign = q->lateral > 0 ? 1 : -1;
        if (prev_sign != 0) {
            EXPECT_EQ(sign, -prev_sign);
        }
        prev_sign = sign;
        EXPECT_DOUBLE_EQ(cone.radius, 0.45);
    }
    dp::place_cones(scn, 0, rng);
    EXPECT_TRUE(scn.obstacles.empty());
}

TEST(Corridor, LaneKeepHalvesTheCorridorAndShiftsItRight) {
    dp::TrackScenario scn = rectangle_track();
    EXPECT_DOUBLE_EQ(scn.corridor_offset(4.0), 0.0);
    EXPECT_DOUBLE_EQ(scn.corridor_half(4.0), 4.0);
    scn.lane_keep = true;
    EXPECT_DOUBLE_EQ(scn.corridor_offset(4.0), 2.0);
    EXPECT_DOUBLE_EQ(scn.corridor_half(4.0), 2.0);
}

TEST(ScenarioFile, SaveLoadRoundTrips) {
    const auto dir = fs::temp_directory_path() / "dp_scenario_test";
    fs::create_directories(dir);
    const auto path = dir / "track.scn";
    const dp::TrackScenario scn = dp::make_collision_scenario();
    dp::save_scenario(path, scn);
    const dp::TrackScenario back = dp::load_scenario(path);
    EXPECT_EQ(back.id, scn.id);
    EXPECT_EQ(back.tag, scn.tag);
    EXPECT_EQ(back.lane_keep, scn.lane_keep);
    EXPECT_DOUBLE_EQ(back.speed_limit_kmh, scn.speed_limit_kmh);
    ASSERT_EQ(back.centerline.size(), scn.centerline.size());
    for (std::size_t i = 0; i < scn.centerline.size(); ++i) {
        EXPECT_NEAR(back.centerline[i].x, scn.centerline[i].x, 1e-9);
        EXPECT_NEAR(back.centerline[i].y, scn.centerline[i].y, 1e-9);
        EXPECT_EQ(back.centerline[i].surface, scn.centerline[i].surface);
    }
    ASSERT_EQ(back.obstacles.size(), scn.obstacles.size());
    for (std::size_t i = 0; i < scn.obstacles.size(); ++i)
        EXPECT_NEAR(back.obstacles[i].x, scn.obstacles[i].x, 1e-9);
    EXPECT_NEAR(back.spawn.x, scn.spawn.x, 1e-9);
    EXPECT_NEAR(back.spawn.yaw, scn.spawn.yaw, 1e-9);
    fs::remove_all(dir);
}

TEST(ScenarioFile, LoaderRejectsGarbage) {
    const auto dir = fs::temp_directory_path() / "dp_scenario_bad";
    fs::create_directories(dir);
    const auto write = [&](const std::string& body) {
        const auto p = dir / "bad.scn";
        std::ofstream out(p);
        out << body;
        return p;
    };
    auto p = write("id foo\n");  // no version line
    EXPECT_THROW(dp::load_scenario(p), std::runtime_error);
    p = write("scenario 1\nwobble 3\n");
    EXPECT_THROW(dp::load_scenario(p), std::runtime_error);
    p = write("scenario 2\n");
    EXPECT_THROW(dp::load_scenario(p), std::runtime_error);
    EXPECT_THROW(dp::load_scenario(dir / "absent.scn"), std::runtime_error);
    fs::remove_all(dir);
}

TEST(ScenarioFile, SpawnSitsOnEveryFactoryTrack) {
    for (const char* id : {"simplistic", "rigorous", "collision"}) {
        const dp::TrackScenario scn = dp::make_scenario(id);
        const auto q = scn.index().nearest({scn.spawn.x, scn.spawn.y});
        ASSERT_TRUE(q.has_value()) << id;
        EXPECT_LE(std::abs(q->lateral - scn.corridor_offset(q->half_width)),
                  scn.corridor_half(q->half_width))
            << id;
    }
}
