#include "waternav/env.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "testutil.hpp"

using namespace waternav;

namespace {

std::shared_ptr<OccupancyGrid> free_grid(int w, int h, double cell = 3.125) {
    auto g = std::make_shared<OccupancyGrid>();
    g->width = w;
    g->height = h;
    g->cell_size = cell;
    g->origin = {0, 0};
    g->cells.assign(static_cast<std::size_t>(w) * h, 1);
    return g;
}

Environment make_env(std::shared_ptr<OccupancyGrid> grid, EnvConfig cfg = {}) {
    return Environment(std::move(grid), ShipParams{}, Footprint{}, cfg);
}

}  // namespace

TEST(Reward, DirectSubstitution) {
    EnvConfig cfg;
    cfg.d_max = 100;
    cfg.r_goal_reached = 10;
    const auto r = reward(0.0, false, true, 0.0, cfg);
    EXPECT_DOUBLE_EQ(r.total(), 11.0);
}

TEST(Reward, VanishesAtDmax) {
    EnvConfig cfg;
    cfg.d_max = 100;
    const auto r = reward(100.0, false, false, 0.0, cfg);
    EXPECT_DOUBLE_EQ(r.total(), 0.0);
}

TEST(Reward, AllFourTerms) {
    EnvConfig cfg;
    cfg.d_max = 100;
    cfg.r_collision = -20;
    cfg.w_h = 1.0;
    const auto r = reward(50.0, true, false, 0.5, cfg);
    EXPECT_DOUBLE_EQ(r.r_d, 0.5);
    EXPECT_DOUBLE_EQ(r.r_c, -20.0);
    EXPECT_DOUBLE_EQ(r.r_h, -0.5);
    EXPECT_DOUBLE_EQ(r.total(), -20.0);
}

TEST(Reward, SumOfComponentsAndMonotonicity) {
    EnvConfig cfg;
    testutil::Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        const double d = rng.uniform(0, cfg.d_max);
        const double ah = rng.uniform(-cfg.a_max, cfg.a_max);
        const bool col = rng.chance(0.3);
        const bool goal = d < cfg.goal_radius;
        const auto r = reward(d, col, goal, ah, cfg);
        EXPECT_DOUBLE_EQ(r.total(), r.r_d + r.r_g + r.r_c + r.r_h);
        EXPECT_GE(r.r_d, 0.0);
        EXPECT_LE(r.r_d, 1.0);
        // strictly decreasing in d, nonincreasing in |a_h|
        const auto r2 = reward(d + 1.0, col, goal, ah, cfg);
        EXPECT_LT(r2.r_d, r.r_d);
        const auto r3 = reward(d, col, goal, ah * 1.5, cfg);
        EXPECT_LE(r3.r_h, r.r_h);
    }
}

TEST(EnvReset, StartAtGoal) {
    auto env = make_env(free_grid(64, 64));
    const Vec2 center{100, 100};
    const auto obs = env.reset({center, 0.0}, center);
    EXPECT_LT(obs.distance, env.config().goal_radius);
}

TEST(EnvReset, GeometryOfInitialObservation) {
    auto env = make_env(free_grid(128, 128));
    // start 100 m due +x of target, heading +x
    const auto obs = env.reset({{200, 100}, 0.0}, {100, 100});
    EXPECT_DOUBLE_EQ(obs.distance, 100.0);
    EXPECT_DOUBLE_EQ(obs.rel_heading, M_PI);  // target dead astern
    EXPECT_DOUBLE_EQ(obs.speed, 0.0);
}

TEST(EnvReset, CollidingStartThrows) {
    auto g = free_grid(64, 64);
    for (int j = 20; j < 30; ++j)
        for (int i = 20; i < 30; ++i) g->set(i, j, 0);
    auto env = make_env(g);
    EXPECT_THROW(env.reset({{g->cell_center(25, 25)}, 0.0}, {10, 10}), std::invalid_argument);
}

TEST(Observe, AllFreePatch) {
    auto env = make_env(free_grid(64, 64));
    const auto obs = env.reset({{100, 100}, 0.0}, {150, 100});
    for (auto c : obs.patch) EXPECT_EQ(c, 1);
}

TEST(Observe, CornerFillIsObstacle) {
    auto env = make_env(free_grid(64, 64));
    const auto obs = env.reset({{30, 30}, 0.0}, {150, 100});
    // ship near map corner: cells outside the map are obstacle-filled
    EXPECT_EQ(obs.patch_at(0, 0), 0);
    EXPECT_EQ(obs.patch_at(63, 63), 1);
    int zeros = 0;
    for (auto c : obs.patch) zeros += c == 0;
    EXPECT_GT(zeros, 1000);
}

TEST(Observe, RelHeadingOppositeBearing) {
    auto env = make_env(free_grid(64, 64));
    const auto obs = env.reset({{100, 100}, 0.0}, {50, 100});
    EXPECT_DOUBLE_EQ(obs.rel_heading, M_PI);
}

TEST(EnvStep, ZeroSpeedActionHolds) {
    auto env = make_env(free_grid(64, 64));
    env.reset({{100, 100}, 0.0}, {150, 100});
    const auto res = env.step({0.0, 0.0});
    EXPECT_DOUBLE_EQ(res.info.position.x, 100.0);
    EXPECT_DOUBLE_EQ(res.info.position.y, 100.0);
    EXPECT_FALSE(res.info.collision);
    EXPECT_FALSE(res.done);
}

TEST(EnvStep, DrivingIntoWallCollides) {
    auto g = free_grid(64, 64);
    for (int j = 0; j < 64; ++j)
        for (int i = 40; i < 44; ++i) g->set(i, j, 0);
    auto env = make_env(g);
    env.reset({{80, 100}, 0.0}, {190, 100});
    StepResult res;
    for (int k = 0; k < 10 && !env.done(); ++k) res = env.step({5.0, 0.0});
    EXPECT_TRUE(res.info.collision);
    EXPECT_TRUE(res.done);
    EXPECT_DOUBLE_EQ(res.components.r_c, env.config().r_collision);
}

TEST(EnvStep, DeterministicReplay) {
    testutil::Rng rng(77);
    std::vector<EnvAction> script;
    for (int k = 0; k < 20; ++k) script.push_back({rng.uniform(0, 3), rng.uniform(-0.3, 0.3)});
    std::vector<Vec2> first, second;
    for (int run = 0; run < 2; ++run) {
        auto env = make_env(free_grid(128, 128));
        env.reset({{200, 200}, 0.5}, {390, 390});
        auto& out = run == 0 ? first : second;
        for (const auto& a : script) {
            if (env.done()) break;
            out.push_back(env.step(a).info.position);
        }
    }
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t k = 0; k < first.size(); ++k) {
        EXPECT_EQ(std::memcmp(&first[k], &second[k], sizeof(Vec2)), 0);
    }
}

TEST(EnvStep, SnapshotRestoreReproducesFutures) {
    auto env = make_env(free_grid(128, 128));
    env.reset({{200, 200}, 0.0}, {350, 250});
    for (int k = 0; k < 5; ++k) env.step({2.0, 0.1});
    Environment snap = env;  // copy = snapshot
    std::vector<Vec2> a, b;
    for (int k = 0; k < 10; ++k) a.push_back(env.step({2.0, -0.05}).info.position);
    for (int k = 0; k < 10; ++k) b.push_back(snap.step({2.0, -0.05}).info.position);
    for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_EQ(std::memcmp(&a[k], &b[k], sizeof(Vec2)), 0);
}

TEST(EnvStep, ActionClampRecorded) {
    auto env = make_env(free_grid(64, 64));
    env.reset({{100, 100}, 0.0}, {150, 100});
    const auto res = env.step({99.0, 2.0});
    EXPECT_TRUE(res.info.action_clamped);
    const auto res2 = env.step({1.0, 0.1});
    EXPECT_FALSE(res2.info.action_clamped);
}

TEST(EnvStep, StepCapTerminates) {
    EnvConfig cfg;
    cfg.max_steps = 7;
    auto env = make_env(free_grid(64, 64), cfg);
    env.reset({{100, 100}, 0.0}, {190, 100});
    int steps = 0;
    while (!env.done()) {
        env.step({0.0, 0.0});
        ++steps;
        ASSERT_LE(steps, cfg.max_steps);
    }
    EXPECT_EQ(steps, cfg.max_steps);
    EXPECT_THROW(env.step({0.0, 0.0}), std::logic_error);
}

TEST(EnvStep, GoalTerminates) {
    auto env = make_env(free_grid(64, 64));
    env.reset({{60, 100}, 0.0}, {120, 100});
    StepResult res;
    int guard = 0;
    while (!env.done() && guard++ < 50) res = env.step({3.0, 0.0});
    EXPECT_TRUE(res.info.goal_reached);
    EXPECT_DOUBLE_EQ(res.components.r_g, env.config().r_goal_reached);
}

TEST(EnvStep, AdvanceTargetContinuesEpisode) {
    auto env = make_env(free_grid(128, 128));
    env.reset({{60, 200}, 0.0}, {120, 200});
    int guard = 0;
    while (!env.done() && guard++ < 50) env.step({3.0, 0.0});
    ASSERT_TRUE(env.done());
    env.advance_target({250, 200});
    EXPECT_FALSE(env.done());
    const auto res = env.step({3.0, 0.0});
    EXPECT_FALSE(res.done);
    EXPECT_GT(res.obs.distance, env.config().goal_radius);
}
