#include "waternav/dynamics.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "testutil.hpp"

using namespace waternav;

namespace {
const std::string kParamsFile = std::string(WATERNAV_DATA_DIR) + "/ship_default.params";
}

TEST(DragForce, ZeroFlow) {
    ShipParams p;
    EXPECT_DOUBLE_EQ(drag_force(p, 0.0), 0.0);
}

TEST(DragForce, DirectSubstitution) {
    ShipParams p;
    p.rho = 1000;
    p.c_d = 1;
    p.area = 2;
    EXPECT_DOUBLE_EQ(drag_force(p, 2.0), 4000.0);
}

TEST(DragForce, QuadraticScaling) {
    ShipParams p;
    testutil::Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const double u = rng.uniform(0.1, 10);
        EXPECT_DOUBLE_EQ(drag_force(p, 2 * u), 4 * drag_force(p, u));
    }
}

TEST(PidStep, ZeroErrorZeroOutput) {
    PidState st;
    EXPECT_DOUBLE_EQ(pid_step(st, {0.5, 0.2, 0.1, 3.0}, 0.0, 0.5), 0.0);
}

TEST(PidStep, ProportionalOnly) {
    PidState st;
    EXPECT_DOUBLE_EQ(pid_step(st, {0.5, 0.0, 0.0, 1.0}, 1.0, 0.5), 0.5);
}

TEST(PidStep, IntegratorSaturates) {
    // constant e = 1, Ki = 1, clamp +/-2, dt = 1: integral 1,2,2,2
    PidState st;
    const PidGains g{0.0, 1.0, 0.0, 2.0};
    double out = 0;
    for (int k = 0; k < 4; ++k) out = pid_step(st, g, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(st.integral, 2.0);
    EXPECT_DOUBLE_EQ(out, 2.0);
}

TEST(StepDynamics, EquilibriumAtRest) {
    const ShipParams p;
    ShipState s;
    s.position = {100, 100};
    s.heading = 0.3;
    PidState sp, hp;
    const ShipState n = step_dynamics(s, {0.0, s.heading}, p, sp, hp);
    EXPECT_DOUBLE_EQ(n.position.x, s.position.x);
    EXPECT_DOUBLE_EQ(n.position.y, s.position.y);
    EXPECT_DOUBLE_EQ(n.speed, 0.0);
    EXPECT_DOUBLE_EQ(n.heading, s.heading);
}

TEST(StepDynamics, SpeedConvergesWithReferenceParams) {
    const ShipParams p = load_ship_params(kParamsFile);
    ShipState s;
    PidState sp, hp;
    const Setpoint set{2.0, 0.0};
    const int steps = static_cast<int>(120.0 / p.dt);
    for (int k = 0; k < steps; ++k) s = step_dynamics(s, set, p, sp, hp);
    EXPECT_NEAR(s.speed, 2.0, 0.1);  // within 5%
}

TEST(StepDynamics, RudderSaturation) {
    const ShipParams p;
    ShipState s;
    s.speed = 2.0;
    PidState sp, hp;
    // huge heading error; rudder must clamp to rudder_max
    const ShipState n = step_dynamics(s, {2.0, M_PI}, p, sp, hp);
    EXPECT_DOUBLE_EQ(n.rudder_angle, p.rudder_max);
    const double expected_rate = p.turn_rate_gain * p.rudder_max * n.speed;
    EXPECT_NEAR(n.heading - s.heading, expected_rate * p.dt, 1e-12);
}

TEST(StepDynamics, Determinism) {
    const ShipParams p;
    ShipState a, b;
    PidState asp, ahp, bsp, bhp;
    for (int k = 0; k < 200; ++k) {
        a = step_dynamics(a, {1.5, 0.4}, p, asp, ahp);
        b = step_dynamics(b, {1.5, 0.4}, p, bsp, bhp);
    }
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(StepDynamics, InvariantsHold) {
    const ShipParams p;
    testutil::Rng rng(17);
    ShipState s;
    PidState sp, hp;
    for (int k = 0; k < 500; ++k) {
        const Setpoint set{rng.uniform(0, 5), rng.uniform(-M_PI, M_PI)};
        s = step_dynamics(s, set, p, sp, hp);
        EXPECT_GE(s.speed, 0.0);
        EXPECT_GT(s.heading, -M_PI);
        EXPECT_LE(s.heading, M_PI);
        EXPECT_GE(s.thrust, 0.0);
        EXPECT_LE(s.thrust, 1.0);
        EXPECT_LE(std::abs(s.rudder_angle), p.rudder_max);
    }
}

TEST(StepDynamics, ZeroThrustSpeedNonincreasing) {
    const ShipParams p;
    ShipState s;
    s.speed = 3.0;
    PidState sp, hp;
    double prev = s.speed;
    for (int k = 0; k < 100; ++k) {
        s = step_dynamics(s, {0.0, 0.0}, p, sp, hp);
        EXPECT_LE(s.speed, prev);
        prev = s.speed;
    }
}

TEST(StepDynamics, SteadyStateBalance) {
    const ShipParams p;
    // thrust level 0.8 balances drag at u* = sqrt(2*F*thrust/(rho*cd*A))
    const double thrust = 0.8;
    const double u_star = std::sqrt(2.0 * p.thrust_force_max * thrust / (p.rho * p.c_d * p.area));
    const double accel = (thrust * p.thrust_force_max - drag_force(p, u_star)) / p.mass;
    EXPECT_NEAR(accel, 0.0, 1e-9);
}

TEST(StepDynamics, ZeroRudderOrZeroSpeedHoldsHeading) {
    const ShipParams p;
    ShipState s;
    s.heading = 1.0;
    s.speed = 2.0;
    PidState sp, hp;
    // aligned setpoint -> zero heading error -> zero rudder
    ShipState n = step_dynamics(s, {2.0, 1.0}, p, sp, hp);
    EXPECT_DOUBLE_EQ(n.heading, 1.0);
    // zero speed: any rudder produces no turn
    ShipState rest;
    rest.heading = 0.5;
    PidState sp2, hp2;
    n = step_dynamics(rest, {0.0, -2.0}, p, sp2, hp2);
    EXPECT_DOUBLE_EQ(n.heading, 0.5);
}

TEST(LoadShipParams, ReferenceFileMatchesDefaults) {
    const ShipParams p = load_ship_params(kParamsFile);
    EXPECT_DOUBLE_EQ(p.length, 15.0);
    EXPECT_DOUBLE_EQ(p.width, 4.0);
    EXPECT_DOUBLE_EQ(p.mass, 20000.0);
    EXPECT_DOUBLE_EQ(p.dt, 0.5);
}

TEST(LoadShipParams, MissingFileThrows) {
    EXPECT_THROW(load_ship_params("/nonexistent/file.params"), std::runtime_error);
}
