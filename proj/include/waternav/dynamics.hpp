#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "waternav/geom.hpp"

namespace waternav {

struct ShipState {
    Vec2 position{};
    double heading = 0.0;       // rad in (-pi, pi], 0 = +x, ccw positive
    double speed = 0.0;         // m/s, surge only, >= 0
    double rudder_angle = 0.0;  // rad in [-rudder_max, rudder_max]
    double thrust = 0.0;        // normalized [0, 1]
};

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double integral_limit = 0.0;  // anti-windup clamp on the integral, +/-
};

struct PidState {
    double integral = 0.0;
    double prev_error = 0.0;
    bool has_prev = false;
};

struct ShipParams {
    double length = 15.0;            // m
    double width = 4.0;              // m
    double rho = 1000.0;             // kg/m^3
    double c_d = 1.0;                // drag coefficient
    double area = 8.0;               // m^2 reference area
    double thrust_force_max = 2.0e4; // N
    double mass = 20000.0;           // kg
    double rudder_max = 0.6;         // rad
    double turn_rate_gain = 0.05;    // rad/s per rad rudder per m/s speed
    double v_max = 5.0;              // m/s command ceiling
    double dt = 0.5;                 // s
    PidGains pid_speed{1.0, 0.25, 0.0, 5.0};
    PidGains pid_heading{2.0, 0.0, 1.0, 1.0};

    void validate() const {
        if (length <= 0 || width <= 0 || rho <= 0 || c_d <= 0 || area <= 0 ||
            thrust_force_max <= 0 || mass <= 0 || rudder_max <= 0 ||
            turn_rate_gain <= 0 || v_max <= 0 || dt <= 0)
            throw std::invalid_argument("ship params: non-positive physical constant");
    }
};

struct Setpoint {
    double desired_speed = 0.0;    // m/s >= 0
    double desired_heading = 0.0;  // rad in (-pi, pi]
};

// Drag force 0.5 * rho * u^2 * c_d * A.
inline double drag_force(const ShipParams& p, double u) {
    return 0.5 * p.rho * u * u * p.c_d * p.area;
}

// One PID step: Kp*e + Ki*int(e dt) + Kd*de/dt with the integral clamped to
// +/- gains.integral_limit. The first step has no derivative term.
inline double pid_step(PidState& st, const PidGains& g, double error, double dt) {
    st.integral = clamp(st.integral + error * dt, -g.integral_limit, g.integral_limit);
    const double derivative = st.has_prev ? (error - st.prev_error) / dt : 0.0;
    st.prev_error = error;
    st.has_prev = true;
    return g.kp * error + g.ki * st.integral + g.kd * derivative;
}

// One Euler step of the surge/turn vessel model:
//   thrust  <- speed PID on (desired_speed - speed), clamped [0, 1]
//   rudder  <- heading PID on wrapped heading error, clamped +/- rudder_max
//   u'      = u + dt * (thrust*thrust_force_max - drag(u)) / mass, >= 0
//   psi'    = wrap(psi + dt * turn_rate_gain * rudder * u')
//   pos'    = pos + dt * u' * (cos psi', sin psi')
inline ShipState step_dynamics(const ShipState& s, const Setpoint& sp, const ShipParams& p,
                               PidState& speed_pid, PidState& heading_pid) {
    ShipState n = s;
    n.thrust = clamp(pid_step(speed_pid, p.pid_speed, sp.desired_speed - s.speed, p.dt), 0.0, 1.0);
    const double heading_error = wrap_angle(sp.desired_heading - s.heading);
    n.rudder_angle = clamp(pid_step(heading_pid, p.pid_heading, heading_error, p.dt),
                           -p.rudder_max, p.rudder_max);
    const double accel = (n.thrust * p.thrust_force_max - drag_force(p, s.speed)) / p.mass;
    n.speed = std::max(0.0, s.speed + accel * p.dt);
    n.heading = wrap_angle(s.heading + p.dt * p.turn_rate_gain * n.rudder_angle * n.speed);
    n.position = s.position + p.dt * n.speed * unit_from_angle(n.heading);
    return n;
}

// Flat key-value parameter file: one "key value" pair per line, '#' comments.
inline ShipParams load_ship_params(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open ship params file: " + path);
    std::map<std::string, double> kv;
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        double value;
        if (ls >> key >> value) kv[key] = value;
    }
    ShipParams p;
    auto get = [&](const std::string& key, double& out) {
        if (auto it = kv.find(key); it != kv.end()) out = it->second;
    };
    get("length", p.length);
    get("width", p.width);
    get("rho", p.rho);
    get("c_d", p.c_d);
    get("area", p.area);
    get("thrust_force_max", p.thrust_force_max);
    get("mass", p.mass);
    get("rudder_max", p.rudder_max);
    get("turn_rate_gain", p.turn_rate_gain);
    get("v_max", p.v_max);
    get("dt", p.dt);
    get("pid_speed_kp", p.pid_speed.kp);
    get("pid_speed_ki", p.pid_speed.ki);
    get("pid_speed_kd", p.pid_speed.kd);
    get("pid_speed_int_limit", p.pid_speed.integral_limit);
    get("pid_heading_kp", p.pid_heading.kp);
    get("pid_heading_ki", p.pid_heading.ki);
    get("pid_heading_kd", p.pid_heading.kd);
    get("pid_heading_int_limit", p.pid_heading.integral_limit);
    p.validate();
    return p;
}

}  // namespace waternav
