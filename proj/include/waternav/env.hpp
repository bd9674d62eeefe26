#pragma once

#include <memory>
#include <stdexcept>

#include "waternav/dynamics.hpp"
#include "waternav/grid.hpp"

namespace waternav {

inline constexpr int kPatchSize = 64;

struct Observation {
    double rel_heading = 0.0;  // bearing to target minus ship heading, wrapped
    double distance = 0.0;     // m to target
    double speed = 0.0;        // m/s
    std::array<std::uint8_t, kPatchSize * kPatchSize> patch{};  // 1 free, 0 obstacle

    std::uint8_t patch_at(int i, int j) const { return patch[static_cast<std::size_t>(j) * kPatchSize + i]; }
};

struct EnvAction {
    double desired_speed = 0.0;   // m/s in [0, v_max]
    double heading_change = 0.0;  // rad in [-a_max, a_max], relative to current heading
};

struct EnvConfig {
    double d_max = 450.0;        // m, reward normalizer
    double goal_radius = 25.0;   // m, D_G
    double r_goal_reached = 10.0;
    double r_collision = -20.0;
    double w_h = 1.0;            // heading action penalty weight
    double gamma = 0.99;
    int substeps = 10;           // dynamics steps per env step
    int max_steps = 400;         // episode cap, env steps
    double a_max = 0.3;          // rad, heading action bound
    double v_max = 5.0;          // m/s, speed action bound (mirrors ShipParams)
    double step_seconds = 5.0;   // substeps * dt, kept for closed-form value estimates

    void validate() const {
        if (d_max <= 0 || goal_radius <= 0 || w_h < 0 || gamma <= 0 || gamma >= 1 ||
            substeps < 1 || max_steps < 1 || a_max <= 0 || v_max <= 0)
            throw std::invalid_argument("env config: invalid field");
    }
};

struct RewardBreakdown {
    double r_d = 0.0;
    double r_g = 0.0;
    double r_c = 0.0;
    double r_h = 0.0;
    double total() const { return r_d + r_g + r_c + r_h; }
};

// r = r_d + r_g + r_c + r_h with
//   r_d = 1 - d/d_max
//   r_g = r_goal_reached iff goal
//   r_c = r_collision iff collision
//   r_h = -w_h * |a_h|
inline RewardBreakdown reward(double d, bool collision, bool goal, double a_h,
                              const EnvConfig& cfg) {
    RewardBreakdown r;
    r.r_d = 1.0 - d / cfg.d_max;
    r.r_g = goal ? cfg.r_goal_reached : 0.0;
    r.r_c = collision ? cfg.r_collision : 0.0;
    r.r_h = -cfg.w_h * std::abs(a_h);
    return r;
}

struct StepInfo {
    bool collision = false;
    bool goal_reached = false;
    bool step_cap = false;
    bool action_clamped = false;
    Vec2 position{};
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    RewardBreakdown components;
    bool done = false;
    StepInfo info;
};

// Episodic environment over the vessel dynamics and an occupancy grid.
// Plain value type: copying an Environment snapshots the full episode state
// (ship, controllers, counters), and the copy reproduces identical futures.
class Environment {
  public:
    Environment(std::shared_ptr<const OccupancyGrid> grid, ShipParams params, Footprint footprint,
                EnvConfig cfg)
        : grid_(std::move(grid)), params_(params), footprint_(footprint), cfg_(cfg) {
        params_.validate();
        cfg_.validate();
    }

    // Places the ship at `start` with zero speed and fresh controllers.
    // Throws if the start footprint is in collision.
    Observation reset(const Pose& start, Vec2 target) {
        if (footprint_collision(*grid_, start, footprint_))
            throw std::invalid_argument("env reset: start pose in collision");
        ship_ = ShipState{start.position, wrap_angle(start.heading), 0.0, 0.0, 0.0};
        speed_pid_ = PidState{};
        heading_pid_ = PidState{};
        target_ = target;
        step_count_ = 0;
        done_ = false;
        return observe();
    }

    // 64x64 axis-aligned window centered on the ship cell; out-of-map filled
    // as obstacle.
    Observation observe() const {
        Observation obs;
        obs.speed = ship_.speed;
        obs.distance = distance(ship_.position, target_);
        obs.rel_heading = wrap_angle(bearing(ship_.position, target_) - ship_.heading);
        const int ci = static_cast<int>(std::floor((ship_.position.x - grid_->origin.x) / grid_->cell_size + 0.5));
        const int cj = static_cast<int>(std::floor((ship_.position.y - grid_->origin.y) / grid_->cell_size + 0.5));
        const int half = kPatchSize / 2;
        for (int v = 0; v < kPatchSize; ++v) {
            const int j = cj - half + v;
            for (int u = 0; u < kPatchSize; ++u) {
                const int i = ci - half + u;
                obs.patch[static_cast<std::size_t>(v) * kPatchSize + u] = grid_->is_free(i, j) ? 1 : 0;
            }
        }
        return obs;
    }

    // Holds the action's setpoint for `substeps` dynamics steps, then checks
    // the net displacement for collision and computes the reward.
    StepResult step(const EnvAction& action) {
        if (done_) throw std::logic_error("env step: episode already finished");
        StepResult res;
        EnvAction a = action;
        a.desired_speed = clamp(a.desired_speed, 0.0, cfg_.v_max);
        a.heading_change = clamp(a.heading_change, -cfg_.a_max, cfg_.a_max);
        res.info.action_clamped = a.desired_speed != action.desired_speed ||
                                  a.heading_change != action.heading_change;

        const Pose pre{ship_.position, ship_.heading};
        const Setpoint sp{a.desired_speed, wrap_angle(ship_.heading + a.heading_change)};
        for (int k = 0; k < cfg_.substeps; ++k)
            ship_ = step_dynamics(ship_, sp, params_, speed_pid_, heading_pid_);
        ++step_count_;

        res.info.collision = swept_collision(*grid_, pre, ship_.position, footprint_);
        res.info.position = ship_.position;
        const double d = distance(ship_.position, target_);
        res.info.goal_reached = d < cfg_.goal_radius;
        res.info.step_cap = step_count_ >= cfg_.max_steps;
        res.components = reward(d, res.info.collision, res.info.goal_reached, a.heading_change, cfg_);
        res.reward = res.components.total();
        done_ = res.info.collision || res.info.goal_reached || res.info.step_cap;
        res.done = done_;
        res.obs = observe();
        return res;
    }

    // Swaps the active target mid-episode (next global waypoint) and clears
    // the goal latch so the episode can continue.
    void advance_target(Vec2 target) {
        target_ = target;
        done_ = false;
    }

    const ShipState& ship() const { return ship_; }
    Vec2 target() const { return target_; }
    bool done() const { return done_; }
    int step_count() const { return step_count_; }
    const EnvConfig& config() const { return cfg_; }
    const ShipParams& params() const { return params_; }
    const Footprint& footprint() const { return footprint_; }
    const OccupancyGrid& grid() const { return *grid_; }
    std::shared_ptr<const OccupancyGrid> grid_ptr() const { return grid_; }

  private:
    std::shared_ptr<const OccupancyGrid> grid_;
    ShipParams params_;
    Footprint footprint_;
    EnvConfig cfg_;
    ShipState ship_{};
    PidState speed_pid_{};
    PidState heading_pid_{};
    Vec2 target_{};
    int step_count_ = 0;
    bool done_ = true;
};

}  // namespace waternav
