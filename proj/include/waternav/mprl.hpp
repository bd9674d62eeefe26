#pragma once

#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "waternav/agent.hpp"
#include "waternav/env.hpp"

namespace waternav::mprl {

struct MprlConfig {
    int j = 7;             // initial heading-change values, evenly spaced over [-a_max, a_max]
    int l = 5;             // per-step deltas, evenly spaced over [-delta_max, delta_max]
    int n = 8;             // simulated env steps per candidate
    double gamma = 0.99;
    double cruise_speed = 2.0;    // constant speed for all candidates
    int waypoint_stride = 2;      // env steps per emitted waypoint
    double a_max = 0.3;           // action bound shared with the env
    double delta_max = 0.0375;    // a_max / n by default
    bool parallel = true;

    int candidate_count() const { return j * l; }

    void validate() const {
        if (j < 1 || l < 1 || n < 1) throw std::invalid_argument("mprl: j, l, n must be >= 1");
        if (waypoint_stride < 1 || n % waypoint_stride != 0)
            throw std::invalid_argument("mprl: waypoint_stride must divide n");
        if (cruise_speed <= 0) throw std::invalid_argument("mprl: cruise_speed must be positive");
        if (a_max <= 0 || delta_max < 0) throw std::invalid_argument("mprl: action bounds");
    }
};

// Unfolds the k = j*l action sequences: sequence (i, m) starts at the i-th
// initial heading change and accumulates the m-th delta each step, clamped
// to [-a_max, a_max]. Enumeration order is i outer, m inner.
inline std::vector<std::vector<double>> generate_action_sequences(const MprlConfig& cfg) {
    cfg.validate();
    auto spaced = [](int count, double bound) {
        std::vector<double> v(count);
        for (int k = 0; k < count; ++k)
            v[k] = count == 1 ? 0.0 : -bound + 2.0 * bound * k / (count - 1);
        return v;
    };
    const auto initial = spaced(cfg.j, cfg.a_max);
    const auto deltas = spaced(cfg.l, cfg.delta_max);
    std::vector<std::vector<double>> sequences;
    sequences.reserve(static_cast<std::size_t>(cfg.j) * cfg.l);
    for (int i = 0; i < cfg.j; ++i)
        for (int m = 0; m < cfg.l; ++m) {
            std::vector<double> seq(cfg.n);
            double a = clamp(initial[i], -cfg.a_max, cfg.a_max);
            for (int t = 0; t < cfg.n; ++t) {
                seq[t] = a;
                a = clamp(a + deltas[m], -cfg.a_max, cfg.a_max);
            }
            sequences.push_back(std::move(seq));
        }
    return sequences;
}

struct CandidateTrajectory {
    int index = 0;
    std::vector<double> actions;   // heading-change sequence actually applied
    std::vector<Pose> states;      // poses, start + one per realized step
    std::vector<double> rewards;   // one per realized step
    Observation terminal_obs;
    bool terminal = false;         // episode ended during the rollout
    bool first_step_collision = false;
    double g_return = 0.0;
};

// Restores the snapshot and applies EnvAction(cruise_speed, seq[t]) for up
// to n steps, stopping early when the episode ends.
inline CandidateTrajectory rollout_candidate(const Environment& snapshot,
                                             const std::vector<double>& seq,
                                             const MprlConfig& cfg) {
    Environment env = snapshot;  // value copy restores the full episode state
    CandidateTrajectory traj;
    traj.states.push_back({env.ship().position, env.ship().heading});
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const StepResult res = env.step({cfg.cruise_speed, seq[t]});
        traj.actions.push_back(seq[t]);
        traj.states.push_back({res.info.position, env.ship().heading});
        traj.rewards.push_back(res.reward);
        if (t == 0) traj.first_step_collision = res.info.collision;
        traj.terminal_obs = res.obs;
        if (res.done) {
            traj.terminal = true;
            break;
        }
    }
    return traj;
}

// G = sum_{i=1..m} gamma^{i-1} R_{t+i} + gamma^m V(S_{t+m}); the bootstrap
// term is dropped when the episode terminated within the rollout.
inline double n_step_return(const std::vector<double>& rewards, const Observation& terminal_obs,
                            bool terminal, const ValueFn& value_fn, double gamma) {
    if (rewards.empty()) throw std::invalid_argument("n_step_return: no realized rewards");
    double g = 0.0;
    double discount = 1.0;
    for (double r : rewards) {
        g += discount * r;
        discount *= gamma;
    }
    if (!terminal) g += discount * value_fn(terminal_obs);
    return g;
}

// Argmax over g_return; ties resolved toward the smallest candidate index.
inline const CandidateTrajectory& select_trajectory(const std::vector<CandidateTrajectory>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("select_trajectory: empty candidate list");
    const CandidateTrajectory* best = &candidates.front();
    for (const auto& c : candidates)
        if (c.g_return > best->g_return) best = &c;
    return *best;
}

struct Waypoints {
    std::vector<Vec2> points;
    int chosen_index = 0;
    std::vector<double> candidate_returns;
};

struct Handover {
    std::string reason;
    int chosen_index = 0;
    bool first_step_collision = false;
    std::vector<double> candidate_returns;
};

using PlanOutcome = std::variant<Waypoints, Handover>;

inline bool is_handover(const PlanOutcome& o) { return std::holds_alternative<Handover>(o); }

// Waypoints from a candidate: poses at every waypoint_stride steps over the
// realized horizon; a candidate that ended before the first stride boundary
// contributes its final pose.
inline std::vector<Vec2> candidate_waypoints(const CandidateTrajectory& traj, int stride) {
    std::vector<Vec2> out;
    const std::size_t realized = traj.states.size() - 1;
    for (std::size_t s = stride; s <= realized; s += stride) out.push_back(traj.states[s].position);
    if (out.empty() && realized >= 1) out.push_back(traj.states[realized].position);
    return out;
}

// Full planning cycle: simulate all k candidates from the snapshot, score
// with n-step bootstrapped returns, select the argmax, emit its waypoints.
// Hands over iff the straight-line transition from the start pose to the
// first emitted waypoint collides.
inline PlanOutcome plan(const Environment& snapshot, const MprlConfig& cfg, const ValueFn& value_fn) {
    cfg.validate();
    if (snapshot.done()) throw std::logic_error("mprl plan: snapshot episode already finished");
    const auto sequences = generate_action_sequences(cfg);
    std::vector<CandidateTrajectory> candidates(sequences.size());

    auto evaluate = [&](std::size_t idx) {
        candidates[idx] = rollout_candidate(snapshot, sequences[idx], cfg);
        candidates[idx].index = static_cast<int>(idx);
        candidates[idx].g_return =
            n_step_return(candidates[idx].rewards, candidates[idx].terminal_obs,
                          candidates[idx].terminal, value_fn, cfg.gamma);
    };

    if (cfg.parallel) {
        const unsigned workers =
            std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                               static_cast<unsigned>(sequences.size()));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t idx = w; idx < sequences.size(); idx += workers) evaluate(idx);
            });
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t idx = 0; idx < sequences.size(); ++idx) evaluate(idx);
    }

    std::vector<double> returns(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) returns[k] = candidates[k].g_return;

    const CandidateTrajectory& best = select_trajectory(candidates);
    const auto waypoints = candidate_waypoints(best, cfg.waypoint_stride);

    const Pose start{snapshot.ship().position, snapshot.ship().heading};
    if (waypoints.empty() ||
        swept_collision(snapshot.grid(), start, waypoints.front(), snapshot.footprint())) {
        Handover h;
        h.reason = "transition to the first waypoint collides";
        h.chosen_index = best.index;
        h.first_step_collision = best.first_step_collision;
        h.candidate_returns = std::move(returns);
        return h;
    }
    Waypoints w;
    w.points = waypoints;
    w.chosen_index = best.index;
    w.candidate_returns = std::move(returns);
    return w;
}

}  // namespace waternav::mprl
