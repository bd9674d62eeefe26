#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "waternav/env.hpp"
#include "waternav/nn.hpp"

namespace waternav {

inline constexpr int kPooledSize = 16;  // 64x64 patch max-pooled 4x4 -> 16x16

// [rel_heading/pi, distance/d_max, speed/v_max, pooled patch] with the patch
// pooled to-obstacle: a coarse cell is 1 when ANY covered fine cell is an
// obstacle. All entries lie in [-1, 1].
inline FeatureVector encode(const Observation& obs, const EnvConfig& cfg) {
    FeatureVector x{};
    x[0] = obs.rel_heading / M_PI;
    x[1] = std::min(1.0, obs.distance / cfg.d_max);
    x[2] = std::min(1.0, obs.speed / cfg.v_max);
    constexpr int kBlock = kPatchSize / kPooledSize;
    for (int v = 0; v < kPooledSize; ++v)
        for (int u = 0; u < kPooledSize; ++u) {
            double occ = 0.0;
            for (int dj = 0; dj < kBlock && occ == 0.0; ++dj)
                for (int di = 0; di < kBlock; ++di)
                    if (obs.patch_at(u * kBlock + di, v * kBlock + dj) == 0) {
                        occ = 1.0;
                        break;
                    }
            x[3 + v * kPooledSize + u] = occ;
        }
    return x;
}

struct ActionBounds {
    double v_max = 5.0;
    double a_max = 0.3;
};

inline ActionBounds bounds_from(const EnvConfig& cfg) { return {cfg.v_max, cfg.a_max}; }

// tanh-squash + affine map of a raw 2-vector into the action box
inline EnvAction squash_action(const std::array<double, 2>& z, const ActionBounds& b) {
    return {0.5 * (std::tanh(z[0]) + 1.0) * b.v_max, std::tanh(z[1]) * b.a_max};
}

inline constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))

// Gaussian log-density of raw sample z under (mean, log_std); the part of
// log pi(a) that depends on the parameters.
inline double gaussian_log_prob(const std::array<double, 2>& z, const std::array<double, 2>& mean,
                                const std::array<double, 2>& log_std) {
    double lp = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double s = std::exp(log_std[i]);
        const double t = (z[i] - mean[i]) / s;
        lp += -0.5 * t * t - log_std[i] - kLogSqrt2Pi;
    }
    return lp;
}

// Change-of-variable terms for the tanh squash and the affine map into the
// action box. Depends only on z and the bounds, not on the parameters.
inline double squash_correction(const std::array<double, 2>& z, const ActionBounds& b) {
    double c = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double u = std::tanh(z[i]);
        c -= std::log(1.0 - u * u + 1e-9);
    }
    c -= std::log(0.5 * b.v_max);
    c -= std::log(b.a_max);
    return c;
}

struct SampledAction {
    EnvAction action;
    double log_prob = 0.0;  // full density incl. squash correction
    std::array<double, 2> raw{};
};

inline SampledAction sample_action_from(const MlpOutput& out, const ActionBounds& b,
                                        std::uint64_t& rng_state) {
    // Box-Muller pair
    const double u1 = 1.0 - uniform01(rng_state);
    const double u2 = uniform01(rng_state);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const std::array<double, 2> n{r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    std::array<double, 2> z;
    for (int i = 0; i < 2; ++i) z[i] = out.mean[i] + std::exp(out.log_std[i]) * n[i];
    SampledAction s;
    s.raw = z;
    s.action = squash_action(z, b);
    s.log_prob = gaussian_log_prob(z, out.mean, out.log_std) + squash_correction(z, b);
    return s;
}

inline SampledAction sample_action(const MlpParams& p, const FeatureVector& x,
                                   const ActionBounds& b, std::uint64_t& rng_state) {
    return sample_action_from(mlp_forward(p, x), b, rng_state);
}

// squashed mean, used at plan/eval time
inline EnvAction deterministic_action(const MlpParams& p, const FeatureVector& x,
                                      const ActionBounds& b) {
    return squash_action(mlp_forward(p, x).mean, b);
}

struct PpoConfig {
    double clip_epsilon = 0.2;
    double learning_rate = 3e-4;
    int epochs = 4;
    int minibatch_size = 64;
    int rollout_length = 2048;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    std::int64_t max_env_steps = 500000;
    std::uint64_t seed = 0;
    int checkpoint_every = 50;  // iterations; 0 disables intermediate checkpoints

    void validate() const {
        if (clip_epsilon <= 0 || clip_epsilon >= 1) throw std::invalid_argument("ppo: clip_epsilon");
        if (gamma <= 0 || gamma > 1 || gae_lambda <= 0 || gae_lambda > 1)
            throw std::invalid_argument("ppo: gamma/gae_lambda");
        if (minibatch_size < 1 || rollout_length < 1 || epochs < 1)
            throw std::invalid_argument("ppo: batch shape");
    }
};

struct RolloutBatch {
    std::vector<FeatureVector> features;
    std::vector<std::array<double, 2>> raw_actions;
    std::vector<double> log_probs;    // full density at collection time
    std::vector<double> corrections;  // squash-correction part of log_probs
    std::vector<double> rewards;
    std::vector<double> values;
    std::vector<std::uint8_t> dones;  // episode ended at the END of this step
    double bootstrap_value = 0.0;     // V of the state after the last step
    bool sealed = false;
    std::vector<double> advantages;
    std::vector<double> returns;

    std::size_t size() const { return rewards.size(); }
};

// GAE(lambda); episode boundaries reset accumulation. returns = adv + value.
inline void compute_advantages(RolloutBatch& batch, double gamma, double gae_lambda) {
    if (!batch.sealed) throw std::logic_error("compute_advantages: batch not sealed");
    const std::size_t n = batch.size();
    batch.advantages.assign(n, 0.0);
    batch.returns.assign(n, 0.0);
    double last_gae = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double nonterminal = batch.dones[t] ? 0.0 : 1.0;
        const double next_value = (t + 1 < n) ? batch.values[t + 1] : batch.bootstrap_value;
        const double delta = batch.rewards[t] + gamma * next_value * nonterminal - batch.values[t];
        last_gae = delta + gamma * gae_lambda * nonterminal * last_gae;
        batch.advantages[t] = last_gae;
        batch.returns[t] = last_gae + batch.values[t];
    }
}

struct PpoStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
};

// One PPO update over the sealed batch: clipped surrogate + value loss +
// entropy bonus, minibatched over `epochs`. Advantages are normalized once
// per batch. Throws on non-finite loss.
inline PpoStats ppo_update(MlpParams& params, const RolloutBatch& batch, const PpoConfig& cfg,
                           Adam& adam, std::uint64_t update_index = 0) {
    cfg.validate();
    if (batch.advantages.size() != batch.size())
        throw std::logic_error("ppo_update: advantages not computed");
    const std::size_t n = batch.size();

    double mean = 0.0;
    for (double a : batch.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    const double stddev = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
    std::vector<double> adv(n);
    for (std::size_t k = 0; k < n; ++k) adv[k] = (batch.advantages[k] - mean) / stddev;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t shuffle_state = cfg.seed ^ (0xda3e39cb94b95bdbULL + update_index);

    PpoStats stats;
    std::int64_t stat_count = 0, clip_count = 0;
    std::vector<double> grad(mlp_layout::kTotal, 0.0);
    const double ent_const = 2.0 * (0.5 + kLogSqrt2Pi);  // entropy of a unit gaussian pair

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream
        for (std::size_t k = n; k-- > 1;) {
            const std::size_t j = splitmix64(shuffle_state) % (k + 1);
            std::swap(order[k], order[j]);
        }
        for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
            const std::size_t stop = std::min(n, start + cfg.minibatch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                MlpCache cache;
                const MlpOutput out = mlp_forward(params, batch.features[idx], &cache);
                const auto& z = batch.raw_actions[idx];
                const double logp_new =
                    gaussian_log_prob(z, out.mean, out.log_std) + batch.corrections[idx];
                const double ratio = std::exp(logp_new - batch.log_probs[idx]);
                const double a = adv[idx];
                const double unclipped = ratio * a;
                const double clipped =
                    clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * a;
                const bool use_unclipped = unclipped <= clipped;
                const double pg_obj = use_unclipped ? unclipped : clipped;
                // d(-obj)/d logp_new; zero when the flat clipped branch wins
                const double d_logp = use_unclipped ? -a * ratio : 0.0;
                if (ratio <= 1.0 - cfg.clip_epsilon || ratio >= 1.0 + cfg.clip_epsilon) ++clip_count;

                const double v_err = out.value - batch.returns[idx];
                const double entropy = out.log_std[0] + out.log_std[1] + ent_const;

                const double loss = -pg_obj + cfg.value_coef * 0.5 * v_err * v_err -
                                    cfg.entropy_coef * entropy;
                if (!std::isfinite(loss))
                    throw std::runtime_error("ppo_update: non-finite loss at sample " +
                                             std::to_string(idx));
                stats.policy_loss += -pg_obj;
                stats.value_loss += 0.5 * v_err * v_err;
                stats.entropy += entropy;
                ++stat_count;

                std::array<double, kPolicyDim> d_policy{};
                for (int i = 0; i < 2; ++i) {
                    const double s = std::exp(out.log_std[i]);
                    const double t = (z[i] - out.mean[i]) / s;
                    // d logp/d mean = t/s, d logp/d logstd = t^2 - 1
                    d_policy[i] = d_logp * (t / s) * scale;
                    d_policy[2 + i] = (d_logp * (t * t - 1.0) - cfg.entropy_coef) * scale;
                }
                const double d_value = cfg.value_coef * v_err * scale;
                mlp_backward(params, cache, d_policy, d_value, grad);
            }
            adam.step(params.flat, grad);
        }
    }
    const double inv = stat_count > 0 ? 1.0 / static_cast<double>(stat_count) : 0.0;
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.clip_fraction = static_cast<double>(clip_count) * inv;
    return stats;
}

struct EpisodeSetup {
    Pose start;
    Vec2 target;
};

// Supplies start pose and target for training/eval episodes.
using EpisodeFn = std::function<EpisodeSetup(std::uint64_t episode_index, bool eval)>;

struct TrainCurveRow {
    int iteration = 0;
    std::int64_t env_steps = 0;
    double mean_return = 0.0;
};

struct TrainResult {
    MlpParams params;
    std::vector<TrainCurveRow> curve;
    std::int64_t env_steps = 0;
    std::int64_t episodes = 0;
};

// Alternates rollout collection and PPO updates until max_env_steps.
// When out_dir is nonempty, writes <out_dir>/checkpoint.bin and
// <out_dir>/curve.csv (iteration, env_steps, mean_return).
inline TrainResult train(Environment env, const EpisodeFn& episode_fn, const PpoConfig& cfg,
                         const std::string& out_dir = "") {
    cfg.validate();
    TrainResult result;
    result.params = init_mlp(cfg.seed);
    const ActionBounds bounds = bounds_from(env.config());
    Adam adam(cfg.learning_rate);
    std::uint64_t rng_state = cfg.seed ^ 0xabcdef1234567891ULL;

    std::ofstream curve_file;
    if (!out_dir.empty()) {
        curve_file.open(out_dir + "/curve.csv");
        curve_file << "iteration,env_steps,mean_return\n";
    }

    std::uint64_t episode_index = 0;
    auto setup = episode_fn(episode_index, false);
    Observation obs = env.reset(setup.start, setup.target);
    double episode_return = 0.0;

    int iteration = 0;
    while (result.env_steps < cfg.max_env_steps) {
        ++iteration;
        RolloutBatch batch;
        batch.features.reserve(cfg.rollout_length);
        std::vector<double> finished_returns;
        for (int step = 0; step < cfg.rollout_length; ++step) {
            const FeatureVector x = encode(obs, env.config());
            const MlpOutput out = mlp_forward(result.params, x);
            const SampledAction act = sample_action_from(out, bounds, rng_state);
            const StepResult res = env.step(act.action);
            ++result.env_steps;
            episode_return += res.reward;

            batch.features.push_back(x);
            batch.raw_actions.push_back(act.raw);
            batch.log_probs.push_back(act.log_prob);
            batch.corrections.push_back(squash_correction(act.raw, bounds));
            batch.rewards.push_back(res.reward);
            batch.values.push_back(out.value);
            batch.dones.push_back(res.done ? 1 : 0);

            if (res.done) {
                finished_returns.push_back(episode_return);
                episode_return = 0.0;
                ++result.episodes;
                setup = episode_fn(++episode_index, false);
                obs = env.reset(setup.start, setup.target);
            } else {
                obs = res.obs;
            }
        }
        batch.bootstrap_value =
            batch.dones.back() ? 0.0 : mlp_forward(result.params, encode(obs, env.config())).value;
        batch.sealed = true;
        compute_advantages(batch, cfg.gamma, cfg.gae_lambda);
        ppo_update(result.params, batch, cfg, adam, static_cast<std::uint64_t>(iteration));

        TrainCurveRow row;
        row.iteration = iteration;
        row.env_steps = result.env_steps;
        row.mean_return = finished_returns.empty()
                              ? 0.0
                              : std::accumulate(finished_returns.begin(), finished_returns.end(), 0.0) /
                                    static_cast<double>(finished_returns.size());
        result.curve.push_back(row);
        if (curve_file)
            curve_file << row.iteration << "," << row.env_steps << "," << row.mean_return << "\n";
        if (!out_dir.empty() && cfg.checkpoint_every > 0 && iteration % cfg.checkpoint_every == 0)
            save_checkpoint(result.params, cfg.seed, out_dir + "/checkpoint.bin");
    }
    if (!out_dir.empty()) save_checkpoint(result.params, cfg.seed, out_dir + "/checkpoint.bin");
    return result;
}

// Deterministic-policy evaluation: fraction of episodes reaching the goal.
inline double evaluate_goal_rate(const MlpParams& params, Environment env,
                                 const EpisodeFn& episode_fn, int episodes) {
    const ActionBounds bounds = bounds_from(env.config());
    int reached = 0;
    for (int e = 0; e < episodes; ++e) {
        const auto setup = episode_fn(static_cast<std::uint64_t>(e), true);
        Observation obs = env.reset(setup.start, setup.target);
        while (!env.done()) {
            const StepResult res = env.step(
                deterministic_action(params, encode(obs, env.config()), bounds));
            if (res.info.goal_reached) ++reached;
            obs = res.obs;
        }
    }
    return static_cast<double>(reached) / episodes;
}

// PPO waypoint baseline: run the deterministic policy for
// `steps_per_waypoint` env steps per waypoint, recording the reached
// positions. Returns nullopt (failure) iff a collision occurs while
// simulating the FIRST waypoint; a later collision truncates the list at the
// last safe waypoint.
inline std::optional<std::vector<Vec2>> ppo_plan_waypoints(const MlpParams& params,
                                                           Environment env, int num_waypoints,
                                                           int steps_per_waypoint) {
    const ActionBounds bounds = bounds_from(env.config());
    std::vector<Vec2> waypoints;
    for (int w = 0; w < num_waypoints; ++w) {
        for (int s = 0; s < steps_per_waypoint; ++s) {
            if (env.done()) break;
            const StepResult res =
                env.step(deterministic_action(params, encode(env.observe(), env.config()), bounds));
            if (res.info.collision) {
                if (w == 0) return std::nullopt;
                return waypoints;  // truncated at the last safe waypoint
            }
        }
        waypoints.push_back(env.ship().position);
        if (env.done()) break;
    }
    return waypoints;
}

// Closed-form reward-to-go estimate used as the value function when no
// trained checkpoint is supplied: assumes straight-line closure toward the
// target at v_max, sums discounted distance rewards step by step, grants the
// goal bonus once on arrival, and treats the goal as absorbing (a geometric
// tail of full distance reward). The tail makes the estimate monotone
// nonincreasing in distance: journeys of different lengths share the same
// tail, farther starts only discount it more.
inline double heuristic_value(const Observation& obs, const EnvConfig& cfg) {
    const double step_closure = cfg.v_max * cfg.step_seconds;
    double value = 0.0;
    double discount = 1.0;
    double d = obs.distance;
    bool bonus_granted = false;
    do {
        d = std::max(0.0, d - step_closure);
        discount *= cfg.gamma;
        value += discount * (1.0 - d / cfg.d_max);
        if (!bonus_granted && d < cfg.goal_radius) {
            value += discount * cfg.r_goal_reached;
            bonus_granted = true;
        }
    } while (d > 0.0);
    value += discount * cfg.gamma / (1.0 - cfg.gamma);
    return value;
}

using ValueFn = std::function<double(const Observation&)>;

inline ValueFn make_heuristic_value_fn(const EnvConfig& cfg) {
    return [cfg](const Observation& obs) { return heuristic_value(obs, cfg); };
}

inline ValueFn make_mlp_value_fn(MlpParams params, EnvConfig cfg) {
    return [params = std::move(params), cfg](const Observation& obs) {
        return mlp_forward(params, encode(obs, cfg)).value;
    };
}

}  // namespace waternav
