#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace waternav {

inline constexpr int kFeatureDim = 259;  // 3 scalars + 16x16 pooled patch
inline constexpr int kHiddenDim = 64;
inline constexpr int kPolicyDim = 4;  // mean(2), log-std(2)

// Parameter layout of the fixed 259 -> 64 -> 64 -> {policy 4, value 1}
// architecture, stored as one flat vector so optimizer steps, checkpoints
// and finite-difference probes all address parameters uniformly.
namespace mlp_layout {
inline constexpr std::size_t kW1 = 0;
inline constexpr std::size_t kB1 = kW1 + static_cast<std::size_t>(kHiddenDim) * kFeatureDim;
inline constexpr std::size_t kW2 = kB1 + kHiddenDim;
inline constexpr std::size_t kB2 = kW2 + static_cast<std::size_t>(kHiddenDim) * kHiddenDim;
inline constexpr std::size_t kWp = kB2 + kHiddenDim;
inline constexpr std::size_t kBp = kWp + static_cast<std::size_t>(kPolicyDim) * kHiddenDim;
inline constexpr std::size_t kWv = kBp + kPolicyDim;
inline constexpr std::size_t kBv = kWv + kHiddenDim;
inline constexpr std::size_t kTotal = kBv + 1;
}  // namespace mlp_layout

struct MlpParams {
    std::vector<double> flat = std::vector<double>(mlp_layout::kTotal, 0.0);

    double* w1() { return flat.data() + mlp_layout::kW1; }
    double* b1() { return flat.data() + mlp_layout::kB1; }
    double* w2() { return flat.data() + mlp_layout::kW2; }
    double* b2() { return flat.data() + mlp_layout::kB2; }
    double* wp() { return flat.data() + mlp_layout::kWp; }
    double* bp() { return flat.data() + mlp_layout::kBp; }
    double* wv() { return flat.data() + mlp_layout::kWv; }
    double* bv() { return flat.data() + mlp_layout::kBv; }
    const double* w1() const { return flat.data() + mlp_layout::kW1; }
    const double* b1() const { return flat.data() + mlp_layout::kB1; }
    const double* w2() const { return flat.data() + mlp_layout::kW2; }
    const double* b2() const { return flat.data() + mlp_layout::kB2; }
    const double* wp() const { return flat.data() + mlp_layout::kWp; }
    const double* bp() const { return flat.data() + mlp_layout::kBp; }
    const double* wv() const { return flat.data() + mlp_layout::kWv; }
    const double* bv() const { return flat.data() + mlp_layout::kBv; }
};

using FeatureVector = std::array<double, kFeatureDim>;

struct MlpOutput {
    std::array<double, 2> mean{};
    std::array<double, 2> log_std{};
    double value = 0.0;
};

struct MlpCache {
    FeatureVector x{};
    std::array<double, kHiddenDim> h1{};
    std::array<double, kHiddenDim> h2{};
};

// splitmix64; used for reproducible weight init and action noise
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
    return (splitmix64(state) >> 11) * 0x1.0p-53;
}

// Xavier-uniform trunk/head weights, zero biases, policy log-std bias -0.5.
inline MlpParams init_mlp(std::uint64_t seed) {
    MlpParams p;
    std::uint64_t state = seed * 0x9e3779b97f4a7c15ULL + 1;
    auto fill = [&](double* w, int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (int k = 0; k < rows * cols; ++k) w[k] = (2.0 * uniform01(state) - 1.0) * limit;
    };
    fill(p.w1(), kHiddenDim, kFeatureDim);
    fill(p.w2(), kHiddenDim, kHiddenDim);
    fill(p.wp(), kPolicyDim, kHiddenDim);
    fill(p.wv(), 1, kHiddenDim);
    p.bp()[2] = -0.5;
    p.bp()[3] = -0.5;
    return p;
}

// Two tanh hidden layers, linear policy and value heads sharing the trunk.
inline MlpOutput mlp_forward(const MlpParams& p, const FeatureVector& x, MlpCache* cache = nullptr) {
    std::array<double, kHiddenDim> h1, h2;
    for (int r = 0; r < kHiddenDim; ++r) {
        const double* row = p.w1() + static_cast<std::size_t>(r) * kFeatureDim;
        double acc = p.b1()[r];
        for (int c = 0; c < kFeatureDim; ++c) acc += row[c] * x[c];
        h1[r] = std::tanh(acc);
    }
    for (int r = 0; r < kHiddenDim; ++r) {
        const double* row = p.w2() + static_cast<std::size_t>(r) * kHiddenDim;
        double acc = p.b2()[r];
        for (int c = 0; c < kHiddenDim; ++c) acc += row[c] * h1[c];
        h2[r] = std::tanh(acc);
    }
    MlpOutput out;
    for (int r = 0; r < kPolicyDim; ++r) {
        const double* row = p.wp() + static_cast<std::size_t>(r) * kHiddenDim;
        double acc = p.bp()[r];
        for (int c = 0; c < kHiddenDim; ++c) acc += row[c] * h2[c];
        (r < 2 ? out.mean[r] : out.log_std[r - 2]) = acc;
    }
    double v = p.bv()[0];
    for (int c = 0; c < kHiddenDim; ++c) v += p.wv()[c] * h2[c];
    out.value = v;
    if (cache) {
        cache->x = x;
        cache->h1 = h1;
        cache->h2 = h2;
    }
    return out;
}

// Accumulates dL/dparams into `grad` given head gradients
// d_policy = dL/d(mean0, mean1, logstd0, logstd1) and d_value = dL/dvalue.
inline void mlp_backward(const MlpParams& p, const MlpCache& cache,
                         const std::array<double, kPolicyDim>& d_policy, double d_value,
                         std::vector<double>& grad) {
    std::array<double, kHiddenDim> d_h2{};
    for (int r = 0; r < kPolicyDim; ++r) {
        const double g = d_policy[r];
        if (g == 0.0) continue;
        const double* row = p.wp() + static_cast<std::size_t>(r) * kHiddenDim;
        double* grow = grad.data() + mlp_layout::kWp + static_cast<std::size_t>(r) * kHiddenDim;
        for (int c = 0; c < kHiddenDim; ++c) {
            grow[c] += g * cache.h2[c];
            d_h2[c] += g * row[c];
        }
        grad[mlp_layout::kBp + r] += g;
    }
    if (d_value != 0.0) {
        double* gwv = grad.data() + mlp_layout::kWv;
        for (int c = 0; c < kHiddenDim; ++c) {
            gwv[c] += d_value * cache.h2[c];
            d_h2[c] += d_value * p.wv()[c];
        }
        grad[mlp_layout::kBv] += d_value;
    }

    std::array<double, kHiddenDim> d_a2;
    for (int c = 0; c < kHiddenDim; ++c) d_a2[c] = d_h2[c] * (1.0 - cache.h2[c] * cache.h2[c]);

    std::array<double, kHiddenDim> d_h1{};
    for (int r = 0; r < kHiddenDim; ++r) {
        const double g = d_a2[r];
        const double* row = p.w2() + static_cast<std::size_t>(r) * kHiddenDim;
        double* grow = grad.data() + mlp_layout::kW2 + static_cast<std::size_t>(r) * kHiddenDim;
        for (int c = 0; c < kHiddenDim; ++c) {
            grow[c] += g * cache.h1[c];
            d_h1[c] += g * row[c];
        }
        grad[mlp_layout::kB2 + r] += g;
    }

    for (int r = 0; r < kHiddenDim; ++r) {
        const double g = d_h1[r] * (1.0 - cache.h1[r] * cache.h1[r]);
        double* grow = grad.data() + mlp_layout::kW1 + static_cast<std::size_t>(r) * kFeatureDim;
        for (int c = 0; c < kFeatureDim; ++c) grow[c] += g * cache.x[c];
        grad[mlp_layout::kB1 + r] += g;
    }
}

class Adam {
  public:
    explicit Adam(double lr, std::size_t n = mlp_layout::kTotal)
        : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * grad[k];
            v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grad[k] * grad[k];
            params[k] -= lr_ * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + eps_);
        }
    }

  private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    std::int64_t t_ = 0;
    std::vector<double> m_, v_;
};

// -- checkpoint io: versioned header + raw little-endian doubles --

inline std::uint64_t mlp_arch_hash() {
    // FNV-1a over the layer dimensions
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t d : {static_cast<std::uint64_t>(kFeatureDim), static_cast<std::uint64_t>(kHiddenDim),
                            static_cast<std::uint64_t>(kHiddenDim), static_cast<std::uint64_t>(kPolicyDim),
                            std::uint64_t{1}}) {
        for (int b = 0; b < 8; ++b) {
            h ^= (d >> (8 * b)) & 0xff;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

inline void save_checkpoint(const MlpParams& p, std::uint64_t seed, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    const char magic[4] = {'W', 'N', 'C', 'K'};
    const std::uint32_t version = 1;
    const std::uint64_t arch = mlp_arch_hash();
    const std::uint64_t count = p.flat.size();
    f.write(magic, 4);
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    f.write(reinterpret_cast<const char*>(&arch), sizeof arch);
    f.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    f.write(reinterpret_cast<const char*>(&count), sizeof count);
    f.write(reinterpret_cast<const char*>(p.flat.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline MlpParams load_checkpoint(const std::string& path, std::uint64_t* seed_out = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t arch = 0, seed = 0, count = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), sizeof version);
    f.read(reinterpret_cast<char*>(&arch), sizeof arch);
    f.read(reinterpret_cast<char*>(&seed), sizeof seed);
    f.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!f || std::memcmp(magic, "WNCK", 4) != 0) throw std::runtime_error("checkpoint: bad header");
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
    if (arch != mlp_arch_hash()) throw std::runtime_error("checkpoint: architecture mismatch");
    if (count != mlp_layout::kTotal) throw std::runtime_error("checkpoint: parameter count mismatch");
    MlpParams p;
    f.read(reinterpret_cast<char*>(p.flat.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: truncated data");
    if (seed_out) *seed_out = seed;
    return p;
}

}  // namespace waternav
