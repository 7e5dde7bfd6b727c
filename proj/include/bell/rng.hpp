#pragma once

// Deterministic random streams.  Every consumer derives its own stream seed
// from (master seed, purpose tag, indices...) through splitmix64, and draws
// from a private std::mt19937_64.  Work split into fixed-size blocks gets one
// stream per block, so results are byte-identical no matter how many worker
// threads execute the blocks.
//
// std::discrete_distribution and friends are implementation-defined, so
// sampling from weighted tables goes through our own CDF walk and uniform
// doubles come from the top 53 bits of the raw engine output.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bell {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Streams for distinct purposes are tagged with distinct constants.
namespace stream_tag {
inline constexpr std::uint64_t context_protocol = 0x636f6e7478ULL;   // "contx"
inline constexpr std::uint64_t spreadsheet = 0x7370726473ULL;        // "sprds"
inline constexpr std::uint64_t timeseries = 0x74696d6572ULL;         // "timer"
inline constexpr std::uint64_t schedule = 0x7363686564ULL;           // "sched"
inline constexpr std::uint64_t replication = 0x7265706c63ULL;        // "replc"
inline constexpr std::uint64_t random_model = 0x726d6f646cULL;       // "rmodl"
inline constexpr std::uint64_t random_system = 0x7273797374ULL;      // "rsyst"
}  // namespace stream_tag

inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master;
    std::uint64_t out = splitmix64(s);
    for (std::uint64_t p : path) {
        s = out ^ (p + 0x9e3779b97f4a7c15ULL);
        out = splitmix64(s);
    }
    return out;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), rejection-sampled so every value is exactly
    // equally likely regardless of n.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::logic_error("Rng::below(0)");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 eng_;
};

// Samples an index from fixed weights via inverse CDF on a uniform double.
// The cumulative table is built once in double precision; the final entry is
// forced to 1 so a draw can never fall off the end.
class CdfSampler {
public:
    CdfSampler() = default;

    explicit CdfSampler(const std::vector<double>& weights) {
        if (weights.empty()) throw std::logic_error("CdfSampler: no weights");
        cdf_.resize(weights.size());
        double acc = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0) throw std::logic_error("CdfSampler: negative weight");
            acc += weights[i];
            cdf_[i] = acc;
        }
        if (acc <= 0) throw std::logic_error("CdfSampler: zero total weight");
        for (auto& c : cdf_) c /= acc;
        cdf_.back() = 1.0;
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::size_t>(it == cdf_.end() ? cdf_.size() - 1
                                                         : it - cdf_.begin());
    }

    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

// Worker count for block-parallel loops.  Initialized from BELL_THREADS
// (default 1); tests may override in-process.  The worker count never
// affects results, only wall time.
int worker_count();
void set_worker_count(int n);

// Runs fn(block_index) for block_index in [0, n_blocks), distributing blocks
// over worker_count() threads.  fn must only touch state owned by its block.
void parallel_for_blocks(std::size_t n_blocks,
                         const std::function<void(std::size_t)>& fn);

}  // namespace bell
