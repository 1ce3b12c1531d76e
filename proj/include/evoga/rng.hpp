#ifndef EVOGA_RNG_HPP
#define EVOGA_RNG_HPP

#include <cstdint>
#include <random>

#include "evoga/mat.hpp"

namespace evoga {

using Rng = std::mt19937_64;

// Named sub-stream purposes. Every source of randomness in a run is derived
// from (master seed, purpose, index) so runs replay bit-identically and the
// streams never alias each other.
enum class StreamId : uint64_t {
    init_generator = 1,
    init_discriminator = 2,
    real_batch = 3,
    mutation_noise = 4,
    eval_noise = 5,
    diversity_pairs = 6,
    gp_interpolation = 7,
    crossover = 8,
    metric_eval = 9,
    d_fake_noise = 10,
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic sub-stream of a master seed.
inline Rng substream(uint64_t seed, StreamId id, uint64_t index = 0) {
    uint64_t s = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(id)));
    return Rng(splitmix64(s ^ splitmix64(index)));
}

inline Mat random_normal(int rows, int cols, Rng& rng, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> dist(mean, stddev);
    Mat m(rows, cols);
    for (size_t i = 0; i < m.size(); ++i) m[i] = dist(rng);
    return m;
}

inline Mat random_uniform(int rows, int cols, Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Mat m(rows, cols);
    for (size_t i = 0; i < m.size(); ++i) m[i] = dist(rng);
    return m;
}

}  // namespace evoga

#endif
