#ifndef EVOGA_DATA_HPP
#define EVOGA_DATA_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "evoga/mat.hpp"
#include "evoga/rng.hpp"

namespace evoga {

// A 2D mixture of isotropic Gaussians with uniform component weights.
struct MixtureSpec {
    std::vector<std::array<double, 2>> centers;
    double sigma = 0.02;
    double scale = 1.0;

    void validate() const {
        if (centers.empty()) throw shape_error("MixtureSpec: no centers");
        if (!(sigma > 0)) throw shape_error("MixtureSpec: sigma must be > 0");
    }
};

// 8 Gaussians on a radius-2 circle.
inline MixtureSpec ring8() {
    MixtureSpec spec;
    spec.sigma = 0.02;
    for (int k = 0; k < 8; ++k) {
        double angle = k * std::numbers::pi / 4.0;
        spec.centers.push_back({2.0 * std::cos(angle), 2.0 * std::sin(angle)});
    }
    return spec;
}

// 25 Gaussians on the {-4,-2,0,2,4}^2 grid.
inline MixtureSpec grid25() {
    MixtureSpec spec;
    spec.sigma = 0.05;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) spec.centers.push_back({2.0 * i, 2.0 * j});
    return spec;
}

inline Mat sample_mixture(const MixtureSpec& spec, int batch, Rng& rng) {
    spec.validate();
    std::uniform_int_distribution<size_t> pick(0, spec.centers.size() - 1);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    Mat out(batch, 2);
    for (int r = 0; r < batch; ++r) {
        const auto& c = spec.centers[pick(rng)];
        out(r, 0) = (c[0] + noise(rng)) * spec.scale;
        out(r, 1) = (c[1] + noise(rng)) * spec.scale;
    }
    return out;
}

// Standard normal 2D noise prior.
inline Mat sample_noise(int batch, Rng& rng) { return random_normal(batch, 2, rng); }

}  // namespace evoga

#endif
