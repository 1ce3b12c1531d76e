#ifndef EVOGA_ADAM_HPP
#define EVOGA_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "evoga/mat.hpp"

namespace evoga {

struct AdamConfig {
    double alpha = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
    uint64_t step_count = 0;
    std::vector<Mat> first_moment;
    std::vector<Mat> second_moment;

    static AdamState like(const std::vector<Mat>& params) {
        AdamState s;
        for (const Mat& p : params) {
            s.first_moment.emplace_back(p.rows(), p.cols());
            s.second_moment.emplace_back(p.rows(), p.cols());
        }
        return s;
    }

    static AdamState like(const std::vector<Mat*>& params) {
        AdamState s;
        for (const Mat* p : params) {
            s.first_moment.emplace_back(p->rows(), p->cols());
            s.second_moment.emplace_back(p->rows(), p->cols());
        }
        return s;
    }
};

// Standard bias-corrected Adam update, in place through pointers.
inline void adam_step(const std::vector<Mat*>& params, const std::vector<const Mat*>& grads,
                      AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw shape_error("adam_step: parameter/gradient/state count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        check_same_shape(*params[i], *grads[i], "adam_step");
        if (!grads[i]->all_finite()) throw numeric_error("adam_step: non-finite gradient");
    }
    state.step_count += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
    for (size_t i = 0; i < params.size(); ++i) {
        Mat& p = *params[i];
        Mat& m = state.first_moment[i];
        Mat& v = state.second_moment[i];
        const Mat& g = *grads[i];
        for (size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            double mhat = m[j] / bc1;
            double vhat = v[j] / bc2;
            p[j] -= cfg.alpha * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

inline void adam_step(std::vector<Mat>& params, const std::vector<Mat>& grads, AdamState& state,
                      const AdamConfig& cfg) {
    std::vector<Mat*> pp;
    std::vector<const Mat*> gp;
    for (Mat& p : params) pp.push_back(&p);
    for (const Mat& g : grads) gp.push_back(&g);
    adam_step(pp, gp, state, cfg);
}

}  // namespace evoga

#endif
