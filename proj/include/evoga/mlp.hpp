#ifndef EVOGA_MLP_HPP
#define EVOGA_MLP_HPP

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "evoga/mat.hpp"
#include "evoga/rng.hpp"
#include "evoga/tape.hpp"

namespace evoga {

enum class OutputHead { none, sigmoid };

// Fully connected net: relu hidden layers, optional sigmoid head.
struct MlpSpec {
    std::vector<int> layer_dims;  // input, hidden..., output
    OutputHead output_head = OutputHead::none;

    void validate() const {
        if (layer_dims.size() < 2) throw shape_error("MlpSpec: need at least 2 dims");
        for (int d : layer_dims)
            if (d < 1) throw shape_error("MlpSpec: dims must be >= 1");
    }

    static MlpSpec toy_generator() { return {{2, 512, 512, 512, 2}, OutputHead::none}; }
    static MlpSpec toy_discriminator() { return {{2, 512, 512, 512, 1}, OutputHead::sigmoid}; }
};

// The evolutionary genotype: one weight matrix and bias row per layer.
struct MlpParams {
    std::vector<Mat> weights;  // in x out
    std::vector<Mat> biases;   // 1 x out

    size_t layer_count() const { return weights.size(); }

    std::vector<Mat> flatten() const {
        std::vector<Mat> all;
        for (size_t i = 0; i < weights.size(); ++i) {
            all.push_back(weights[i]);
            all.push_back(biases[i]);
        }
        return all;
    }

    void unflatten(std::vector<Mat> all) {
        for (size_t i = 0; i < weights.size(); ++i) {
            weights[i] = std::move(all[2 * i]);
            biases[i] = std::move(all[2 * i + 1]);
        }
    }

    size_t parameter_count() const {
        size_t n = 0;
        for (size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
        return n;
    }
};

// Xavier-uniform weights, zero biases.
inline MlpParams init_mlp(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    MlpParams p;
    for (size_t i = 0; i + 1 < spec.layer_dims.size(); ++i) {
        int fan_in = spec.layer_dims[i];
        int fan_out = spec.layer_dims[i + 1];
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        p.weights.push_back(random_uniform(fan_in, fan_out, rng, -limit, limit));
        p.biases.emplace_back(1, fan_out);
    }
    return p;
}

inline MlpParams clone_params(const MlpParams& p) { return p; }

// Forward pass on a tape; returns (final pre-head node, parameter node ids).
struct MlpOnTape {
    NodeId output;                 // pre-head linear output
    NodeId activated;              // post-head output (== output when head is none)
    std::vector<NodeId> param_ids;  // weight0, bias0, weight1, bias1, ...
};

// Records the net's tensors on the tape; frozen nets enter as constants so
// backward() never produces gradients for them.
inline std::vector<NodeId> push_params(Tape& tape, const MlpParams& params, bool frozen = false) {
    std::vector<NodeId> ids;
    for (size_t i = 0; i < params.layer_count(); ++i) {
        ids.push_back(frozen ? tape.constant(params.weights[i]) : tape.parameter(params.weights[i]));
        ids.push_back(frozen ? tape.constant(params.biases[i]) : tape.parameter(params.biases[i]));
    }
    return ids;
}

// Interleaved weight/bias pointers in push_params order, for in-place updates.
inline std::vector<Mat*> param_ptrs(MlpParams& params) {
    std::vector<Mat*> ptrs;
    for (size_t i = 0; i < params.layer_count(); ++i) {
        ptrs.push_back(&params.weights[i]);
        ptrs.push_back(&params.biases[i]);
    }
    return ptrs;
}

// Forward through already-recorded parameter nodes, so several passes can
// share one parameter set on the tape.
inline MlpOnTape mlp_forward_ids(Tape& tape, const MlpSpec& spec,
                                 const std::vector<NodeId>& param_ids, NodeId input) {
    spec.validate();
    if (tape.value(input).cols() != spec.layer_dims.front())
        throw shape_error("mlp_forward: input has " + tape.value(input).shape_str() +
                          ", spec expects " + std::to_string(spec.layer_dims.front()) + " cols");
    MlpOnTape out;
    out.param_ids = param_ids;
    NodeId h = input;
    size_t layers = param_ids.size() / 2;
    for (size_t i = 0; i < layers; ++i) {
        h = tape.add_bias(tape.matmul(h, param_ids[2 * i]), param_ids[2 * i + 1]);
        if (i + 1 < layers) h = tape.relu(h);
    }
    out.output = h;
    out.activated = spec.output_head == OutputHead::sigmoid ? tape.sigmoid(h) : h;
    return out;
}

inline MlpOnTape mlp_forward(Tape& tape, const MlpSpec& spec, const MlpParams& params,
                             NodeId input) {
    return mlp_forward_ids(tape, spec, push_params(tape, params), input);
}

// Generator: returns (T, G). For the MLP head T == G.
inline std::pair<NodeId, NodeId> generator_forward(Tape& tape, const MlpSpec& spec,
                                                   const MlpParams& params, NodeId z) {
    MlpOnTape m = mlp_forward(tape, spec, params, z);
    return {m.output, m.activated};
}

// Discriminator: returns (C, D) with D = sigmoid(C).
inline std::pair<NodeId, NodeId> discriminator_forward(Tape& tape, const MlpSpec& spec,
                                                       const MlpParams& params, NodeId x) {
    MlpOnTape m = mlp_forward(tape, spec, params, x);
    return {m.output, m.activated};
}

// Plain-value forward pass, no tape. Returns the pre-head output.
inline Mat mlp_apply(const MlpParams& params, const Mat& input) {
    Mat h = input;
    for (size_t i = 0; i < params.layer_count(); ++i) {
        Mat z = matmul(h, params.weights[i]);
        const Mat& b = params.biases[i];
        for (int r = 0; r < z.rows(); ++r)
            for (int c = 0; c < z.cols(); ++c) z(r, c) += b(0, c);
        if (i + 1 < params.layer_count())
            for (size_t j = 0; j < z.size(); ++j) z[j] = z[j] > 0 ? z[j] : 0.0;
        h = std::move(z);
    }
    return h;
}

}  // namespace evoga

#endif
