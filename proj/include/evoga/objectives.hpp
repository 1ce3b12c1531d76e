#ifndef EVOGA_OBJECTIVES_HPP
#define EVOGA_OBJECTIVES_HPP

#include <string>
#include <vector>

#include "evoga/mlp.hpp"
#include "evoga/rng.hpp"
#include "evoga/tape.hpp"

namespace evoga {

// The three generator losses used as mutation operators.
enum class MutationKind { minimax, heuristic, least_squares };

inline const char* mutation_name(MutationKind k) {
    switch (k) {
        case MutationKind::minimax: return "minimax";
        case MutationKind::heuristic: return "heuristic";
        case MutationKind::least_squares: return "least_squares";
    }
    return "?";
}

inline constexpr MutationKind kAllMutations[] = {MutationKind::minimax, MutationKind::heuristic,
                                                 MutationKind::least_squares};

struct GpConfig {
    bool enabled = false;
    double coefficient = 10.0;

    void validate() const {
        if (enabled && !(coefficient > 0 && std::isfinite(coefficient)))
            throw shape_error("GpConfig: coefficient must be finite and positive");
    }
};

// Guard for log arguments.
inline constexpr double kLogFloor = 1e-12;

struct LossOnTape {
    NodeId loss;
    std::vector<NodeId> d_param_ids;
};

// Original-GAN discriminator loss, optionally with the gradient penalty on
// per-row interpolates between the real and fake batches. `fake` is a plain
// value batch: the discriminator update must not reach generator parameters.
inline LossOnTape d_loss(Tape& tape, const MlpSpec& d_spec, const MlpParams& d_params,
                         const Mat& real, const Mat& fake, const GpConfig& gp, Rng& rng) {
    gp.validate();
    if (!real.same_shape(fake))
        throw shape_error("d_loss: real " + real.shape_str() + " vs fake " + fake.shape_str());
    std::vector<NodeId> d_ids = push_params(tape, d_params);

    NodeId d_real = mlp_forward_ids(tape, d_spec, d_ids, tape.constant(real)).activated;
    NodeId d_fake = mlp_forward_ids(tape, d_spec, d_ids, tape.constant(fake)).activated;
    NodeId loss = tape.sub(tape.scalar_mul(tape.mean(tape.log(tape.clamp_min(d_real, kLogFloor))), -1.0),
                           tape.mean(tape.log(tape.clamp_min(
                               tape.sub(tape.constant(Mat(fake.rows(), 1, 1.0)), d_fake),
                               kLogFloor))));

    if (gp.enabled) {
        Mat interp(real.rows(), real.cols());
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int r = 0; r < real.rows(); ++r) {
            double u = unif(rng);
            for (int c = 0; c < real.cols(); ++c)
                interp(r, c) = u * real(r, c) + (1.0 - u) * fake(r, c);
        }
        NodeId xhat = tape.constant(std::move(interp));
        NodeId d_hat = mlp_forward_ids(tape, d_spec, d_ids, xhat).activated;
        // Rows are independent, so the input gradient of sum(D(xhat)) stacks
        // the per-sample gradients.
        NodeId grad = tape.backward_as_graph(tape.sum(d_hat), {xhat})[0];
        NodeId norms = tape.row_l2_norm(grad);
        NodeId penalty = tape.scalar_mul(
            tape.mean(tape.square(tape.sub(norms, tape.constant(Mat(real.rows(), 1, 1.0))))),
            gp.coefficient);
        loss = tape.add(loss, penalty);
    }

    if (!tape.value(loss).all_finite()) throw numeric_error("d_loss: non-finite loss");
    return {loss, std::move(d_ids)};
}

// Generator mutation loss for samples already connected to generator
// parameters on the tape. The discriminator enters frozen, so a backward pass
// over this loss yields no gradient for its tensors: mutation training and D
// updates never share a tape.
inline LossOnTape g_loss(MutationKind kind, Tape& tape, const MlpSpec& d_spec,
                         const MlpParams& d_params, NodeId fake) {
    std::vector<NodeId> d_ids = push_params(tape, d_params, /*frozen=*/true);
    NodeId d_fake = mlp_forward_ids(tape, d_spec, d_ids, fake).activated;
    int m = tape.value(d_fake).rows();
    NodeId loss;
    switch (kind) {
        case MutationKind::minimax:
            loss = tape.mean(tape.log(tape.clamp_min(
                tape.sub(tape.constant(Mat(m, 1, 1.0)), d_fake), kLogFloor)));
            break;
        case MutationKind::heuristic:
            loss = tape.scalar_mul(tape.mean(tape.log(tape.clamp_min(d_fake, kLogFloor))), -1.0);
            break;
        case MutationKind::least_squares:
            loss = tape.mean(tape.square(tape.sub(d_fake, tape.constant(Mat(m, 1, 1.0)))));
            break;
        default:
            throw shape_error("g_loss: unknown mutation kind");
    }
    if (!tape.value(loss).all_finite()) throw numeric_error("g_loss: non-finite loss");
    return {loss, std::move(d_ids)};
}

}  // namespace evoga

#endif
