#ifndef EVOGA_TRAIN_HPP
#define EVOGA_TRAIN_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "evoga/checkpoint.hpp"
#include "evoga/data.hpp"
#include "evoga/evolution.hpp"

namespace evoga {

struct TrainState {
    MlpSpec g_spec;
    MlpSpec d_spec;
    std::vector<Individual> parents;
    MlpParams d_params;
    AdamState d_adam;
    long iteration = 0;

    // Highest-fitness parent; feeds the discriminator's fake batches and is
    // what checkpoints and metrics report.
    const Individual& best_parent() const {
        const Individual* best = &parents.front();
        for (const Individual& p : parents)
            if (p.evaluated && p.fitness > best->fitness) best = &p;
        return *best;
    }
};

inline TrainState init_train_state(const EvolutionConfig& config, uint64_t seed) {
    config.validate();
    TrainState st;
    st.g_spec = MlpSpec::toy_generator();
    st.d_spec = MlpSpec::toy_discriminator();
    Rng g_rng = substream(seed, StreamId::init_generator);
    Rng d_rng = substream(seed, StreamId::init_discriminator);
    for (int p = 0; p < config.mu; ++p) {
        Individual ind;
        ind.params = init_mlp(st.g_spec, g_rng);
        ind.origin = "init";
        st.parents.push_back(std::move(ind));
    }
    st.d_params = init_mlp(st.d_spec, d_rng);
    st.d_adam = AdamState::like(st.d_params.flatten());
    return st;
}

inline void discriminator_update(TrainState& st, const EvolutionConfig& config,
                                 const MixtureSpec& mixture, Rng& real_rng, Rng& fake_noise_rng,
                                 Rng& gp_rng) {
    Mat real = sample_mixture(mixture, config.m, real_rng);
    Mat fake = mlp_apply(st.best_parent().params, sample_noise(config.m, fake_noise_rng));
    Tape tape;
    LossOnTape ld = d_loss(tape, st.d_spec, st.d_params, real, fake, config.gp, gp_rng);
    auto grads = tape.backward(ld.loss);
    std::vector<Mat*> pptrs = param_ptrs(st.d_params);
    std::vector<const Mat*> gptrs;
    gptrs.reserve(ld.d_param_ids.size());
    for (NodeId id : ld.d_param_ids) gptrs.push_back(&grads.at(id));
    adam_step(pptrs, gptrs, st.d_adam, config.adam);
}

// Full training loop: n_d discriminator updates then one evolution step per
// iteration. All randomness derives from `seed` via per-purpose sub-streams
// keyed by iteration, so runs replay bit-identically. `on_step` is called
// after every iteration with (state, step log).
template <class Callback>
TrainState train(const EvolutionConfig& config, const MixtureSpec& mixture, uint64_t seed,
                 Callback&& on_step) {
    TrainState st = init_train_state(config, seed);
    for (long iter = 0; iter < config.iterations; ++iter) {
        uint64_t idx = static_cast<uint64_t>(iter);
        Rng real_rng = substream(seed, StreamId::real_batch, idx);
        Rng fake_rng = substream(seed, StreamId::d_fake_noise, idx);
        Rng gp_rng = substream(seed, StreamId::gp_interpolation, idx);
        for (int k = 0; k < config.n_d; ++k)
            discriminator_update(st, config, mixture, real_rng, fake_rng, gp_rng);

        StepRngs rngs{substream(seed, StreamId::mutation_noise, idx),
                      substream(seed, StreamId::eval_noise, idx),
                      substream(seed, StreamId::diversity_pairs, idx),
                      substream(seed, StreamId::crossover, idx)};
        Mat real_for_fitness;
        const Mat* real_ptr = nullptr;
        if (config.fitness_mode == FitnessMode::e_gan) {
            real_for_fitness = sample_mixture(mixture, config.l, real_rng);
            real_ptr = &real_for_fitness;
        }
        auto [next, log] =
            evolution_step(st.parents, st.g_spec, st.d_spec, st.d_params, config, rngs, real_ptr);
        st.parents = std::move(next);
        st.iteration = iter + 1;
        on_step(st, log);
    }
    return st;
}

}  // namespace evoga

#endif
