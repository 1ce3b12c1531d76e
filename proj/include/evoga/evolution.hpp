#ifndef EVOGA_EVOLUTION_HPP
#define EVOGA_EVOLUTION_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evoga/adam.hpp"
#include "evoga/data.hpp"
#include "evoga/mlp.hpp"
#include "evoga/objectives.hpp"

namespace evoga {

enum class FitnessMode { ie_gan, e_gan, quality_only };
enum class CrossoverBasis { better, worse };

inline const char* fitness_mode_name(FitnessMode m) {
    switch (m) {
        case FitnessMode::ie_gan: return "ie_gan";
        case FitnessMode::e_gan: return "e_gan";
        case FitnessMode::quality_only: return "quality_only";
    }
    return "?";
}

struct EvolutionConfig {
    int mu = 1;             // parents per generation
    int n_m = 3;            // mutation offspring per parent
    int n_c = 1;            // crossover offspring
    int n_d = 1;            // discriminator steps per iteration
    int m = 32;             // mutation batch size
    int l = 256;            // evaluation sample count
    int n = 256;            // crossover batch size
    int n_e = 5;            // comparisons per sample
    double gamma1 = 1.0;    // fitness balance
    double gamma2 = 0.001;  // sample-score balance
    AdamConfig adam;
    GpConfig gp;
    int distill_steps = 8;
    // Distillation uses plain gradient steps: step size proportional to the
    // distance from the targets keeps the child ordered like its basis
    // parent. 0 selects Adam distillation instead.
    double distill_sgd_lr = 0.1;
    long iterations = 30000;
    FitnessMode fitness_mode = FitnessMode::ie_gan;
    CrossoverBasis crossover_basis = CrossoverBasis::better;
    // When set, each crossover also builds the opposite-basis child and logs
    // both children's fitness for operator comparison.
    bool crossover_compare = false;

    void validate() const {
        if (mu < 1) throw shape_error("EvolutionConfig: mu must be >= 1");
        if (n_m < 1) throw shape_error("EvolutionConfig: n_m must be >= 1");
        if (n_c < 0) throw shape_error("EvolutionConfig: n_c must be >= 0");
        if (n_d < 1) throw shape_error("EvolutionConfig: n_d must be >= 1");
        if (m < 1 || l < 1 || n < 1) throw shape_error("EvolutionConfig: batch sizes must be >= 1");
        if (n_e < 1 || n_e > l - 1)
            throw shape_error("EvolutionConfig: need 1 <= n_e <= l-1");
        if (gamma1 < 0 || gamma2 < 0) throw shape_error("EvolutionConfig: gammas must be >= 0");
        if (distill_steps < 0) throw shape_error("EvolutionConfig: distill_steps must be >= 0");
        if (distill_sgd_lr < 0) throw shape_error("EvolutionConfig: distill_sgd_lr must be >= 0");
        if (iterations < 0) throw shape_error("EvolutionConfig: iterations must be >= 0");
        gp.validate();
    }
};

// A generator genotype plus its latest evaluation record. The eval caches all
// describe the same shared noise batch and are reused by crossover.
struct Individual {
    MlpParams params;
    double fitness_q = 0;
    double fitness_d = 0;
    double fitness = 0;
    std::string origin;  // "init", "p<i>:<kind>", or "crossover"
    bool evaluated = false;
    Mat eval_samples;  // l x 2
    Mat eval_C;        // l x 1 logits
    Mat eval_Ed;       // l x 1 per-sample diversity
};

// F_q: mean discriminator logit of the generated samples.
inline double fitness_quality(const Mat& c_values) {
    if (c_values.size() == 0) throw shape_error("fitness_quality: empty input");
    double s = 0;
    for (size_t i = 0; i < c_values.size(); ++i) {
        if (!std::isfinite(c_values[i])) throw numeric_error("fitness_quality: non-finite input");
        s += c_values[i];
    }
    return s / static_cast<double>(c_values.size());
}

struct DiversityResult {
    double f_d;
    Mat per_sample;  // l x 1
};

// F_d: for each sample, mean L1 distance to n_e distinct other samples drawn
// without replacement; F_d is the mean of the per-sample scores.
inline DiversityResult fitness_diversity(const Mat& samples, int n_e, Rng& rng) {
    int l = samples.rows();
    if (l < 2) throw shape_error("fitness_diversity: need at least 2 samples");
    if (n_e < 1 || n_e > l - 1) throw shape_error("fitness_diversity: need 1 <= n_e <= l-1");
    Mat per(l, 1);
    std::vector<int> others(l - 1);
    for (int i = 0; i < l; ++i) {
        for (int j = 0, k = 0; j < l; ++j)
            if (j != i) others[k++] = j;
        // partial Fisher-Yates: the first n_e entries are the draws
        for (int t = 0; t < n_e; ++t) {
            std::uniform_int_distribution<int> pick(t, l - 2);
            std::swap(others[t], others[pick(rng)]);
        }
        double acc = 0;
        for (int t = 0; t < n_e; ++t) {
            int j = others[t];
            for (int c = 0; c < samples.cols(); ++c)
                acc += std::fabs(samples(i, c) - samples(j, c));
        }
        per(i, 0) = acc / n_e;
    }
    double f_d = 0;
    for (int i = 0; i < l; ++i) f_d += per(i, 0);
    return {f_d / l, std::move(per)};
}

// Per-sample score E = C + gamma2 * E_d used by the crossover filter.
inline double sample_score_E(double c_value, double ed_value, double gamma2) {
    return c_value + gamma2 * ed_value;
}

// Minus log of the norm of the discriminator-loss gradient over all
// discriminator parameters (their concatenation).
inline double egan_grad_norm_term(const MlpSpec& d_spec, const MlpParams& d_params,
                                  const Mat& samples, const Mat& real_batch) {
    Tape tape;
    GpConfig no_gp;
    Rng unused(0);
    LossOnTape ld = d_loss(tape, d_spec, d_params, real_batch, samples, no_gp, unused);
    auto grads = tape.backward(ld.loss);
    double sq = 0;
    for (NodeId id : ld.d_param_ids) {
        const Mat& g = grads.at(id);
        for (size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    }
    double norm = std::sqrt(sq);
    if (norm == 0.0) throw numeric_error("egan_fitness: zero discriminator gradient norm");
    return -std::log(norm);
}

inline double mean_sigmoid(const Mat& logits) {
    double s = 0;
    for (size_t i = 0; i < logits.size(); ++i) s += 1.0 / (1.0 + std::exp(-logits[i]));
    return s / static_cast<double>(logits.size());
}

// Baseline fitness of E-GAN: mean D(samples) plus gamma times the minus
// log-gradient-norm of the discriminator loss.
inline double egan_fitness(const MlpSpec& d_spec, const MlpParams& d_params, const Mat& samples,
                           const Mat& real_batch, double gamma) {
    return mean_sigmoid(mlp_apply(d_params, samples)) +
           gamma * egan_grad_norm_term(d_spec, d_params, samples, real_batch);
}

// Fills the fitness fields and eval caches of `ind` from a shared noise batch.
inline void evaluate(Individual& ind, const MlpSpec& g_spec, const MlpSpec& d_spec,
                     const MlpParams& d_params, const Mat& noise, const EvolutionConfig& config,
                     Rng& diversity_rng, const Mat* real_batch = nullptr) {
    (void)g_spec;
    ind.eval_samples = mlp_apply(ind.params, noise);  // T == G for the MLP head
    ind.eval_C = mlp_apply(d_params, ind.eval_samples);
    DiversityResult div = fitness_diversity(ind.eval_samples, config.n_e, diversity_rng);
    ind.eval_Ed = std::move(div.per_sample);

    switch (config.fitness_mode) {
        case FitnessMode::ie_gan:
            ind.fitness_q = fitness_quality(ind.eval_C);
            ind.fitness_d = div.f_d;
            ind.fitness = ind.fitness_q + config.gamma1 * ind.fitness_d;
            break;
        case FitnessMode::quality_only:
            ind.fitness_q = fitness_quality(ind.eval_C);
            ind.fitness_d = div.f_d;
            ind.fitness = ind.fitness_q;  // gamma1 term dropped
            break;
        case FitnessMode::e_gan: {
            if (real_batch == nullptr)
                throw shape_error("evaluate: e_gan fitness needs a real batch");
            ind.fitness_q = mean_sigmoid(ind.eval_C);
            ind.fitness_d = egan_grad_norm_term(d_spec, d_params, ind.eval_samples, *real_batch);
            ind.fitness = ind.fitness_q + config.gamma1 * ind.fitness_d;
            break;
        }
    }
    if (!std::isfinite(ind.fitness)) throw numeric_error("evaluate: non-finite fitness");
    ind.evaluated = true;
}

// Top-2 by fitness, ties broken by lower index; higher-fitness index first.
inline std::pair<int, int> select_crossover_parents(const std::vector<Individual>& offspring) {
    if (offspring.size() < 2)
        throw shape_error("select_crossover_parents: need at least 2 offspring");
    int best = 0, second = -1;
    for (int i = 1; i < static_cast<int>(offspring.size()); ++i) {
        if (offspring[i].fitness > offspring[best].fitness) {
            second = best;
            best = i;
        } else if (second < 0 || offspring[i].fitness > offspring[second].fitness) {
            second = i;
        }
    }
    return {best, second};
}

// Per-row distillation targets: the output of whichever parent scores higher
// under E on that noise row; ties go to the better parent. Eval caches are
// reused when the noise is the parents' shared evaluation batch.
inline Mat crossover_targets(const Individual& better, const Individual& worse,
                             const MlpParams& d_params, const Mat& noise,
                             const EvolutionConfig& config, Rng& rng) {
    int n = noise.rows();
    bool reuse = n == better.eval_samples.rows() && better.evaluated && worse.evaluated;

    Mat tx, ty, cx, cy, edx, edy;
    if (reuse) {
        tx = better.eval_samples;
        ty = worse.eval_samples;
        cx = better.eval_C;
        cy = worse.eval_C;
        edx = better.eval_Ed;
        edy = worse.eval_Ed;
    } else {
        tx = mlp_apply(better.params, noise);
        ty = mlp_apply(worse.params, noise);
        cx = mlp_apply(d_params, tx);
        cy = mlp_apply(d_params, ty);
        edx = fitness_diversity(tx, config.n_e, rng).per_sample;
        edy = fitness_diversity(ty, config.n_e, rng).per_sample;
    }

    Mat targets(n, tx.cols());
    for (int r = 0; r < n; ++r) {
        double ex = sample_score_E(cx(r, 0), edx(r, 0), config.gamma2);
        double ey = sample_score_E(cy(r, 0), edy(r, 0), config.gamma2);
        const Mat& src = ex >= ey ? tx : ty;  // tie -> better parent
        for (int c = 0; c < targets.cols(); ++c) targets(r, c) = src(r, c);
    }
    return targets;
}

// Distills an E-filtered blend of two parents into a child initialized from
// the basis parent. Returns the child unevaluated.
inline Individual crossover(const Individual& better, const Individual& worse,
                            const MlpSpec& g_spec, const MlpSpec& d_spec,
                            const MlpParams& d_params, const Mat& noise,
                            const EvolutionConfig& config, Rng& rng,
                            CrossoverBasis basis = CrossoverBasis::better) {
    if (noise.rows() < 1) throw shape_error("crossover: empty noise batch");
    Individual child;
    child.params = clone_params(basis == CrossoverBasis::better ? better.params : worse.params);
    child.origin = "crossover";

    int n = noise.rows();
    Mat targets = crossover_targets(better, worse, d_params, noise, config, rng);

    std::vector<Mat*> pptrs = param_ptrs(child.params);
    AdamState state = AdamState::like(pptrs);
    int mb = std::min(config.m, n);
    for (int step = 0; step < config.distill_steps; ++step) {
        int offset = (step * mb) % n;
        Mat z(mb, noise.cols());
        Mat t(mb, targets.cols());
        for (int r = 0; r < mb; ++r) {
            int src = (offset + r) % n;
            for (int c = 0; c < z.cols(); ++c) z(r, c) = noise(src, c);
            for (int c = 0; c < t.cols(); ++c) t(r, c) = targets(src, c);
        }
        Tape tape;
        NodeId zn = tape.constant(std::move(z));
        std::vector<NodeId> pids = push_params(tape, child.params);
        NodeId t_child = mlp_forward_ids(tape, g_spec, pids, zn).output;
        NodeId loss = tape.mean(tape.square(tape.sub(t_child, tape.constant(std::move(t)))));
        auto grads = tape.backward(loss);
        std::vector<const Mat*> gptrs;
        gptrs.reserve(pids.size());
        for (NodeId id : pids) gptrs.push_back(&grads.at(id));
        if (config.distill_sgd_lr > 0) {
            for (size_t t = 0; t < pptrs.size(); ++t)
                for (size_t i = 0; i < pptrs[t]->size(); ++i)
                    (*pptrs[t])[i] -= config.distill_sgd_lr * (*gptrs[t])[i];
        } else {
            adam_step(pptrs, gptrs, state, config.adam);
        }
    }
    return child;
}

// Indices of the top-mu candidates, ties by insertion order.
inline std::vector<int> select_survivor_indices(const std::vector<Individual>& candidates,
                                                int mu) {
    if (static_cast<int>(candidates.size()) < mu)
        throw shape_error("select_survivors: fewer candidates than mu");
    std::vector<int> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return candidates[a].fitness > candidates[b].fitness;
    });
    order.resize(mu);
    return order;
}

inline std::vector<Individual> select_survivors(std::vector<Individual> candidates, int mu) {
    std::vector<int> idx = select_survivor_indices(candidates, mu);
    std::vector<Individual> out;
    out.reserve(mu);
    for (int i : idx) out.push_back(std::move(candidates[i]));
    return out;
}

struct OffspringRecord {
    std::string origin;
    double fitness_q, fitness_d, fitness;
    bool survived;
};

struct CrossoverComparison {
    double better_child_fitness;
    double worse_child_fitness;
};

struct StepLog {
    std::vector<OffspringRecord> offspring;
    std::vector<CrossoverComparison> crossover_events;
};

struct StepRngs {
    Rng mutation_noise;
    Rng eval_noise;
    Rng diversity;
    Rng crossover;
};

// One parent, one mutation kind, one Adam step on the corresponding loss.
inline Individual mutate(const Individual& parent, int parent_index, MutationKind kind,
                         const MlpSpec& g_spec, const MlpSpec& d_spec, const MlpParams& d_params,
                         const EvolutionConfig& config, Rng& noise_rng) {
    Individual child;
    child.params = clone_params(parent.params);
    child.origin = "p" + std::to_string(parent_index) + ":" + mutation_name(kind);

    Mat z = sample_noise(config.m, noise_rng);
    Tape tape;
    NodeId zn = tape.constant(std::move(z));
    std::vector<NodeId> g_ids = push_params(tape, child.params);
    NodeId g_out = mlp_forward_ids(tape, g_spec, g_ids, zn).activated;
    LossOnTape gl = g_loss(kind, tape, d_spec, d_params, g_out);
    auto grads = tape.backward(gl.loss);

    std::vector<Mat*> pptrs = param_ptrs(child.params);
    std::vector<const Mat*> gptrs;
    gptrs.reserve(g_ids.size());
    for (NodeId id : g_ids) gptrs.push_back(&grads.at(id));
    AdamState state = AdamState::like(pptrs);
    adam_step(pptrs, gptrs, state, config.adam);
    return child;
}

// One full variation -> evaluation -> crossover -> evaluation -> selection
// step. Returns the mu survivors and a log of every candidate.
inline std::pair<std::vector<Individual>, StepLog> evolution_step(
    const std::vector<Individual>& parents, const MlpSpec& g_spec, const MlpSpec& d_spec,
    const MlpParams& d_params, const EvolutionConfig& config, StepRngs& rngs,
    const Mat* real_batch = nullptr) {
    config.validate();
    if (static_cast<int>(parents.size()) != config.mu)
        throw shape_error("evolution_step: expected mu parents");

    std::vector<Individual> offspring;
    offspring.reserve(static_cast<size_t>(config.mu) * config.n_m + config.n_c);
    for (int p = 0; p < config.mu; ++p)
        for (int j = 0; j < config.n_m; ++j) {
            MutationKind kind = kAllMutations[j % 3];
            offspring.push_back(mutate(parents[p], p, kind, g_spec, d_spec, d_params, config,
                                       rngs.mutation_noise));
        }

    Mat shared_noise = sample_noise(config.l, rngs.eval_noise);
    // every candidate this generation sees the same diversity draws, so
    // fitness comparisons are paired
    auto evaluate_common = [&](Individual& ind) {
        Rng diversity = rngs.diversity;
        evaluate(ind, g_spec, d_spec, d_params, shared_noise, config, diversity, real_batch);
    };
    for (Individual& ind : offspring) evaluate_common(ind);

    StepLog log;
    if (config.n_c >= 1 && offspring.size() >= 2) {
        auto [bi, wi] = select_crossover_parents(offspring);
        Mat cross_noise = config.n == config.l
                              ? shared_noise
                              : sample_noise(config.n, rngs.crossover);
        for (int c = 0; c < config.n_c; ++c) {
            Individual child = crossover(offspring[bi], offspring[wi], g_spec, d_spec, d_params,
                                         cross_noise, config, rngs.crossover,
                                         config.crossover_basis);
            evaluate_common(child);
            if (config.crossover_compare) {
                CrossoverBasis other = config.crossover_basis == CrossoverBasis::better
                                           ? CrossoverBasis::worse
                                           : CrossoverBasis::better;
                Individual alt = crossover(offspring[bi], offspring[wi], g_spec, d_spec, d_params,
                                           cross_noise, config, rngs.crossover, other);
                evaluate_common(alt);
                double better_f = config.crossover_basis == CrossoverBasis::better ? child.fitness
                                                                                   : alt.fitness;
                double worse_f = config.crossover_basis == CrossoverBasis::better ? alt.fitness
                                                                                  : child.fitness;
                log.crossover_events.push_back({better_f, worse_f});
            }
            offspring.push_back(std::move(child));
        }
    }

    std::vector<int> survivors = select_survivor_indices(offspring, config.mu);
    std::vector<bool> survived(offspring.size(), false);
    for (int i : survivors) survived[i] = true;
    for (size_t i = 0; i < offspring.size(); ++i)
        log.offspring.push_back({offspring[i].origin, offspring[i].fitness_q,
                                 offspring[i].fitness_d, offspring[i].fitness, survived[i]});

    std::vector<Individual> next;
    next.reserve(config.mu);
    for (int i : survivors) next.push_back(std::move(offspring[i]));
    return {std::move(next), std::move(log)};
}

}  // namespace evoga

#endif
