#ifndef EVOGA_RUNNER_HPP
#define EVOGA_RUNNER_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoga/config.hpp"
#include "evoga/metrics.hpp"
#include "evoga/train.hpp"

namespace evoga {

using ordered_json = nlohmann::ordered_json;

struct RunResult {
    int exit_code = exit_ok;
    std::string error;
    CoverageReport final_coverage;
    std::vector<CrossoverComparison> crossover_events;
    long iterations_done = 0;
};

// Fixed evaluation noise stream: the same derivation is used by the in-run
// coverage records and by the eval command, so a logged coverage can be
// reproduced from the checkpoint with the run's seed.
inline Mat metric_noise(uint64_t seed, int count) {
    Rng rng = substream(seed, StreamId::metric_eval);
    return sample_noise(count, rng);
}

inline CoverageReport coverage_of(const MlpParams& generator, const RunConfig& cfg,
                                  const MixtureSpec& mixture) {
    Mat samples = mlp_apply(generator, metric_noise(cfg.seed, cfg.metric_samples));
    return mode_coverage(samples, mixture, cfg.coverage_radius_sigmas, cfg.coverage_min_count);
}

inline ordered_json coverage_json(const CoverageReport& rep) {
    return ordered_json{{"modes_covered", rep.modes_covered},
                        {"high_quality_fraction", rep.high_quality_fraction},
                        {"sample_count", rep.sample_count},
                        {"per_mode_counts", rep.per_mode_counts}};
}

// Runs a full experiment and writes the run directory:
//   config.txt      resolved config snapshot
//   metrics.jsonl   one record per logging interval (plus init and final)
//   steps.jsonl     one record per iteration with every candidate's fitness
//   checkpoint_*.evga, checkpoint_final.evga
//   coverage.txt, kde.txt   final summaries
inline RunResult run_experiment(RunConfig cfg) {
    namespace fs = std::filesystem;
    RunResult result;
    cfg.validate();
    MixtureSpec mixture = cfg.mixture();

    fs::create_directories(cfg.out_dir);
    {
        ConfigBinder binder(cfg);
        std::ofstream os(cfg.out_dir + "/config.txt");
        if (!os) throw io_error("cannot write " + cfg.out_dir + "/config.txt");
        os << binder.resolved_text();
    }

    std::ofstream metrics(cfg.out_dir + "/metrics.jsonl");
    std::ofstream steps(cfg.out_dir + "/steps.jsonl");
    if (!metrics || !steps) throw io_error("cannot open log files in " + cfg.out_dir);

    // Cumulative selected counts per operator category.
    std::map<std::string, long> selected;
    for (MutationKind k : kAllMutations) selected[mutation_name(k)] = 0;
    selected["crossover"] = 0;

    auto emit_metrics = [&](const TrainState& st) {
        const Individual& best = st.best_parent();
        CoverageReport rep = coverage_of(best.params, cfg, mixture);
        ordered_json rec{{"iteration", st.iteration},
                         {"fitness_q", best.fitness_q},
                         {"fitness_d", best.fitness_d},
                         {"fitness", best.fitness},
                         {"selected", selected},
                         {"coverage", coverage_json(rep)}};
        metrics << rec.dump() << "\n";
        metrics.flush();
        return rep;
    };

    auto category = [](const std::string& origin) {
        size_t colon = origin.find(':');
        return colon == std::string::npos ? origin : origin.substr(colon + 1);
    };

    try {
        TrainState init = init_train_state(cfg.evo, cfg.seed);
        CoverageReport last_coverage = emit_metrics(init);  // iteration 0 record

        TrainState final_state = train(cfg.evo, mixture, cfg.seed, [&](const TrainState& st,
                                                                       const StepLog& log) {
            ordered_json srec{{"iteration", st.iteration}};
            ordered_json cand = ordered_json::array();
            for (const OffspringRecord& r : log.offspring) {
                cand.push_back(ordered_json{{"origin", r.origin},
                                            {"fitness_q", r.fitness_q},
                                            {"fitness_d", r.fitness_d},
                                            {"fitness", r.fitness},
                                            {"survived", r.survived}});
                if (r.survived) selected[category(r.origin)] += 1;
            }
            srec["candidates"] = cand;
            if (!log.crossover_events.empty()) {
                ordered_json ev = ordered_json::array();
                for (const CrossoverComparison& e : log.crossover_events) {
                    ev.push_back(ordered_json{{"better_child_fitness", e.better_child_fitness},
                                              {"worse_child_fitness", e.worse_child_fitness}});
                    result.crossover_events.push_back(e);
                }
                srec["crossover_events"] = ev;
            }
            steps << srec.dump() << "\n";

            if (st.iteration % cfg.log_interval == 0 || st.iteration == cfg.evo.iterations)
                last_coverage = emit_metrics(st);
            if (st.iteration % cfg.checkpoint_interval == 0)
                save_checkpoint(cfg.out_dir + "/checkpoint_" + std::to_string(st.iteration) +
                                    ".evga",
                                st.best_parent().params);
            result.iterations_done = st.iteration;
        });

        save_checkpoint(cfg.out_dir + "/checkpoint_final.evga", final_state.best_parent().params);
        result.final_coverage = last_coverage;

        Mat samples = mlp_apply(final_state.best_parent().params,
                                metric_noise(cfg.seed, cfg.metric_samples));
        {
            std::ofstream os(cfg.out_dir + "/coverage.txt");
            os << "modes_covered " << result.final_coverage.modes_covered << "/"
               << mixture.centers.size() << "\n"
               << "high_quality_fraction " << result.final_coverage.high_quality_fraction << "\n"
               << "sample_count " << result.final_coverage.sample_count << "\n"
               << "per_mode_counts";
            for (int c : result.final_coverage.per_mode_counts) os << " " << c;
            os << "\n";
        }
        {
            double bound = cfg.mixture_name == "grid25" ? 6.0 : 3.0;
            bound *= cfg.mixture_scale;
            KdeGrid grid = kde_grid(samples, -bound, bound, -bound, bound, cfg.kde_resolution);
            std::ofstream os(cfg.out_dir + "/kde.txt");
            write_kde_grid(os, grid);
        }
    } catch (const numeric_error& e) {
        ordered_json rec{{"event", "numeric_abort"}, {"error", e.what()}};
        metrics << rec.dump() << "\n";
        result.exit_code = exit_numeric_abort;
        result.error = e.what();
    }
    return result;
}

}  // namespace evoga

#endif
