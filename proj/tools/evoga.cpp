// Command-line front end: train / ablate / eval experiments reproducibly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evoga/blas_env.hpp"
#include "evoga/runner.hpp"

namespace {

using namespace evoga;

struct TrainArgs {
    std::string config_path;
    std::string preset;
    std::vector<std::string> overrides;
    std::string variant = "full";
};

// Layering: built-in defaults, then preset, then config file, then --set
// flags, then the ablation variant.
RunConfig resolve_config(const TrainArgs& args) {
    RunConfig cfg;
    if (!args.preset.empty()) apply_preset(cfg, args.preset);
    if (!args.config_path.empty()) load_config_file(cfg, args.config_path);
    ConfigBinder binder(cfg);
    for (const std::string& kv : args.overrides) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw config_error("--set expects key=value, got '" + kv + "'");
        binder.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    apply_ablation(cfg, args.variant);
    cfg.validate();
    return cfg;
}

int run_train(const TrainArgs& args) {
    RunConfig cfg = resolve_config(args);
    RunResult result = run_experiment(cfg);
    if (result.exit_code != exit_ok) {
        std::cerr << "numeric abort: " << result.error << "\n";
        return result.exit_code;
    }
    std::cout << "done: " << result.iterations_done << " iterations, coverage "
              << result.final_coverage.modes_covered << " modes, high-quality fraction "
              << result.final_coverage.high_quality_fraction << "\n"
              << "run directory: " << cfg.out_dir << "\n";
    return exit_ok;
}

struct EvalArgs {
    std::string checkpoint;
    std::string mixture_name = "ring8";
    int samples = 10240;
    uint64_t seed = 0;
    double radius_sigmas = 3.0;
    int min_count = 0;
    int kde_resolution = 64;
    std::string kde_out;
};

int run_eval(const EvalArgs& args) {
    MlpParams generator = load_checkpoint(args.checkpoint);
    MixtureSpec mixture = args.mixture_name == "ring8"
                              ? ring8()
                              : (args.mixture_name == "grid25"
                                     ? grid25()
                                     : throw config_error("unknown mixture '" +
                                                          args.mixture_name + "'"));
    Rng rng = substream(args.seed, StreamId::metric_eval);
    Mat points = mlp_apply(generator, sample_noise(args.samples, rng));
    CoverageReport rep = mode_coverage(points, mixture, args.radius_sigmas, args.min_count);
    std::cout << "modes_covered " << rep.modes_covered << "/" << mixture.centers.size() << "\n"
              << "high_quality_fraction " << rep.high_quality_fraction << "\n"
              << "sample_count " << rep.sample_count << "\n"
              << "per_mode_counts";
    for (int c : rep.per_mode_counts) std::cout << " " << c;
    std::cout << "\n";

    std::string kde_path = args.kde_out.empty()
                               ? std::filesystem::path(args.checkpoint).replace_extension(
                                     ".kde.txt").string()
                               : args.kde_out;
    double bound = args.mixture_name == "grid25" ? 6.0 : 3.0;
    KdeGrid grid = kde_grid(points, -bound, bound, -bound, bound, args.kde_resolution);
    std::ofstream os(kde_path);
    if (!os) throw io_error("cannot write KDE grid to " + kde_path);
    write_kde_grid(os, grid);
    std::cout << "kde_grid " << kde_path << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    evoga::ensure_fast_blas_kernel(argv);
    CLI::App app{"Evolutionary GAN training laboratory on 2D Gaussian mixtures"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "run a training experiment");
    train_cmd->add_option("-c,--config", train_args.config_path, "key=value config file");
    train_cmd->add_option("-p,--preset", train_args.preset, "preset: toy8 or toy25");
    train_cmd->add_option("-s,--set", train_args.overrides,
                          "override a config key, e.g. --set seed=1 (repeatable)");

    TrainArgs ablate_args;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "run an ablation variant of a training experiment");
    ablate_cmd->add_option("-c,--config", ablate_args.config_path, "key=value config file");
    ablate_cmd->add_option("-p,--preset", ablate_args.preset, "preset: toy8 or toy25");
    ablate_cmd->add_option("-s,--set", ablate_args.overrides, "override a config key (repeatable)");
    ablate_cmd
        ->add_option("-v,--variant", ablate_args.variant,
                     "full, no_fd, no_crossover, neither, or egan_fitness")
        ->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a generator checkpoint");
    eval_cmd->add_option("checkpoint", eval_args.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("-m,--mixture", eval_args.mixture_name, "ring8 or grid25");
    eval_cmd->add_option("-N,--samples", eval_args.samples, "number of points to sample");
    eval_cmd->add_option("--seed", eval_args.seed, "noise seed (use the run's seed to reproduce)");
    eval_cmd->add_option("--radius-sigmas", eval_args.radius_sigmas, "assignment radius in sigmas");
    eval_cmd->add_option("--min-count", eval_args.min_count, "covered-mode count threshold");
    eval_cmd->add_option("--kde-resolution", eval_args.kde_resolution, "KDE grid resolution");
    eval_cmd->add_option("--kde-out", eval_args.kde_out, "KDE grid output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return run_train(train_args);
        if (ablate_cmd->parsed()) return run_train(ablate_args);
        if (eval_cmd->parsed()) return run_eval(eval_args);
    } catch (const evoga::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return evoga::exit_config_error;
    } catch (const evoga::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return evoga::exit_io_error;
    } catch (const evoga::numeric_error& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return evoga::exit_numeric_abort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return evoga::exit_config_error;
    }
    return 0;
}
