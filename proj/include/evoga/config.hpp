#ifndef EVOGA_CONFIG_HPP
#define EVOGA_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evoga/evolution.hpp"

namespace evoga {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Process exit codes used by the CLI.
enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_numeric_abort = 3,
    exit_io_error = 4,
};

// Everything a run needs: evolution hyperparameters, target mixture, seed,
// logging cadence, and metric thresholds.
struct RunConfig {
    EvolutionConfig evo;
    std::string mixture_name = "ring8";
    double mixture_sigma = 0;  // 0 = mixture default
    double mixture_scale = 1.0;
    uint64_t seed = 0;
    long log_interval = 500;
    long checkpoint_interval = 10000;
    std::string out_dir = "runs/default";
    int metric_samples = 10240;
    double coverage_radius_sigmas = 3.0;
    int coverage_min_count = 0;  // 0 = N / (20 * modes)
    int kde_resolution = 64;

    MixtureSpec mixture() const {
        MixtureSpec spec;
        if (mixture_name == "ring8")
            spec = ring8();
        else if (mixture_name == "grid25")
            spec = grid25();
        else
            throw config_error("unknown mixture '" + mixture_name + "' (valid: ring8, grid25)");
        if (mixture_sigma > 0) spec.sigma = mixture_sigma;
        spec.scale = mixture_scale;
        return spec;
    }

    void validate() const {
        evo.validate();
        mixture().validate();
        if (log_interval < 1) throw config_error("log_interval must be >= 1");
        if (checkpoint_interval < 1) throw config_error("checkpoint_interval must be >= 1");
        if (metric_samples < 1) throw config_error("metric_samples must be >= 1");
        if (coverage_radius_sigmas <= 0) throw config_error("coverage_radius_sigmas must be > 0");
        if (kde_resolution < 2) throw config_error("kde_resolution must be >= 2");
    }
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T out;
    is >> out;
    if (is.fail() || !is.eof())
        throw config_error("invalid value '" + value + "' for key '" + key + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("invalid value '" + value + "' for key '" + key +
                       "' (expected true/false)");
}

}  // namespace detail

class ConfigBinder {
public:
    explicit ConfigBinder(RunConfig& cfg) : cfg_(cfg) {
        bind("mu", cfg.evo.mu);
        bind("n_m", cfg.evo.n_m);
        bind("n_c", cfg.evo.n_c);
        bind("n_d", cfg.evo.n_d);
        bind("m", cfg.evo.m);
        bind("l", cfg.evo.l);
        bind("n", cfg.evo.n);
        bind("n_e", cfg.evo.n_e);
        bind("gamma1", cfg.evo.gamma1);
        bind("gamma2", cfg.evo.gamma2);
        bind("alpha", cfg.evo.adam.alpha);
        bind("beta1", cfg.evo.adam.beta1);
        bind("beta2", cfg.evo.adam.beta2);
        bind("epsilon", cfg.evo.adam.epsilon);
        bind("gp_enabled", cfg.evo.gp.enabled);
        bind("gp_lambda", cfg.evo.gp.coefficient);
        bind("distill_steps", cfg.evo.distill_steps);
        bind("distill_sgd_lr", cfg.evo.distill_sgd_lr);
        bind("iterations", cfg.evo.iterations);
        bind_enum("fitness_mode", {{"ie_gan", FitnessMode::ie_gan},
                                   {"e_gan", FitnessMode::e_gan},
                                   {"quality_only", FitnessMode::quality_only}},
                  cfg.evo.fitness_mode);
        bind_enum("crossover_basis",
                  {{"better", CrossoverBasis::better}, {"worse", CrossoverBasis::worse}},
                  cfg.evo.crossover_basis);
        bind("crossover_compare", cfg.evo.crossover_compare);
        bind("mixture", cfg.mixture_name);
        bind("mixture_sigma", cfg.mixture_sigma);
        bind("mixture_scale", cfg.mixture_scale);
        bind("seed", cfg.seed);
        bind("log_interval", cfg.log_interval);
        bind("checkpoint_interval", cfg.checkpoint_interval);
        bind("out_dir", cfg.out_dir);
        bind("metric_samples", cfg.metric_samples);
        bind("coverage_radius_sigmas", cfg.coverage_radius_sigmas);
        bind("coverage_min_count", cfg.coverage_min_count);
        bind("kde_resolution", cfg.kde_resolution);
    }

    void set(const std::string& key, const std::string& value) {
        auto it = setters_.find(key);
        if (it == setters_.end()) {
            std::string keys;
            for (const auto& [k, _] : setters_) keys += (keys.empty() ? "" : ", ") + k;
            throw config_error("unknown config key '" + key + "'; valid keys: " + keys);
        }
        it->second(value);
    }

    // Deterministic snapshot of every field, suitable as a run fingerprint.
    std::string resolved_text() const {
        std::ostringstream os;
        os.precision(17);
        for (const auto& [k, get] : getters_) os << k << "=" << get() << "\n";
        return os.str();
    }

private:
    RunConfig& cfg_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
    std::map<std::string, std::function<std::string()>> getters_;

    void bind(const std::string& key, int& field) {
        setters_[key] = [key, &field](const std::string& v) {
            field = detail::parse_number<int>(key, v);
        };
        getters_[key] = [&field] { return std::to_string(field); };
    }
    void bind(const std::string& key, long& field) {
        setters_[key] = [key, &field](const std::string& v) {
            field = detail::parse_number<long>(key, v);
        };
        getters_[key] = [&field] { return std::to_string(field); };
    }
    void bind(const std::string& key, uint64_t& field) {
        setters_[key] = [key, &field](const std::string& v) {
            field = detail::parse_number<uint64_t>(key, v);
        };
        getters_[key] = [&field] { return std::to_string(field); };
    }
    void bind(const std::string& key, double& field) {
        setters_[key] = [key, &field](const std::string& v) {
            field = detail::parse_number<double>(key, v);
        };
        getters_[key] = [&field] {
            std::ostringstream os;
            os.precision(17);
            os << field;
            return os.str();
        };
    }
    void bind(const std::string& key, bool& field) {
        setters_[key] = [key, &field](const std::string& v) {
            field = detail::parse_bool(key, v);
        };
        getters_[key] = [&field] { return std::string(field ? "true" : "false"); };
    }
    void bind(const std::string& key, std::string& field) {
        setters_[key] = [&field](const std::string& v) { field = v; };
        getters_[key] = [&field] { return field; };
    }
    template <class E>
    void bind_enum(const std::string& key, std::vector<std::pair<std::string, E>> values,
                   E& field) {
        setters_[key] = [key, values, &field](const std::string& v) {
            for (const auto& [name, e] : values)
                if (name == v) {
                    field = e;
                    return;
                }
            std::string names;
            for (const auto& [name, _] : values) names += (names.empty() ? "" : ", ") + name;
            throw config_error("invalid value '" + v + "' for key '" + key +
                               "' (expected one of: " + names + ")");
        };
        getters_[key] = [values, &field] {
            for (const auto& [name, e] : values)
                if (e == field) return name;
            return std::string("?");
        };
    }
};

// Presets reproducing the two toy experiments.
inline void apply_preset(RunConfig& cfg, const std::string& name) {
    EvolutionConfig evo;
    evo.adam.alpha = 1e-4;
    evo.n_d = 1;
    evo.gamma1 = 1.0;
    evo.gamma2 = 0.001;
    evo.n_e = 5;
    evo.n_c = 1;
    evo.m = 32;
    evo.l = 256;
    evo.n = 256;
    evo.mu = 1;
    evo.n_m = 3;
    if (name == "toy8") {
        evo.iterations = 30000;
        cfg.mixture_name = "ring8";
    } else if (name == "toy25") {
        evo.iterations = 100000;
        cfg.mixture_name = "grid25";
    } else {
        throw config_error("unknown preset '" + name + "' (valid: toy8, toy25)");
    }
    cfg.evo = evo;
}

// Ablation variants: drop the diversity fitness term, the crossover operator,
// both, or switch to the baseline fitness.
inline void apply_ablation(RunConfig& cfg, const std::string& variant) {
    if (variant == "full") {
        return;
    } else if (variant == "no_fd") {
        cfg.evo.gamma1 = 0.0;
    } else if (variant == "no_crossover") {
        cfg.evo.n_c = 0;
    } else if (variant == "neither") {
        cfg.evo.gamma1 = 0.0;
        cfg.evo.n_c = 0;
    } else if (variant == "egan_fitness") {
        cfg.evo.fitness_mode = FitnessMode::e_gan;
    } else {
        throw config_error("unknown ablation variant '" + variant +
                           "' (valid: full, no_fd, no_crossover, neither, egan_fitness)");
    }
}

// Flat key=value file with '#' comments.
inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config file: " + path);
    ConfigBinder binder(cfg);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        size_t end = line.find_last_not_of(" \t\r");
        line = line.substr(begin, end - begin + 1);
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto strip = [](std::string& s) {
            size_t b = s.find_first_not_of(" \t");
            size_t e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        strip(key);
        strip(value);
        binder.set(key, value);
    }
}

}  // namespace evoga

#endif
