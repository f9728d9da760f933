#include "lssp/envgen.hpp"
#include "lssp/experiment.hpp"
#include "lssp/model_io.hpp"
#include "lssp/sweep.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lssp;

namespace {

struct EnvFlags {
    std::string generator = "tabular-random";
    int states = 5;
    int actions = 3;
    int dim = 4;
    double p_goal_min = 0.2;
    double c_min = 0.2;
    double cost_max = 1.0;

    void add(CLI::App* app) {
        app->add_option("--generator", generator, "tabular-random | low-rank-random")->capture_default_str();
        app->add_option("--states", states, "number of states including the goal")->capture_default_str();
        app->add_option("--actions", actions, "number of actions")->capture_default_str();
        app->add_option("--dim", dim, "feature dimension (low-rank generator)")->capture_default_str();
        app->add_option("--p-goal-min", p_goal_min, "minimum goal probability per pair")->capture_default_str();
        app->add_option("--c-min", c_min, "minimum non-goal cost")->capture_default_str();
        app->add_option("--cost-max", cost_max, "maximum cost")->capture_default_str();
    }

    EnvGenConfig config(std::uint64_t seed) const {
        EnvGenConfig cfg;
        cfg.kind = parse_generator_kind(generator);
        cfg.n_states = states;
        cfg.n_actions = actions;
        cfg.dim = dim;
        cfg.p_goal_min = p_goal_min;
        cfg.c_min_target = c_min;
        cfg.cost_max = cost_max;
        cfg.seed = seed;
        return cfg;
    }
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    body(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear SSP regret experiments"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    EnvFlags env_flags;

    // gen
    auto* gen = app.add_subcommand("gen", "generate an environment file");
    std::string gen_out;
    gen->add_option("--seed", seed, "generator seed")->capture_default_str();
    env_flags.add(gen);
    gen->add_option("--out", gen_out, "output file (stdout if omitted)");

    // run
    auto* run = app.add_subcommand("run", "run one experiment");
    std::string env_file, run_out = "out", schedule = "choice1", oracle = "iterate", initial = "round-robin";
    std::size_t episodes = 100;
    double alpha_scale = 1.0, delta = 0.1, bstar_mult = 1.0;
    run->add_option("--seed", seed, "environment and experiment seed")->capture_default_str();
    run->add_option("--env", env_file, "environment file (generated from --seed if omitted)");
    env_flags.add(run);
    run->add_option("--episodes,-K", episodes, "number of episodes")->capture_default_str();
    run->add_option("--schedule", schedule, "choice1 | choice2 | choice3")->capture_default_str();
    run->add_option("--oracle", oracle, "iterate | fixed | grid")->capture_default_str();
    run->add_option("--alpha-scale", alpha_scale, "multiplier on the bonus scale")->capture_default_str();
    run->add_option("--delta", delta, "confidence parameter")->capture_default_str();
    run->add_option("--bstar-multiplier", bstar_mult, "inflate the B* reported to the agent")->capture_default_str();
    run->add_option("--initial-state", initial, "fixed | round-robin | random")->capture_default_str();
    run->add_option("--out", run_out, "output directory")->capture_default_str();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a config-driven sweep");
    std::string sweep_config, sweep_out = "sweep_out";
    unsigned workers = 0;
    sweep->add_option("config", sweep_config, "sweep config (JSON)")->required();
    sweep->add_option("--out", sweep_out, "output directory")->capture_default_str();
    sweep->add_option("--workers", workers, "parallel cells (overrides the config)");

    // verify
    auto* verify = app.add_subcommand("verify", "re-check a trace's invariants");
    std::string trace_file, meta_file;
    verify->add_option("trace", trace_file, "trace CSV")->required();
    verify->add_option("--meta", meta_file, "totals JSON (default: <trace>.meta.json next to the CSV)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const LinearSsp env = generate(env_flags.config(seed));
            if (gen_out.empty()) {
                write_model(std::cout, env);
            } else {
                save_model(gen_out, env);
            }
            return 0;
        }

        if (*run) {
            const LinearSsp env = env_file.empty() ? generate(env_flags.config(seed)) : load_model(env_file);
            ExperimentConfig cfg;
            cfg.episodes = episodes;
            cfg.seed = seed;
            cfg.schedule = parse_schedule_kind(schedule);
            cfg.oracle = parse_oracle_kind(oracle);
            cfg.alpha_scale = alpha_scale;
            cfg.delta = delta;
            cfg.b_star_multiplier = bstar_mult;
            cfg.initial_state = parse_initial_state_policy(initial);
            const RegretTrace trace = run_experiment(env, cfg);
            fs::create_directories(run_out);
            const fs::path dir(run_out);
            write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, trace); });
            write_file(dir / "trace.updates.csv", [&](std::ostream& o) { write_updates_csv(o, trace); });
            write_file(dir / "trace.meta.json", [&](std::ostream& o) { write_trace_meta(o, trace); });
            std::size_t passed = 0;
            for (const auto& u : trace.updates) passed += u.all_ok() ? 1 : 0;
            std::printf("K=%zu T=%zu L=%d regret=%.6f oracle_calls=%zu certified=%zu\n", trace.k(), trace.total_steps,
                        trace.policies, trace.regret(), trace.updates.size(), passed);
            if (!trace.completed) {
                std::fprintf(stderr, "run aborted: %s\n", trace.error.c_str());
                return 2;
            }
            return 0;
        }

        if (*sweep) {
            SweepConfig cfg = load_sweep_config(sweep_config);
            if (workers > 0) cfg.workers = workers;
            const auto results = run_sweep(cfg);
            write_sweep_outputs(sweep_out, results);
            std::size_t failed = 0;
            for (const auto& r : results) {
                if (r.failed) {
                    ++failed;
                    std::fprintf(stderr, "%s: %s\n", cell_stem(r.cell).c_str(), r.trace.error.c_str());
                }
            }
            std::printf("%zu cells, %zu failed; summary in %s\n", results.size(), failed,
                        (fs::path(sweep_out) / "summary.csv").string().c_str());
            return 0;
        }

        if (*verify) {
            RegretTrace trace;
            {
                std::ifstream in(trace_file);
                if (!in) throw std::runtime_error("cannot open " + trace_file);
                trace.episodes = read_trace_csv(in);
            }
            if (meta_file.empty()) {
                fs::path p(trace_file);
                meta_file = (p.parent_path() / (p.stem().string() + ".meta.json")).string();
            }
            std::ifstream meta(meta_file);
            if (!meta) throw std::runtime_error("cannot open " + meta_file);
            read_trace_meta(meta, trace);
            const TraceCheck check = verify_trace(trace);
            for (const auto& f : check.failures) std::printf("FAIL %s\n", f.c_str());
            std::printf("%s: %zu episodes, %s\n", trace_file.c_str(), trace.k(), check.ok() ? "ok" : "violations");
            return check.ok() ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
