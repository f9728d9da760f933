#include "lssp/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace lssp {

namespace {

using nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

SweepConfig parse_sweep_json(const json& j);

}  // namespace

SweepConfig parse_sweep_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("sweep config: ") + e.what());
    }
    try {
        return parse_sweep_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("sweep config: ") + e.what());
    }
}

namespace {

SweepConfig parse_sweep_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("sweep config: top level must be an object");
    if (!j.contains("schema_version")) throw std::invalid_argument("sweep config: missing schema_version");
    if (j.at("schema_version").get<int>() != kSweepSchemaVersion) {
        throw std::invalid_argument("sweep config: unsupported schema_version " + j.at("schema_version").dump());
    }
    SweepConfig cfg;
    if (j.contains("env")) {
        const json& e = j.at("env");
        if (e.contains("generator")) cfg.env.kind = parse_generator_kind(e.at("generator").get<std::string>());
        read_opt(e, "n_states", cfg.env.n_states);
        read_opt(e, "n_actions", cfg.env.n_actions);
        read_opt(e, "dim", cfg.env.dim);
        read_opt(e, "p_goal_min", cfg.env.p_goal_min);
        read_opt(e, "c_min_target", cfg.env.c_min_target);
        read_opt(e, "cost_max", cfg.env.cost_max);
    }
    if (j.contains("agent")) {
        const json& a = j.at("agent");
        read_opt(a, "delta", cfg.agent.delta);
        read_opt(a, "b_star_multiplier", cfg.agent.b_star_multiplier);
        if (a.contains("initial_state")) {
            cfg.agent.initial_state = parse_initial_state_policy(a.at("initial_state").get<std::string>());
        }
        read_opt(a, "fixed_initial_state", cfg.agent.fixed_initial_state);
        read_opt(a, "gamma", cfg.agent.gamma);
        read_opt(a, "gamma_1", cfg.agent.gamma_1);
        read_opt(a, "gamma_2", cfg.agent.gamma_2);
        read_opt(a, "max_oracle_iter", cfg.agent.max_oracle_iter);
        read_opt(a, "grid_cap", cfg.agent.grid_cap);
        read_opt(a, "episode_step_cap", cfg.agent.episode_step_cap);
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        read_opt(g, "seeds", cfg.seeds);
        if (g.contains("schedules")) {
            for (const auto& s : g.at("schedules")) cfg.schedules.push_back(parse_schedule_kind(s.get<std::string>()));
        }
        if (g.contains("oracles")) {
            for (const auto& s : g.at("oracles")) cfg.oracles.push_back(parse_oracle_kind(s.get<std::string>()));
        }
        read_opt(g, "alpha_scales", cfg.alpha_scales);
        read_opt(g, "episodes", cfg.episodes);
    }
    read_opt(j, "workers", cfg.workers);
    if (cfg.workers == 0) cfg.workers = 1;
    cfg.env.check();
    return cfg;
}

}  // namespace

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep_config(ss.str());
}

std::vector<SweepCell> sweep_cells(const SweepConfig& cfg) {
    std::vector<SweepCell> cells;
    for (auto seed : cfg.seeds)
        for (auto sched : cfg.schedules)
            for (auto oracle : cfg.oracles) {
                if ((oracle == OracleKind::Fixed) == (sched == ScheduleKind::Choice1)) continue;
                for (double alpha : cfg.alpha_scales)
                    for (auto k : cfg.episodes) cells.push_back({seed, sched, oracle, alpha, k});
            }
    return cells;
}

CellResult run_cell(const SweepConfig& cfg, const SweepCell& cell) {
    CellResult r;
    r.cell = cell;
    try {
        EnvGenConfig env_cfg = cfg.env;
        env_cfg.seed = cell.seed;
        const LinearSsp env = generate(env_cfg);
        ExperimentConfig ecfg = cfg.agent;
        ecfg.seed = cell.seed;
        ecfg.schedule = cell.schedule;
        ecfg.oracle = cell.oracle;
        ecfg.alpha_scale = cell.alpha_scale;
        ecfg.episodes = cell.episodes;
        r.trace = run_experiment(env, ecfg);
        r.failed = !r.trace.completed;
    } catch (const std::exception& e) {
        r.failed = true;
        r.trace.error = e.what();
    }
    return r;
}

std::vector<CellResult> run_sweep(const SweepConfig& cfg) {
    const std::vector<SweepCell> cells = sweep_cells(cfg);
    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) results[i] = run_cell(cfg, cells[i]);
    };
    const unsigned n = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(cells.size())));
    if (n <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

double fit_loglog_slope(const std::vector<double>& ks, const std::vector<double>& values, double burn_in) {
    if (ks.size() != values.size()) throw std::invalid_argument("fit_loglog_slope: size mismatch");
    if (ks.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double k_max = *std::max_element(ks.begin(), ks.end());
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (!(ks[i] > burn_in * k_max) || !(ks[i] > 0.0) || !(values[i] > 0.0)) continue;
        const double x = std::log(ks[i]);
        const double y = std::log(values[i]);
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (n < 2 || !(denom > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

double trace_slope(const RegretTrace& trace, double burn_in) {
    std::vector<double> ks, vs;
    ks.reserve(trace.episodes.size());
    vs.reserve(trace.episodes.size());
    for (const auto& e : trace.episodes) {
        ks.push_back(static_cast<double>(e.k));
        vs.push_back(e.cum_regret);
    }
    return fit_loglog_slope(ks, vs, burn_in);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& results) {
    out << kSummaryHeader << '\n';
    using Key = std::tuple<int, int, double, std::size_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<const CellResult*>> groups;
    for (const auto& r : results) {
        const Key key{static_cast<int>(r.cell.schedule), static_cast<int>(r.cell.oracle), r.cell.alpha_scale,
                      r.cell.episodes};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&r);
    }
    char buf[512];
    for (const Key& key : order) {
        const auto& members = groups.at(key);
        std::vector<double> regrets, slopes;
        std::size_t failures = 0, nonconv = 0, calls = 0, passed = 0;
        for (const CellResult* r : members) {
            if (r->failed) ++failures;
            if (r->trace.nonconvergence) ++nonconv;
            for (const auto& u : r->trace.updates) {
                ++calls;
                passed += u.all_ok() ? 1 : 0;
            }
            if (r->failed) continue;
            regrets.push_back(r->trace.regret());
            const double slope = trace_slope(r->trace);
            if (std::isfinite(slope)) slopes.push_back(slope);
        }
        const CellResult& first = *members.front();
        const double pass_rate = calls == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : static_cast<double>(passed) / static_cast<double>(calls);
        std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      to_string(first.cell.schedule).c_str(), to_string(first.cell.oracle).c_str(),
                      first.cell.alpha_scale, first.cell.episodes, members.size(), failures, quantile(regrets, 0.5),
                      quantile(regrets, 0.75) - quantile(regrets, 0.25), quantile(slopes, 0.5), pass_rate,
                      static_cast<double>(nonconv) / static_cast<double>(members.size()));
        out << buf;
    }
}

std::string cell_stem(const SweepCell& cell) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", cell.alpha_scale);
    return "trace_" + to_string(cell.schedule) + "_" + to_string(cell.oracle) + "_a" + buf + "_K" +
           std::to_string(cell.episodes) + "_s" + std::to_string(cell.seed);
}

void write_sweep_outputs(const std::filesystem::path& dir, const std::vector<CellResult>& results) {
    std::filesystem::create_directories(dir);
    for (const auto& r : results) {
        const std::string stem = cell_stem(r.cell);
        std::ofstream trace_out(dir / (stem + ".csv"));
        write_trace_csv(trace_out, r.trace);
        std::ofstream updates_out(dir / (stem + ".updates.csv"));
        write_updates_csv(updates_out, r.trace);
        std::ofstream meta_out(dir / (stem + ".meta.json"));
        write_trace_meta(meta_out, r.trace);
    }
    std::ofstream summary(dir / "summary.csv");
    write_summary_csv(summary, results);
}

}  // namespace lssp
