// hyshield: viability precomputation, shielded training, rollouts and export.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hyshield/experiment.hpp"
#include "hyshield/persistence.hpp"

namespace fs = std::filesystem;
using namespace hyshield;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kArtifactMismatch = 4;

struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<int> steps;
    std::string x0;
    std::string format = "csv";
    std::string what = "masks";
    int gamma_bin = -1;
    int mass_bin = -1;
};

fs::path out_dir(const Options& o) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("HYSHIELD_OUT_DIR"); env && *env) return env;
    return "out";
}

ExperimentConfig load(const Options& o) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) c.learner.seed = *o.seed;
    if (o.steps) {
        if (*o.steps < 1) throw ConfigError("--steps must be >= 1");
        c.rollout_steps = *o.steps;
    }
    if (!o.x0.empty()) {
        std::stringstream ss(o.x0);
        std::string item;
        std::vector<double> v;
        while (std::getline(ss, item, ',')) v.push_back(detail::parse_double("--x0", detail::trim(item)));
        if (v.size() != 4) throw ConfigError("--x0 expects \"h,V,gamma,m\" (gamma in degrees)");
        c.x0 = {v[0], v[1], deg2rad(v[2]), v[3]};
    }
    validate(c);
    return c;
}

fs::path prepare(const Options& o) {
    const auto dir = out_dir(o);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

ViabilityResult load_viability_for(const Experiment& ex, const fs::path& dir) {
    const auto& c = ex.config();
    return load_viability((dir / "viability.bin").string(), ex.viability_fingerprint(), c.grid.size(),
                          c.actions.size());
}

QTable load_q_for(const Experiment& ex, const fs::path& dir) {
    const auto& c = ex.config();
    return load_qtable((dir / "qtable.bin").string(), ex.training_fingerprint(), c.grid.size(), c.actions.size());
}

int cmd_viability(const Options& o) {
    const Experiment ex(load(o));
    const auto dir = prepare(o);
    const auto v = ex.compute_viability();
    if (v.empty()) throw Infeasible("viable feasible set is empty; no artifact written");
    save((dir / "viability.bin").string(), v);
    int lo = 1 << 30, hi = 0;
    double sum = 0;
    for (StateId s : v.feasible_states()) {
        const int m = v.admissible_mask(s).size();
        lo = std::min(lo, m);
        hi = std::max(hi, m);
        sum += m;
    }
    std::printf("states %zu\nfeasible %zu\nmask_mean %.3f\nmask_min %d\nmask_max %d\nsweeps %d\nfingerprint %016llx\n",
                v.num_states(), v.feasible_count(), sum / static_cast<double>(v.feasible_count()), lo, hi, v.sweeps(),
                static_cast<unsigned long long>(v.fingerprint()));
    return kOk;
}

int cmd_train(const Options& o) {
    const Experiment ex(load(o));
    const auto dir = prepare(o);
    const auto v = load_viability_for(ex, dir);
    const auto learner = ex.learner(v);
    const auto& c = ex.config();
    if (!learner.valid_start(c.nominal)) throw Infeasible("nominal state lies outside the viable feasible set");
    auto res = learner.train(c.nominal);
    res.q.fingerprint = ex.training_fingerprint();
    save((dir / "qtable.bin").string(), res.q);

    std::ofstream log(dir / "episodes.csv");
    if (!log) throw ConfigError("cannot write episode log");
    log << "# one record per training episode; h [m], V [m/s], gamma [deg], m [kg]\n"
           "episode,start_h,start_V,start_gamma,start_m,end_h,end_V,end_gamma,end_m,steps,cause,total_reward,"
           "violations,safe_steps,unsafe_steps,fallbacks,epsilon,reset\n";
    int violations = 0;
    for (const auto& e : res.episodes) {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%s,%.9g,%d,%d,%d,%d,%.6f,%d\n",
                      e.episode, e.start.h, e.start.V, rad2deg(e.start.gamma), e.start.m, e.terminal.h, e.terminal.V,
                      rad2deg(e.terminal.gamma), e.terminal.m, e.steps, std::string(to_string(e.cause)).c_str(),
                      e.total_reward, e.hard_violations, e.safe_steps, e.unsafe_steps, e.fallbacks, e.epsilon,
                      e.reset_to_nominal ? 1 : 0);
        log << buf;
        violations += e.hard_violations;
    }
    std::printf("episodes %zu\nhard_violations %d\ninadmissible_reads %llu\nbackups %llu\nfingerprint %016llx\n",
                res.episodes.size(), violations, static_cast<unsigned long long>(res.audit.inadmissible_reads),
                static_cast<unsigned long long>(res.audit.backups),
                static_cast<unsigned long long>(res.q.fingerprint));
    return kOk;
}

void write_trajectory(std::ostream& out, const EpisodeResult& ep, const std::string& format) {
    static const char* flag_names[kNumConstraints] = {"v_h_min",  "v_h_max", "v_V_min",   "v_V_max",
                                                       "v_g_min",  "v_g_max", "v_q",       "v_n",
                                                       "v_qdot",   "v_M_max", "v_M_min"};
    const bool csv = format == "csv";
    if (csv)
        out << "# t [s], h [m], V [m/s], gamma [deg], m [kg], alpha [deg], delta [-], reward [-], mode, d [-],\n"
               "# v_* violation flags (0/1) at the successor, mask_size [actions], fallback (0/1)\n";
    const char* sep = csv ? "," : " ";
    out << "t" << sep << "h" << sep << "V" << sep << "gamma" << sep << "m" << sep << "alpha" << sep << "delta" << sep
        << "reward" << sep << "mode" << sep << "d";
    for (const char* f : flag_names) out << sep << f;
    out << sep << "mask_size" << sep << "fallback\n";
    for (const auto& r : ep.steps) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%.3f%s%.6f%s%.6f%s%.6f%s%.6f%s%.3f%s%.3f%s%.9g%s%s%s%.9g", r.t, sep, r.x.h, sep,
                      r.x.V, sep, rad2deg(r.x.gamma), sep, r.x.m, sep, rad2deg(r.u.alpha), sep, r.u.delta, sep,
                      r.reward, sep, std::string(to_string(r.mode)).c_str(), sep, r.distance);
        out << buf;
        for (bool f : r.flags.v) out << sep << (f ? 1 : 0);
        out << sep << r.mask_size << sep << (r.fallback ? 1 : 0) << "\n";
    }
}

int cmd_rollout(const Options& o) {
    const Experiment ex(load(o));
    const auto dir = prepare(o);
    const auto v = load_viability_for(ex, dir);
    const auto q = load_q_for(ex, dir);
    const auto learner = ex.learner(v);
    const auto& c = ex.config();
    if (!learner.valid_start(c.x0)) {
        const auto s = project(c.x0, c.grid);
        throw Infeasible("x0 projects to cell (" + std::to_string(s.index[0]) + "," + std::to_string(s.index[1]) +
                         "," + std::to_string(s.index[2]) + "," + std::to_string(s.index[3]) +
                         ") outside the viable feasible set");
    }
    QTable frozen = q;
    Rng rng(c.learner.seed);
    const auto ep = learner.run_episode(c.x0, frozen, 0.0, rng, false, nullptr, c.rollout_steps);
    const auto file = dir / (o.format == "csv" ? "rollout.csv" : "rollout.txt");
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write '" + file.string() + "'");
    write_trajectory(out, ep, o.format);
    const auto rep = assess_recovery(ep, c.box, c.rollout_steps);
    std::printf("steps %zu\ncause %s\nhard_violations %d\nfirst_inside %d\nremains_inside %d\n"
                "reward_first50 %.6g\nreward_last50 %.6g\nfile %s\n",
                ep.steps.size(), std::string(to_string(ep.cause)).c_str(), ep.hard_violations, rep.first_inside,
                rep.remains_inside ? 1 : 0, rep.reward_first, rep.reward_last, file.string().c_str());
    return kOk;
}

int cmd_export(const Options& o) {
    const Experiment ex(load(o));
    const auto dir = prepare(o);
    const auto& c = ex.config();
    const bool csv = o.format == "csv";
    const char* sep = csv ? "," : " ";
    std::ostringstream out;
    if (o.what == "config") {
        out << dump(c);
    } else if (o.what == "masks") {
        const auto v = load_viability_for(ex, dir);
        out << "id" << sep << "i_h" << sep << "i_V" << sep << "i_gamma" << sep << "i_m" << sep << "mask\n";
        for (StateId s : v.feasible_states()) {
            const auto idx = unflatten(s, c.grid);
            std::string bits;
            for (ActionId a = 0; a < c.actions.size(); ++a) bits += v.admissible_mask(s).contains(a) ? '1' : '0';
            out << s << sep << idx[0] << sep << idx[1] << sep << idx[2] << sep << idx[3] << sep << bits << "\n";
        }
    } else if (o.what == "q") {
        const auto v = load_viability_for(ex, dir);
        const auto q = load_q_for(ex, dir);
        const int gb = o.gamma_bin >= 0 ? o.gamma_bin : project(c.nominal, c.grid).index[2];
        const int mb = o.mass_bin >= 0 ? o.mass_bin : project(c.nominal, c.grid).index[3];
        if (gb >= c.grid.gamma().bins || mb >= c.grid.m().bins) throw ConfigError("slice bin out of range");
        out << "# max admissible Q at gamma bin " << gb << ", mass bin " << mb
            << "; rows: h bins (ascending), columns: V bins; nan = infeasible\n";
        for (int i = 0; i < c.grid.h().bins; ++i) {
            for (int j = 0; j < c.grid.V().bins; ++j) {
                const StateId s = flatten({i, j, gb, mb}, c.grid);
                double best = std::numeric_limits<double>::quiet_NaN();
                if (v.is_feasible(s)) best = q(s, q.argmax(s, v.admissible_mask(s)));
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6g", best);
                out << (j ? sep : "") << buf;
            }
            out << "\n";
        }
    } else {
        throw ConfigError("unknown export target '" + o.what + "'");
    }
    const auto file = dir / ("export_" + o.what + (csv ? ".csv" : ".txt"));
    std::ofstream f(file);
    if (!f) throw ConfigError("cannot write '" + file.string() + "'");
    f << out.str();
    std::printf("file %s\n", file.string().c_str());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shielded Q-learning for a hypersonic cruise vehicle"};
    app.require_subcommand(1, 1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "configuration file (key = value)");
        sub->add_option("--out", o.out, "artifact directory (default $HYSHIELD_OUT_DIR or ./out)");
        sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "text"}));
    };
    auto* viab = app.add_subcommand("viability", "compute and store the viable feasible set and masks");
    common(viab);
    auto* train = app.add_subcommand("train", "train the shielded Q-table");
    common(train);
    train->add_option("--seed", o.seed, "training seed");
    auto* roll = app.add_subcommand("rollout", "greedy shielded rollout with the trained table");
    common(roll);
    roll->add_option("--seed", o.seed, "seed the table was trained with");
    roll->add_option("--steps", o.steps, "rollout length");
    roll->add_option("--x0", o.x0, "initial state \"h,V,gamma,m\" (m, m/s, deg, kg)");
    auto* exp = app.add_subcommand("export", "dump masks, Q slices or the canonical config");
    common(exp);
    exp->add_option("--seed", o.seed, "seed the table was trained with");
    exp->add_option("--what", o.what, "masks | q | config")->check(CLI::IsMember({"masks", "q", "config"}));
    exp->add_option("--gamma-bin", o.gamma_bin, "gamma bin of the Q slice (default: nominal)");
    exp->add_option("--mass-bin", o.mass_bin, "mass bin of the Q slice (default: nominal)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*viab) return cmd_viability(o);
        if (*train) return cmd_train(o);
        if (*roll) return cmd_rollout(o);
        return cmd_export(o);
    } catch (const ArtifactMismatch& e) {
        std::fprintf(stderr, "artifact mismatch: %s\n", e.what());
        return kArtifactMismatch;
    } catch (const Infeasible& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kInfeasible;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    }
}
