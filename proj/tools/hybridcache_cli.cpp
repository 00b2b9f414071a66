// Command-line front end: one subcommand per run mode, config file plus
// one-for-one flag overrides, CSV/JSON outputs under --out.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hybridcache/hybridcache.hpp"

namespace {

using hybridcache::ExperimentSpec;
using hybridcache::RunMode;

struct CliOverrides {
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string architecture;
    std::uint64_t n = 0, steps = 0, window = 0, burn_in = 0, horizon = 0;
    unsigned euler_substeps = 0;
    double gamma = -1.0, alpha = -1.0, tol = -1.0;
    int h_nvm = 0, h_dram = 0, jobs = 0;
    std::int64_t m_nvm = -1, m_dram = -1;
    double budget = -1.0, cost_dram = -1.0, cost_nvm = -1.0, nvm_fraction = -1.0;
    double dram_read = -1.0, dram_write = -1.0, nvm_read = -1.0, nvm_write = -1.0,
           storage_read = -1.0;
    bool pi_csv = false;
    bool gnuplot = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config, "experiment config file");
    cmd->add_option("--seed", o.seeds, "seed list (repeat or comma separated)")->delimiter(',');
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--steps", o.steps, "requests per simulation run");
    cmd->add_option("--window", o.window, "requests per transient window");
    cmd->add_option("--burn-in", o.burn_in, "requests discarded before steady-state estimates");
    cmd->add_option("--horizon", o.horizon, "mean-field integration slots");
    cmd->add_option("--euler-substeps", o.euler_substeps, "Euler updates per slot (1 = unit step)");
    cmd->add_option("--tol", o.tol, "fixed-point residual tolerance");
    cmd->add_option("--jobs", o.jobs, "sweep worker threads");
    cmd->add_option("--n", o.n, "page count");
    cmd->add_option("--gamma", o.gamma, "Zipf skew exponent");
    cmd->add_option("--architecture", o.architecture, "flat or layered");
    cmd->add_option("--alpha", o.alpha, "flat DRAM fill probability");
    cmd->add_option("--h-N", o.h_nvm, "NVM list count");
    cmd->add_option("--h-D", o.h_dram, "DRAM list count");
    cmd->add_option("--m-N", o.m_nvm, "NVM pages");
    cmd->add_option("--m-D", o.m_dram, "DRAM pages");
    cmd->add_option("--budget", o.budget, "total cost budget");
    cmd->add_option("--cost-dram", o.cost_dram, "cost per DRAM page");
    cmd->add_option("--cost-nvm", o.cost_nvm, "cost per NVM page");
    cmd->add_option("--nvm-fraction", o.nvm_fraction, "budget fraction spent on NVM");
    cmd->add_option("--dram-read", o.dram_read, "DRAM read latency (us)");
    cmd->add_option("--dram-write", o.dram_write, "DRAM write latency (us)");
    cmd->add_option("--nvm-read", o.nvm_read, "NVM read latency (us)");
    cmd->add_option("--nvm-write", o.nvm_write, "NVM write latency (us)");
    cmd->add_option("--storage-read", o.storage_read, "storage read latency (us)");
    cmd->add_flag("--pi-csv", o.pi_csv, "also write the full occupancy matrix as CSV");
    cmd->add_flag("--gnuplot", o.gnuplot, "emit ready-to-plot column descriptions");
}

ExperimentSpec build_spec(const CliOverrides& o, RunMode mode) {
    ExperimentSpec spec;
    if (!o.config.empty())
        spec = hybridcache::parse_config_file(o.config);
    spec.mode = mode;
    if (!o.seeds.empty())
        spec.seeds = o.seeds;
    if (!o.out.empty())
        spec.out_dir = o.out;
    if (o.steps)
        spec.steps = o.steps;
    if (o.window)
        spec.window = o.window;
    if (o.burn_in)
        spec.burn_in = o.burn_in;
    if (o.horizon)
        spec.horizon = o.horizon;
    if (o.euler_substeps)
        spec.euler_substeps = o.euler_substeps;
    if (o.tol > 0)
        spec.tol = o.tol;
    if (o.jobs > 0)
        spec.jobs = o.jobs;
    if (o.n)
        spec.pages = o.n;
    if (o.gamma >= 0)
        spec.gamma = o.gamma;
    if (!o.architecture.empty()) {
        if (o.architecture != "flat" && o.architecture != "layered")
            throw hybridcache::ConfigError("--architecture must be 'flat' or 'layered'");
        spec.architecture = o.architecture;
    }
    if (o.alpha >= 0)
        spec.alpha = o.alpha;
    if (o.h_nvm > 0)
        spec.nvm_lists = o.h_nvm;
    if (o.h_dram > 0)
        spec.dram_lists = o.h_dram;
    if (o.m_nvm >= 0)
        spec.nvm_pages = o.m_nvm;
    if (o.m_dram >= 0)
        spec.dram_pages = o.m_dram;
    if (o.budget > 0)
        spec.budget = o.budget;
    if (o.cost_dram > 0)
        spec.cost_dram = o.cost_dram;
    if (o.cost_nvm > 0)
        spec.cost_nvm = o.cost_nvm;
    if (o.nvm_fraction >= 0)
        spec.nvm_fraction = o.nvm_fraction;
    if (o.dram_read > 0)
        spec.timings.dram_read = o.dram_read;
    if (o.dram_write > 0)
        spec.timings.dram_write = o.dram_write;
    if (o.nvm_read > 0)
        spec.timings.nvm_read = o.nvm_read;
    if (o.nvm_write > 0)
        spec.timings.nvm_write = o.nvm_write;
    if (o.storage_read > 0)
        spec.timings.storage_read = o.storage_read;
    if (o.pi_csv)
        spec.emit_pi_csv = true;
    if (o.gnuplot)
        spec.emit_gnuplot = true;
    return spec;
}

void print_summary(const hybridcache::RunResult& result, const ExperimentSpec& spec) {
    std::cout << result.rows.size() << " point(s) -> " << spec.out_dir << "/results.csv\n";
    if (result.rows.size() == 1) {
        for (std::size_t c = 0; c < result.header.size(); ++c)
            std::cout << "  " << result.header[c] << " = " << result.rows[0][c] << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid DRAM+NVM page cache modelling toolkit"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        RunMode mode;
    };
    const Sub subs[] = {
        {"simulate", "stochastic list-based cache simulation", RunMode::Simulate},
        {"meanfield", "transient mean-field integration from the empty cache", RunMode::MeanField},
        {"fixed-point", "steady-state fixed point and content distribution", RunMode::FixedPoint},
        {"oracle", "exact stationary distribution on tiny instances", RunMode::Oracle},
        {"latency", "average latency from the fixed point", RunMode::Latency},
        {"validate", "simulator vs fixed point comparison", RunMode::Validate},
        {"sweep", "design-space sweep over the config's axes", RunMode::Sweep},
    };

    std::vector<CliOverrides> overrides(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common_options(cmd, overrides[i]);
        cmds.push_back(cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // flag/usage problems are config errors
    }

    try {
        for (std::size_t i = 0; i < std::size(subs); ++i) {
            if (!cmds[i]->parsed())
                continue;
            ExperimentSpec spec = build_spec(overrides[i], subs[i].mode);
            auto result = hybridcache::run_experiment(spec);
            print_summary(result, spec);
            return 0;
        }
    } catch (const hybridcache::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hybridcache::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const hybridcache::InfeasibleError& e) {
        std::cerr << "infeasible geometry: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
