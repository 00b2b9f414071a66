#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hybridcache/core_model.hpp"
#include "hybridcache/errors.hpp"
#include "hybridcache/exact_oracle.hpp"
#include "hybridcache/latency.hpp"
#include "hybridcache/meanfield.hpp"
#include "hybridcache/simulator.hpp"
#include "hybridcache/workload.hpp"

namespace hybridcache {

inline constexpr const char* kToolVersion = "1.0.0";

enum class RunMode { Simulate, MeanField, FixedPoint, Oracle, Latency, Validate, Sweep };

inline std::string run_mode_name(RunMode mode) {
    switch (mode) {
    case RunMode::Simulate: return "simulate";
    case RunMode::MeanField: return "meanfield";
    case RunMode::FixedPoint: return "fixed-point";
    case RunMode::Oracle: return "oracle";
    case RunMode::Latency: return "latency";
    case RunMode::Validate: return "validate";
    default: return "sweep";
    }
}

inline RunMode run_mode_from(const std::string& name) {
    for (RunMode mode : {RunMode::Simulate, RunMode::MeanField, RunMode::FixedPoint,
                         RunMode::Oracle, RunMode::Latency, RunMode::Validate, RunMode::Sweep})
        if (run_mode_name(mode) == name)
            return mode;
    throw ConfigError("config: unknown run mode '" + name + "'");
}

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

// Full description of one experiment: workload, architecture, geometry (or
// its budget form), device timings, run mode and its knobs, and the sweep
// axes. This is what the manifest echoes, so a run is reconstructible from
// the manifest alone.
struct ExperimentSpec {
    // workload
    std::uint64_t pages = 1000; // n
    double gamma = 0.8;
    std::string probs_file;

    // architecture + geometry
    std::string architecture = "flat";
    double alpha = 0.8;
    int nvm_lists = 1;
    int dram_lists = 1;
    std::int64_t nvm_pages = -1;  // m_N; -1 = use budget form
    std::int64_t dram_pages = -1; // m_D
    double budget = -1.0;
    double cost_dram = 1.0;
    double cost_nvm = 0.25;
    double nvm_fraction = 0.5;
    std::vector<std::int64_t> capacities; // optional explicit per-list override

    DeviceTimings timings = DeviceTimings::common();

    // run controls
    RunMode mode = RunMode::FixedPoint;
    std::vector<std::uint64_t> seeds = {1};
    std::uint64_t steps = 1000000;
    std::uint64_t window = 1000;
    std::uint64_t burn_in = 0; // 0 = auto (steps / 5)
    std::uint64_t horizon = 10000;
    unsigned euler_substeps = 1; // >1 refines each slot; 1 is the reference
    double tol = 1e-10;
    int jobs = 1;
    std::string out_dir = "out";
    bool emit_pi_csv = false;
    bool emit_gnuplot = false;

    std::vector<SweepAxis> axes;

    std::uint64_t effective_burn_in() const { return burn_in == 0 ? steps / 5 : burn_in; }
};

inline void to_json(nlohmann::json& j, const SweepAxis& axis) {
    j = nlohmann::json{{"parameter", axis.parameter}, {"values", axis.values}};
}
inline void from_json(const nlohmann::json& j, SweepAxis& axis) {
    j.at("parameter").get_to(axis.parameter);
    j.at("values").get_to(axis.values);
}

inline void to_json(nlohmann::json& j, const ExperimentSpec& spec) {
    j = nlohmann::json{{"n", spec.pages},
                       {"gamma", spec.gamma},
                       {"probs_file", spec.probs_file},
                       {"architecture", spec.architecture},
                       {"alpha", spec.alpha},
                       {"h_N", spec.nvm_lists},
                       {"h_D", spec.dram_lists},
                       {"m_N", spec.nvm_pages},
                       {"m_D", spec.dram_pages},
                       {"budget", spec.budget},
                       {"cost_dram", spec.cost_dram},
                       {"cost_nvm", spec.cost_nvm},
                       {"nvm_fraction", spec.nvm_fraction},
                       {"capacities", spec.capacities},
                       {"timings",
                        {{"dram_read", spec.timings.dram_read},
                         {"dram_write", spec.timings.dram_write},
                         {"nvm_read", spec.timings.nvm_read},
                         {"nvm_write", spec.timings.nvm_write},
                         {"storage_read", spec.timings.storage_read}}},
                       {"mode", run_mode_name(spec.mode)},
                       {"seeds", spec.seeds},
                       {"steps", spec.steps},
                       {"window", spec.window},
                       {"burn_in", spec.burn_in},
                       {"horizon", spec.horizon},
                       {"euler_substeps", spec.euler_substeps},
                       {"tol", spec.tol},
                       {"jobs", spec.jobs},
                       {"out_dir", spec.out_dir},
                       {"emit_pi_csv", spec.emit_pi_csv},
                       {"emit_gnuplot", spec.emit_gnuplot},
                       {"axes", spec.axes}};
}

inline void from_json(const nlohmann::json& j, ExperimentSpec& spec) {
    j.at("n").get_to(spec.pages);
    j.at("gamma").get_to(spec.gamma);
    j.at("probs_file").get_to(spec.probs_file);
    j.at("architecture").get_to(spec.architecture);
    j.at("alpha").get_to(spec.alpha);
    j.at("h_N").get_to(spec.nvm_lists);
    j.at("h_D").get_to(spec.dram_lists);
    j.at("m_N").get_to(spec.nvm_pages);
    j.at("m_D").get_to(spec.dram_pages);
    j.at("budget").get_to(spec.budget);
    j.at("cost_dram").get_to(spec.cost_dram);
    j.at("cost_nvm").get_to(spec.cost_nvm);
    j.at("nvm_fraction").get_to(spec.nvm_fraction);
    j.at("capacities").get_to(spec.capacities);
    const auto& t = j.at("timings");
    t.at("dram_read").get_to(spec.timings.dram_read);
    t.at("dram_write").get_to(spec.timings.dram_write);
    t.at("nvm_read").get_to(spec.timings.nvm_read);
    t.at("nvm_write").get_to(spec.timings.nvm_write);
    t.at("storage_read").get_to(spec.timings.storage_read);
    spec.mode = run_mode_from(j.at("mode").get<std::string>());
    j.at("seeds").get_to(spec.seeds);
    j.at("steps").get_to(spec.steps);
    j.at("window").get_to(spec.window);
    j.at("burn_in").get_to(spec.burn_in);
    j.at("horizon").get_to(spec.horizon);
    j.at("euler_substeps").get_to(spec.euler_substeps);
    j.at("tol").get_to(spec.tol);
    j.at("jobs").get_to(spec.jobs);
    j.at("out_dir").get_to(spec.out_dir);
    j.at("emit_pi_csv").get_to(spec.emit_pi_csv);
    j.at("emit_gnuplot").get_to(spec.emit_gnuplot);
    j.at("axes").get_to(spec.axes);
}

// ---------------------------------------------------------------------------
// Config file parsing: INI-style sections with key = value lines. Every key
// of the [sweep] section defines one axis, in declaration order.
// ---------------------------------------------------------------------------

namespace detail {

struct RawConfig {
    // section -> ordered key/value pairs
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

    const std::string* find(const std::string& section, const std::string& key) const {
        for (const auto& [name, entries] : sections) {
            if (name != section)
                continue;
            for (const auto& [k, v] : entries)
                if (k == key)
                    return &v;
        }
        return nullptr;
    }
};

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline RawConfig parse_ini(std::istream& in) {
    RawConfig raw;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            raw.sections.emplace_back(section, std::vector<std::pair<std::string, std::string>>{});
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside any [section]");
        if (raw.sections.empty() || raw.sections.back().first != section)
            raw.sections.emplace_back(section, std::vector<std::pair<std::string, std::string>>{});
        raw.sections.back().second.emplace_back(key, value);
    }
    return raw;
}

inline double parse_double(const std::string& field, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: field " + field + " is not a number: '" + value + "'");
    }
}

inline std::int64_t parse_int(const std::string& field, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: field " + field + " is not an integer: '" + value + "'");
    }
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& field, const std::string& value, Parse parse) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            throw ConfigError("config: field " + field + " has an empty list entry");
        out.push_back(parse(field, item));
    }
    if (out.empty())
        throw ConfigError("config: field " + field + " needs at least one value");
    return out;
}

} // namespace detail

// Names a sweep axis may reference, and how each one lands in the experiment
// spec.
inline void apply_parameter(ExperimentSpec& spec, const std::string& name, double value) {
    auto require_integer = [&](double v) {
        if (v != std::floor(v))
            throw ConfigError("sweep: parameter " + name + " needs integer values");
        return static_cast<std::int64_t>(v);
    };
    if (name == "alpha")
        spec.alpha = value;
    else if (name == "gamma")
        spec.gamma = value;
    else if (name == "n")
        spec.pages = static_cast<std::uint64_t>(require_integer(value));
    else if (name == "h_N")
        spec.nvm_lists = static_cast<int>(require_integer(value));
    else if (name == "h_D")
        spec.dram_lists = static_cast<int>(require_integer(value));
    else if (name == "m_N")
        spec.nvm_pages = require_integer(value);
    else if (name == "m_D")
        spec.dram_pages = require_integer(value);
    else if (name == "budget")
        spec.budget = value;
    else if (name == "nvm_fraction")
        spec.nvm_fraction = value;
    else if (name == "cost_dram")
        spec.cost_dram = value;
    else if (name == "cost_nvm")
        spec.cost_nvm = value;
    else if (name == "dram_read")
        spec.timings.dram_read = value;
    else if (name == "dram_write")
        spec.timings.dram_write = value;
    else if (name == "nvm_read")
        spec.timings.nvm_read = value;
    else if (name == "nvm_write")
        spec.timings.nvm_write = value;
    else if (name == "storage_read")
        spec.timings.storage_read = value;
    else if (name == "steps")
        spec.steps = static_cast<std::uint64_t>(require_integer(value));
    else if (name == "window")
        spec.window = static_cast<std::uint64_t>(require_integer(value));
    else if (name == "horizon")
        spec.horizon = static_cast<std::uint64_t>(require_integer(value));
    else
        throw ConfigError("sweep: unknown parameter '" + name + "'");
}

inline ExperimentSpec parse_config(std::istream& in) {
    detail::RawConfig raw = detail::parse_ini(in);
    ExperimentSpec spec;

    auto get = [&](const char* section, const char* key) { return raw.find(section, key); };
    if (const auto* v = get("workload", "n"))
        spec.pages = static_cast<std::uint64_t>(detail::parse_int("[workload] n", *v));
    if (const auto* v = get("workload", "gamma"))
        spec.gamma = detail::parse_double("[workload] gamma", *v);
    if (const auto* v = get("workload", "probs_file"))
        spec.probs_file = *v;

    if (const auto* v = get("geometry", "architecture")) {
        if (*v != "flat" && *v != "layered")
            throw ConfigError("config: field [geometry] architecture must be 'flat' or 'layered'");
        spec.architecture = *v;
    }
    if (const auto* v = get("geometry", "alpha"))
        spec.alpha = detail::parse_double("[geometry] alpha", *v);
    if (const auto* v = get("geometry", "h_N"))
        spec.nvm_lists = static_cast<int>(detail::parse_int("[geometry] h_N", *v));
    if (const auto* v = get("geometry", "h_D"))
        spec.dram_lists = static_cast<int>(detail::parse_int("[geometry] h_D", *v));
    if (const auto* v = get("geometry", "m_N"))
        spec.nvm_pages = detail::parse_int("[geometry] m_N", *v);
    if (const auto* v = get("geometry", "m_D"))
        spec.dram_pages = detail::parse_int("[geometry] m_D", *v);
    if (const auto* v = get("geometry", "budget"))
        spec.budget = detail::parse_double("[geometry] budget", *v);
    if (const auto* v = get("geometry", "cost_dram"))
        spec.cost_dram = detail::parse_double("[geometry] cost_dram", *v);
    if (const auto* v = get("geometry", "cost_nvm"))
        spec.cost_nvm = detail::parse_double("[geometry] cost_nvm", *v);
    if (const auto* v = get("geometry", "nvm_fraction"))
        spec.nvm_fraction = detail::parse_double("[geometry] nvm_fraction", *v);
    if (const auto* v = get("geometry", "capacities"))
        spec.capacities = detail::parse_list<std::int64_t>("[geometry] capacities", *v, detail::parse_int);

    if (const auto* v = get("timings", "preset")) {
        if (*v != "common")
            throw ConfigError("config: field [timings] preset only knows 'common'");
        spec.timings = DeviceTimings::common();
    }
    if (const auto* v = get("timings", "dram_read"))
        spec.timings.dram_read = detail::parse_double("[timings] dram_read", *v);
    if (const auto* v = get("timings", "dram_write"))
        spec.timings.dram_write = detail::parse_double("[timings] dram_write", *v);
    if (const auto* v = get("timings", "nvm_read"))
        spec.timings.nvm_read = detail::parse_double("[timings] nvm_read", *v);
    if (const auto* v = get("timings", "nvm_write"))
        spec.timings.nvm_write = detail::parse_double("[timings] nvm_write", *v);
    if (const auto* v = get("timings", "storage_read"))
        spec.timings.storage_read = detail::parse_double("[timings] storage_read", *v);

    if (const auto* v = get("run", "mode"))
        spec.mode = run_mode_from(*v);
    if (const auto* v = get("run", "seeds"))
        spec.seeds = detail::parse_list<std::uint64_t>("[run] seeds", *v,
                                                       [](const std::string& f, const std::string& s) {
                                                           auto x = detail::parse_int(f, s);
                                                           if (x < 0)
                                                               throw ConfigError("config: field " + f +
                                                                                 " needs non-negative seeds");
                                                           return static_cast<std::uint64_t>(x);
                                                       });
    if (const auto* v = get("run", "steps"))
        spec.steps = static_cast<std::uint64_t>(detail::parse_int("[run] steps", *v));
    if (const auto* v = get("run", "window"))
        spec.window = static_cast<std::uint64_t>(detail::parse_int("[run] window", *v));
    if (const auto* v = get("run", "burn_in"))
        spec.burn_in = static_cast<std::uint64_t>(detail::parse_int("[run] burn_in", *v));
    if (const auto* v = get("run", "horizon"))
        spec.horizon = static_cast<std::uint64_t>(detail::parse_int("[run] horizon", *v));
    if (const auto* v = get("run", "euler_substeps")) {
        auto s = detail::parse_int("[run] euler_substeps", *v);
        if (s < 1)
            throw ConfigError("config: field [run] euler_substeps must be >= 1");
        spec.euler_substeps = static_cast<unsigned>(s);
    }
    if (const auto* v = get("run", "tol"))
        spec.tol = detail::parse_double("[run] tol", *v);
    if (const auto* v = get("run", "jobs"))
        spec.jobs = static_cast<int>(detail::parse_int("[run] jobs", *v));
    if (const auto* v = get("run", "out"))
        spec.out_dir = *v;

    for (const auto& [name, entries] : raw.sections) {
        if (name != "sweep")
            continue;
        for (const auto& [key, value] : entries) {
            SweepAxis axis;
            axis.parameter = key;
            axis.values = detail::parse_list<double>("[sweep] " + key, value, detail::parse_double);
            spec.axes.push_back(std::move(axis));
        }
    }
    return spec;
}

inline ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Assembly: turn a spec into validated model objects.
// ---------------------------------------------------------------------------

struct Assembled {
    PopularityDist workload;
    Architecture arch;
    CacheGeometry geometry;
    DeviceTimings timings;
};

inline PopularityDist load_workload(const ExperimentSpec& spec) {
    if (!spec.probs_file.empty()) {
        std::ifstream in(spec.probs_file);
        if (!in)
            throw ConfigError("config: cannot open probs_file '" + spec.probs_file + "'");
        std::vector<double> probs;
        double p = 0.0;
        while (in >> p)
            probs.push_back(p);
        return custom_popularity(probs);
    }
    if (spec.pages < 1)
        throw ConfigError("config: field [workload] n must be >= 1");
    return zipf_popularity(spec.pages, spec.gamma);
}

inline Assembled assemble(const ExperimentSpec& spec) {
    PopularityDist workload = load_workload(spec);
    Architecture arch = spec.architecture == "flat" ? Architecture::flat(spec.alpha)
                                                    : Architecture::layered();
    if (spec.nvm_lists < 1 || spec.dram_lists < 1)
        throw ConfigError("config: hybrid experiments need h_N >= 1 and h_D >= 1");

    std::int64_t m_nvm = spec.nvm_pages;
    std::int64_t m_dram = spec.dram_pages;
    if (spec.capacities.empty() && (m_nvm < 0 || m_dram < 0)) {
        if (spec.budget <= 0.0)
            throw ConfigError("config: geometry needs either capacities, (m_N, m_D), or a budget form");
        auto split = allocate_budget(Budget(spec.budget, spec.cost_dram, spec.cost_nvm),
                                     spec.nvm_fraction);
        m_nvm = split.nvm_pages;
        m_dram = split.dram_pages;
    }

    CacheGeometry geometry = spec.capacities.empty()
                                 ? make_geometry(spec.nvm_lists, spec.dram_lists, m_nvm, m_dram)
                                 : CacheGeometry(spec.nvm_lists, spec.dram_lists, spec.capacities);
    if (geometry.total_pages() >= static_cast<std::int64_t>(workload.pages()))
        throw InfeasibleError("config: cache capacity m = " + std::to_string(geometry.total_pages()) +
                              " must stay below the page count n = " + std::to_string(workload.pages()));
    spec.timings.validate();
    return Assembled{std::move(workload), arch, geometry, spec.timings};
}

// ---------------------------------------------------------------------------
// Output helpers.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(std::int64_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write output file '" + path.string() + "'");
    for (const auto& line : lines)
        out << line << '\n';
}

inline std::string join_csv(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            line += ',';
        line += cells[i];
    }
    return line;
}

// Runs fn over [0, count) on up to `jobs` threads; rethrows the first error
// by point order so failures are deterministic.
inline void parallel_for(std::size_t count, int jobs,
                         const std::function<void(std::size_t)>& fn) {
    const int width = std::max(1, jobs);
    if (width == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> threads;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(width), count));
    threads.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Experiment driver.
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // one per sweep point
    std::vector<std::string> outputs;           // paths relative to out_dir
};

namespace detail {

inline std::vector<std::vector<double>> cross_product(const std::vector<SweepAxis>& axes) {
    std::vector<std::vector<double>> points{{}};
    for (const auto& axis : axes) {
        if (axis.values.empty())
            throw ConfigError("sweep: axis " + axis.parameter + " has no values");
        std::vector<std::vector<double>> expanded;
        expanded.reserve(points.size() * axis.values.size());
        for (const auto& base : points)
            for (double v : axis.values) {
                auto next = base;
                next.push_back(v);
                expanded.push_back(std::move(next));
            }
        points = std::move(expanded);
    }
    return points;
}

inline std::string describe_point(const std::vector<SweepAxis>& axes,
                                  const std::vector<double>& values) {
    std::string out;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (a)
            out += ", ";
        out += axes[a].parameter + "=" + fmt(values[a]);
    }
    return out.empty() ? "single point" : out;
}

struct PooledSim {
    std::vector<std::uint64_t> page_nvm, page_dram, page_miss;
    std::vector<double> window_miss;        // averaged over seeds
    std::vector<std::uint64_t> window_start;
    std::vector<std::uint64_t> list_counts; // post burn-in, pooled
    std::uint64_t post_burn_total = 0;
};

inline PooledSim pooled_simulation(const Assembled& model, const ExperimentSpec& spec) {
    if (spec.seeds.empty())
        throw ConfigError("config: stochastic modes need at least one seed");
    const std::size_t n = model.workload.pages();
    const std::uint64_t burn = spec.effective_burn_in();
    if (burn >= spec.steps)
        throw ConfigError("config: burn_in must stay below steps");
    PooledSim pooled;
    pooled.page_nvm.assign(n, 0);
    pooled.page_dram.assign(n, 0);
    pooled.page_miss.assign(n, 0);
    pooled.list_counts.assign(static_cast<std::size_t>(model.geometry.total_lists()) + 1, 0);
    for (std::uint64_t seed : spec.seeds) {
        SimMetrics metrics = run(model.workload, model.arch, model.geometry, spec.steps, seed,
                                 spec.window);
        for (std::size_t k = 0; k < n; ++k) {
            pooled.page_nvm[k] += metrics.page_nvm_hits[k];
            pooled.page_dram[k] += metrics.page_dram_hits[k];
            pooled.page_miss[k] += metrics.page_misses[k];
        }
        if (pooled.window_miss.empty()) {
            pooled.window_miss.assign(metrics.windowed_miss.size(), 0.0);
            pooled.window_start.resize(metrics.windowed_miss.size());
            for (std::size_t w = 0; w < metrics.windowed_miss.size(); ++w)
                pooled.window_start[w] = metrics.windowed_miss[w].first;
        }
        for (std::size_t w = 0; w < metrics.windowed_miss.size(); ++w)
            pooled.window_miss[w] += metrics.windowed_miss[w].second / static_cast<double>(spec.seeds.size());
        for (std::uint64_t t = burn; t < spec.steps; ++t)
            pooled.list_counts[metrics.outcome_list[static_cast<std::size_t>(t)]] += 1;
        pooled.post_burn_total += spec.steps - burn;
    }
    return pooled;
}

inline ContentDistribution pooled_content(const PooledSim& pooled) {
    ContentDistribution content;
    content.hit_prob.assign(pooled.list_counts.size(), 0.0);
    for (std::size_t i = 0; i < pooled.list_counts.size(); ++i)
        content.hit_prob[i] = static_cast<double>(pooled.list_counts[i]) /
                              static_cast<double>(pooled.post_burn_total);
    return content;
}

} // namespace detail

struct ValidationReport {
    double max_page_device_deviation = 0.0;
    double max_list_deviation = 0.0;
    double latency_sim = 0.0;
    double latency_model = 0.0;
    double latency_rel_err = 0.0;
    // pages whose conditional estimate rests on fewer pooled requests than
    // the floor; they are excluded from the per-page maximum
    std::uint64_t pages_below_min_requests = 0;
    ContentDistribution sim_content;
    ContentDistribution model_content;
};

// Simulator vs fixed point on one parameter point: per-list content
// deviation, per-page per-device hit probability deviation, and the relative
// error of the latency model applied to each side's content distribution.
// The per-page maximum only counts pages with at least min_page_requests
// pooled requests; rarer pages give degenerate 0-or-1 estimates.
inline ValidationReport validate_point(const ExperimentSpec& spec,
                                       std::uint64_t min_page_requests = 100) {
    Assembled model = assemble(spec);
    detail::PooledSim pooled = detail::pooled_simulation(model, spec);
    FixedPoint fp = solve_fixed_point(model.arch, model.workload, model.geometry, spec.tol);

    ValidationReport report;
    report.sim_content = detail::pooled_content(pooled);
    report.model_content = content_distribution(fp, model.workload);
    for (std::size_t i = 0; i < report.sim_content.hit_prob.size(); ++i)
        report.max_list_deviation = std::max(report.max_list_deviation,
                                             std::abs(report.sim_content.hit_prob[i] -
                                                      report.model_content.hit_prob[i]));

    const int boundary = model.geometry.nvm_lists();
    const int h = model.geometry.total_lists();
    for (std::size_t k = 0; k < model.workload.pages(); ++k) {
        std::uint64_t requests = pooled.page_nvm[k] + pooled.page_dram[k] + pooled.page_miss[k];
        if (requests < min_page_requests) {
            ++report.pages_below_min_requests;
            continue;
        }
        double sim_nvm = static_cast<double>(pooled.page_nvm[k]) / static_cast<double>(requests);
        double sim_dram = static_cast<double>(pooled.page_dram[k]) / static_cast<double>(requests);
        double fp_nvm = 0.0, fp_dram = 0.0;
        for (int i = 1; i <= h; ++i) {
            double occ = fp.occupancy(k, static_cast<std::size_t>(i));
            (i <= boundary ? fp_nvm : fp_dram) += occ;
        }
        report.max_page_device_deviation =
            std::max({report.max_page_device_deviation, std::abs(sim_nvm - fp_nvm),
                      std::abs(sim_dram - fp_dram)});
    }

    report.latency_sim = average_latency(report.sim_content, model.timings, model.geometry, model.arch);
    report.latency_model =
        average_latency(report.model_content, model.timings, model.geometry, model.arch);
    report.latency_rel_err = std::abs(report.latency_sim - report.latency_model) / report.latency_sim;
    return report;
}

namespace detail {

struct PointOutput {
    std::vector<std::string> row;
    std::vector<std::string> files;
};

inline std::vector<std::string> mode_columns(RunMode mode) {
    std::vector<std::string> cols = {"architecture", "n",   "gamma", "h_N",  "h_D",
                                     "m_N",          "m_D", "alpha", "mode"};
    switch (mode) {
    case RunMode::Simulate:
        cols.insert(cols.end(), {"seeds", "steps", "miss_ratio_sim", "latency_sim_us"});
        break;
    case RunMode::MeanField:
        cols.insert(cols.end(), {"horizon", "miss_ratio_final", "latency_final_us"});
        break;
    case RunMode::Oracle:
        cols.insert(cols.end(), {"states", "miss_ratio_exact", "tv_closed_vs_matrix"});
        break;
    case RunMode::Validate:
        cols.insert(cols.end(), {"max_page_device_dev", "max_list_dev", "latency_rel_err",
                                 "latency_sim_us", "latency_model_us"});
        break;
    default: // FixedPoint, Latency, Sweep
        cols.insert(cols.end(), {"miss_ratio", "latency_us", "residual"});
        break;
    }
    return cols;
}

inline PointOutput run_point(const ExperimentSpec& spec, const std::filesystem::path& dir,
                             bool want_files) {
    Assembled model = assemble(spec);
    PointOutput out;
    auto& row = out.row;
    row.push_back(spec.architecture);
    row.push_back(fmt(static_cast<std::uint64_t>(model.workload.pages())));
    row.push_back(fmt(spec.gamma));
    row.push_back(fmt(model.geometry.nvm_lists()));
    row.push_back(fmt(model.geometry.dram_lists()));
    row.push_back(fmt(model.geometry.nvm_pages()));
    row.push_back(fmt(model.geometry.dram_pages()));
    row.push_back(fmt(spec.alpha));
    row.push_back(run_mode_name(spec.mode));

    auto emit = [&](const std::string& name, const std::vector<std::string>& lines) {
        if (!want_files)
            return;
        std::filesystem::create_directories(dir);
        write_lines(dir / name, lines);
        out.files.push_back(name);
    };
    auto emit_json = [&](const std::string& name, const nlohmann::json& j) {
        if (!want_files)
            return;
        std::filesystem::create_directories(dir);
        std::ofstream f(dir / name, std::ios::binary);
        f << j.dump(2) << '\n';
        out.files.push_back(name);
    };

    switch (spec.mode) {
    case RunMode::Simulate: {
        PooledSim pooled = pooled_simulation(model, spec);
        ContentDistribution content = pooled_content(pooled);
        double lat = average_latency(content, model.timings, model.geometry, model.arch);
        row.push_back(fmt(static_cast<std::uint64_t>(spec.seeds.size())));
        row.push_back(fmt(spec.steps));
        row.push_back(fmt(content.hit_prob[0]));
        row.push_back(fmt(lat));

        std::vector<std::string> per_page = {"page,p_k,hit_nvm,hit_dram,miss"};
        for (std::size_t k = 0; k < model.workload.pages(); ++k)
            per_page.push_back(join_csv({fmt(static_cast<std::uint64_t>(k)),
                                         fmt(model.workload.prob(k)), fmt(pooled.page_nvm[k]),
                                         fmt(pooled.page_dram[k]), fmt(pooled.page_miss[k])}));
        emit("per_page.csv", per_page);

        std::vector<std::string> transient = {"window_start,miss_ratio"};
        for (std::size_t w = 0; w < pooled.window_miss.size(); ++w)
            transient.push_back(join_csv({fmt(pooled.window_start[w]), fmt(pooled.window_miss[w])}));
        emit("transient.csv", transient);

        std::vector<std::string> per_list = {"list,H_i"};
        for (std::size_t i = 0; i < content.hit_prob.size(); ++i)
            per_list.push_back(join_csv({fmt(static_cast<std::uint64_t>(i)), fmt(content.hit_prob[i])}));
        emit("per_list.csv", per_list);
        break;
    }
    case RunMode::MeanField: {
        auto start = MeanFieldState::empty_cache(model.workload.pages(), model.geometry);
        auto traj = integrate_transient(start, model.arch, model.workload, model.geometry,
                                        spec.horizon, spec.euler_substeps);
        const auto& last = traj.per_slot.back();
        double lat = average_latency(last, model.timings, model.geometry, model.arch);
        row.push_back(fmt(spec.horizon));
        row.push_back(fmt(last.hit_prob[0]));
        row.push_back(fmt(lat));

        std::vector<std::string> lines;
        std::string header = "slot";
        for (int i = 0; i <= model.geometry.total_lists(); ++i)
            header += ",H_" + std::to_string(i);
        header += ",latency_us";
        lines.push_back(header);
        for (std::size_t t = 0; t < traj.per_slot.size(); ++t) {
            std::vector<std::string> cells = {fmt(static_cast<std::uint64_t>(t))};
            for (double hp : traj.per_slot[t].hit_prob)
                cells.push_back(fmt(hp));
            cells.push_back(fmt(average_latency(traj.per_slot[t], model.timings, model.geometry,
                                                model.arch)));
            lines.push_back(join_csv(cells));
        }
        emit("trajectory.csv", lines);
        break;
    }
    case RunMode::Oracle: {
        auto states = enumerate_states(model.workload.pages(), model.geometry.capacities());
        auto closed = steady_state_closed_form(model.arch, model.workload, states, model.geometry);
        auto matrix = stationary_via_transition_matrix(model.arch, model.workload, states,
                                                       model.geometry);
        double tv = 0.0;
        for (std::size_t s = 0; s < states.size(); ++s)
            tv += std::abs(closed[s] - matrix[s]);
        tv *= 0.5;
        auto content = content_distribution_exact(closed, model.workload, states, model.geometry);
        row.push_back(fmt(static_cast<std::uint64_t>(states.size())));
        row.push_back(fmt(content.hit_prob[0]));
        row.push_back(fmt(tv));

        nlohmann::json j{{"states", states.size()},
                         {"H", content.hit_prob},
                         {"tv_closed_vs_matrix", tv}};
        if (states.size() <= 100000) {
            j["stationary_closed_form"] = closed;
            j["stationary_transition_matrix"] = matrix;
        }
        emit_json("oracle.json", j);
        break;
    }
    case RunMode::Validate: {
        ValidationReport report = validate_point(spec);
        row.push_back(fmt(report.max_page_device_deviation));
        row.push_back(fmt(report.max_list_deviation));
        row.push_back(fmt(report.latency_rel_err));
        row.push_back(fmt(report.latency_sim));
        row.push_back(fmt(report.latency_model));
        emit_json("validate.json",
                  nlohmann::json{{"max_page_device_deviation", report.max_page_device_deviation},
                                 {"max_list_deviation", report.max_list_deviation},
                                 {"latency_rel_err", report.latency_rel_err},
                                 {"latency_sim_us", report.latency_sim},
                                 {"latency_model_us", report.latency_model},
                                 {"pages_below_min_requests", report.pages_below_min_requests},
                                 {"H_sim", report.sim_content.hit_prob},
                                 {"H_model", report.model_content.hit_prob}});
        break;
    }
    default: { // FixedPoint, Latency, Sweep
        FixedPoint fp = solve_fixed_point(model.arch, model.workload, model.geometry, spec.tol);
        ContentDistribution content = content_distribution(fp, model.workload);
        double lat = average_latency(content, model.timings, model.geometry, model.arch);
        row.push_back(fmt(content.hit_prob[0]));
        row.push_back(fmt(lat));
        row.push_back(fmt(fp.residual));

        if (spec.mode == RunMode::FixedPoint) {
            const int h = model.geometry.total_lists();
            double nvm_pages = 0.0, dram_pages = 0.0, storage_pages = 0.0;
            double nvm_hit = 0.0, dram_hit = 0.0;
            for (std::size_t k = 0; k < fp.occupancy.rows; ++k) {
                storage_pages += fp.occupancy(k, 0);
                for (int i = 1; i <= h; ++i) {
                    double occ = fp.occupancy(k, static_cast<std::size_t>(i));
                    (i <= model.geometry.nvm_lists() ? nvm_pages : dram_pages) += occ;
                }
            }
            for (int i = 1; i <= h; ++i)
                (i <= model.geometry.nvm_lists() ? nvm_hit : dram_hit) +=
                    content.hit_prob[static_cast<std::size_t>(i)];
            emit_json("fixed_point.json",
                      nlohmann::json{{"s", fp.scales},
                                     {"H", content.hit_prob},
                                     {"residual", fp.residual},
                                     {"latency_us", lat},
                                     {"pi_summary",
                                      {{"storage", {{"pages", storage_pages}, {"hit_prob", content.hit_prob[0]}}},
                                       {"nvm", {{"pages", nvm_pages}, {"hit_prob", nvm_hit}}},
                                       {"dram", {{"pages", dram_pages}, {"hit_prob", dram_hit}}}}}});
            if (spec.emit_pi_csv) {
                std::vector<std::string> lines;
                std::string header = "page,p_k";
                for (int i = 0; i <= h; ++i)
                    header += ",pi_" + std::to_string(i);
                lines.push_back(header);
                for (std::size_t k = 0; k < fp.occupancy.rows; ++k) {
                    std::vector<std::string> cells = {fmt(static_cast<std::uint64_t>(k)),
                                                      fmt(model.workload.prob(k))};
                    for (int i = 0; i <= h; ++i)
                        cells.push_back(fmt(fp.occupancy(k, static_cast<std::size_t>(i))));
                    lines.push_back(join_csv(cells));
                }
                emit("pi.csv", lines);
            }
        }
        break;
    }
    }
    return out;
}

} // namespace detail

// Execute the spec's mode for every point of the sweep cross-product, write
// results.csv plus a manifest, and return the rows. Point artifacts land in
// the out dir itself for single-point runs and in point_NNN/ subdirectories
// for sweeps; the row order always follows the cross-product order.
inline RunResult run_experiment(const ExperimentSpec& spec) {
    if ((spec.mode == RunMode::Simulate || spec.mode == RunMode::Validate) && spec.seeds.empty())
        throw ConfigError("config: stochastic modes need at least one seed");
    for (const auto& axis : spec.axes) {
        ExperimentSpec probe = spec;
        apply_parameter(probe, axis.parameter, axis.values.at(0)); // name check
    }
    auto points = detail::cross_product(spec.axes);
    const bool sweeping = !spec.axes.empty();
    const bool per_point_files = spec.mode != RunMode::Sweep && spec.mode != RunMode::Latency;

    std::filesystem::path out_dir(spec.out_dir);
    std::filesystem::create_directories(out_dir);

    RunResult result;
    result.header.push_back("point");
    for (const auto& axis : spec.axes)
        result.header.push_back(axis.parameter);
    auto mode_cols = detail::mode_columns(spec.mode);
    result.header.insert(result.header.end(), mode_cols.begin(), mode_cols.end());
    result.rows.resize(points.size());

    std::vector<std::vector<std::string>> point_files(points.size());
    detail::parallel_for(points.size(), spec.jobs, [&](std::size_t idx) {
        ExperimentSpec point_spec = spec;
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
            apply_parameter(point_spec, spec.axes[a].parameter, points[idx][a]);
        char sub[32];
        std::snprintf(sub, sizeof sub, "point_%04zu", idx);
        std::filesystem::path dir = sweeping ? out_dir / sub : out_dir;
        try {
            auto out = detail::run_point(point_spec, dir, per_point_files);
            std::vector<std::string> row = {detail::fmt(static_cast<std::uint64_t>(idx))};
            for (double v : points[idx])
                row.push_back(detail::fmt(v));
            row.insert(row.end(), out.row.begin(), out.row.end());
            result.rows[idx] = std::move(row);
            for (auto& f : out.files)
                point_files[idx].push_back(sweeping ? std::string(sub) + "/" + f : f);
        } catch (const SolverError& e) {
            throw SolverError("point " + std::to_string(idx) + " (" +
                              detail::describe_point(spec.axes, points[idx]) + "): " + e.what());
        } catch (const InfeasibleError& e) {
            throw InfeasibleError("point " + std::to_string(idx) + " (" +
                                  detail::describe_point(spec.axes, points[idx]) + "): " + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError("point " + std::to_string(idx) + " (" +
                              detail::describe_point(spec.axes, points[idx]) + "): " + e.what());
        }
    });

    std::vector<std::string> csv = {detail::join_csv(result.header)};
    for (const auto& row : result.rows)
        csv.push_back(detail::join_csv(row));
    detail::write_lines(out_dir / "results.csv", csv);
    result.outputs.push_back("results.csv");
    for (auto& files : point_files)
        for (auto& f : files)
            result.outputs.push_back(f);

    if (spec.emit_gnuplot) {
        std::vector<std::string> desc = {"# results.csv columns (1-based, for gnuplot `using`)"};
        for (std::size_t c = 0; c < result.header.size(); ++c)
            desc.push_back(std::to_string(c + 1) + "  " + result.header[c]);
        detail::write_lines(out_dir / "results.columns.txt", desc);
        result.outputs.push_back("results.columns.txt");
    }

    nlohmann::json manifest{{"tool", "hybridcache"},
                            {"version", kToolVersion},
                            {"spec", spec},
                            {"points", points.size()},
                            {"outputs", result.outputs}};
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    if (!mf)
        throw ConfigError("cannot write manifest under '" + spec.out_dir + "'");
    mf << manifest.dump(2) << '\n';
    return result;
}

} // namespace hybridcache
