#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridcache/content.hpp"
#include "hybridcache/core_model.hpp"
#include "hybridcache/errors.hpp"
#include "hybridcache/workload.hpp"

namespace hybridcache {

// Dense row-major matrix, rows = pages, cols = lists 0..h.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Deterministic approximation state: occupancy(k, i) is the probability that
// page k sits in list i (column 0 = storage). Rows sum to 1.
struct MeanFieldState {
    Matrix occupancy;
    double time = 0.0;

    static MeanFieldState empty_cache(std::size_t pages, const CacheGeometry& geometry) {
        MeanFieldState state;
        state.occupancy = Matrix(pages, static_cast<std::size_t>(geometry.total_lists()) + 1, 0.0);
        for (std::size_t k = 0; k < pages; ++k)
            state.occupancy(k, 0) = 1.0;
        return state;
    }
};

// Unique fixed point of the occupancy ODEs, in the product form
// pi(k, i) = p_k^ht(i) * s_i / (1 + sum_j p_k^ht(j) * s_j).
struct FixedPoint {
    Matrix occupancy;           // pi, pages x (h+1)
    std::vector<double> scales; // s_1..s_h
    double residual = 0.0;      // max |column sum - capacity| at the returned s
};

namespace detail {

// Per-list flow plan shared by both architectures. Lists fill from pred
// (storage for entry lists), with the flat alpha coin as the entry weight;
// stack tops have no promotion outflow.
struct ListFlow {
    int pred = 0;
    double weight = 1.0;
    bool outflow = true;
};

inline std::vector<ListFlow> list_flows(const Architecture& arch, const CacheGeometry& geometry) {
    const int h = geometry.total_lists();
    const int boundary = geometry.nvm_lists();
    if (arch.is_flat() && geometry.dram_lists() < 1)
        throw ConfigError("flat architecture needs at least one DRAM list");
    std::vector<ListFlow> flows(static_cast<std::size_t>(h));
    for (int i = 1; i <= h; ++i) {
        ListFlow& f = flows[static_cast<std::size_t>(i - 1)];
        if (arch.is_flat()) {
            if (i == 1) {
                f.pred = 0;
                f.weight = 1.0 - arch.alpha;
            } else if (i == boundary + 1) {
                f.pred = 0;
                f.weight = arch.alpha;
            } else {
                f.pred = i - 1;
                f.weight = 1.0;
            }
            f.outflow = (i != h) && (i != boundary);
        } else {
            f.pred = i - 1;
            f.weight = 1.0;
            f.outflow = i != h;
        }
    }
    return flows;
}

// d(k, i) accumulated into `out`; popularity-weighted column masses are
// computed once so the cost is O(pages * lists).
inline void ode_rhs_into(const Architecture& arch, const Matrix& x, const PopularityDist& workload,
                         const CacheGeometry& geometry, Matrix& out) {
    const std::size_t n = workload.pages();
    const int h = geometry.total_lists();
    if (x.rows != n || x.cols != static_cast<std::size_t>(h) + 1)
        throw ConfigError("ode_rhs: state shape does not match workload and geometry");
    out = Matrix(n, static_cast<std::size_t>(h) + 1, 0.0);

    std::vector<double> mass(static_cast<std::size_t>(h) + 1, 0.0); // delta_i
    for (std::size_t k = 0; k < n; ++k) {
        const double pk = workload.prob(k);
        for (int i = 0; i <= h; ++i)
            mass[static_cast<std::size_t>(i)] += pk * x(k, static_cast<std::size_t>(i));
    }
    const auto flows = list_flows(arch, geometry);

    for (std::size_t k = 0; k < n; ++k) {
        const double pk = workload.prob(k);
        double storage = -pk * x(k, 0);
        for (int i = 1; i <= h; ++i) {
            const ListFlow& f = flows[static_cast<std::size_t>(i - 1)];
            const double mi = static_cast<double>(geometry.capacity(i));
            double rhs = f.weight * (pk * x(k, static_cast<std::size_t>(f.pred)) -
                                     mass[static_cast<std::size_t>(f.pred)] *
                                         x(k, static_cast<std::size_t>(i)) / mi);
            if (f.pred == 0)
                storage += f.weight * mass[0] * x(k, static_cast<std::size_t>(i)) / mi;
            if (f.outflow) {
                const double mnext = static_cast<double>(geometry.capacity(i + 1));
                rhs += mass[static_cast<std::size_t>(i)] * x(k, static_cast<std::size_t>(i + 1)) / mnext -
                       pk * x(k, static_cast<std::size_t>(i));
            }
            out(k, static_cast<std::size_t>(i)) = rhs;
        }
        out(k, 0) = storage;
    }
}

} // namespace detail

// Occupancy derivatives under the flat architecture (five-case form: middle
// lists, stack tops, the two entry lists weighted by the alpha coin, and the
// storage layer).
inline Matrix ode_rhs_flat(const MeanFieldState& state, const PopularityDist& workload,
                           const CacheGeometry& geometry, double alpha) {
    Matrix out;
    detail::ode_rhs_into(Architecture::flat(alpha), state.occupancy, workload, geometry, out);
    return out;
}

// Layered architecture derivatives; the device boundary plays no role here,
// only the top list lacks promotion outflow.
inline Matrix ode_rhs_layered(const MeanFieldState& state, const PopularityDist& workload,
                              const CacheGeometry& geometry) {
    Matrix out;
    detail::ode_rhs_into(Architecture::layered(), state.occupancy, workload, geometry, out);
    return out;
}

inline Matrix ode_rhs(const Architecture& arch, const MeanFieldState& state,
                      const PopularityDist& workload, const CacheGeometry& geometry) {
    Matrix out;
    detail::ode_rhs_into(arch, state.occupancy, workload, geometry, out);
    return out;
}

struct Trajectory {
    std::vector<ContentDistribution> per_slot; // per_slot[t] = popularity masses after t slots
    MeanFieldState final_state;
};

// Euler transient across `horizon` request slots. The reference behaviour is
// the unit step x(t+1) = x(t) + xdot(t), matching the discrete time slots of
// the request model; substeps > 1 refines each slot into substeps Euler
// updates of size 1/substeps. Tiny negative round-off (>= -1e-12) is clamped
// and the row renormalized; anything worse aborts, signalling an invalid
// configuration rather than silently repairing it.
inline Trajectory integrate_transient(const MeanFieldState& x0, const Architecture& arch,
                                      const PopularityDist& workload, const CacheGeometry& geometry,
                                      std::size_t horizon, unsigned substeps = 1) {
    if (substeps < 1)
        throw ConfigError("integrate_transient: substeps must be >= 1");
    const double dt = 1.0 / static_cast<double>(substeps);
    const std::size_t n = workload.pages();
    const int h = geometry.total_lists();
    Trajectory traj;
    traj.final_state = x0;
    Matrix& x = traj.final_state.occupancy;
    if (x.rows != n || x.cols != static_cast<std::size_t>(h) + 1)
        throw ConfigError("integrate_transient: state shape mismatch");
    traj.per_slot.reserve(horizon + 1);

    auto record = [&]() {
        ContentDistribution content;
        content.hit_prob.assign(static_cast<std::size_t>(h) + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double pk = workload.prob(k);
            for (int i = 0; i <= h; ++i)
                content.hit_prob[static_cast<std::size_t>(i)] += pk * x(k, static_cast<std::size_t>(i));
        }
        traj.per_slot.push_back(std::move(content));
    };

    record();
    Matrix rhs;
    for (std::size_t t = 0; t < horizon; ++t) {
        for (unsigned sub = 0; sub < substeps; ++sub) {
            detail::ode_rhs_into(arch, x, workload, geometry, rhs);
            for (std::size_t k = 0; k < n; ++k) {
                bool clamped = false;
                for (int i = 0; i <= h; ++i) {
                    double& v = x(k, static_cast<std::size_t>(i));
                    v += dt * rhs(k, static_cast<std::size_t>(i));
                    if (v < 0.0 || v > 1.0) {
                        if (v < -1e-6 || v > 1.0 + 1e-6)
                            throw SolverError("integrate_transient: occupancy left [0,1] at slot " +
                                              std::to_string(t + 1));
                        if (v < 0.0 && v >= -1e-12) {
                            v = 0.0;
                            clamped = true;
                        }
                    }
                }
                if (clamped) {
                    double sum = 0.0;
                    for (int i = 0; i <= h; ++i)
                        sum += x(k, static_cast<std::size_t>(i));
                    for (int i = 0; i <= h; ++i)
                        x(k, static_cast<std::size_t>(i)) /= sum;
                }
            }
        }
        traj.final_state.time += 1.0;
        record();
    }
    return traj;
}

struct SolveOptions {
    std::size_t max_sweeps = 100000;
    // Quadratic finish once the monotone sweeps are close; the sweep/bisection
    // scheme remains the reference behaviour and the fallback.
    bool newton_polish = true;
};

namespace detail {

inline void gaussian_solve(std::vector<double>& a, std::vector<double>& b, std::size_t m) {
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[pivot * m + col]))
                pivot = r;
        if (std::abs(a[pivot * m + col]) < 1e-300)
            throw SolverError("fixed point: singular Jacobian in Newton polish");
        if (pivot != col) {
            for (std::size_t c = 0; c < m; ++c)
                std::swap(a[pivot * m + c], a[col * m + c]);
            std::swap(b[pivot], b[col]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            double f = a[r * m + col] / a[col * m + col];
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < m; ++c)
                a[r * m + c] -= f * a[col * m + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = m; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < m; ++c)
            acc -= a[r * m + c] * b[c];
        b[r] = acc / a[r * m + r];
    }
}

// Fixed-point capacity solver on plain doubles. Requires that no popularity
// power underflows; the caller falls back to the log-space variant otherwise.
class CapacitySolver {
public:
    CapacitySolver(const PopularityDist& workload, const std::vector<int>& heights,
                   const std::vector<double>& targets)
        : n_(workload.pages()), h_(targets.size()), targets_(targets) {
        powers_.resize(n_ * h_);
        for (std::size_t k = 0; k < n_; ++k) {
            const double p = workload.prob(k);
            for (std::size_t j = 0; j < h_; ++j)
                powers_[k * h_ + j] = std::pow(p, heights[j + 1]);
        }
        scales_.assign(h_, 0.0);
        denom_.assign(n_, 1.0);
        scratch_.assign(n_, 0.0);
    }

    bool underflow_risk() const {
        for (double a : powers_)
            if (a < 1e-290)
                return true;
        return false;
    }

    double column_sum(std::size_t j, double y) const {
        double total = 0.0;
        for (std::size_t k = 0; k < n_; ++k) {
            const double a = powers_[k * h_ + j];
            total += a * y / (scratch_[k] + a * y);
        }
        return total;
    }

    // One Gauss-Seidel sweep of the monotone iteration: each list's scale is
    // replaced by the unique value meeting its capacity, holding the others.
    void sweep(double inner_tol) {
        for (std::size_t j = 0; j < h_; ++j) {
            for (std::size_t k = 0; k < n_; ++k)
                scratch_[k] = denom_[k] - powers_[k * h_ + j] * scales_[j];
            const double target = targets_[j];
            double lo = 0.0;
            double hi = std::max(1.0, 2.0 * scales_[j]);
            if (scales_[j] > 0.0 && column_sum(j, scales_[j]) <= target)
                lo = scales_[j];
            int expansions = 0;
            while (column_sum(j, hi) < target) {
                hi *= 2.0;
                if (++expansions > 4000)
                    throw SolverError("fixed point: bisection bracket failed to expand");
            }
            double mid = hi;
            for (int it = 0; it < 300; ++it) {
                mid = 0.5 * (lo + hi);
                const double d = column_sum(j, mid);
                if (std::abs(d - target) <= inner_tol)
                    break;
                (d < target ? lo : hi) = mid;
                if (hi - lo <= 1e-15 * hi)
                    break;
            }
            scales_[j] = mid;
            for (std::size_t k = 0; k < n_; ++k)
                denom_[k] = scratch_[k] + powers_[k * h_ + j] * mid;
        }
        rebuild_denominators();
    }

    double residual() const {
        double worst = 0.0;
        for (std::size_t j = 0; j < h_; ++j) {
            double total = 0.0;
            for (std::size_t k = 0; k < n_; ++k) {
                const double a = powers_[k * h_ + j];
                total += a * scales_[j] / denom_[k];
            }
            worst = std::max(worst, std::abs(total - targets_[j]));
        }
        return worst;
    }

    // Newton on the full capacity system; returns false if the step cannot
    // make progress (caller resumes sweeping).
    bool newton_step() {
        std::vector<double> jac(h_ * h_, 0.0);
        std::vector<double> f(h_, 0.0);
        for (std::size_t k = 0; k < n_; ++k) {
            const double inv = 1.0 / denom_[k];
            for (std::size_t i = 0; i < h_; ++i) {
                const double term = powers_[k * h_ + i] * scales_[i] * inv;
                f[i] += term;
                for (std::size_t j = 0; j < h_; ++j)
                    jac[i * h_ + j] -= term * powers_[k * h_ + j] * inv;
                jac[i * h_ + i] += powers_[k * h_ + i] * inv;
            }
        }
        for (std::size_t i = 0; i < h_; ++i)
            f[i] = targets_[i] - f[i];
        gaussian_solve(jac, f, h_);
        double damp = 1.0;
        for (std::size_t i = 0; i < h_; ++i)
            while (scales_[i] + damp * f[i] <= 0.0)
                damp *= 0.5;
        if (damp < 1e-8)
            return false;
        const double before = residual();
        std::vector<double> saved = scales_;
        for (std::size_t i = 0; i < h_; ++i)
            scales_[i] += damp * f[i];
        rebuild_denominators();
        if (residual() > before) {
            scales_ = saved;
            rebuild_denominators();
            return false;
        }
        return true;
    }

    const std::vector<double>& scales() const { return scales_; }
    double denominator(std::size_t k) const { return denom_[k]; }
    double power(std::size_t k, std::size_t j) const { return powers_[k * h_ + j]; }

private:
    void rebuild_denominators() {
        for (std::size_t k = 0; k < n_; ++k) {
            double t = 1.0;
            for (std::size_t j = 0; j < h_; ++j)
                t += powers_[k * h_ + j] * scales_[j];
            denom_[k] = t;
        }
    }

    std::size_t n_;
    std::size_t h_;
    std::vector<double> targets_;
    std::vector<double> powers_;
    std::vector<double> scales_; // s_j
    std::vector<double> denom_;  // 1 + sum_j a_kj s_j
    std::vector<double> scratch_;
};

// Log-space fallback for workloads so skewed that p_k^ht underflows. Scales
// are carried as logarithms and each capacity sum is evaluated with a
// shifted exponential so no intermediate leaves the double range.
class LogCapacitySolver {
public:
    LogCapacitySolver(const PopularityDist& workload, const std::vector<int>& heights,
                      const std::vector<double>& targets)
        : n_(workload.pages()), h_(targets.size()), targets_(targets) {
        log_powers_.resize(n_ * h_);
        for (std::size_t k = 0; k < n_; ++k) {
            const double lp = std::log(workload.prob(k));
            for (std::size_t j = 0; j < h_; ++j)
                log_powers_[k * h_ + j] = static_cast<double>(heights[j + 1]) * lp;
        }
        log_scales_.assign(h_, -745.0); // effectively zero
    }

    double column_sum(std::size_t j, double log_y) const {
        double total = 0.0;
        std::vector<double> terms(h_);
        for (std::size_t k = 0; k < n_; ++k) {
            double top = 0.0; // exponent of the implicit "+1"
            for (std::size_t l = 0; l < h_; ++l) {
                terms[l] = log_powers_[k * h_ + l] + (l == j ? log_y : log_scales_[l]);
                top = std::max(top, terms[l]);
            }
            double denom = std::exp(-top);
            for (std::size_t l = 0; l < h_; ++l)
                denom += std::exp(terms[l] - top);
            total += std::exp(terms[j] - top) / denom;
        }
        return total;
    }

    void sweep(double inner_tol) {
        for (std::size_t j = 0; j < h_; ++j) {
            const double target = targets_[j];
            double lo = log_scales_[j];
            double hi = std::max(0.0, log_scales_[j] + 1.0);
            if (column_sum(j, lo) > target)
                lo = -745.0;
            int expansions = 0;
            while (column_sum(j, hi) < target) {
                hi += std::log(2.0) * 8.0;
                if (++expansions > 4000)
                    throw SolverError("fixed point: log-space bracket failed to expand");
            }
            double mid = hi;
            for (int it = 0; it < 500; ++it) {
                mid = 0.5 * (lo + hi);
                const double d = column_sum(j, mid);
                if (std::abs(d - target) <= inner_tol)
                    break;
                (d < target ? lo : hi) = mid;
                if (hi - lo <= 1e-14)
                    break;
            }
            log_scales_[j] = mid;
        }
    }

    double residual() const {
        double worst = 0.0;
        for (std::size_t j = 0; j < h_; ++j)
            worst = std::max(worst, std::abs(column_sum(j, log_scales_[j]) - targets_[j]));
        return worst;
    }

    const std::vector<double>& log_scales() const { return log_scales_; }
    double log_power(std::size_t k, std::size_t j) const { return log_powers_[k * h_ + j]; }

private:
    std::size_t n_;
    std::size_t h_;
    std::vector<double> targets_;
    std::vector<double> log_powers_;
    std::vector<double> log_scales_;
};

} // namespace detail

// Solve the per-list capacity constraints pinning the fixed point's scale
// vector by the monotone per-list iteration (each sweep replaces s_i with the
// unique value meeting list i's capacity), starting from the zero vector. A damped Newton
// polish accelerates the tail once the sweeps are close; both phases target
// max_i |column_sum_i - m_i| <= tol.
inline FixedPoint solve_fixed_point(const Architecture& arch, const PopularityDist& workload,
                                    const CacheGeometry& geometry, double tol = 1e-10,
                                    const SolveOptions& options = {}) {
    const std::size_t n = workload.pages();
    const int h = geometry.total_lists();
    if (geometry.total_pages() >= static_cast<std::int64_t>(n))
        throw InfeasibleError("solve_fixed_point: requires cache smaller than the page population");
    if (!(tol > 0.0))
        throw ConfigError("solve_fixed_point: tolerance must be positive");

    std::vector<int> heights(static_cast<std::size_t>(h) + 1);
    for (int i = 0; i <= h; ++i)
        heights[static_cast<std::size_t>(i)] = list_height(arch, i, geometry);
    std::vector<double> targets(static_cast<std::size_t>(h));
    for (int i = 1; i <= h; ++i)
        targets[static_cast<std::size_t>(i - 1)] = static_cast<double>(geometry.capacity(i));

    FixedPoint fp;
    fp.occupancy = Matrix(n, static_cast<std::size_t>(h) + 1, 0.0);

    detail::CapacitySolver solver(workload, heights, targets);
    if (solver.underflow_risk()) {
        detail::LogCapacitySolver log_solver(workload, heights, targets);
        double residual = 1e300;
        for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
            log_solver.sweep(tol / 10.0);
            residual = log_solver.residual();
            if (residual <= tol)
                break;
        }
        if (residual > tol)
            throw SolverError("solve_fixed_point: log-space iteration stalled at residual " +
                              std::to_string(residual));
        fp.residual = residual;
        fp.scales.resize(static_cast<std::size_t>(h));
        for (int j = 0; j < h; ++j)
            fp.scales[static_cast<std::size_t>(j)] = std::exp(log_solver.log_scales()[static_cast<std::size_t>(j)]);
        for (std::size_t k = 0; k < n; ++k) {
            double top = 0.0;
            std::vector<double> terms(static_cast<std::size_t>(h));
            for (int j = 0; j < h; ++j) {
                terms[static_cast<std::size_t>(j)] = log_solver.log_power(k, static_cast<std::size_t>(j)) +
                                                     log_solver.log_scales()[static_cast<std::size_t>(j)];
                top = std::max(top, terms[static_cast<std::size_t>(j)]);
            }
            double denom = std::exp(-top);
            for (int j = 0; j < h; ++j)
                denom += std::exp(terms[static_cast<std::size_t>(j)] - top);
            fp.occupancy(k, 0) = std::exp(-top) / denom;
            for (int j = 0; j < h; ++j)
                fp.occupancy(k, static_cast<std::size_t>(j + 1)) =
                    std::exp(terms[static_cast<std::size_t>(j)] - top) / denom;
        }
        return fp;
    }

    double residual = 1e300;
    std::size_t sweep = 0;
    for (; sweep < options.max_sweeps; ++sweep) {
        solver.sweep(tol / 10.0);
        residual = solver.residual();
        if (residual <= tol)
            break;
        // Newton takes over once the monotone iteration is in the basin.
        if (options.newton_polish && sweep >= 3 && residual < 0.05 * geometry.total_pages()) {
            bool progressed = true;
            for (int steps = 0; steps < 60 && progressed && residual > tol; ++steps) {
                progressed = solver.newton_step();
                residual = solver.residual();
            }
            if (residual <= tol)
                break;
        }
    }
    if (residual > tol)
        throw SolverError("solve_fixed_point: iteration cap reached, best residual " +
                          std::to_string(residual));

    fp.residual = residual;
    fp.scales = solver.scales();
    for (std::size_t k = 0; k < n; ++k) {
        const double inv = 1.0 / solver.denominator(k);
        fp.occupancy(k, 0) = inv;
        for (int j = 0; j < h; ++j)
            fp.occupancy(k, static_cast<std::size_t>(j + 1)) =
                solver.power(k, static_cast<std::size_t>(j)) * fp.scales[static_cast<std::size_t>(j)] * inv;
    }
    return fp;
}

// Cache content distribution implied by a fixed point: H_i is the popularity
// mass resident in list i, and H_0 the miss probability.
inline ContentDistribution content_distribution(const FixedPoint& fp, const PopularityDist& workload) {
    ContentDistribution content;
    content.hit_prob.assign(fp.occupancy.cols, 0.0);
    for (std::size_t k = 0; k < fp.occupancy.rows; ++k) {
        const double pk = workload.prob(k);
        for (std::size_t i = 0; i < fp.occupancy.cols; ++i)
            content.hit_prob[i] += pk * fp.occupancy(k, i);
    }
    return content;
}

} // namespace hybridcache
