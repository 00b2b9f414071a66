#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridcache/content.hpp"
#include "hybridcache/core_model.hpp"
#include "hybridcache/errors.hpp"
#include "hybridcache/workload.hpp"

namespace hybridcache {

// Set-valued Markov state: which pages sit in which list. Slot positions are
// exchangeable under the replacement algorithm, so the quotient chain over
// sets is the right object; the uniform slot choice survives only as 1/m_i
// swap-partner weights in the transitions.
struct ExactState {
    std::vector<std::vector<std::uint32_t>> lists; // lists[i-1], each sorted ascending
};

namespace detail {

inline double log_state_count(std::size_t n, const std::vector<std::int64_t>& capacities) {
    double lg = std::lgamma(static_cast<double>(n) + 1.0);
    std::int64_t cached = 0;
    for (std::int64_t m : capacities) {
        lg -= std::lgamma(static_cast<double>(m) + 1.0);
        cached += m;
    }
    lg -= std::lgamma(static_cast<double>(n) - static_cast<double>(cached) + 1.0);
    return lg;
}

struct StateKeyHash {
    std::size_t operator()(const std::vector<std::uint8_t>& key) const {
        std::size_t h = 1469598103934665603ull;
        for (std::uint8_t b : key) {
            h ^= b;
            h *= 1099511628211ull;
        }
        return h;
    }
};

inline std::vector<std::uint8_t> state_key(const ExactState& state, std::size_t n) {
    // Per-page list assignment, 0 = storage; canonical by construction.
    std::vector<std::uint8_t> key(n, 0);
    for (std::size_t i = 0; i < state.lists.size(); ++i)
        for (std::uint32_t page : state.lists[i])
            key[page] = static_cast<std::uint8_t>(i + 1);
    return key;
}

} // namespace detail

// Complete enumeration of the state space in lexicographic order (list 1's
// set is the outermost combination, then list 2 from the remaining pages,
// and so on). The cap guards against accidentally enumerable-looking inputs.
inline std::vector<ExactState> enumerate_states(std::size_t n,
                                                const std::vector<std::int64_t>& capacities,
                                                double state_cap = 2e6) {
    std::int64_t cached = 0;
    for (std::int64_t m : capacities) {
        if (m < 1)
            throw ConfigError("enumerate_states: every list needs capacity >= 1");
        cached += m;
    }
    if (cached > static_cast<std::int64_t>(n))
        throw InfeasibleError("enumerate_states: cache larger than the page population");
    double log_count = detail::log_state_count(n, capacities);
    if (log_count > std::log(state_cap)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g", std::exp(log_count));
        throw InfeasibleError("enumerate_states: state space has " + std::string(buf) +
                              " states, above the cap of " + std::to_string(static_cast<long long>(state_cap)));
    }

    std::vector<ExactState> states;
    states.reserve(static_cast<std::size_t>(std::exp(log_count) + 1.0));
    ExactState current;
    current.lists.resize(capacities.size());

    std::vector<std::uint32_t> pool(n);
    for (std::size_t k = 0; k < n; ++k)
        pool[k] = static_cast<std::uint32_t>(k);

    // Recursively choose each list's set as a lexicographic combination of
    // the pages still available.
    auto fill_list = [&](auto&& self, std::size_t list_idx, std::vector<std::uint32_t> avail) -> void {
        if (list_idx == capacities.size()) {
            states.push_back(current);
            return;
        }
        const auto m = static_cast<std::size_t>(capacities[list_idx]);
        std::vector<std::size_t> idx(m);
        for (std::size_t j = 0; j < m; ++j)
            idx[j] = j;
        while (true) {
            auto& target = current.lists[list_idx];
            target.clear();
            std::vector<std::uint32_t> rest;
            rest.reserve(avail.size() - m);
            std::size_t take = 0;
            for (std::size_t j = 0; j < avail.size(); ++j) {
                if (take < m && idx[take] == j) {
                    target.push_back(avail[j]);
                    ++take;
                } else {
                    rest.push_back(avail[j]);
                }
            }
            self(self, list_idx + 1, std::move(rest));
            // next combination
            std::size_t j = m;
            while (j > 0 && idx[j - 1] == avail.size() - m + (j - 1))
                --j;
            if (j == 0)
                break;
            ++idx[j - 1];
            for (std::size_t r = j; r < m; ++r)
                idx[r] = idx[r - 1] + 1;
        }
    };
    fill_list(fill_list, 0, std::move(pool));
    return states;
}

// Stationary probabilities from the closed-form product weights: each page
// contributes its popularity raised to the height of its list. Computed in
// log space and normalized over the full state space.
inline std::vector<double> steady_state_closed_form(const Architecture& arch,
                                                    const PopularityDist& workload,
                                                    const std::vector<ExactState>& states,
                                                    const CacheGeometry& geometry) {
    const int h = geometry.total_lists();
    std::vector<double> log_p(workload.pages());
    for (std::size_t k = 0; k < workload.pages(); ++k)
        log_p[k] = std::log(workload.prob(k));
    std::vector<double> heights(static_cast<std::size_t>(h) + 1);
    for (int i = 0; i <= h; ++i)
        heights[static_cast<std::size_t>(i)] = list_height(arch, i, geometry);

    std::vector<double> log_w(states.size());
    double max_log = -1e300;
    for (std::size_t s = 0; s < states.size(); ++s) {
        double lw = 0.0;
        for (std::size_t i = 0; i < states[s].lists.size(); ++i)
            for (std::uint32_t page : states[s].lists[i])
                lw += heights[i + 1] * log_p[page];
        log_w[s] = lw;
        max_log = std::max(max_log, lw);
    }
    double z = 0.0;
    for (double lw : log_w)
        z += std::exp(lw - max_log);
    std::vector<double> pi(states.size());
    for (std::size_t s = 0; s < states.size(); ++s)
        pi[s] = std::exp(log_w[s] - max_log) / z;
    return pi;
}

// Independent oracle: build the one-step transition matrix directly from the
// replacement algorithm and extract the stationary vector by power iteration.
// The iterate is averaged with its one-step image, which leaves the
// stationary vector unchanged and removes any periodicity concern.
inline std::vector<double> stationary_via_transition_matrix(const Architecture& arch,
                                                            const PopularityDist& workload,
                                                            const std::vector<ExactState>& states,
                                                            const CacheGeometry& geometry,
                                                            double residual_tol = 1e-12,
                                                            std::size_t max_iterations = 2000000) {
    const std::size_t n = workload.pages();
    const int h = geometry.total_lists();
    const int boundary = geometry.nvm_lists();
    if (arch.is_flat() && geometry.dram_lists() < 1)
        throw ConfigError("flat architecture needs at least one DRAM list");

    std::unordered_map<std::vector<std::uint8_t>, std::uint32_t, detail::StateKeyHash> index;
    index.reserve(states.size() * 2);
    for (std::size_t s = 0; s < states.size(); ++s)
        index.emplace(detail::state_key(states[s], n), static_cast<std::uint32_t>(s));

    auto lookup = [&](const ExactState& state) {
        auto it = index.find(detail::state_key(state, n));
        if (it == index.end())
            throw SolverError("transition matrix: produced a state outside the enumeration");
        return it->second;
    };

    struct Entry {
        std::uint32_t from;
        std::uint32_t to;
        double prob;
    };
    std::vector<Entry> entries;

    auto replace_in_list = [](ExactState state, std::size_t list_idx, std::uint32_t out,
                              std::uint32_t in) {
        auto& l = state.lists[list_idx];
        l.erase(std::find(l.begin(), l.end(), out));
        l.insert(std::upper_bound(l.begin(), l.end(), in), in);
        return state;
    };

    for (std::size_t s = 0; s < states.size(); ++s) {
        const ExactState& c = states[s];
        std::vector<int> list_of(n, 0);
        for (std::size_t i = 0; i < c.lists.size(); ++i)
            for (std::uint32_t page : c.lists[i])
                list_of[page] = static_cast<int>(i + 1);
        double self_loop = 0.0;
        for (std::uint32_t k = 0; k < n; ++k) {
            const double pk = workload.prob(k);
            const int found = list_of[k];
            if (found == 0) {
                struct Fill {
                    int list;
                    double weight;
                };
                Fill fills[2];
                std::size_t fill_count = 0;
                if (arch.is_flat()) {
                    if (arch.alpha > 0.0)
                        fills[fill_count++] = {boundary + 1, arch.alpha};
                    if (arch.alpha < 1.0)
                        fills[fill_count++] = {1, 1.0 - arch.alpha};
                } else {
                    fills[fill_count++] = {1, 1.0};
                }
                for (std::size_t f = 0; f < fill_count; ++f) {
                    const auto li = static_cast<std::size_t>(fills[f].list - 1);
                    const double w = pk * fills[f].weight / static_cast<double>(c.lists[li].size());
                    for (std::uint32_t victim : c.lists[li])
                        entries.push_back({static_cast<std::uint32_t>(s),
                                           lookup(replace_in_list(c, li, victim, k)), w});
                }
                continue;
            }
            const bool at_top = (found == h) || (arch.is_flat() && found == boundary);
            if (at_top) {
                self_loop += pk;
                continue;
            }
            const auto up = static_cast<std::size_t>(found); // 0-based index of list found+1
            const double w = pk / static_cast<double>(c.lists[up].size());
            for (std::uint32_t partner : c.lists[up]) {
                ExactState next = c;
                auto& lower = next.lists[static_cast<std::size_t>(found - 1)];
                auto& upper = next.lists[up];
                lower.erase(std::find(lower.begin(), lower.end(), k));
                lower.insert(std::upper_bound(lower.begin(), lower.end(), partner), partner);
                upper.erase(std::find(upper.begin(), upper.end(), partner));
                upper.insert(std::upper_bound(upper.begin(), upper.end(), k), k);
                entries.push_back({static_cast<std::uint32_t>(s), lookup(next), w});
            }
        }
        if (self_loop > 0.0)
            entries.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s), self_loop});
    }

    std::vector<double> v(states.size(), 1.0 / static_cast<double>(states.size()));
    std::vector<double> image(states.size());
    double best_residual = 1e300;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::fill(image.begin(), image.end(), 0.0);
        for (const Entry& e : entries)
            image[e.to] += v[e.from] * e.prob;
        double residual = 0.0;
        for (std::size_t s = 0; s < states.size(); ++s)
            residual += std::abs(image[s] - v[s]);
        best_residual = std::min(best_residual, residual);
        if (residual <= residual_tol) {
            double sum = 0.0;
            for (double x : image)
                sum += x;
            for (double& x : image)
                x /= sum;
            return image;
        }
        for (std::size_t s = 0; s < states.size(); ++s)
            v[s] = 0.5 * (v[s] + image[s]);
    }
    throw SolverError("stationary_via_transition_matrix: no convergence after " +
                      std::to_string(max_iterations) + " iterations, best residual " +
                      std::to_string(best_residual));
}

// Exact cache content distribution: H_i aggregates the popularity mass of
// list i over the stationary states, H_0 the mass of everything uncached.
inline ContentDistribution content_distribution_exact(const std::vector<double>& stationary,
                                                      const PopularityDist& workload,
                                                      const std::vector<ExactState>& states,
                                                      const CacheGeometry& geometry) {
    ContentDistribution content;
    content.hit_prob.assign(static_cast<std::size_t>(geometry.total_lists()) + 1, 0.0);
    for (std::size_t s = 0; s < states.size(); ++s) {
        double cached_mass = 0.0;
        for (std::size_t i = 0; i < states[s].lists.size(); ++i) {
            double list_mass = 0.0;
            for (std::uint32_t page : states[s].lists[i])
                list_mass += workload.prob(page);
            content.hit_prob[i + 1] += stationary[s] * list_mass;
            cached_mass += list_mass;
        }
        content.hit_prob[0] += stationary[s] * (1.0 - cached_mass);
    }
    return content;
}

} // namespace hybridcache
