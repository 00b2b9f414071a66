#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hybridcache/content.hpp"
#include "hybridcache/core_model.hpp"
#include "hybridcache/errors.hpp"
#include "hybridcache/rng.hpp"
#include "hybridcache/workload.hpp"

namespace hybridcache {

// Slot-level occupancy of the list-based cache. Lists start all-empty; an
// empty slot acts as a victim that vanishes on a miss fill and as a swap
// partner that moves down one list on a hit promotion.
class CacheState {
public:
    static constexpr std::int64_t kEmpty = -1;

    CacheState(std::size_t pages, const CacheGeometry& geometry)
        : page_list_(pages, 0), page_slot_(pages, 0), time_(0) {
        slots_.resize(static_cast<std::size_t>(geometry.total_lists()));
        for (int i = 1; i <= geometry.total_lists(); ++i)
            slots_[static_cast<std::size_t>(i - 1)]
                .assign(static_cast<std::size_t>(geometry.capacity(i)), kEmpty);
    }

    // 0 means the page is only in storage.
    int list_of(std::size_t page) const { return page_list_[page]; }
    std::size_t slot_of(std::size_t page) const { return page_slot_[page]; }

    std::int64_t slot(int list, std::size_t pos) const {
        return slots_[static_cast<std::size_t>(list - 1)][pos];
    }
    std::size_t list_size(int list) const { return slots_[static_cast<std::size_t>(list - 1)].size(); }
    std::size_t pages() const { return page_list_.size(); }
    std::uint64_t time() const { return time_; }
    void advance_time() { ++time_; }

    void place(std::size_t page, int list, std::size_t pos) {
        auto& slots = slots_.at(static_cast<std::size_t>(list - 1));
        if (pos >= slots.size())
            throw ConfigError("cache state: slot index beyond the list capacity");
        slots[pos] = static_cast<std::int64_t>(page);
        page_list_[page] = list;
        page_slot_[page] = pos;
    }

    void clear_slot(int list, std::size_t pos) {
        slots_[static_cast<std::size_t>(list - 1)][pos] = kEmpty;
    }

    void evict(std::size_t page) { page_list_[page] = 0; }

private:
    std::vector<std::vector<std::int64_t>> slots_; // slots_[i-1] holds list i
    std::vector<int> page_list_;                   // 0 = storage
    std::vector<std::size_t> page_slot_;
    std::uint64_t time_;
};

struct StepEvent {
    enum class Kind { MissFill, HitStay, HitPromote };
    Kind kind = Kind::MissFill;
    int from_list = 0; // list the page was found in (0 on a miss)
    int to_list = 0;   // list the page ends up in
};

// One request against the cache. Draw order is fixed for reproducibility:
// residency check first, then (flat miss only) the alpha coin, then the
// uniform slot draw. Hits that stay consume no draws.
inline StepEvent step(CacheState& state, std::size_t page, const Architecture& arch,
                      const CacheGeometry& geometry, Rng& rng) {
    const int h = geometry.total_lists();
    const int boundary = geometry.nvm_lists();
    const int found = state.list_of(page);

    if (found == 0) {
        int target = 1;
        if (arch.is_flat() && rng.next_unit() < arch.alpha)
            target = boundary + 1;
        std::size_t pos = rng.next_index(state.list_size(target));
        std::int64_t victim = state.slot(target, pos);
        if (victim != CacheState::kEmpty)
            state.evict(static_cast<std::size_t>(victim));
        state.place(page, target, pos);
        return {StepEvent::Kind::MissFill, 0, target};
    }

    const bool at_top = (found == h) || (arch.is_flat() && found == boundary);
    if (at_top)
        return {StepEvent::Kind::HitStay, found, found};

    const int up = found + 1;
    std::size_t pos = rng.next_index(state.list_size(up));
    std::int64_t displaced = state.slot(up, pos);
    std::size_t old_pos = state.slot_of(page);
    state.place(page, up, pos);
    if (displaced != CacheState::kEmpty)
        state.place(static_cast<std::size_t>(displaced), found, old_pos);
    else
        state.clear_slot(found, old_pos);
    return {StepEvent::Kind::HitPromote, found, up};
}

// Everything a run records. outcome_list keeps the per-request hit list
// (0 = miss) so steady-state estimates can be recomputed for any burn-in.
struct SimMetrics {
    std::vector<std::uint64_t> page_nvm_hits;
    std::vector<std::uint64_t> page_dram_hits;
    std::vector<std::uint64_t> page_misses;
    std::vector<std::uint64_t> list_hits; // index 0..h, 0 = miss
    std::vector<std::uint8_t> outcome_list;
    std::vector<std::pair<std::uint64_t, double>> windowed_miss; // (window start, miss ratio)
    std::uint64_t total_requests = 0;
};

// Simulate `steps` IRM requests from the all-empty state. Deterministic for a
// fixed seed. The transient metric is the mean miss indicator over each full
// window of `window` consecutive requests; a partial tail window is dropped.
inline SimMetrics run(const PopularityDist& workload, const Architecture& arch,
                      const CacheGeometry& geometry, std::uint64_t steps, std::uint64_t seed,
                      std::uint64_t window) {
    if (steps < 1)
        throw ConfigError("run: need at least one request");
    if (window < 1 || window > steps)
        throw ConfigError("run: window must be in [1, steps]");
    const std::size_t n = workload.pages();
    const int h = geometry.total_lists();
    if (h > 255)
        throw ConfigError("run: more than 255 lists is not supported");
    if (arch.is_flat() && geometry.dram_lists() < 1)
        throw ConfigError("flat architecture needs at least one DRAM list");

    CacheState state(n, geometry);
    Rng rng(seed);
    SimMetrics metrics;
    metrics.page_nvm_hits.assign(n, 0);
    metrics.page_dram_hits.assign(n, 0);
    metrics.page_misses.assign(n, 0);
    metrics.list_hits.assign(static_cast<std::size_t>(h) + 1, 0);
    metrics.outcome_list.reserve(steps);
    metrics.total_requests = steps;

    std::uint64_t window_misses = 0;
    for (std::uint64_t t = 0; t < steps; ++t) {
        std::size_t page = sample_request(workload, rng);
        int found = state.list_of(page);
        metrics.outcome_list.push_back(static_cast<std::uint8_t>(found));
        metrics.list_hits[static_cast<std::size_t>(found)] += 1;
        if (found == 0) {
            metrics.page_misses[page] += 1;
            ++window_misses;
        } else if (device_of(geometry, found) == Device::Nvm) {
            metrics.page_nvm_hits[page] += 1;
        } else {
            metrics.page_dram_hits[page] += 1;
        }
        step(state, page, arch, geometry, rng);
        state.advance_time();
        if ((t + 1) % window == 0) {
            metrics.windowed_miss.emplace_back(t + 1 - window,
                                               static_cast<double>(window_misses) /
                                                   static_cast<double>(window));
            window_misses = 0;
        }
    }
    return metrics;
}

// Post-burn-in empirical estimate of the cache content distribution.
inline ContentDistribution steady_hit_distribution(const SimMetrics& metrics,
                                                   std::uint64_t burn_in) {
    if (burn_in >= metrics.total_requests)
        throw ConfigError("steady_hit_distribution: burn-in must be below the request count");
    ContentDistribution content;
    content.hit_prob.assign(metrics.list_hits.size(), 0.0);
    for (std::uint64_t t = burn_in; t < metrics.total_requests; ++t)
        content.hit_prob[metrics.outcome_list[static_cast<std::size_t>(t)]] += 1.0;
    double denom = static_cast<double>(metrics.total_requests - burn_in);
    for (double& p : content.hit_prob)
        p /= denom;
    return content;
}

// Structural invariant check used by tests and debug runs: slots and the
// residency index must describe the same bijection, list sizes must be fixed,
// and no page may occupy two slots.
inline void check_consistency(const CacheState& state, const CacheGeometry& geometry) {
    std::vector<int> seen(state.pages(), 0);
    for (int i = 1; i <= geometry.total_lists(); ++i) {
        if (state.list_size(i) != static_cast<std::size_t>(geometry.capacity(i)))
            throw SolverError("cache state: list size drifted from its capacity");
        for (std::size_t pos = 0; pos < state.list_size(i); ++pos) {
            std::int64_t occupant = state.slot(i, pos);
            if (occupant == CacheState::kEmpty)
                continue;
            auto page = static_cast<std::size_t>(occupant);
            if (++seen[page] > 1)
                throw SolverError("cache state: page occupies two slots");
            if (state.list_of(page) != i || state.slot_of(page) != pos)
                throw SolverError("cache state: residency index out of sync");
        }
    }
    for (std::size_t page = 0; page < state.pages(); ++page)
        if (state.list_of(page) != 0 && seen[page] == 0)
            throw SolverError("cache state: residency claims a slot the lists do not have");
}

} // namespace hybridcache
