#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hybridcache/errors.hpp"

namespace hybridcache {

enum class Device { Storage, Nvm, Dram };

inline const char* device_name(Device d) {
    switch (d) {
    case Device::Storage: return "storage";
    case Device::Nvm: return "nvm";
    default: return "dram";
    }
}

// Flat: NVM and DRAM side by side, misses routed by a coin with bias alpha
// toward DRAM, no migration between devices. Layered: DRAM caches NVM, misses
// fill NVM, hits at the top NVM list migrate into DRAM.
struct Architecture {
    enum class Kind { Flat, Layered };

    Kind kind = Kind::Layered;
    double alpha = 0.0; // DRAM fill probability on a miss; Flat only

    static Architecture flat(double alpha) {
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigError("flat architecture: alpha must be in [0,1]");
        return Architecture{Kind::Flat, alpha};
    }
    static Architecture layered() { return Architecture{Kind::Layered, 0.0}; }

    bool is_flat() const { return kind == Kind::Flat; }
};

// List layout of the hybrid cache. Lists 1..nvm_lists live on NVM, lists
// nvm_lists+1..total_lists on DRAM; index 0 is the storage layer. A zero-list
// DRAM side is allowed so the exact and mean-field math can run single-stack
// instances; hybrid experiments require both devices and enforce that at
// assembly time.
class CacheGeometry {
public:
    CacheGeometry(int nvm_lists, int dram_lists, std::vector<std::int64_t> capacities)
        : nvm_lists_(nvm_lists), dram_lists_(dram_lists), capacities_(std::move(capacities)) {
        if (nvm_lists_ < 1 || dram_lists_ < 0)
            throw ConfigError("geometry: need at least one NVM list and no negative list count");
        if (static_cast<int>(capacities_.size()) != nvm_lists_ + dram_lists_)
            throw ConfigError("geometry: capacity vector length must equal the list count");
        for (std::int64_t m : capacities_)
            if (m < 1)
                throw ConfigError("geometry: every list needs capacity >= 1");
    }

    int nvm_lists() const { return nvm_lists_; }
    int dram_lists() const { return dram_lists_; }
    int total_lists() const { return nvm_lists_ + dram_lists_; }

    // Capacity of list i, i in 1..total_lists().
    std::int64_t capacity(int i) const { return capacities_[static_cast<std::size_t>(i - 1)]; }
    const std::vector<std::int64_t>& capacities() const { return capacities_; }

    std::int64_t nvm_pages() const {
        return std::accumulate(capacities_.begin(), capacities_.begin() + nvm_lists_,
                               std::int64_t{0});
    }
    std::int64_t dram_pages() const {
        return std::accumulate(capacities_.begin() + nvm_lists_, capacities_.end(),
                               std::int64_t{0});
    }
    std::int64_t total_pages() const { return nvm_pages() + dram_pages(); }

private:
    int nvm_lists_;
    int dram_lists_;
    std::vector<std::int64_t> capacities_;
};

// System cost budget: total units and per-page device prices.
struct Budget {
    double total = 0.0;
    double cost_dram = 0.0;
    double cost_nvm = 0.0;

    Budget(double total_, double cost_dram_, double cost_nvm_)
        : total(total_), cost_dram(cost_dram_), cost_nvm(cost_nvm_) {
        if (!(total > 0.0) || !(cost_dram > 0.0) || !(cost_nvm > 0.0))
            throw ConfigError("budget: total and per-page costs must be positive");
    }
};

// Number of promotion steps from storage to list i. This is the exponent of
// the page popularity in the stationary product weights.
// Index 0 (storage) has height 0 under both architectures.
inline int list_height(const Architecture& arch, int i, const CacheGeometry& geometry) {
    if (i < 0 || i > geometry.total_lists())
        throw ConfigError("list_height: list index out of range");
    if (arch.is_flat() && geometry.dram_lists() < 1)
        throw ConfigError("flat architecture needs at least one DRAM list");
    if (i == 0)
        return 0;
    if (arch.is_flat() && i > geometry.nvm_lists())
        return i - geometry.nvm_lists();
    return i;
}

inline Device device_of(const CacheGeometry& geometry, int i) {
    if (i < 0 || i > geometry.total_lists())
        throw ConfigError("device_of: list index out of range");
    if (i == 0)
        return Device::Storage;
    return i <= geometry.nvm_lists() ? Device::Nvm : Device::Dram;
}

struct CapacitySplit {
    std::int64_t dram_pages = 0;
    std::int64_t nvm_pages = 0;
};

// Spend nvm_fraction of the budget on NVM pages and the rest on DRAM pages,
// flooring so the budget is never exceeded. Both devices always carry at
// least one list in this model, so a zero-page side is infeasible.
inline CapacitySplit allocate_budget(const Budget& budget, double nvm_fraction) {
    if (!(nvm_fraction >= 0.0 && nvm_fraction <= 1.0))
        throw ConfigError("allocate_budget: nvm_fraction must be in [0,1]");
    CapacitySplit split;
    split.nvm_pages = static_cast<std::int64_t>(std::floor(nvm_fraction * budget.total / budget.cost_nvm));
    split.dram_pages = static_cast<std::int64_t>(std::floor((1.0 - nvm_fraction) * budget.total / budget.cost_dram));
    if (split.nvm_pages < 1 || split.dram_pages < 1)
        throw InfeasibleError("allocate_budget: allocation leaves a cache device with zero pages");
    return split;
}

// As-even split of a device's pages across its lists; the remainder goes one
// page each to the highest-indexed lists.
inline std::vector<std::int64_t> split_capacity(std::int64_t total_pages, int lists) {
    if (lists < 1)
        throw ConfigError("split_capacity: need at least one list");
    if (total_pages < lists)
        throw InfeasibleError("split_capacity: fewer pages than lists");
    std::vector<std::int64_t> caps(static_cast<std::size_t>(lists), total_pages / lists);
    std::int64_t rem = total_pages % lists;
    for (int i = 0; i < rem; ++i)
        caps[static_cast<std::size_t>(lists - 1 - i)] += 1;
    return caps;
}

// Geometry with each device's pages split as evenly as possible.
inline CacheGeometry make_geometry(int nvm_lists, int dram_lists,
                                   std::int64_t nvm_pages, std::int64_t dram_pages) {
    auto caps = split_capacity(nvm_pages, nvm_lists);
    auto dram = split_capacity(dram_pages, dram_lists);
    caps.insert(caps.end(), dram.begin(), dram.end());
    return CacheGeometry(nvm_lists, dram_lists, std::move(caps));
}

} // namespace hybridcache
