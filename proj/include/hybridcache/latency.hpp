#pragma once

#include <cmath>

#include "hybridcache/content.hpp"
#include "hybridcache/core_model.hpp"

namespace hybridcache {

// Per-device 4KB access times in microseconds. The common preset is the
// measured file-system-level DRAM latency, published PCM figures, and a
// networked all-flash storage read.
struct DeviceTimings {
    double dram_read = 0.0;
    double dram_write = 0.0;
    double nvm_read = 0.0;
    double nvm_write = 0.0;
    double storage_read = 0.0;

    static DeviceTimings common() { return {0.2, 0.2, 6.7, 128.3, 151.0}; }

    void validate() const {
        for (double t : {dram_read, dram_write, nvm_read, nvm_write, storage_read})
            if (!std::isfinite(t) || t <= 0.0)
                throw ConfigError("device timings must be positive and finite");
    }

    double read_time(Device d) const {
        switch (d) {
        case Device::Dram: return dram_read;
        case Device::Nvm: return nvm_read;
        default: return storage_read;
        }
    }
};

// Average request latency under the flat architecture: a miss pays the
// storage read plus the fill write and first read of whichever device the
// alpha coin picked; a hit pays one read from its device.
inline double latency_flat(const ContentDistribution& content, const DeviceTimings& timings,
                           const CacheGeometry& geometry, double alpha) {
    const int h = geometry.total_lists();
    if (static_cast<int>(content.hit_prob.size()) != h + 1)
        throw ConfigError("latency_flat: content distribution does not match the geometry");
    double miss_cost = timings.storage_read + alpha * (timings.dram_write + timings.dram_read) +
                       (1.0 - alpha) * (timings.nvm_write + timings.nvm_read);
    double latency = content.hit_prob[0] * miss_cost;
    for (int i = 1; i <= h; ++i)
        latency += content.hit_prob[static_cast<std::size_t>(i)] * timings.read_time(device_of(geometry, i));
    return latency;
}

// Average request latency under the layered architecture. A miss fills NVM
// only; a hit at the top NVM list additionally pays the NVM/DRAM page
// exchange (one read and one write on each device).
inline double latency_layered(const ContentDistribution& content, const DeviceTimings& timings,
                              const CacheGeometry& geometry) {
    const int h = geometry.total_lists();
    if (static_cast<int>(content.hit_prob.size()) != h + 1)
        throw ConfigError("latency_layered: content distribution does not match the geometry");
    const int boundary = geometry.nvm_lists();
    double latency = content.hit_prob[0] * (timings.storage_read + timings.nvm_write + timings.nvm_read);
    latency += content.hit_prob[static_cast<std::size_t>(boundary)] *
               (timings.nvm_read + timings.nvm_write + timings.dram_read + timings.dram_write);
    for (int i = 1; i <= h; ++i) {
        if (i == boundary)
            continue;
        latency += content.hit_prob[static_cast<std::size_t>(i)] * timings.read_time(device_of(geometry, i));
    }
    return latency;
}

inline double average_latency(const ContentDistribution& content, const DeviceTimings& timings,
                              const CacheGeometry& geometry, const Architecture& arch) {
    return arch.is_flat() ? latency_flat(content, timings, geometry, arch.alpha)
                          : latency_layered(content, timings, geometry);
}

} // namespace hybridcache
