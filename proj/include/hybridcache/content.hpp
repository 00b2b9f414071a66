#pragma once

#include <cstddef>
#include <vector>

#include "hybridcache/errors.hpp"

namespace hybridcache {

// Per-list hit probabilities H_0..H_h; index 0 is the miss probability.
struct ContentDistribution {
    std::vector<double> hit_prob;

    std::size_t lists() const { return hit_prob.empty() ? 0 : hit_prob.size() - 1; }
    double miss_ratio() const { return hit_prob.empty() ? 1.0 : hit_prob[0]; }

    double sum() const {
        double s = 0.0;
        for (double h : hit_prob)
            s += h;
        return s;
    }
};

} // namespace hybridcache
