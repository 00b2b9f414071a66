#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hybridcache/errors.hpp"
#include "hybridcache/rng.hpp"

namespace hybridcache {

// Page-access probability vector under the independent reference model.
// Pages are 0-indexed and sorted by decreasing popularity, so page 0 is the
// hottest. Immutable after construction and safe to share across threads.
class PopularityDist {
public:
    // probs must be positive, finite and sorted non-increasing; they are
    // renormalized to sum exactly to 1.
    static PopularityDist from_sorted(std::vector<double> probs, double skew = -1.0) {
        if (probs.empty())
            throw ConfigError("popularity distribution needs at least one page");
        double sum = 0.0;
        for (double p : probs) {
            if (!std::isfinite(p) || p <= 0.0)
                throw ConfigError("popularity entries must be positive and finite");
            sum += p;
        }
        for (std::size_t k = 1; k < probs.size(); ++k)
            if (probs[k] > probs[k - 1])
                throw ConfigError("popularity entries must be sorted non-increasing");
        for (double& p : probs)
            p /= sum;
        return PopularityDist(std::move(probs), skew);
    }

    std::size_t pages() const { return probs_.size(); }
    double prob(std::size_t page) const { return probs_[page]; }
    const std::vector<double>& probs() const { return probs_; }
    double skew() const { return skew_; }

    // Cumulative sums, cum[k] = sum of probs[0..k]; used by the sampler.
    const std::vector<double>& cumulative() const { return cum_; }

private:
    PopularityDist(std::vector<double> probs, double skew)
        : probs_(std::move(probs)), skew_(skew) {
        cum_.resize(probs_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < probs_.size(); ++k) {
            acc += probs_[k];
            cum_[k] = acc;
        }
        cum_.back() = 1.0;
    }

    std::vector<double> probs_;
    double skew_; // Zipf exponent when constructed by zipf_popularity, else -1
    std::vector<double> cum_;
};

// Zipf-like popularity: prob of page k proportional to (k+1)^-gamma, with the
// normalization constant folded into the entries. gamma = 0 is uniform.
inline PopularityDist zipf_popularity(std::size_t n, double gamma) {
    if (n == 0)
        throw ConfigError("zipf_popularity: page count must be >= 1");
    if (!std::isfinite(gamma) || gamma < 0.0)
        throw ConfigError("zipf_popularity: skew exponent must be finite and >= 0");
    std::vector<double> probs(n);
    for (std::size_t k = 0; k < n; ++k)
        probs[k] = std::pow(static_cast<double>(k + 1), -gamma);
    return PopularityDist::from_sorted(std::move(probs), gamma);
}

// Arbitrary popularity vector, renormalized to sum to 1 on construction.
// Entries are sorted non-increasing (page ids refer to sorted order); if
// sorted_to_original is non-null it receives the permutation mapping each new
// page id to its position in the input.
inline PopularityDist custom_popularity(const std::vector<double>& probs,
                                        std::vector<std::size_t>* sorted_to_original = nullptr) {
    if (probs.empty())
        throw ConfigError("custom_popularity: empty probability vector");
    for (double p : probs)
        if (!std::isfinite(p) || p <= 0.0)
            throw ConfigError("custom_popularity: entries must be positive and finite");
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    std::vector<double> sorted(probs.size());
    for (std::size_t k = 0; k < order.size(); ++k)
        sorted[k] = probs[order[k]];
    if (sorted_to_original)
        *sorted_to_original = order;
    return PopularityDist::from_sorted(std::move(sorted));
}

// One IRM draw: returns page k with probability probs[k]. Consumes exactly
// one rng draw, so the result is fixed by (seed, draw index).
inline std::size_t sample_request(const PopularityDist& dist, Rng& rng) {
    double u = rng.next_unit();
    const auto& cum = dist.cumulative();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end())
        --it;
    return static_cast<std::size_t>(it - cum.begin());
}

} // namespace hybridcache
