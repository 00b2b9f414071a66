#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "hybridcache/simulator.hpp"

using namespace hybridcache;

TEST_CASE("layered hit at the NVM top list migrates into DRAM") {
    auto geom = make_geometry(2, 2, 4, 4); // lists 1..4, boundary after list 2
    auto arch = Architecture::layered();
    auto wl = zipf_popularity(16, 0.8);
    CacheState state(16, geom);
    state.place(7, 2, 1); // page 7 sits at the top NVM list
    Rng rng(1);

    auto event = step(state, 7, arch, geom, rng);
    CHECK(event.kind == StepEvent::Kind::HitPromote);
    CHECK(event.from_list == 2);
    CHECK(event.to_list == 3);
    CHECK(state.list_of(7) == 3);
    check_consistency(state, geom);
}

TEST_CASE("flat hit at either stack top leaves the state unchanged") {
    auto geom = make_geometry(2, 2, 4, 4);
    auto arch = Architecture::flat(0.5);
    CacheState state(16, geom);
    state.place(3, 2, 0); // top of the NVM stack
    state.place(5, 4, 1); // top of the DRAM stack
    Rng rng(9);

    auto nvm_top = step(state, 3, arch, geom, rng);
    CHECK(nvm_top.kind == StepEvent::Kind::HitStay);
    CHECK(state.list_of(3) == 2);
    CHECK(state.slot_of(3) == 0);

    auto dram_top = step(state, 5, arch, geom, rng);
    CHECK(dram_top.kind == StepEvent::Kind::HitStay);
    CHECK(state.list_of(5) == 4);
    CHECK(state.slot_of(5) == 1);
    check_consistency(state, geom);
}

TEST_CASE("cold start miss lands in list 1 without evicting anyone") {
    auto geom = make_geometry(1, 1, 3, 3);
    auto arch = Architecture::layered();
    CacheState state(8, geom);
    Rng rng(4);
    auto event = step(state, 6, arch, geom, rng);
    CHECK(event.kind == StepEvent::Kind::MissFill);
    CHECK(event.to_list == 1);
    CHECK(state.list_of(6) == 1);
    int cached = 0;
    for (std::size_t page = 0; page < 8; ++page)
        cached += state.list_of(page) != 0 ? 1 : 0;
    CHECK(cached == 1);
    check_consistency(state, geom);
}

TEST_CASE("single page, single slot: one miss then hits") {
    auto wl = custom_popularity({1.0});
    auto geom = CacheGeometry(1, 0, {1});
    auto metrics = run(wl, Architecture::layered(), geom, 10, 42, 10);
    CHECK(metrics.list_hits[0] == 1);
    CHECK(metrics.list_hits[1] == 9);
    CHECK(metrics.windowed_miss.size() == 1);
    CHECK(metrics.windowed_miss[0].second == doctest::Approx(0.1));
    // after any burn-in >= 1 the page rests at its final list
    auto content = steady_hit_distribution(metrics, 2);
    CHECK(content.hit_prob[0] == 0.0);
    CHECK(content.hit_prob[1] == doctest::Approx(1.0));
    CHECK(content.sum() == doctest::Approx(1.0));
}

TEST_CASE("runs are deterministic per seed") {
    auto wl = zipf_popularity(50, 0.8);
    auto geom = make_geometry(2, 2, 10, 6);
    auto arch = Architecture::flat(0.3);
    auto a = run(wl, arch, geom, 20000, 77, 500);
    auto b = run(wl, arch, geom, 20000, 77, 500);
    CHECK(a.outcome_list == b.outcome_list);
    CHECK(a.page_nvm_hits == b.page_nvm_hits);
    CHECK(a.page_dram_hits == b.page_dram_hits);
    CHECK(a.page_misses == b.page_misses);
    CHECK(a.windowed_miss == b.windowed_miss);

    auto c = run(wl, arch, geom, 20000, 78, 500);
    CHECK(a.outcome_list != c.outcome_list);
}

TEST_CASE("per-page counts account for every request") {
    auto wl = zipf_popularity(64, 0.8);
    auto geom = make_geometry(2, 1, 9, 5);
    auto metrics = run(wl, Architecture::layered(), geom, 50000, 3, 1000);
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < 64; ++k)
        total += metrics.page_nvm_hits[k] + metrics.page_dram_hits[k] + metrics.page_misses[k];
    CHECK(total == metrics.total_requests);
    for (auto& [start, ratio] : metrics.windowed_miss) {
        CHECK(ratio >= 0.0);
        CHECK(ratio <= 1.0);
    }
}

TEST_CASE("run argument validation") {
    auto wl = zipf_popularity(8, 0.0);
    auto geom = make_geometry(1, 1, 2, 2);
    CHECK_THROWS_AS(run(wl, Architecture::layered(), geom, 0, 1, 1), ConfigError);
    CHECK_THROWS_AS(run(wl, Architecture::layered(), geom, 10, 1, 11), ConfigError);
    auto metrics = run(wl, Architecture::layered(), geom, 10, 1, 10);
    CHECK_THROWS_AS(steady_hit_distribution(metrics, 10), ConfigError);
}

TEST_CASE("all-miss metrics give H_0 = 1") {
    auto wl = zipf_popularity(40, 0.8);
    auto geom = make_geometry(1, 1, 2, 2);
    SimMetrics metrics;
    metrics.total_requests = 100;
    metrics.list_hits.assign(3, 0);
    metrics.outcome_list.assign(100, 0);
    auto content = steady_hit_distribution(metrics, 10);
    CHECK(content.hit_prob[0] == doctest::Approx(1.0));
    CHECK(content.hit_prob[1] == 0.0);
    CHECK(content.hit_prob[2] == 0.0);
}

TEST_CASE("structural invariants hold across long random runs") {
    auto wl = zipf_popularity(60, 0.8);
    struct Setup {
        Architecture arch;
        CacheGeometry geom;
    };
    std::vector<Setup> setups = {
        {Architecture::flat(0.35), make_geometry(2, 3, 11, 12)},
        {Architecture::layered(), make_geometry(3, 2, 12, 7)},
    };
    for (auto& setup : setups) {
        const int h = setup.geom.total_lists();
        const int boundary = setup.geom.nvm_lists();
        CacheState state(60, setup.geom);
        Rng rng(1234);
        std::vector<int> before_lists(60, 0);
        int violations = 0;
        for (int t = 0; t < 100000; ++t) {
            std::size_t page = sample_request(wl, rng);
            for (std::size_t k = 0; k < 60; ++k)
                before_lists[k] = state.list_of(k);
            auto event = step(state, page, setup.arch, setup.geom, rng);
            int before = before_lists[page];
            int after = state.list_of(page);

            // hits move the page up at most one level; misses enter through
            // an entry list of their device
            if (before != 0)
                CHECK(after - before <= 1);
            if (event.kind == StepEvent::Kind::HitPromote) {
                CHECK(after == before + 1);
                if (!setup.arch.is_flat() && before == boundary)
                    CHECK(after == boundary + 1);
            }
            if (event.kind == StepEvent::Kind::MissFill)
                CHECK((event.to_list == 1 ||
                       (setup.arch.is_flat() && event.to_list == boundary + 1)));
            CHECK(after <= h);

            // every page (including swap victims and evictees) moves by at
            // most one level or drops to storage, and crosses the device
            // boundary only where the architecture allows it
            for (std::size_t k = 0; k < 60; ++k) {
                int b = before_lists[k];
                int a = state.list_of(k);
                if (a == b)
                    continue;
                if (!((a - b <= 1 && a - b >= -1 && b != 0 && a != 0) ||
                      (b == 0 && (a == 1 || (setup.arch.is_flat() && a == boundary + 1))) ||
                      (a == 0 && (b == 1 || (setup.arch.is_flat() && b == boundary + 1)))))
                    ++violations;
                bool crossed = b >= 1 && a >= 1 && (b <= boundary) != (a <= boundary);
                if (crossed) {
                    if (setup.arch.is_flat())
                        ++violations; // flat never migrates between devices
                    else if (!((b == boundary && a == boundary + 1) ||
                               (b == boundary + 1 && a == boundary)))
                        ++violations; // layered crosses only at the boundary swap
                }
            }
            if (t % 5000 == 0)
                check_consistency(state, setup.geom);
        }
        CHECK(violations == 0);
        check_consistency(state, setup.geom);
    }
}

TEST_CASE("cumulative miss ratio trends downward from the empty state") {
    auto wl = zipf_popularity(200, 0.8);
    auto geom = make_geometry(1, 1, 20, 10);
    const std::uint64_t steps = 20000, window = 500;
    std::vector<double> avg(steps / window, 0.0);
    const int seeds = 50;
    for (int s = 1; s <= seeds; ++s) {
        auto metrics = run(wl, Architecture::layered(), geom, steps, static_cast<std::uint64_t>(s), window);
        for (std::size_t w = 0; w < avg.size(); ++w)
            avg[w] += metrics.windowed_miss[w].second / seeds;
    }
    // cumulative means over the seed-averaged windows should not increase
    // beyond noise
    double cum = 0.0;
    double prev = 1.0;
    for (std::size_t w = 0; w < avg.size(); ++w) {
        cum += avg[w];
        double mean = cum / static_cast<double>(w + 1);
        CHECK(mean <= prev + 0.005);
        prev = mean;
    }
}
