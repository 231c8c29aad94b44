#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vimguard/rng.hpp"

using vimguard::Rng;

TEST_CASE("mt19937_64 stream is pinned for seed 42") {
    // These values are fixed by the C++ standard's mt19937_64 definition; a
    // change here means the generator (and every seeded artifact) changed.
    Rng r(42);
    CHECK(r.next_u64() == 13930160852258120406ull);
    CHECK(r.next_u64() == 11788048577503494824ull);
    CHECK(r.next_u64() == 13874630024467741450ull);
    CHECK(r.next_u64() == 2513787319205155662ull);

    Rng u(42);
    CHECK(u.uniform() == doctest::Approx(0.75515553295453897).epsilon(1e-15));
    CHECK(u.uniform() == doctest::Approx(0.63903139385469743).epsilon(1e-15));

    Rng n(42);
    CHECK(n.normal() == doctest::Approx(-0.48121769980184498).epsilon(1e-12));
    CHECK(n.normal() == doctest::Approx(-0.57453687389830577).epsilon(1e-12));
}

TEST_CASE("identical seeds give identical streams, different seeds differ") {
    Rng a(7), b(7), c(8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t x = a.next_u64(), y = b.next_u64(), z = c.next_u64();
        all_equal = all_equal && (x == y);
        any_diff = any_diff || (x != z);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("uniform_int stays in range and covers it") {
    Rng r(123);
    std::vector<int> seen(10, 0);
    for (int i = 0; i < 1000; ++i) {
        const uint64_t v = r.uniform_int(10);
        REQUIRE(v < 10);
        seen[v] += 1;
    }
    CHECK(*std::min_element(seen.begin(), seen.end()) > 0);
}

TEST_CASE("uniform stays in [0,1)") {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("shuffle is a permutation") {
    Rng r(99);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("truncated_normal respects the clip") {
    Rng r(17);
    for (int i = 0; i < 2000; ++i) CHECK(std::abs(r.truncated_normal(1.0, 2.0)) <= 2.0);
}
