#include "doctest.h"
#include "ipslab/rng.hpp"

#include <set>
#include <vector>

using namespace ipslab;

TEST_CASE("counter stream is reproducible and order independent") {
    CounterStream cs(derive_key(42, rng_domain::generic));
    std::vector<double> forward, backward;
    for (int i = 0; i < 100; ++i) forward.push_back(cs.uniform(static_cast<std::uint64_t>(i)));
    for (int i = 99; i >= 0; --i)
        backward.push_back(cs.uniform(static_cast<std::uint64_t>(i)));
    for (int i = 0; i < 100; ++i) CHECK(forward[static_cast<std::size_t>(i)] ==
                                        backward[static_cast<std::size_t>(99 - i)]);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
    CounterStream cs(derive_key(7, rng_domain::generic));
    for (std::uint64_t n = 0; n < 100000; ++n) {
        double u = cs.uniform(n);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("distinct keys give distinct streams") {
    std::set<std::uint64_t> firsts;
    for (std::uint64_t s = 0; s < 1000; ++s)
        firsts.insert(CounterStream(derive_key(s, rng_domain::generic)).bits(0));
    CHECK(firsts.size() == 1000);
}

TEST_CASE("replica seeds are stable under extension") {
    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 10; ++i) a.push_back(replica_seed(99, i));
    for (std::uint64_t i = 0; i < 20; ++i) b.push_back(replica_seed(99, i));
    for (std::size_t i = 0; i < 10; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("sequential rng choice respects weights roughly") {
    SplitRng rng(derive_key(5, rng_domain::generic));
    double rates[3] = {1.0, 2.0, 1.0};
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < 40000; ++i) counts[rng.next_choice(rates, 3)] += 1;
    CHECK(counts[1] > counts[0]);
    CHECK(counts[1] > counts[2]);
    double frac = counts[1] / 40000.0;
    CHECK(frac > 0.47);
    CHECK(frac < 0.53);
}
