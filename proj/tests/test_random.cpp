#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "depthgram/random.hpp"

using namespace depthgram;

TEST_SUITE("random") {

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are addressed by their coordinates") {
    CounterStream a(1, StreamTag::noise, 3, 4), b(1, StreamTag::noise, 3, 4);
    for (int i = 0; i < 10; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    std::set<std::uint64_t> firsts;
    for (auto tag : {StreamTag::noise, StreamTag::alpha, StreamTag::contamination}) {
        for (std::uint32_t x = 0; x < 3; ++x) {
            firsts.insert(CounterStream(1, tag, x, 0).next_u64());
            firsts.insert(CounterStream(2, tag, x, 0).next_u64());
            firsts.insert(CounterStream(1, tag, 0, x + 1).next_u64());
        }
    }
    CHECK(firsts.size() == 27);
}

TEST_CASE("uniform and normal moments") {
    CounterStream s(7, StreamTag::oracle, 0, 0);
    const int count = 200000;
    double su = 0, suu = 0, sn = 0, snn = 0, s4 = 0;
    for (int i = 0; i < count; ++i) {
        const double u = s.next_uniform();
        CHECK_FALSE((u < 0.0 || u >= 1.0));
        su += u;
        suu += u * u;
        const double z = s.next_normal();
        sn += z;
        snn += z * z;
        s4 += z * z * z * z;
    }
    CHECK(su / count == doctest::Approx(0.5).epsilon(0.01));
    CHECK(suu / count - (su / count) * (su / count) == doctest::Approx(1.0 / 12).epsilon(0.02));
    CHECK(std::abs(sn / count) < 0.01);
    CHECK(snn / count == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s4 / count == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("bounded integers are unbiased") {
    CounterStream s(11, StreamTag::oracle, 1, 0);
    std::vector<int> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        const auto v = s.next_below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    double chi2 = 0;
    for (int c : counts) {
        chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    }
    // 99.9% quantile of chi-square with 6 degrees of freedom.
    CHECK(chi2 < 22.46);
    CHECK(s.next_below(1) == 0);
}

TEST_CASE("derived seeds") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        seeds.insert(derive_seed(42, i));
    }
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(42, 3) == derive_seed(42, 3));
    CHECK(derive_seed(42, 3) != derive_seed(43, 3));
}

}
