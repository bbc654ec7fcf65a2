#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "doctest.h"

#include "depthgram/depth_core.hpp"
#include "depthgram/oracle.hpp"
#include "depthgram/random.hpp"

using namespace depthgram;

namespace {

FunctionalSample constant_curves(const std::vector<double>& heights, std::size_t m) {
    std::vector<std::vector<double>> rows;
    for (double h : heights) {
        rows.emplace_back(m, h);
    }
    return FunctionalSample::from_rows(rows);
}

FunctionalSample sample_for_trial(std::uint64_t trial) {
    CounterStream sizes(99, StreamTag::oracle, 0xfffffff0u, static_cast<std::uint32_t>(trial));
    const std::size_t n = 2 + sizes.next_below(14);
    const std::size_t m = 1 + sizes.next_below(20);
    return oracle::random_tied_sample(n, m, 99, trial);
}

}  // namespace

TEST_SUITE("depth_core") {

TEST_CASE("pointwise counts of a strictly ordered column") {
    const std::vector<double> column = {1.0, 2.0, 3.0};
    const auto counts = pointwise_counts(column);
    CHECK(counts[1].n_le == 2);
    CHECK(counts[1].n_ge == 2);
    CHECK(counts[1].equal == 1);
    CHECK(counts[1].pairs_containing == 3);
    CHECK(counts[2].pairs_containing == 2);
}

TEST_CASE("pointwise counts with a tie") {
    const std::vector<double> column = {1.0, 1.0, 2.0};
    const auto counts = pointwise_counts(column);
    for (int i : {0, 1}) {
        CHECK(counts[i].n_le == 2);
        CHECK(counts[i].n_ge == 3);
        CHECK(counts[i].equal == 2);
        CHECK(counts[i].pairs_containing == 3);
    }
    CHECK(counts[2].pairs_containing == 2);
}

TEST_CASE("pointwise counts reject bad input") {
    CHECK_THROWS_AS(pointwise_counts(std::vector<double>{1.0}), std::invalid_argument);
    try {
        pointwise_counts(std::vector<double>{1.0, 2.0, NAN});
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
}

TEST_CASE("point counts satisfy their invariants and match direct enumeration") {
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        std::vector<double> column(s.n());
        s.column(s.m() / 2, column);
        const auto fast = pointwise_counts(column);
        const auto slow = oracle::pointwise_counts_brute(column);
        for (std::size_t i = 0; i < s.n(); ++i) {
            CHECK(fast[i].n_le == slow[i].n_le);
            CHECK(fast[i].n_ge == slow[i].n_ge);
            CHECK(fast[i].equal == slow[i].equal);
            CHECK(fast[i].pairs_containing == slow[i].pairs_containing);
            CHECK(fast[i].n_le + fast[i].n_ge - fast[i].equal == s.n());
            CHECK(fast[i].pairs_containing <= pair_count(s.n()));
        }
    }
}

TEST_CASE("sample validation") {
    CHECK_THROWS_AS(FunctionalSample(1, 3, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(FunctionalSample(2, 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(FunctionalSample(2, 2, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(FunctionalSample(2, 1, {1, INFINITY}), std::invalid_argument);
}

TEST_CASE("MBD of constant curves") {
    for (std::size_t m : {1, 4}) {
        const auto d = mbd(constant_curves({1, 2, 3}, m));
        CHECK(d[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
        CHECK(d[1] == 1.0);
        CHECK(d[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    }
    // The deepest curve for n = 3 attains 1/2 + 3/(2n) = 1.
    CHECK(mbd(constant_curves({1, 2, 3}, 2))[1] == 0.5 + 3.0 / 6.0);
}

TEST_CASE("MBD with two curves is always 1") {
    CHECK(mbd(FunctionalSample(2, 3, {0, 5, -1, 2, 2, 2}))[0] == 1.0);
    CHECK(mbd(FunctionalSample(2, 3, {0, 5, -1, 2, 2, 2}))[1] == 1.0);
    CHECK(oracle::mbd_brute(FunctionalSample(2, 2, {1, 1, 1, 1}))[0] == 1.0);
}

TEST_CASE("MEI examples") {
    const auto d = mei(constant_curves({1, 2, 3}, 3));
    CHECK(d[0] == 1.0);
    CHECK(d[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(d[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const auto same = mei(constant_curves({4, 4, 4, 4}, 2));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(same[i] == 1.0);
    }
    const auto crossing = mei(FunctionalSample(2, 2, {0, 1, 1, 0}));
    CHECK(crossing[0] == 0.75);
    CHECK(crossing[1] == 0.75);
}

TEST_CASE("brute-force definitions on the constant-curve example") {
    const auto d = oracle::mbd_brute(constant_curves({1, 2, 3}, 2));
    CHECK(d.numerators == std::vector<std::uint64_t>{4, 6, 4});
    CHECK(oracle::mei_brute(constant_curves({1, 2, 3}, 2)).numerators == std::vector<std::uint64_t>{6, 4, 2});
}

TEST_CASE("rank-based depths equal the definitions on tied samples") {
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        const auto [fast_mbd, fast_mei] = mbd_mei(s);
        const auto slow_mbd = oracle::mbd_brute(s);
        const auto slow_mei = oracle::mei_brute(s);
        REQUIRE(fast_mbd.numerators == slow_mbd.numerators);
        REQUIRE(fast_mei.numerators == slow_mei.numerators);
        for (std::size_t i = 0; i < s.n(); ++i) {
            CHECK(std::abs(fast_mbd[i] - slow_mbd[i]) <= 1e-12);
            CHECK(std::abs(fast_mei[i] - slow_mei[i]) <= 1e-12);
        }
    }
    const auto summary = oracle::run_oracle_check(15, 20, 100, 5);
    CHECK(summary.mismatches == 0);
    CHECK(summary.trials == 100);
}

TEST_CASE("depth ranges") {
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        const auto [b, e] = mbd_mei(s);
        const double n = static_cast<double>(s.n());
        for (std::size_t i = 0; i < s.n(); ++i) {
            CHECK(b[i] > 0.0);
            CHECK(b[i] <= 1.0);
            CHECK(e[i] >= 1.0 / n - 1e-15);
            CHECK(e[i] <= 1.0);
        }
    }
}

TEST_CASE("MBD of distinct values is at most that of the median") {
    CounterStream rng(12, StreamTag::oracle, 88, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.next_below(20);
        const std::size_t m = 1 + rng.next_below(10);
        std::vector<double> values(n * m);
        for (auto& v : values) {
            v = rng.next_normal();
        }
        const auto b = mbd(FunctionalSample(n, m, values));
        // Pointwise maximum is ((r-1)(n-r) + n-1) / C(n,2) at the median rank r.
        const std::size_t r = (n + 1) / 2;
        const double cap = static_cast<double>((r - 1) * (n - r) + n - 1) / static_cast<double>(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(b[i] <= cap + 1e-15);
        }
    }
}

TEST_CASE("parabola f_n") {
    CHECK(parabola_f(3, 2.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(parabola_f(3, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(parabola_f(3, 1.0 / 3.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    // Symmetric around (n + 1) / (2n).
    const double centre = 11.0 / 20.0;
    CHECK(parabola_f(10, centre - 0.2) == doctest::Approx(parabola_f(10, centre + 0.2)).epsilon(1e-14));
    CHECK_THROWS_AS(parabola_f(1, 0.5), std::invalid_argument);
}

TEST_CASE("parabola g_n") {
    CHECK(parabola_g(3, 2.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(parabola_g(3, 0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(parabola_g(100, 0.0) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK_THROWS_AS(parabola_g(0, 0.5), std::invalid_argument);
}

TEST_CASE("MBD never exceeds f_n(MEI) on tie-free samples") {
    CounterStream rng(21, StreamTag::oracle, 66, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(14);
        const std::size_t m = 1 + rng.next_below(20);
        std::vector<double> values(n * m);
        for (auto& v : values) {
            v = rng.next_normal();
        }
        const FunctionalSample s(n, m, values);
        const auto b = oracle::mbd_brute(s);
        const auto e = oracle::mei_brute(s);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(b[i] <= parabola_f(n, e[i]) + 1e-12);
            CHECK(outliergram_gap_scaled(n, m, b.numerators[i], e.numerators[i]) >= 0);
        }
        // The integer gap and the floating-point formula agree.
        const auto gaps = outliergram_gaps(b, e);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(gaps[i] == doctest::Approx(parabola_f(n, e[i]) - b[i]).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("tied curves can exceed f_n") {
    // n identical curves: MBD = MEI = 1 while f_n(1) = 2/n.
    const FunctionalSample s(4, 3, std::vector<double>(12, 1.0));
    const auto [b, e] = mbd_mei(s);
    CHECK(b[0] == 1.0);
    CHECK(e[0] == 1.0);
    CHECK(parabola_f(4, 1.0) == doctest::Approx(0.5));
    CHECK(outliergram_gap_scaled(4, 3, b.numerators[0], e.numerators[0]) < 0);
}

TEST_CASE("non-crossing curves lie exactly on f_n") {
    CounterStream rng(3, StreamTag::oracle, 77, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.next_below(20);
        const std::size_t m = 1 + rng.next_below(10);
        std::vector<double> offsets(n);
        for (auto& o : offsets) {
            o = rng.next_normal();
        }
        std::vector<double> shape(m);
        for (auto& v : shape) {
            v = rng.next_normal();
        }
        std::vector<double> values(n * m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                values[i * m + k] = offsets[i] + shape[k];
            }
        }
        const FunctionalSample s(n, m, values);
        const auto [b, e] = mbd_mei(s);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(outliergram_gap_scaled(n, m, b.numerators[i], e.numerators[i]) == 0);
        }
    }
}

TEST_CASE("strictly increasing maps leave counts unchanged") {
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        std::vector<double> mapped = s.values();
        for (auto& v : mapped) {
            v = std::exp(v) + v * v * v;
        }
        const FunctionalSample t(s.n(), s.m(), mapped);
        const auto [b1, e1] = mbd_mei(s);
        const auto [b2, e2] = mbd_mei(t);
        CHECK(b1.numerators == b2.numerators);
        CHECK(e1.numerators == e2.numerators);
    }
}

TEST_CASE("row permutations permute the depths") {
    CounterStream rng(4, StreamTag::oracle, 78, 0);
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        std::vector<std::size_t> perm(s.n());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = s.n() - 1; i > 0; --i) {
            std::swap(perm[i], perm[rng.next_below(i + 1)]);
        }
        std::vector<double> permuted(s.values().size());
        for (std::size_t i = 0; i < s.n(); ++i) {
            std::copy_n(s.row(perm[i]).begin(), s.m(), permuted.begin() + static_cast<std::ptrdiff_t>(i * s.m()));
        }
        const auto [b1, e1] = mbd_mei(s);
        const auto [b2, e2] = mbd_mei(FunctionalSample(s.n(), s.m(), permuted));
        for (std::size_t i = 0; i < s.n(); ++i) {
            CHECK(b2.numerators[i] == b1.numerators[perm[i]]);
            CHECK(e2.numerators[i] == e1.numerators[perm[i]]);
        }
    }
}

TEST_CASE("integer-row depths agree with real-valued depths") {
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        const FunctionalSample s = sample_for_trial(trial);
        std::vector<std::uint64_t> column_major(s.n() * s.m());
        std::vector<double> shifted(s.n() * s.m());
        for (std::size_t i = 0; i < s.n(); ++i) {
            for (std::size_t k = 0; k < s.m(); ++k) {
                const auto v = static_cast<std::uint64_t>(2.0 * s(i, k) + 10.0);
                column_major[k * s.n() + i] = v;
                shifted[i * s.m() + k] = static_cast<double>(v);
            }
        }
        const auto [b1, e1] = mbd_mei_of_rows(column_major, s.n(), s.m());
        const auto [b2, e2] = mbd_mei(FunctionalSample(s.n(), s.m(), shifted));
        CHECK(b1.numerators == b2.numerators);
        CHECK(e1.numerators == e2.numerators);
    }
}

TEST_CASE("quantile") {
    const std::vector<double> v = {4, 1, 3, 2};
    CHECK(quantile(v, 0.75) == 3.25);
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(std::vector<double>{5}, 0.5) == 5.0);
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);
}

}
