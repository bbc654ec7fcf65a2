#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "doctest.h"

#include "depthgram/synth.hpp"
#include "support.hpp"

using namespace depthgram;

TEST_SUITE("synth") {

TEST_CASE("coefficient h examples") {
    for (std::size_t j : {1u, 7u, 50u}) {
        CHECK(coefficient_h(j, 50, 0.0, false) == doctest::Approx(1.0));
        CHECK(coefficient_h(j, 50, 1.0, false) == doctest::Approx(1.0));
    }
    // j = p: 1 + 2 t^2 (1-t) at t = 0.5.
    CHECK(coefficient_h(10, 10, 0.5, false) == doctest::Approx(1.25));
    CHECK(coefficient_h(2, 10, 0.0, true) == doctest::Approx(-1.0));
    CHECK(coefficient_h(3, 10, 0.0, true) == doctest::Approx(1.0));
    CHECK_THROWS_AS(coefficient_h(0, 10, 0.5, false), std::invalid_argument);
    CHECK_THROWS_AS(coefficient_h(11, 10, 0.5, false), std::invalid_argument);
    CHECK_THROWS_AS(coefficient_h(1, 10, 1.5, false), std::invalid_argument);
    CHECK_THROWS_AS(coefficient_h(1, 10, -0.1, false), std::invalid_argument);
}

TEST_CASE("reference curves") {
    CHECK(shape_reference_curve(2, 0.0, 0.0) == doctest::Approx(0.0));
    CHECK(shape_reference_curve(2, 0.0, 0.125) == doctest::Approx(2.5));
    CHECK(reference_curve(2, 0.5, 0.25) == doctest::Approx(1.5));
    for (double t = 0.0; t <= 1.0; t += 0.01) {
        CHECK(shape_reference_curve(1, 0.3, t) == doctest::Approx(-std::sin(4 * std::numbers::pi * t) + 0.3));
        CHECK(reference_curve(3, 0.3, t) == doctest::Approx(std::sin(4 * std::numbers::pi * t) + 0.3));
    }
}

TEST_CASE("time grid") {
    const auto grid = time_grid(5);
    CHECK(grid == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(time_grid(1) == std::vector<double>{0.0});
    CHECK(time_grid(100).back() == 1.0);
}

TEST_CASE("Gaussian process noise moments") {
    const auto grid = time_grid(100);
    const GaussianProcessNoise gp(grid);
    CHECK(gp.size() == 100);
    const std::size_t draws = 20000;
    double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
    std::vector<double> out(100);
    for (std::size_t d = 0; d < draws; ++d) {
        CounterStream stream(99, StreamTag::oracle, static_cast<std::uint32_t>(d), 1);
        gp.draw(stream, out);
        s0 += out[40];
        s1 += out[41];
        s00 += out[40] * out[40];
        s11 += out[41] * out[41];
        s01 += out[40] * out[41];
    }
    const double m0 = s0 / draws, m1 = s1 / draws;
    const double v0 = s00 / draws - m0 * m0, v1 = s11 / draws - m1 * m1;
    const double corr = (s01 / draws - m0 * m1) / std::sqrt(v0 * v1);
    CHECK(v0 == doctest::Approx(0.3).epsilon(0.05));
    CHECK(corr == doctest::Approx(std::exp(-(1.0 / 99.0) / 0.3)).epsilon(0.01));

    const GaussianProcessNoise single(time_grid(1));
    std::vector<double> one(1);
    CounterStream stream(1, StreamTag::oracle, 0, 0);
    single.draw(stream, one);
    CHECK(std::isfinite(one[0]));
}

TEST_CASE("nominal layout and validation") {
    CHECK(nominal_type(0, 100) == OutlierType::typical);
    CHECK(nominal_type(84, 100) == OutlierType::typical);
    CHECK(nominal_type(85, 100) == OutlierType::magnitude);
    CHECK(nominal_type(90, 100) == OutlierType::shape);
    CHECK(nominal_type(99, 100) == OutlierType::joint);
    CHECK(parse_outlier_type(outlier_type_name(OutlierType::shape)) == OutlierType::shape);

    CHECK_THROWS_AS(ModelConfig({0, 100, 5, 10, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({5, 100, 5, 10, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({1, 19, 5, 10, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({1, 100, 0, 10, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({1, 100, 5, 0, 1.0, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({1, 100, 5, 10, 1.5, 1}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(ModelConfig({1, 100, 5, 10, -0.1, 1}).validate(), std::invalid_argument);
    CHECK_NOTHROW(ModelConfig({4, 20, 1, 1, 0.0, 1}).validate());
}

TEST_CASE("contaminated sets have exactly round(c p) distinct members") {
    for (double c : {0.0, 0.1, 0.25, 0.33, 0.5, 1.0}) {
        const ModelConfig config{1, 40, 30, 5, c, 17};
        const SyntheticDataset data(config);
        const auto& truth = data.truth();
        const auto K = static_cast<std::size_t>(std::llround(c * 30));
        CHECK(config.contaminated_count() == K);
        for (std::size_t i = 0; i < 40; ++i) {
            const auto& dims = truth.contaminated[i];
            if (truth.nominal[i] == OutlierType::typical) {
                CHECK(dims.empty());
                continue;
            }
            CHECK(dims.size() == K);
            CHECK(std::set<std::uint32_t>(dims.begin(), dims.end()).size() == K);
            CHECK(std::is_sorted(dims.begin(), dims.end()));
            for (auto j : dims) {
                CHECK(j < 30);
            }
            CHECK(truth.effective(i) == (K > 0 ? truth.nominal[i] : OutlierType::typical));
        }
    }
}

TEST_CASE("contaminated dimensions are uniform over dimensions") {
    // Pool membership counts over many seeds and check them with a chi-square statistic.
    const std::size_t p = 10, K = 3;
    std::vector<double> counts(p, 0.0);
    std::size_t total = 0;
    for (std::uint64_t seed = 1; seed <= 400; ++seed) {
        const SyntheticDataset data(ModelConfig{1, 20, p, 2, 0.3, seed});
        for (const auto& dims : data.truth().contaminated) {
            for (auto j : dims) {
                counts[j] += 1;
                ++total;
            }
        }
    }
    CHECK(total == 400 * 15 * K);
    const double expected = static_cast<double>(total) / p;
    double chi2 = 0.0;
    for (double c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 99.9% quantile of chi-square with 9 degrees of freedom is 27.88.
    CHECK(chi2 < 27.88);
}

TEST_CASE("outlying branches match their definitions bit for bit") {
    const ModelConfig config{1, 30, 6, 12, 0.5, 5};
    const SyntheticDataset data(config);
    const auto& truth = data.truth();
    const GaussianProcessNoise gp(time_grid(12));
    std::vector<double> block(30 * 12), noise(30 * 12);
    for (std::size_t j = 0; j < 6; ++j) {
        data.read_dimension(j, block);
        gp.draw_dimension(config.seed, j, 30, noise);
        for (std::size_t i = 0; i < 30; ++i) {
            for (std::size_t k = 0; k < 12; ++k) {
                const double t = static_cast<double>(k) / 11.0;
                const double h = coefficient_h(j + 1, 6, t, false);
                const double e = noise[i * 12 + k];
                const double x = block[i * 12 + k];
                const bool outlying = truth.is_contaminated(i, j);
                if (!outlying) {
                    CHECK(x == data.typical_value(i, j, k, e));
                    CHECK(x == reference_curve(1, truth.alphas[i], t) * h + e);
                } else if (truth.nominal[i] == OutlierType::magnitude) {
                    CHECK(x == (10.0 + reference_curve(1, truth.alphas[i], t) * h) + e);
                } else if (truth.nominal[i] == OutlierType::shape) {
                    CHECK(x == shape_reference_curve(1, truth.alphas[i], t) * h + e);
                } else {
                    const auto ell = truth.joint_refs[i][j];
                    CHECK(x == reference_curve(1, truth.alphas[ell], t) * h + e);
                }
            }
        }
    }
}

TEST_CASE("joint references for the random-reference models") {
    const SyntheticDataset data(ModelConfig{2, 50, 40, 4, 1.0, 8});
    const auto& truth = data.truth();
    for (std::size_t i = 0; i < 50; ++i) {
        if (truth.nominal[i] != OutlierType::joint) {
            CHECK(truth.joint_refs[i].empty());
            continue;
        }
        REQUIRE(truth.joint_refs[i].size() == 40);
        std::set<std::uint32_t> distinct;
        for (auto r : truth.joint_refs[i]) {
            CHECK(truth.nominal[r] == OutlierType::typical);
            distinct.insert(r);
        }
        CHECK(distinct.size() > 10);
    }
}

TEST_CASE("joint references for the mirrored-rank models") {
    std::vector<double> alphas(30);
    CounterStream stream(4, StreamTag::alpha, 0, 0);
    for (auto& a : alphas) {
        a = stream.next_normal();
    }
    const auto original = alphas;
    const auto refs = assign_joint_refs(3, alphas, 7, 4);

    auto sorted = original;
    std::sort(sorted.begin(), sorted.end());
    auto permuted = alphas;
    std::sort(permuted.begin(), permuted.end());
    CHECK(permuted == sorted);
    CHECK(alphas[25] == sorted[0]);
    CHECK(alphas[26] == sorted[1]);
    CHECK(alphas[27] == sorted[2]);
    CHECK(alphas[28] == sorted[29]);
    CHECK(alphas[29] == sorted[28]);

    std::vector<double> typical(alphas.begin(), alphas.begin() + 15);
    std::sort(typical.begin(), typical.end());
    // Smallest alphas borrow from the largest typical ones and vice versa.
    const std::vector<double> mirrored = {typical[14], typical[13], typical[12], typical[0], typical[1]};
    for (std::size_t q = 0; q < 5; ++q) {
        const std::size_t i = 25 + q;
        REQUIRE(refs[i].size() == 7);
        for (std::size_t j = 0; j < 7; ++j) {
            if (j % 2 == 0) {
                CHECK(refs[i][j] == i);
            } else {
                CHECK(refs[i][j] < 15);
                CHECK(alphas[refs[i][j]] == mirrored[q]);
            }
        }
    }
}

TEST_CASE("no contamination gives all-typical labels") {
    const SyntheticDataset data(ModelConfig{3, 25, 8, 6, 0.0, 2});
    for (std::size_t i = 0; i < 25; ++i) {
        CHECK(data.truth().effective(i) == OutlierType::typical);
        CHECK(data.truth().contaminated[i].empty());
    }
}

TEST_CASE("generation is reproducible and order independent") {
    const ModelConfig config{4, 22, 5, 9, 0.6, 31};
    const SyntheticDataset a(config), b(config);
    std::vector<double> x(22 * 9), y(22 * 9);
    a.read_dimension(3, x);
    b.read_dimension(4, y);
    b.read_dimension(3, y);
    CHECK(x == y);

    std::vector<std::vector<double>> streamed;
    const auto truth = generate(config, [&](std::size_t j, std::span<const double> block) {
        CHECK(j == streamed.size());
        streamed.emplace_back(block.begin(), block.end());
    });
    CHECK(streamed.size() == 5);
    CHECK(streamed[3] == x);
    CHECK(truth.contaminated == a.truth().contaminated);
    CHECK(truth.alphas == a.truth().alphas);

    const SyntheticDataset other(ModelConfig{4, 22, 5, 9, 0.6, 32});
    other.read_dimension(3, y);
    CHECK(x != y);

    CHECK_THROWS_AS(a.read_dimension(5, x), std::out_of_range);
    std::vector<double> small(3);
    CHECK_THROWS_AS(a.read_dimension(0, small), std::invalid_argument);
}

TEST_CASE("replicate scoring") {
    GroundTruth truth;
    truth.n = 20;
    truth.p = 4;
    truth.nominal.assign(20, OutlierType::typical);
    truth.contaminated.assign(20, {});
    for (std::size_t i = 5; i < 20; ++i) {
        truth.nominal[i] = nominal_type(i, 20);
        truth.contaminated[i] = {0, 2};
    }
    AnalysisReport report;
    report.n = 20;
    report.p = 4;
    report.outliers = {0, 5, 6, 10, 15, 16, 17, 18, 19};
    MarginalFlags flags(20, 4);
    std::vector<std::uint8_t> mag(20, 0), shape(20, 0), none(20, 0);
    mag[5] = mag[6] = mag[1] = 1;
    shape[10] = shape[11] = shape[12] = 1;
    flags.add_dimension(0, mag, shape);
    flags.add_dimension(1, none, none);
    flags.add_dimension(2, mag, none);
    flags.add_dimension(3, none, none);
    report.marginal = flags;

    const auto s = score_replicate(truth, report);
    CHECK(s.dg_magnitude == doctest::Approx(2.0 / 5));
    CHECK(s.dg_shape == doctest::Approx(1.0 / 5));
    CHECK(s.dg_joint == doctest::Approx(1.0));
    CHECK(s.dg_false == doctest::Approx(1.0 / 5));
    CHECK(s.marginal_magnitude_pc == doctest::Approx(4.0 / 10));
    // Observation 1 is flagged twice outside any contaminated set; 80 - 30 negatives.
    CHECK(s.marginal_magnitude_pf == doctest::Approx(2.0 / 50));
    CHECK(s.marginal_shape_pc == doctest::Approx(3.0 / 10));
    CHECK(s.marginal_shape_pf == doctest::Approx(0.0));

    truth.contaminated.assign(20, {});
    const auto clean = score_replicate(truth, report);
    CHECK(std::isnan(clean.dg_magnitude));
    CHECK(std::isnan(clean.marginal_shape_pc));
    CHECK(clean.dg_false == doctest::Approx(9.0 / 20));

    report.p = 5;
    CHECK_THROWS_AS(score_replicate(truth, report), std::invalid_argument);
}

TEST_CASE("rate summaries skip undefined rates") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> values = {0.5, nan, 1.0, 0.0};
    const auto stat = summarize_rates(values);
    CHECK(stat.count == 3);
    CHECK(stat.mean == doctest::Approx(0.5));
    CHECK(stat.sd == doctest::Approx(0.5));
    const std::vector<double> empty = {nan};
    CHECK(std::isnan(summarize_rates(empty).mean));
}

TEST_CASE("small study") {
    StudyConfig config;
    config.model = 2;
    config.n = 100;
    config.p = 10;
    config.N = 20;
    config.c_grid = {0.0, 1.0};
    config.replicates = 3;
    config.seed = 9;
    const auto summary = run_study(config);
    REQUIRE(summary.rows.size() == 2);
    CHECK(summary.rows[0].replicates == 3);
    CHECK(summary.rows[0].dg_magnitude.count == 0);
    CHECK(summary.rows[1].dg_magnitude.count == 3);
    CHECK(summary.rows[1].dg_magnitude.mean == 1.0);
    CHECK(summary.points.size() == 2 * 3 * 100 * 3);

    config.threads = 3;
    const auto threaded = run_study(config);
    CHECK(threaded.rows[1].dg_joint.mean == summary.rows[1].dg_joint.mean);
    CHECK(threaded.rows[0].dg_false.mean == summary.rows[0].dg_false.mean);

    config.replicates = 0;
    CHECK_THROWS_AS(run_study(config), std::invalid_argument);
}

}
