#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "depthgram/dataset.hpp"
#include "depthgram/depth_core.hpp"
#include "depthgram/oracle.hpp"
#include "depthgram/random.hpp"

// Helpers shared by the unit and acceptance tests. The reference engine here
// recomputes every depth from the literal definitions (oracle::mbd_brute /
// mei_brute) on explicitly built pseudo-samples, without any of the
// streaming shortcuts used by the library.

namespace testsupport {

using depthgram::CounterStream;
using depthgram::FunctionalSample;
using depthgram::InMemoryDataset;
using depthgram::StreamTag;

/// n x p x N dataset with standard normal values, or small-integer values when `lattice` is set.
inline InMemoryDataset random_dataset(std::size_t n, std::size_t p, std::size_t N, std::uint64_t seed,
                                      bool lattice = false) {
    CounterStream stream(seed, StreamTag::oracle, 1000, 0);
    std::vector<double> values(n * p * N);
    for (auto& v : values) {
        v = lattice ? static_cast<double>(stream.next_below(4)) : stream.next_normal();
    }
    return InMemoryDataset(n, p, N, std::move(values));
}

/// Plain floating-point Pearson correlation sign; +1 for zero or undefined correlation.
inline int pearson_sign(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx < 1e-300 || syy < 1e-300 || std::abs(sxy) < 1e-12 * std::sqrt(sxx * syy)) {
        return 1;
    }
    return sxy < 0 ? -1 : 1;
}

/// Snaps a depth to its exact lattice value numerator / scale so that equal depths compare equal.
inline double snap(double value, double scale) { return std::round(value * scale) / scale; }

struct BrutePoints {
    std::vector<double> dg1;
    std::vector<double> dg2;
};

struct BruteReference {
    std::size_t n = 0, p = 0, N = 0;
    // Row-major n x p and n x N matrices of first-level depths.
    std::vector<double> mbd_d, mei_d, mbd_t, mei_t, mbd_t_flipped, mei_t_flipped;
    std::vector<int> signs;
    BrutePoints dimensions, time, time_correlation;
};

inline BrutePoints second_level(const std::vector<double>& mbd_rows, const std::vector<double>& mei_rows,
                                std::size_t n, std::size_t m) {
    const auto mei_of_mbd = depthgram::oracle::mei_brute(FunctionalSample(n, m, mbd_rows));
    const auto mbd_of_mei = depthgram::oracle::mbd_brute(FunctionalSample(n, m, mei_rows));
    BrutePoints out;
    for (std::size_t i = 0; i < n; ++i) {
        out.dg1.push_back(1.0 - mei_of_mbd[i]);
        out.dg2.push_back(mbd_of_mei[i]);
    }
    return out;
}

/// Time matrices (MBD_t, MEI_t) of a dataset, one brute-force pseudo-sample per time point.
inline void time_matrices(const InMemoryDataset& data, const std::vector<int>& signs, std::vector<double>& mbd_t,
                          std::vector<double>& mei_t) {
    const std::size_t n = data.observations(), p = data.dimensions(), N = data.time_points();
    const double mbd_scale = static_cast<double>(depthgram::pair_count(n) * p);
    const double mei_scale = static_cast<double>(n * p);
    mbd_t.assign(n * N, 0.0);
    mei_t.assign(n * N, 0.0);
    for (std::size_t k = 0; k < N; ++k) {
        std::vector<double> pseudo(n * p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                pseudo[i * p + j] = signs[j] * data.at(i, j, k);
            }
        }
        const FunctionalSample sample(n, p, pseudo);
        const auto mbd = depthgram::oracle::mbd_brute(sample);
        const auto mei = depthgram::oracle::mei_brute(sample);
        for (std::size_t i = 0; i < n; ++i) {
            mbd_t[i * N + k] = snap(mbd[i], mbd_scale);
            mei_t[i * N + k] = snap(mei[i], mei_scale);
        }
    }
}

/// All three DepthGrams from the definitions, with the sign-corrected data built explicitly.
inline BruteReference brute_reference(const InMemoryDataset& data) {
    BruteReference ref;
    const std::size_t n = ref.n = data.observations();
    const std::size_t p = ref.p = data.dimensions();
    const std::size_t N = ref.N = data.time_points();
    const double mbd_scale = static_cast<double>(depthgram::pair_count(n) * N);
    const double mei_scale = static_cast<double>(n * N);

    ref.mbd_d.assign(n * p, 0.0);
    ref.mei_d.assign(n * p, 0.0);
    std::vector<std::vector<double>> mei_cols(p, std::vector<double>(n));
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> block(n * N);
        data.read_dimension(j, block);
        const FunctionalSample sample(n, N, block);
        const auto mbd = depthgram::oracle::mbd_brute(sample);
        const auto mei = depthgram::oracle::mei_brute(sample);
        for (std::size_t i = 0; i < n; ++i) {
            ref.mbd_d[i * p + j] = snap(mbd[i], mbd_scale);
            ref.mei_d[i * p + j] = snap(mei[i], mei_scale);
            mei_cols[j][i] = ref.mei_d[i * p + j];
        }
    }

    ref.signs.assign(p, 1);
    for (std::size_t j = 1; j < p; ++j) {
        ref.signs[j] = ref.signs[j - 1] * pearson_sign(mei_cols[j - 1], mei_cols[j]);
    }

    time_matrices(data, std::vector<int>(p, 1), ref.mbd_t, ref.mei_t);
    time_matrices(data, ref.signs, ref.mbd_t_flipped, ref.mei_t_flipped);

    ref.dimensions = second_level(ref.mbd_d, ref.mei_d, n, p);
    ref.time = second_level(ref.mbd_t, ref.mei_t, n, N);
    ref.time_correlation = second_level(ref.mbd_t_flipped, ref.mei_t_flipped, n, N);
    return ref;
}

/// Fresh scratch directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("depthgram_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
