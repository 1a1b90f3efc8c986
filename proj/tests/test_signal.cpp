#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numeric>

#include "eigenres/signal.hpp"

using namespace eigenres;

namespace {

double l2(const Frame& f) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(s);
}

double rel_l2_err(const Frame& a, const Frame& b) {
    REQUIRE(a.size() == b.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("hanning_window closed-form values") {
    CHECK(hanning_window(1) == Frame{1.0});

    const Frame w3 = hanning_window(3);
    CHECK(w3[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(w3[1] == Catch::Approx(1.0));
    CHECK(w3[2] == Catch::Approx(0.0).margin(1e-15));

    const Frame w5 = hanning_window(5);
    CHECK(w5[1] == Catch::Approx(0.5));
    CHECK(w5[2] == Catch::Approx(1.0));
    CHECK(w5[3] == Catch::Approx(0.5));

    const Frame w4 = hanning_window(4);
    CHECK(w4[0] == Catch::Approx(0.0).margin(1e-15));
    CHECK(w4[1] == Catch::Approx(0.75));
    CHECK(w4[2] == Catch::Approx(0.75));
    CHECK(w4[3] == Catch::Approx(0.0).margin(1e-15));

    CHECK_THROWS_AS(hanning_window(0), std::invalid_argument);
}

TEST_CASE("hanning_window is exactly symmetric") {
    for (std::size_t n : {2u, 7u, 64u, 201u, 280u}) {
        const Frame w = hanning_window(n);
        for (std::size_t j = 0; j < n; ++j) CHECK(w[j] == w[n - 1 - j]);
    }
}

TEST_CASE("resample_frame identity") {
    detail::SplitMix64 rng(7);
    Frame f(200);
    for (double& v : f) v = rng.uniform01() - 0.5;
    const Frame g = resample_frame(f, f.size());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(g[i] - f[i]) < 1e-9);
}

TEST_CASE("resample_frame upsamples a sine accurately") {
    const std::size_t len = 200, target = 400;
    Frame f(len);
    // 4 cycles over the index axis [0, len-1]
    for (std::size_t j = 0; j < len; ++j)
        f[j] = std::sin(2.0 * M_PI * 4.0 * static_cast<double>(j) / (len - 1));
    const Frame g = resample_frame(f, target);
    const std::size_t guard = target / 20;  // 5% edge regions
    double max_dev = 0.0;
    for (std::size_t j = guard; j < target - guard; ++j) {
        const double ideal = std::sin(2.0 * M_PI * 4.0 * static_cast<double>(j) / (target - 1));
        max_dev = std::max(max_dev, std::abs(g[j] - ideal));
    }
    CHECK(max_dev < 1e-3);
}

TEST_CASE("resample_frame down-up round trip on band-limited noise") {
    const std::size_t m = 240;
    Frame f(m, 0.0);
    detail::SplitMix64 rng(42);
    // band-limited "noise": random sinusoids below 0.2 cycles/sample,
    // safely under the Nyquist limit of the half-length version
    for (int c = 0; c < 20; ++c) {
        const double freq = 0.01 + 0.19 * rng.uniform01();
        const double phase = 2.0 * M_PI * rng.uniform01();
        const double amp = 0.2 + rng.uniform01();
        for (std::size_t j = 0; j < m; ++j)
            f[j] += amp * std::sin(2.0 * M_PI * freq * static_cast<double>(j) + phase);
    }
    const Frame down = resample_frame(f, m / 2);
    const Frame up = resample_frame(down, m);
    CHECK(rel_l2_err(f, up) < 0.05);
}

TEST_CASE("resample_frame rejects degenerate lengths") {
    CHECK_THROWS_AS(resample_frame(Frame{1.0}, 10), std::invalid_argument);
    CHECK_THROWS_AS(resample_frame(Frame{1.0, 2.0}, 1), std::invalid_argument);
}

TEST_CASE("white_noise statistics and determinism") {
    CHECK(white_noise(0, 5).empty());

    const std::size_t n = 100000;
    const Frame a = white_noise(n, 123);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(var > 0.97);
    CHECK(var < 1.03);

    const Frame b = white_noise(n, 123);
    CHECK(a == b);  // bit-identical
    const Frame c = white_noise(n, 124);
    CHECK(a != c);
}

TEST_CASE("overlap_add places a single frame") {
    const std::vector<double> out = overlap_add({{1.0, 2.0, 3.0}}, {5}, 10);
    std::vector<double> expected(10, 0.0);
    expected[4] = 1.0;
    expected[5] = 2.0;
    expected[6] = 3.0;
    CHECK(out == expected);
}

TEST_CASE("overlap_add sums overlapping frames and is linear") {
    const Frame f{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> sum = overlap_add({f, f}, {4, 6}, 12);
    const std::vector<double> a = overlap_add({f}, {4}, 12);
    const std::vector<double> b = overlap_add({f}, {6}, 12);
    for (std::size_t t = 0; t < 12; ++t) CHECK(sum[t] == Catch::Approx(a[t] + b[t]).margin(1e-15));

    // scaling
    Frame f2 = f;
    for (double& v : f2) v *= 2.5;
    const std::vector<double> scaled = overlap_add({f2}, {4}, 12);
    for (std::size_t t = 0; t < 12; ++t) CHECK(scaled[t] == Catch::Approx(2.5 * a[t]));
}

TEST_CASE("overlap_add clips out-of-range portions silently") {
    const std::vector<double> out = overlap_add({{1.0, 2.0, 3.0}}, {0}, 4);
    CHECK(out == std::vector<double>{2.0, 3.0, 0.0, 0.0});
}

TEST_CASE("two-period Hann frames at one-period hop satisfy COLA") {
    const long T = 80;
    const std::size_t wlen = static_cast<std::size_t>(2 * T + 1);  // spans [-T, T]
    const Frame w = hanning_window(wlen);

    std::vector<Frame> frames;
    std::vector<long> centers;
    const long total = 20 * T;
    for (long c = 0; c <= total; c += T) {
        frames.push_back(w);  // constant-1 source times the window
        centers.push_back(c);
    }
    const std::vector<double> ola =
        overlap_add(frames, centers, static_cast<std::size_t>(total));

    // oracle: direct summation of shifted windows
    std::vector<double> direct(static_cast<std::size_t>(total), 0.0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const long off = centers[i] - T;
        for (long j = 0; j < static_cast<long>(wlen); ++j) {
            const long t = off + j;
            if (t >= 0 && t < total) direct[static_cast<std::size_t>(t)] += w[static_cast<std::size_t>(j)];
        }
    }
    for (long t = 0; t < total; ++t)
        CHECK(ola[static_cast<std::size_t>(t)] ==
              Catch::Approx(direct[static_cast<std::size_t>(t)]).margin(1e-14));
    // interior is exactly constant 1
    for (long t = 2 * T; t < total - 2 * T; ++t)
        CHECK(std::abs(ola[static_cast<std::size_t>(t)] - 1.0) < 1e-10);
}
