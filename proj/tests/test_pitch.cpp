#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "eigenres/pitch.hpp"
#include "support/synthetic.hpp"

using namespace eigenres;

namespace {

Signal sawtooth(int fs, double f0, double seconds) {
    Signal s;
    s.sample_rate = fs;
    const long n = std::lround(seconds * fs);
    s.samples.resize(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t) {
        const double phase = std::fmod(f0 * t / fs, 1.0);
        s.samples[static_cast<std::size_t>(t)] = 2.0 * phase - 1.0;
    }
    return s;
}

Signal sine(int fs, double f0, double seconds) {
    Signal s;
    s.sample_rate = fs;
    const long n = std::lround(seconds * fs);
    s.samples.resize(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t)
        s.samples[static_cast<std::size_t>(t)] = std::sin(2.0 * M_PI * f0 * t / fs);
    return s;
}

F0Track constant_track(double f0, double seconds, double hop_s = 0.005) {
    F0Track track;
    track.hop_s = hop_s;
    for (double t = 0.0; t < seconds; t += hop_s)
        track.records.push_back({t, f0, f0 > 0.0});
    return track;
}

}  // namespace

TEST_CASE("track_f0 on a 100 Hz sawtooth") {
    const Signal s = sawtooth(16000, 100.0, 1.0);
    const F0Track track = track_f0(s);
    REQUIRE(track.records.size() > 100);
    // skip boundary frames where the analysis window is truncated
    for (std::size_t i = 10; i + 10 < track.records.size(); ++i) {
        CHECK(track.records[i].voiced);
        CHECK(track.records[i].f0 > 98.0);
        CHECK(track.records[i].f0 < 102.0);
    }
}

TEST_CASE("track_f0 on silence") {
    Signal s;
    s.sample_rate = 16000;
    s.samples.assign(16000, 0.0);
    const F0Track track = track_f0(s);
    for (const F0Record& r : track.records) {
        CHECK_FALSE(r.voiced);
        CHECK(r.f0 == 0.0);
    }
}

TEST_CASE("track_f0 on a 200 Hz sine") {
    const Signal s = sine(16000, 200.0, 1.0);
    const F0Track track = track_f0(s);
    for (std::size_t i = 10; i + 10 < track.records.size(); ++i) {
        CHECK(track.records[i].voiced);
        CHECK(track.records[i].f0 > 198.0);
        CHECK(track.records[i].f0 < 202.0);
    }
}

TEST_CASE("track_f0 rejects too-low sample rates") {
    Signal s;
    s.sample_rate = 1000;
    s.samples.assign(1000, 0.0);
    CHECK_THROWS_AS(track_f0(s), std::invalid_argument);
}

TEST_CASE("build_histogram counts voiced frames only") {
    F0Track track = constant_track(120.0, 1.0);
    track.records.push_back({1.0, 0.0, false});
    const PitchHistogram h = build_histogram(track);
    std::size_t nonzero = 0;
    for (double c : h.counts)
        if (c > 0.0) ++nonzero;
    CHECK(nonzero == 1);
    CHECK(h.mass_above(119.0) == Catch::Approx(1.0));

    F0Track empty;
    empty.records.push_back({0.0, 0.0, false});
    CHECK_THROWS_AS(build_histogram(empty), std::runtime_error);
}

TEST_CASE("build_histogram splits mass by counts") {
    F0Track track;
    track.hop_s = 0.005;
    for (int i = 0; i < 50; ++i) track.records.push_back({0.0, 100.0, true});
    for (int i = 0; i < 50; ++i) track.records.push_back({0.0, 200.0, true});
    const PitchHistogram h = build_histogram(track);
    CHECK(h.mass_above(150.0) == Catch::Approx(0.5));
    CHECK(h.total() == 100.0);
}

TEST_CASE("build_histogram of uniform values is near flat") {
    F0Track track;
    track.hop_s = 0.005;
    for (int f = 100; f <= 199; ++f) track.records.push_back({0.0, static_cast<double>(f), true});
    const PitchHistogram h = build_histogram(track, 2.0);
    for (double c : h.counts) CHECK(c / h.total() == Catch::Approx(0.02).margin(0.005));
}

TEST_CASE("normalized_pitch examples") {
    // degenerate distribution: everything in one bin
    F0Track track = constant_track(120.0, 1.0);
    const PitchHistogram h = build_histogram(track);
    const double f0s = normalized_pitch(h);
    CHECK(f0s >= 120.0);
    CHECK(f0s <= 120.0 + h.bin_width);

    // uniform over [100, 200): 20th percentile is 120 within a bin width
    F0Track uni;
    uni.hop_s = 0.005;
    for (int f = 100; f <= 199; ++f) uni.records.push_back({0.0, static_cast<double>(f), true});
    const PitchHistogram hu = build_histogram(uni, 2.0);
    CHECK(normalized_pitch(hu) == Catch::Approx(120.0).margin(2.0));
}

TEST_CASE("normalized_pitch re-integrated upper mass is 0.8") {
    testsup::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        PitchHistogram h;
        h.lo = 80.0;
        h.bin_width = 2.0;
        h.counts.resize(100);
        for (double& c : h.counts) c = std::floor(rng.uniform(0.0, 50.0));
        if (h.total() < 10.0) continue;
        const double f0s = normalized_pitch(h, 0.8);
        CHECK(h.mass_above(f0s) > 0.78);
        CHECK(h.mass_above(f0s) < 0.82);
    }
}

TEST_CASE("normalized_pitch is monotone in upper_mass") {
    testsup::Rng rng(9);
    PitchHistogram h;
    h.lo = 60.0;
    h.bin_width = 2.0;
    h.counts.resize(120);
    for (double& c : h.counts) c = std::floor(rng.uniform(0.0, 30.0));
    double prev = 1e9;
    for (double mass : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) {
        const double f0s = normalized_pitch(h, mass);
        CHECK(f0s <= prev + 1e-12);
        prev = f0s;
    }
}

TEST_CASE("compute_cog point masses") {
    Signal s;
    s.sample_rate = 16000;
    s.samples.assign(1000, 0.0);
    CHECK(compute_cog(s, 500, 101) == 0.0);  // silence guard

    s.samples[507] = 0.3;  // single impulse at +7
    CHECK(compute_cog(s, 500, 101) == Catch::Approx(7.0));

    s.samples[493] = 0.3;  // mirror impulse at -7: symmetric, CoG 0
    CHECK(compute_cog(s, 500, 101) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("compute_cog negates under time reversal") {
    Signal s;
    s.sample_rate = 16000;
    s.samples = eigenres::white_noise(400, 8);
    Signal rev = s;
    std::reverse(rev.samples.begin(), rev.samples.end());
    const long center = 200, wlen = 101;
    const double a = compute_cog(s, center, wlen);
    const double b = compute_cog(rev, static_cast<long>(rev.samples.size()) - 1 - center, wlen);
    CHECK(a == Catch::Approx(-b).margin(1e-9));
}

TEST_CASE("detect_gci on an impulse train with noise floor") {
    const int fs = 16000;
    const testsup::PulseTrain train = testsup::impulse_train(fs, 100.0, 1.0, -40.0);
    const F0Track f0 = constant_track(100.0, 1.0);
    const GciList gcis = detect_gci(train.signal, f0);
    REQUIRE(gcis.size() > 50);

    std::size_t hits = 0;
    for (long truth : train.gci) {
        for (const Gci& g : gcis)
            if (std::abs(g.sample - truth) <= 4) {
                ++hits;
                break;
            }
    }
    CHECK(static_cast<double>(hits) / train.gci.size() >= 0.95);
}

TEST_CASE("detect_gci on an unvoiced-only signal") {
    Signal noise;
    noise.sample_rate = 16000;
    noise.samples = eigenres::white_noise(16000, 3);
    F0Track track = constant_track(0.0, 1.0);
    CHECK(detect_gci(noise, track).empty());
}

TEST_CASE("detect_gci on an LF pulse train") {
    const int fs = 16000;
    const testsup::PulseTrain train = testsup::lf_pulse_train(fs, 160.0, 1.0);  // 100-sample period
    const F0Track f0 = constant_track(160.0, 1.0);
    const GciList gcis = detect_gci(train.signal, f0);
    REQUIRE(gcis.size() > 50);

    std::size_t hits = 0;
    for (long truth : train.gci) {
        for (const Gci& g : gcis)
            if (std::abs(g.sample - truth) <= 4) {
                ++hits;
                break;
            }
    }
    CHECK(static_cast<double>(hits) / train.gci.size() >= 0.95);
}

TEST_CASE("detect_gci is amplitude invariant") {
    const int fs = 16000;
    testsup::PulseTrain train = testsup::lf_pulse_train(fs, 120.0, 0.6, 12, 0.01, 0.05);
    const F0Track f0 = constant_track(120.0, 0.6);
    const GciList base = detect_gci(train.signal, f0);
    Signal scaled = train.signal;
    for (double& v : scaled.samples) v *= 3.7;
    const GciList after = detect_gci(scaled, f0);
    REQUIRE(base.size() == after.size());
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i].sample == after[i].sample);
}

TEST_CASE("detect_gci spacing stays near the local period") {
    const int fs = 16000;
    const testsup::PulseTrain train = testsup::lf_pulse_train(fs, 110.0, 1.0, 6, 0.01, 0.1);
    const F0Track f0 = constant_track(110.0, 1.0);
    const GciList gcis = detect_gci(train.signal, f0);
    REQUIRE(gcis.size() > 20);
    for (std::size_t i = 1; i < gcis.size(); ++i) {
        const double gap = static_cast<double>(gcis[i].sample - gcis[i - 1].sample);
        CHECK(gap > 0.5 * gcis[i].period);
        CHECK(gap < 1.5 * gcis[i].period);
    }
}
