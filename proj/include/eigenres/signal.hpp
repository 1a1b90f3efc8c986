#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eigenres {

// Mono audio at a known rate. Samples are nominally in [-1, 1].
struct Signal {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// A fixed-length chunk of samples with no attached rate. After pitch
// normalization the length itself is the time axis. The implicit center
// index is floor(len/2) throughout the library.
using Frame = std::vector<double>;

namespace detail {

inline double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

inline double bessel_i0(double x) {
    // Series expansion, converges quickly for the argument range we use.
    double sum = 1.0, term = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

inline double kaiser(double u, double beta) {
    // u in [-1, 1]
    const double t = 1.0 - u * u;
    if (t <= 0.0) return 0.0;
    return bessel_i0(beta * std::sqrt(t)) / bessel_i0(beta);
}

// splitmix64: tiny, seedable, identical everywhere.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform01() {
        // in (0, 1]
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }
};

}  // namespace detail

// w(j) = 0.5 * (1 - cos(2*pi*j / (n-1))), symmetric. n = 1 returns [1].
inline Frame hanning_window(std::size_t n) {
    if (n == 0) throw std::invalid_argument("hanning_window: n must be >= 1");
    if (n == 1) return Frame{1.0};
    Frame w(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j)
        w[j] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(j) / denom));
    // force exact symmetry
    for (std::size_t j = 0; j < n / 2; ++j) w[n - 1 - j] = w[j];
    return w;
}

// Band-limited resampling of a frame onto target_len points. The index axis
// [0, len-1] is mapped linearly onto [0, target_len-1]. Windowed-sinc kernel,
// 24 zero crossings per side, Kaiser beta = 9. Energy is not renormalized.
inline Frame resample_frame(const Frame& frame, std::size_t target_len) {
    const std::size_t len = frame.size();
    if (len < 2) throw std::invalid_argument("resample_frame: frame length must be >= 2");
    if (target_len < 2) throw std::invalid_argument("resample_frame: target_len must be >= 2");
    if (target_len == len) return frame;

    const double step = static_cast<double>(len - 1) / static_cast<double>(target_len - 1);
    const double scale = std::min(1.0, 1.0 / step);  // cutoff relative to source Nyquist
    const double half_width = 10.0 / scale;
    const double beta = 9.0;

    Frame out(target_len, 0.0);
    for (std::size_t j = 0; j < target_len; ++j) {
        const double x = static_cast<double>(j) * step;
        const long lo = std::max(0L, static_cast<long>(std::ceil(x - half_width)));
        const long hi = std::min(static_cast<long>(len) - 1,
                                 static_cast<long>(std::floor(x + half_width)));
        double acc = 0.0, wsum = 0.0;
        for (long n = lo; n <= hi; ++n) {
            const double t = x - static_cast<double>(n);
            const double k = detail::sinc(scale * t) * detail::kaiser(t / half_width, beta);
            acc += frame[static_cast<std::size_t>(n)] * k;
            wsum += k;
        }
        out[j] = (std::abs(wsum) > 1e-30) ? acc / wsum : 0.0;
    }
    return out;
}

// Gaussian noise, zero mean, unit variance. Pure function of (n, seed):
// splitmix64 stream through Box-Muller, platform independent.
inline Frame white_noise(std::size_t n, std::uint64_t seed) {
    Frame out(n);
    detail::SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = rng.uniform01();
        const double u2 = rng.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) out[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    return out;
}

// Sum frames into a buffer of total_len samples, frame i placed so that its
// center index floor(len/2) lands on centers[i]. Portions falling outside
// [0, total_len) are dropped silently.
inline std::vector<double> overlap_add(const std::vector<Frame>& frames,
                                       const std::vector<long>& centers,
                                       std::size_t total_len) {
    if (frames.size() != centers.size())
        throw std::invalid_argument("overlap_add: frames/centers size mismatch");
    std::vector<double> out(total_len, 0.0);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        const long off = centers[i] - static_cast<long>(f.size() / 2);
        for (std::size_t j = 0; j < f.size(); ++j) {
            const long t = off + static_cast<long>(j);
            if (t >= 0 && t < static_cast<long>(total_len)) out[static_cast<std::size_t>(t)] += f[j];
        }
    }
    return out;
}

}  // namespace eigenres
