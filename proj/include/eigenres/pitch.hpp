#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eigenres/signal.hpp"

namespace eigenres {

struct PitchConfig {
    double f0_min = 50.0;
    double f0_max = 400.0;
    double hop_ms = 5.0;
    double frame_ms = 40.0;
    double voicing_threshold = 0.3;
    double bin_width_hz = 2.0;
    double upper_mass = 0.8;
};

struct F0Record {
    double time = 0.0;  // seconds, frame center
    double f0 = 0.0;    // Hz, 0 when unvoiced
    bool voiced = false;
};

struct F0Track {
    std::vector<F0Record> records;
    double hop_s = 0.005;

    // nearest record for a sample time, clamped
    const F0Record& at_time(double t) const {
        if (records.empty()) throw std::logic_error("F0Track: empty");
        long i = static_cast<long>(std::lround(t / hop_s));
        i = std::max(0L, std::min(static_cast<long>(records.size()) - 1, i));
        return records[static_cast<std::size_t>(i)];
    }
};

struct PitchHistogram {
    double lo = 0.0;        // left edge of bin 0
    double bin_width = 2.0;
    std::vector<double> counts;

    double total() const {
        double s = 0.0;
        for (double c : counts) s += c;
        return s;
    }
    // Mass strictly above f, treating each bin as uniform.
    double mass_above(double f) const {
        const double t = total();
        if (t <= 0.0) return 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double a = lo + bin_width * static_cast<double>(i);
            const double b = a + bin_width;
            if (f <= a) s += counts[i];
            else if (f < b) s += counts[i] * (b - f) / bin_width;
        }
        return s / t;
    }
};

struct Gci {
    long sample = 0;      // index of the closure instant
    double period = 0.0;  // local period in samples, from the F0 track
};

using GciList = std::vector<Gci>;

// Normalized-autocorrelation F0 tracker with median smoothing (width 5).
// Voicing requires both a clear periodicity peak and non-negligible energy.
inline F0Track track_f0(const Signal& signal, const PitchConfig& cfg = {}) {
    const int fs = signal.sample_rate;
    if (fs < static_cast<int>(2.0 * cfg.f0_max * 4.0))
        throw std::invalid_argument("track_f0: sample rate too low for f0_max");

    const long hop = std::max(1L, std::lround(cfg.hop_ms * fs / 1000.0));
    const long flen = std::max(4L, std::lround(cfg.frame_ms * fs / 1000.0));
    const long lag_min = std::max(2L, static_cast<long>(std::floor(fs / cfg.f0_max)));
    const long lag_max = static_cast<long>(std::ceil(fs / cfg.f0_min));
    const long n = static_cast<long>(signal.samples.size());

    F0Track track;
    track.hop_s = static_cast<double>(hop) / fs;
    const std::vector<double>& x = signal.samples;

    // prefix sums of x^2 for O(1) segment energies
    std::vector<double> esum(static_cast<std::size_t>(n) + 1, 0.0);
    for (long t = 0; t < n; ++t) esum[t + 1] = esum[t] + x[t] * x[t];

    // noise floor from the median frame RMS: robust against loud transients
    // and crest-factor differences, so quiet voiced stretches survive the gate
    std::vector<double> frame_rms;
    for (long c = 0; c < n; c += hop) {
        const long start = std::max(0L, c - flen / 2);
        const long stop = std::min(n, start + flen);
        if (stop > start)
            frame_rms.push_back(
                std::sqrt((esum[stop] - esum[start]) / static_cast<double>(stop - start)));
    }
    std::vector<double> sorted_rms = frame_rms;
    std::sort(sorted_rms.begin(), sorted_rms.end());
    const double median_rms = sorted_rms.empty() ? 0.0 : sorted_rms[sorted_rms.size() / 2];
    const double rms_floor = std::max(1e-5, 0.1 * median_rms);

    for (long c = 0; c < n; c += hop) {
        F0Record rec;
        rec.time = static_cast<double>(c) / fs;
        const long start = std::max(0L, c - flen / 2);
        const long stop = std::min(n, start + flen);
        const long len = stop - start;

        const double e0 = esum[stop] - esum[start];
        const double rms = len > 0 ? std::sqrt(e0 / static_cast<double>(len)) : 0.0;

        if (rms > rms_floor && len > lag_min * 2) {
            const long max_lag = std::min(lag_max, len - 1);
            double best_val = 0.0;
            long best_lag = 0;
            std::vector<double> nac(static_cast<std::size_t>(max_lag + 1), 0.0);
            for (long lag = lag_min; lag <= max_lag; ++lag) {
                double num = 0.0;
                for (long t = start; t + lag < stop; ++t) num += x[t] * x[t + lag];
                const double ea = esum[stop - lag] - esum[start];
                const double eb = esum[stop] - esum[start + lag];
                const double den = std::sqrt(ea * eb);
                nac[static_cast<std::size_t>(lag)] = den > 1e-20 ? num / den : 0.0;
                if (nac[static_cast<std::size_t>(lag)] > best_val) {
                    best_val = nac[static_cast<std::size_t>(lag)];
                    best_lag = lag;
                }
            }
            if (best_val > cfg.voicing_threshold && best_lag > 0) {
                // prefer the shortest lag nearly as good as the best (octave guard)
                long lag = best_lag;
                for (long l = lag_min; l < best_lag; ++l) {
                    const std::size_t u = static_cast<std::size_t>(l);
                    const bool local_max = l > lag_min && l < max_lag &&
                                           nac[u] >= nac[u - 1] && nac[u] >= nac[u + 1];
                    if (local_max && nac[u] > 0.87 * best_val) { lag = l; break; }
                }
                // parabolic refinement
                double ref = static_cast<double>(lag);
                if (lag > lag_min && lag < max_lag) {
                    const std::size_t u = static_cast<std::size_t>(lag);
                    const double denom = nac[u - 1] - 2.0 * nac[u] + nac[u + 1];
                    if (std::abs(denom) > 1e-20) {
                        const double d = 0.5 * (nac[u - 1] - nac[u + 1]) / denom;
                        if (std::abs(d) < 1.0) ref += d;
                    }
                }
                rec.f0 = static_cast<double>(fs) / ref;
                rec.voiced = true;
            }
        }
        track.records.push_back(rec);
    }

    // median filter (width 5) over the raw f0 values, unvoiced counted as 0
    const long m = static_cast<long>(track.records.size());
    std::vector<double> filtered(static_cast<std::size_t>(m), 0.0);
    for (long i = 0; i < m; ++i) {
        double w[5];
        int k = 0;
        for (long j = i - 2; j <= i + 2; ++j)
            w[k++] = (j >= 0 && j < m) ? track.records[static_cast<std::size_t>(j)].f0
                                       : track.records[static_cast<std::size_t>(i)].f0;
        std::sort(w, w + 5);
        filtered[static_cast<std::size_t>(i)] = w[2];
    }
    for (long i = 0; i < m; ++i) {
        F0Record& r = track.records[static_cast<std::size_t>(i)];
        r.f0 = filtered[static_cast<std::size_t>(i)];
        r.voiced = r.f0 > 0.0;
        if (r.voiced && (r.f0 < cfg.f0_min || r.f0 > cfg.f0_max)) {
            r.f0 = 0.0;
            r.voiced = false;
        }
    }
    return track;
}

// Histogram over voiced frames only; bin edges aligned to multiples of the
// bin width so integral pitch values land on edges.
inline PitchHistogram build_histogram(const F0Track& track, double bin_width_hz = 2.0) {
    if (bin_width_hz <= 0.0) throw std::invalid_argument("build_histogram: bad bin width");
    double lo = 1e30, hi = -1e30;
    for (const auto& r : track.records)
        if (r.voiced) {
            lo = std::min(lo, r.f0);
            hi = std::max(hi, r.f0);
        }
    if (hi < lo) throw std::runtime_error("build_histogram: no voiced frames");

    PitchHistogram h;
    h.bin_width = bin_width_hz;
    h.lo = std::floor(lo / bin_width_hz) * bin_width_hz;
    const std::size_t nbins =
        static_cast<std::size_t>(std::floor((hi - h.lo) / bin_width_hz)) + 1;
    h.counts.assign(nbins, 0.0);
    for (const auto& r : track.records)
        if (r.voiced) {
            std::size_t i = static_cast<std::size_t>((r.f0 - h.lo) / bin_width_hz);
            i = std::min(i, nbins - 1);
            h.counts[i] += 1.0;
        }
    return h;
}

// Smallest F0* with mass above it equal to upper_mass: the (1 - upper_mass)
// quantile, linearly interpolated within its bin.
inline double normalized_pitch(const PitchHistogram& hist, double upper_mass = 0.8) {
    if (upper_mass <= 0.0 || upper_mass > 1.0)
        throw std::invalid_argument("normalized_pitch: upper_mass out of range");
    const double total = hist.total();
    if (total <= 0.0) throw std::runtime_error("normalized_pitch: empty histogram");
    const double target = (1.0 - upper_mass) * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double edge = hist.lo + hist.bin_width * static_cast<double>(i);
        if (cum + hist.counts[i] >= target) {
            if (hist.counts[i] <= 0.0) return edge;
            return edge + hist.bin_width * (target - cum) / hist.counts[i];
        }
        cum += hist.counts[i];
    }
    return hist.lo + hist.bin_width * static_cast<double>(hist.counts.size());
}

// Hanning-weighted center of gravity of signal energy around `center`:
// sum n*w(n)*s^2 / sum w(n)*s^2 for n in [-L/2, L/2]. Polarity and
// amplitude invariant by construction. Returns 0 on (near) silence.
inline double compute_cog(const Signal& signal, long center, long window_len) {
    if (window_len < 1) throw std::invalid_argument("compute_cog: window_len must be >= 1");
    const Frame w = hanning_window(static_cast<std::size_t>(window_len));
    const long half = window_len / 2;
    const long n = static_cast<long>(signal.samples.size());
    double num = 0.0, den = 0.0;
    for (long j = 0; j < window_len; ++j) {
        const long off = j - half;
        const long t = center + off;
        if (t < 0 || t >= n) continue;
        const double e = w[static_cast<std::size_t>(j)] * signal.samples[static_cast<std::size_t>(t)] *
                         signal.samples[static_cast<std::size_t>(t)];
        num += static_cast<double>(off) * e;
        den += e;
    }
    return den < 1e-12 ? 0.0 : num / den;
}

// GCI detection on the residual: slide the CoG at 1-sample hop inside voiced
// regions (window ~1.1 local periods, forced odd), take positive-to-negative
// zero crossings, refine each candidate to the strongest |residual| sample
// within a quarter period, then merge candidates closer than half a period.
inline GciList detect_gci(const Signal& residual, const F0Track& f0) {
    const long n = static_cast<long>(residual.samples.size());
    GciList out;
    if (n == 0 || f0.records.empty()) return out;
    const int fs = residual.sample_rate;

    auto local_period = [&](long t) -> double {
        const F0Record& r = f0.at_time(static_cast<double>(t) / fs);
        return r.voiced ? static_cast<double>(fs) / r.f0 : 0.0;
    };

    // voiced runs at sample resolution
    long t = 0;
    while (t < n) {
        if (local_period(t) <= 0.0) { ++t; continue; }
        long run_start = t;
        while (t < n && local_period(t) > 0.0) ++t;
        const long run_end = t;  // exclusive

        std::vector<long> candidates;
        double prev_cog = 0.0;
        bool have_prev = false;
        Frame w;
        long cached_wlen = -1;
        for (long c = run_start; c < run_end; ++c) {
            const double T = local_period(c);
            long wlen = std::lround(1.1 * T);
            if (wlen % 2 == 0) ++wlen;
            if (wlen != cached_wlen) {
                w = hanning_window(static_cast<std::size_t>(wlen));
                cached_wlen = wlen;
            }
            const long half = wlen / 2;
            double num = 0.0, den = 0.0;
            const long jlo = std::max(0L, half - c);
            const long jhi = std::min(wlen, n - c + half);
            for (long j = jlo; j < jhi; ++j) {
                const long off = j - half;
                const double s = residual.samples[static_cast<std::size_t>(c + off)];
                const double e = w[static_cast<std::size_t>(j)] * s * s;
                num += static_cast<double>(off) * e;
                den += e;
            }
            const double cog = den < 1e-12 ? 0.0 : num / den;
            if (have_prev && prev_cog > 0.0 && cog <= 0.0) candidates.push_back(c);
            prev_cog = cog;
            have_prev = true;
        }

        for (long cand : candidates) {
            const double T = local_period(cand);
            const long radius = std::max(1L, std::lround(0.25 * T));
            long best = cand;
            double best_amp = -1.0;
            for (long s = std::max(run_start, cand - radius);
                 s <= std::min(run_end - 1, cand + radius); ++s) {
                const double amp = std::abs(residual.samples[static_cast<std::size_t>(s)]);
                if (amp > best_amp) {
                    best_amp = amp;
                    best = s;
                }
            }
            const double period = local_period(best);
            if (!out.empty() && out.back().sample >= run_start &&
                static_cast<double>(best - out.back().sample) < 0.5 * period) {
                // keep the stronger of the two
                const double prev_amp =
                    std::abs(residual.samples[static_cast<std::size_t>(out.back().sample)]);
                if (best_amp > prev_amp) out.back() = {best, period};
            } else if (out.empty() || best > out.back().sample) {
                out.push_back({best, period});
            }
        }
    }
    return out;
}

}  // namespace eigenres
