#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eigenres/signal.hpp"

namespace eigenres {

struct EnvelopeConfig {
    int order = 24;
    double frame_len_ms = 25.0;
    double hop_ms = 5.0;
    double pre_emphasis = 0.0;

    int frame_len(int sample_rate) const {
        return std::max(2, static_cast<int>(std::lround(frame_len_ms * sample_rate / 1000.0)));
    }
    int hop(int sample_rate) const {
        return std::max(1, static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0)));
    }
};

// One all-pole record: coeffs = {1, a_1 .. a_p} with A(z) = 1 + sum a_i z^-i,
// gain = sqrt of the prediction error energy of the analysis frame.
struct EnvelopeRecord {
    std::vector<double> coeffs;
    double gain = 0.0;
};

struct EnvelopeTrack {
    std::vector<EnvelopeRecord> records;
};

namespace detail {

// Step-down recursion: true iff all reflection coefficients have |k| < 1,
// i.e. A(z) is minimum phase.
inline bool is_minimum_phase(const std::vector<double>& coeffs) {
    const int p = static_cast<int>(coeffs.size()) - 1;
    std::vector<double> a(coeffs.begin() + 1, coeffs.end());
    for (int m = p; m >= 1; --m) {
        const double k = a[m - 1];
        if (!(std::abs(k) < 1.0)) return false;
        std::vector<double> b(m - 1);
        const double d = 1.0 - k * k;
        for (int i = 0; i < m - 1; ++i) b[i] = (a[i] - k * a[m - 2 - i]) / d;
        a = std::move(b);
    }
    return true;
}

}  // namespace detail

// Autocorrelation method + Levinson-Durbin. The caller supplies the frame
// already windowed (or analyze_envelope does it). All-zero frames yield
// zero coefficients and zero gain.
inline EnvelopeRecord lpc_analyze(const Frame& frame, int order) {
    if (order < 0) throw std::invalid_argument("lpc_analyze: negative order");
    if (static_cast<int>(frame.size()) <= order)
        throw std::invalid_argument("lpc_analyze: frame shorter than order");

    const std::size_t n = frame.size();
    std::vector<double> r(order + 1, 0.0);
    for (int i = 0; i <= order; ++i)
        for (std::size_t t = static_cast<std::size_t>(i); t < n; ++t)
            r[i] += frame[t] * frame[t - i];

    EnvelopeRecord rec;
    rec.coeffs.assign(order + 1, 0.0);
    rec.coeffs[0] = 1.0;
    if (r[0] <= 0.0) {  // silent frame
        rec.gain = 0.0;
        return rec;
    }
    r[0] *= 1.0 + 1e-9;  // tiny ridge keeps the recursion well conditioned

    std::vector<double> a(order + 1, 0.0);
    double err = r[0];
    for (int m = 1; m <= order; ++m) {
        double acc = r[m];
        for (int i = 1; i < m; ++i) acc += a[i] * r[m - i];
        double k = -acc / err;
        k = std::min(0.999999, std::max(-0.999999, k));
        a[m] = k;
        for (int i = 1; i <= m / 2; ++i) {
            const double t = a[i] + k * a[m - i];
            a[m - i] += k * a[i];
            a[i] = t;
        }
        err *= 1.0 - k * k;
    }
    for (int i = 1; i <= order; ++i) rec.coeffs[i] = a[i];
    rec.gain = std::sqrt(std::max(0.0, err));
    return rec;
}

// Fixed-rate LPC track: Hamming frames of frame_len_ms every hop_ms,
// starting at sample 0. Enough records to cover the whole signal.
inline EnvelopeTrack analyze_envelope(const Signal& signal, const EnvelopeConfig& cfg) {
    const int flen = cfg.frame_len(signal.sample_rate);
    const int hop = cfg.hop(signal.sample_rate);
    if (cfg.order <= 0 || cfg.order >= flen)
        throw std::invalid_argument("analyze_envelope: order out of range for frame length");
    if (hop > flen) throw std::invalid_argument("analyze_envelope: hop exceeds frame length");

    const long n = static_cast<long>(signal.samples.size());
    const long n_records = std::max(1L, (n + hop - 1) / hop);

    std::vector<double> hamming(flen);
    for (int j = 0; j < flen; ++j)
        hamming[j] = 0.54 - 0.46 * std::cos(2.0 * M_PI * j / (flen - 1));

    std::vector<double> src = signal.samples;
    if (cfg.pre_emphasis > 0.0)
        for (long t = n - 1; t >= 1; --t) src[t] -= cfg.pre_emphasis * src[t - 1];

    EnvelopeTrack track;
    track.records.reserve(static_cast<std::size_t>(n_records));
    Frame frame(flen);
    for (long i = 0; i < n_records; ++i) {
        const long start = i * hop;
        for (int j = 0; j < flen; ++j) {
            const long t = start + j;
            frame[j] = (t < n) ? src[t] * hamming[j] : 0.0;
        }
        track.records.push_back(lpc_analyze(frame, cfg.order));
    }
    return track;
}

namespace detail {

// Per-sample coefficient interpolation between adjacent records. Record i is
// anchored at the center of its analysis frame; ends are held constant.
struct CoeffInterp {
    const EnvelopeTrack& track;
    double center0;
    double hop;
    int order;

    CoeffInterp(const EnvelopeTrack& t, const EnvelopeConfig& cfg, int sample_rate)
        : track(t),
          center0(cfg.frame_len(sample_rate) / 2.0),
          hop(cfg.hop(sample_rate)),
          order(static_cast<int>(t.records.empty() ? 0 : t.records.front().coeffs.size()) - 1) {}

    void at(long t, std::vector<double>& out) const {
        const double u = (static_cast<double>(t) - center0) / hop;
        const long n = static_cast<long>(track.records.size());
        long i = static_cast<long>(std::floor(u));
        double frac = u - static_cast<double>(i);
        if (i < 0) { i = 0; frac = 0.0; }
        if (i >= n - 1) { i = n - 1; frac = 0.0; }
        const std::vector<double>& a = track.records[static_cast<std::size_t>(i)].coeffs;
        if (frac == 0.0 || i + 1 >= n) {
            out = a;
            return;
        }
        const std::vector<double>& b = track.records[static_cast<std::size_t>(i + 1)].coeffs;
        out.resize(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) out[j] = (1.0 - frac) * a[j] + frac * b[j];
    }
};

inline void check_track(const Signal& signal, const EnvelopeTrack& track,
                        const EnvelopeConfig& cfg, const char* who) {
    if (track.records.empty()) throw std::invalid_argument(std::string(who) + ": empty track");
    const int hop = cfg.hop(signal.sample_rate);
    const long needed = std::max(1L, (static_cast<long>(signal.samples.size()) + hop - 1) / hop);
    if (static_cast<long>(track.records.size()) < needed)
        throw std::invalid_argument(std::string(who) + ": track does not cover signal");
    for (const auto& r : track.records)
        if (static_cast<int>(r.coeffs.size()) != cfg.order + 1)
            throw std::invalid_argument(std::string(who) + ": record order mismatch");
}

}  // namespace detail

// Applies the time-varying A(z): residual[t] = x[t] + sum a_i(t) x[t-i].
// Uses the same per-sample interpolated coefficients as synth_filter, so the
// two are exact inverses even with a varying track. Gain is not divided out.
inline Signal inverse_filter(const Signal& signal, const EnvelopeTrack& track,
                             const EnvelopeConfig& cfg) {
    detail::check_track(signal, track, cfg, "inverse_filter");
    detail::CoeffInterp interp(track, cfg, signal.sample_rate);
    const long n = static_cast<long>(signal.samples.size());
    Signal out;
    out.sample_rate = signal.sample_rate;
    out.samples.resize(static_cast<std::size_t>(n));
    std::vector<double> a;
    const std::vector<double>& x = signal.samples;
    for (long t = 0; t < n; ++t) {
        interp.at(t, a);
        double acc = x[t];
        const int p = static_cast<int>(a.size()) - 1;
        for (int i = 1; i <= p && i <= t; ++i) acc += a[i] * x[t - i];
        out.samples[static_cast<std::size_t>(t)] = acc;
    }
    return out;
}

// Applies the time-varying 1/A(z): y[t] = e[t] - sum a_i(t) y[t-i].
inline Signal synth_filter(const Signal& excitation, const EnvelopeTrack& track,
                           const EnvelopeConfig& cfg) {
    detail::check_track(excitation, track, cfg, "synth_filter");
    for (const auto& r : track.records) {
        bool all_zero = true;
        for (std::size_t i = 1; i < r.coeffs.size(); ++i)
            if (r.coeffs[i] != 0.0) { all_zero = false; break; }
        if (!all_zero && !detail::is_minimum_phase(r.coeffs))
            throw std::runtime_error("synth_filter: unstable envelope record");
    }
    detail::CoeffInterp interp(track, cfg, excitation.sample_rate);
    const long n = static_cast<long>(excitation.samples.size());
    Signal out;
    out.sample_rate = excitation.sample_rate;
    out.samples.resize(static_cast<std::size_t>(n));
    std::vector<double> a;
    std::vector<double>& y = out.samples;
    for (long t = 0; t < n; ++t) {
        interp.at(t, a);
        double acc = excitation.samples[static_cast<std::size_t>(t)];
        const int p = static_cast<int>(a.size()) - 1;
        for (int i = 1; i <= p && i <= t; ++i) acc -= a[i] * y[static_cast<std::size_t>(t - i)];
        y[static_cast<std::size_t>(t)] = acc;
    }
    return out;
}

}  // namespace eigenres
