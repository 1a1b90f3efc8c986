#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigenres/detail/binio.hpp"
#include "eigenres/eigenmodel.hpp"
#include "eigenres/envelope.hpp"
#include "eigenres/fft.hpp"
#include "eigenres/pitch.hpp"
#include "eigenres/signal.hpp"

namespace eigenres {

// One pitch period of voiced excitation.
struct ExcitationRecord {
    double gci_time = 0.0;  // seconds
    double f0 = 0.0;        // Hz
    double gain = 0.0;      // frame norm at length m
    std::vector<double> pca_coeffs;
};

// An unvoiced stretch with one gain per 5 ms hop.
struct UnvoicedSegment {
    double start = 0.0;  // seconds
    double end = 0.0;
    std::vector<double> gains;
};

// The analysis <-> synthesis interchange object: everything the vocoder
// needs to rebuild an utterance.
struct ParameterTrack {
    std::uint32_t sample_rate = 0;
    std::uint32_t total_samples = 0;
    std::uint32_t k = 0;
    EnvelopeConfig env_cfg;
    EnvelopeTrack envelope;
    std::vector<ExcitationRecord> voiced;
    std::vector<UnvoicedSegment> unvoiced;
};

struct SynthConfig {
    std::uint64_t noise_seed = 0;
    enum class UnvoicedGain { analysis, unit } unvoiced_gain = UnvoicedGain::analysis;
    enum class Excitation { eigen, pulse } excitation = Excitation::eigen;
};

// Full analysis pipeline: envelope -> inverse filter -> F0 -> GCIs ->
// normalized frames -> PCA coefficients, plus per-hop unvoiced gains.
inline ParameterTrack analyze_utterance(const Signal& signal, const EigenModel& model,
                                        const EnvelopeConfig& env_cfg = {},
                                        const PitchConfig& pitch_cfg = {}) {
    if (static_cast<std::uint32_t>(signal.sample_rate) != model.sample_rate)
        throw std::invalid_argument("analyze_utterance: sample rate mismatch");

    ParameterTrack track;
    track.sample_rate = model.sample_rate;
    track.total_samples = static_cast<std::uint32_t>(signal.samples.size());
    track.k = model.k_default;
    track.env_cfg = env_cfg;
    track.envelope = analyze_envelope(signal, env_cfg);

    const Signal residual = inverse_filter(signal, track.envelope, env_cfg);
    const F0Track f0 = track_f0(signal, pitch_cfg);
    const GciList gcis = detect_gci(residual, f0);
    const ExtractedFrames ex = extract_frames(residual, gcis, model.m);

    const int fs = signal.sample_rate;
    for (std::size_t i = 0; i < ex.frames.size(); ++i) {
        const Gci& g = gcis[ex.gci_index[i]];
        ExcitationRecord rec;
        rec.gci_time = static_cast<double>(g.sample) / fs;
        rec.f0 = static_cast<double>(fs) / g.period;
        rec.gain = ex.gains[i];
        rec.pca_coeffs = project(ex.frames[i], model, model.k_default);
        track.voiced.push_back(std::move(rec));
    }

    // unvoiced runs of the F0 track, residual RMS per hop
    const long hop = std::max(1L, std::lround(pitch_cfg.hop_ms * fs / 1000.0));
    const long n = static_cast<long>(signal.samples.size());
    const long n_hops = static_cast<long>(f0.records.size());
    long h = 0;
    while (h < n_hops) {
        if (f0.records[static_cast<std::size_t>(h)].voiced) { ++h; continue; }
        const long h0 = h;
        while (h < n_hops && !f0.records[static_cast<std::size_t>(h)].voiced) ++h;
        UnvoicedSegment seg;
        seg.start = static_cast<double>(h0 * hop) / fs;
        seg.end = static_cast<double>(std::min(h * hop, n)) / fs;
        for (long i = h0; i < h; ++i) {
            const long a = i * hop;
            const long b = std::min(a + hop, n);
            double e = 0.0;
            for (long t = a; t < b; ++t) e += residual.samples[static_cast<std::size_t>(t)] *
                                               residual.samples[static_cast<std::size_t>(t)];
            seg.gains.push_back(b > a ? std::sqrt(e / static_cast<double>(b - a)) : 0.0);
        }
        if (seg.end > seg.start) track.unvoiced.push_back(std::move(seg));
    }
    return track;
}

namespace detail {

// Shared unvoiced path so the pulse and eigen excitations differ only in
// their voiced frames. Noise is seeded per segment from (seed, start sample)
// so outputs are deterministic and segment-local.
inline void add_unvoiced(std::vector<double>& out, const ParameterTrack& track,
                         const SynthConfig& cfg) {
    const int fs = static_cast<int>(track.sample_rate);
    const long hop_samples = std::max(1L, std::lround(0.005 * fs));
    const long fade = std::max(1L, std::lround(0.002 * fs));  // 2 ms boundary cross-fade
    const long n = static_cast<long>(out.size());

    for (const UnvoicedSegment& seg : track.unvoiced) {
        const long a = std::lround(seg.start * fs);
        const long b = std::min(n, static_cast<long>(std::lround(seg.end * fs)));
        if (b <= a) continue;
        const std::uint64_t seed = cfg.noise_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(a + 1));
        const Frame noise = white_noise(static_cast<std::size_t>(b - a), seed);
        for (long t = a; t < b; ++t) {
            double gain = 1.0;
            if (cfg.unvoiced_gain == SynthConfig::UnvoicedGain::analysis) {
                // piecewise-linear between hop gains
                const double u = static_cast<double>(t - a) / hop_samples - 0.5;
                const long i = static_cast<long>(std::floor(u));
                const double frac = u - static_cast<double>(i);
                const long ng = static_cast<long>(seg.gains.size());
                if (ng == 0) gain = 0.0;
                else {
                    const long i0 = std::max(0L, std::min(ng - 1, i));
                    const long i1 = std::max(0L, std::min(ng - 1, i + 1));
                    gain = (1.0 - frac) * seg.gains[static_cast<std::size_t>(i0)] +
                           frac * seg.gains[static_cast<std::size_t>(i1)];
                }
            }
            double ramp = 1.0;
            if (a > 0 && t - a < fade) ramp = static_cast<double>(t - a + 1) / static_cast<double>(fade);
            if (b < n && b - 1 - t < fade)
                ramp = std::min(ramp, static_cast<double>(b - t) / static_cast<double>(fade));
            out[static_cast<std::size_t>(t)] += noise[static_cast<std::size_t>(t - a)] * gain * ramp;
        }
    }
}

}  // namespace detail

// Eigenresidual excitation: each voiced record is rebuilt from its PCA
// coefficients, pitch-converted by resampling and overlap-added at its GCI.
inline Signal build_excitation_eigen(const ParameterTrack& track, const EigenModel& model,
                                     const SynthConfig& cfg = {}) {
    if (track.k > model.order())
        throw std::invalid_argument("build_excitation_eigen: track k exceeds model order");
    const int fs = static_cast<int>(track.sample_rate);
    Signal out;
    out.sample_rate = fs;
    out.samples.assign(track.total_samples, 0.0);
    if (track.total_samples == 0) return out;

    std::vector<Frame> frames;
    std::vector<long> centers;
    for (const ExcitationRecord& rec : track.voiced) {
        double f0 = rec.f0;
        if (f0 < model.f0_star / 2.0) f0 = model.f0_star / 2.0;  // clamp: period would exceed 2x normalization
        const long target = 2 * std::lround(static_cast<double>(fs) / f0);
        Frame f = reconstruct(rec.pca_coeffs, model);
        f = resample_frame(f, static_cast<std::size_t>(std::max(4L, target)));
        for (double& v : f) v *= rec.gain;
        frames.push_back(std::move(f));
        centers.push_back(std::lround(rec.gci_time * fs));
    }
    out.samples = overlap_add(frames, centers, track.total_samples);
    detail::add_unvoiced(out.samples, track, cfg);
    return out;
}

// Baseline excitation: one gain-scaled unit impulse per voiced record.
inline Signal build_excitation_pulse(const ParameterTrack& track, const SynthConfig& cfg = {}) {
    const int fs = static_cast<int>(track.sample_rate);
    Signal out;
    out.sample_rate = fs;
    out.samples.assign(track.total_samples, 0.0);
    if (track.total_samples == 0) return out;
    for (const ExcitationRecord& rec : track.voiced) {
        const long t = std::lround(rec.gci_time * fs);
        if (t >= 0 && t < static_cast<long>(track.total_samples))
            out.samples[static_cast<std::size_t>(t)] += rec.gain;
    }
    detail::add_unvoiced(out.samples, track, cfg);
    return out;
}

struct SynthResult {
    Signal signal;
    bool peak_normalized = false;
};

inline SynthResult synthesize(const ParameterTrack& track, const EigenModel* model,
                              const SynthConfig& cfg = {}) {
    Signal excitation;
    if (cfg.excitation == SynthConfig::Excitation::eigen) {
        if (model == nullptr)
            throw std::invalid_argument("synthesize: eigen excitation requires a model");
        excitation = build_excitation_eigen(track, *model, cfg);
    } else {
        excitation = build_excitation_pulse(track, cfg);
    }
    SynthResult res;
    if (excitation.samples.empty()) {
        res.signal = excitation;
        return res;
    }
    res.signal = synth_filter(excitation, track.envelope, track.env_cfg);
    double peak = 0.0;
    for (double v : res.signal.samples) peak = std::max(peak, std::abs(v));
    if (peak >= 1.0) {
        const double s = 0.9 / peak;
        for (double& v : res.signal.samples) v *= s;
        res.peak_normalized = true;
    }
    return res;
}

// Mean log-spectral distortion (dB) over voiced 25 ms frames, 0-5 kHz, with
// per-frame energy alignment and a -80 dB silence floor.
inline double log_spectral_distortion(const Signal& a, const Signal& b,
                                      const std::vector<bool>& voiced_mask) {
    if (a.samples.size() != b.samples.size() || a.sample_rate != b.sample_rate)
        throw std::invalid_argument("log_spectral_distortion: length mismatch");
    if (voiced_mask.size() != a.samples.size())
        throw std::invalid_argument("log_spectral_distortion: mask length mismatch");

    const int fs = a.sample_rate;
    const long flen = std::lround(0.025 * fs);
    const long hop = std::lround(0.010 * fs);
    const long n = static_cast<long>(a.samples.size());
    const std::size_t nfft = next_pow2(static_cast<std::size_t>(flen));
    const long kmax = std::min<long>(static_cast<long>(nfft / 2),
                                     std::lround(5000.0 * static_cast<double>(nfft) / fs));
    const Frame win = hanning_window(static_cast<std::size_t>(flen));
    const double floor_db = -80.0;

    double total = 0.0;
    long count = 0;
    std::vector<std::complex<double>> fa(nfft), fb(nfft);
    for (long start = 0; start + flen <= n; start += hop) {
        long voiced = 0;
        for (long t = start; t < start + flen; ++t)
            if (voiced_mask[static_cast<std::size_t>(t)]) ++voiced;
        if (2 * voiced <= flen) continue;

        for (std::size_t j = 0; j < nfft; ++j) {
            if (j < static_cast<std::size_t>(flen)) {
                fa[j] = a.samples[static_cast<std::size_t>(start) + j] * win[j];
                fb[j] = b.samples[static_cast<std::size_t>(start) + j] * win[j];
            } else {
                fa[j] = fb[j] = 0.0;
            }
        }
        fft(fa);
        fft(fb);
        // per-frame energy alignment over the evaluated band, then a silence
        // floor 80 dB under the frame peak
        double ea = 0.0, eb = 0.0, peak = 1e-30;
        for (long k = 1; k <= kmax; ++k) {
            const double ma = std::abs(fa[static_cast<std::size_t>(k)]);
            const double mb = std::abs(fb[static_cast<std::size_t>(k)]);
            ea += ma * ma;
            eb += mb * mb;
            peak = std::max(peak, ma);
        }
        if (ea <= 0.0 || eb <= 0.0) continue;
        const double align = std::sqrt(ea / eb);
        const double floor_mag = peak * std::pow(10.0, floor_db / 20.0);
        double sq = 0.0;
        for (long k = 1; k <= kmax; ++k) {
            const double ma = std::max(floor_mag, std::abs(fa[static_cast<std::size_t>(k)]));
            const double mb =
                std::max(floor_mag, align * std::abs(fb[static_cast<std::size_t>(k)]));
            const double d = 20.0 * std::log10(ma / mb);
            sq += d * d;
        }
        total += std::sqrt(sq / static_cast<double>(kmax));
        ++count;
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
}

// Per-sample voiced mask from the track's excitation records: a sample is
// voiced if it lies within one period of a voiced GCI.
inline std::vector<bool> voiced_mask_from_track(const ParameterTrack& track) {
    std::vector<bool> mask(track.total_samples, false);
    const int fs = static_cast<int>(track.sample_rate);
    for (const ExcitationRecord& rec : track.voiced) {
        const long c = std::lround(rec.gci_time * fs);
        const long T = rec.f0 > 0.0 ? std::lround(fs / rec.f0) : 0;
        for (long t = std::max(0L, c - T); t < std::min<long>(track.total_samples, c + T); ++t)
            mask[static_cast<std::size_t>(t)] = true;
    }
    return mask;
}

// Track file: magic "EGTK", version u16=1, sample_rate u32, k u32, envelope
// order u16, hop_ms f32, frame_len_ms f32, total_samples u32, counts, then
// the record arrays as f64.
inline void save_track(const ParameterTrack& track, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_track: cannot open " + path);
    os.write("EGTK", 4);
    detail::put_u16(os, 1);
    detail::put_u32(os, track.sample_rate);
    detail::put_u32(os, track.k);
    detail::put_u16(os, static_cast<std::uint16_t>(track.env_cfg.order));
    detail::put_f32(os, static_cast<float>(track.env_cfg.hop_ms));
    detail::put_f32(os, static_cast<float>(track.env_cfg.frame_len_ms));
    detail::put_u32(os, track.total_samples);
    detail::put_u32(os, static_cast<std::uint32_t>(track.envelope.records.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(track.voiced.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(track.unvoiced.size()));
    for (const EnvelopeRecord& r : track.envelope.records) {
        for (double v : r.coeffs) detail::put_f64(os, v);
        detail::put_f64(os, r.gain);
    }
    for (const ExcitationRecord& r : track.voiced) {
        detail::put_f64(os, r.gci_time);
        detail::put_f64(os, r.f0);
        detail::put_f64(os, r.gain);
        if (r.pca_coeffs.size() != track.k)
            throw std::runtime_error("save_track: inconsistent coefficient count");
        for (double v : r.pca_coeffs) detail::put_f64(os, v);
    }
    for (const UnvoicedSegment& s : track.unvoiced) {
        detail::put_f64(os, s.start);
        detail::put_f64(os, s.end);
        detail::put_u32(os, static_cast<std::uint32_t>(s.gains.size()));
        for (double v : s.gains) detail::put_f64(os, v);
    }
    if (!os) throw std::runtime_error("save_track: write failed for " + path);
}

inline ParameterTrack load_track(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "EGTK", 4) != 0)
        throw std::runtime_error("load_track: not a parameter track file: " + path);
    const std::uint16_t version = r.u16();
    if (version != 1)
        throw std::runtime_error("load_track: unsupported version " + std::to_string(version));
    ParameterTrack track;
    track.sample_rate = r.u32();
    track.k = r.u32();
    track.env_cfg.order = r.u16();
    track.env_cfg.hop_ms = r.f32();
    track.env_cfg.frame_len_ms = r.f32();
    track.total_samples = r.u32();
    const std::uint32_t n_env = r.u32();
    const std::uint32_t n_voiced = r.u32();
    const std::uint32_t n_unvoiced = r.u32();
    track.envelope.records.resize(n_env);
    for (EnvelopeRecord& rec : track.envelope.records) {
        rec.coeffs.resize(static_cast<std::size_t>(track.env_cfg.order) + 1);
        for (double& v : rec.coeffs) v = r.f64();
        rec.gain = r.f64();
    }
    track.voiced.resize(n_voiced);
    for (ExcitationRecord& rec : track.voiced) {
        rec.gci_time = r.f64();
        rec.f0 = r.f64();
        rec.gain = r.f64();
        rec.pca_coeffs.resize(track.k);
        for (double& v : rec.pca_coeffs) v = r.f64();
    }
    track.unvoiced.resize(n_unvoiced);
    for (UnvoicedSegment& seg : track.unvoiced) {
        seg.start = r.f64();
        seg.end = r.f64();
        seg.gains.resize(r.u32());
        for (double& v : seg.gains) v = r.f64();
    }
    return track;
}

// One row per excitation record: time,f0,gain,c1..ck.
inline std::string track_csv(const ParameterTrack& track) {
    std::ostringstream os;
    os << "time,f0,gain";
    for (std::uint32_t i = 1; i <= track.k; ++i) os << ",c" << i;
    os << "\n";
    os.precision(10);
    for (const ExcitationRecord& rec : track.voiced) {
        os << rec.gci_time << "," << rec.f0 << "," << rec.gain;
        for (double c : rec.pca_coeffs) os << "," << c;
        os << "\n";
    }
    return os.str();
}

}  // namespace eigenres
