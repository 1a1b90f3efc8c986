#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "eigenres/eigenmodel.hpp"
#include "eigenres/envelope.hpp"
#include "eigenres/pitch.hpp"
#include "eigenres/vocoder.hpp"

namespace eigenres {

struct TrainConfig {
    EnvelopeConfig env;
    PitchConfig pitch;
    double pca_threshold = 0.75;
};

struct TrainReport {
    std::size_t n_frames = 0;
    std::size_t skipped_frames = 0;
    std::uint32_t m = 0;
    double f0_star = 0.0;
    std::size_t r = 0;
    std::size_t k = 0;
};

// Corpus pipeline: inverse-filter every utterance, pool the voiced pitch
// histogram to fix F0* and the frame length m, then extract GCI-centered
// normalized frames from all residuals and run PCA over the pooled set.
inline std::pair<EigenModel, TrainReport> train_model(const std::vector<Signal>& corpus,
                                                      const TrainConfig& cfg = {}) {
    if (corpus.empty()) throw std::runtime_error("train_model: empty corpus");
    const int fs = corpus.front().sample_rate;
    for (const Signal& s : corpus)
        if (s.sample_rate != fs)
            throw std::runtime_error("train_model: mixed sample rates in corpus");

    std::vector<Signal> residuals;
    std::vector<F0Track> f0_tracks;
    residuals.reserve(corpus.size());
    f0_tracks.reserve(corpus.size());
    PitchHistogram pooled;
    bool have_hist = false;

    for (const Signal& utt : corpus) {
        EnvelopeTrack env = analyze_envelope(utt, cfg.env);
        residuals.push_back(inverse_filter(utt, env, cfg.env));
        f0_tracks.push_back(track_f0(utt, cfg.pitch));
        const F0Track& f0 = f0_tracks.back();
        bool any_voiced = false;
        for (const auto& r : f0.records)
            if (r.voiced) { any_voiced = true; break; }
        if (!any_voiced) continue;
        PitchHistogram h = build_histogram(f0, cfg.pitch.bin_width_hz);
        if (!have_hist) {
            pooled = h;
            have_hist = true;
        } else {
            // merge onto a common grid
            const double lo = std::min(pooled.lo, h.lo);
            const double hi = std::max(pooled.lo + pooled.bin_width * pooled.counts.size(),
                                       h.lo + h.bin_width * h.counts.size());
            PitchHistogram merged;
            merged.bin_width = pooled.bin_width;
            merged.lo = lo;
            merged.counts.assign(
                static_cast<std::size_t>(std::lround((hi - lo) / merged.bin_width)), 0.0);
            for (std::size_t i = 0; i < pooled.counts.size(); ++i)
                merged.counts[static_cast<std::size_t>(
                    std::lround((pooled.lo - lo) / merged.bin_width)) + i] += pooled.counts[i];
            for (std::size_t i = 0; i < h.counts.size(); ++i)
                merged.counts[static_cast<std::size_t>(
                    std::lround((h.lo - lo) / merged.bin_width)) + i] += h.counts[i];
            pooled = std::move(merged);
        }
    }
    if (!have_hist) throw std::runtime_error("train_model: no usable frames");

    TrainReport report;
    report.f0_star = normalized_pitch(pooled, cfg.pitch.upper_mass);
    report.m = normalized_frame_len(fs, report.f0_star);

    ResidualFrameSet set;
    set.frame_len = report.m;
    for (std::size_t u = 0; u < residuals.size(); ++u) {
        const GciList gcis = detect_gci(residuals[u], f0_tracks[u]);
        ExtractedFrames ex = extract_frames(residuals[u], gcis, report.m);
        report.skipped_frames += ex.skipped;
        for (std::size_t i = 0; i < ex.frames.size(); ++i) {
            set.provenance.push_back({static_cast<int>(u), static_cast<int>(ex.gci_index[i]),
                                      gcis[ex.gci_index[i]].period, ex.gains[i]});
            set.frames.push_back(std::move(ex.frames[i]));
        }
    }
    report.n_frames = set.frames.size();
    if (set.frames.size() < 2) throw std::runtime_error("train_model: no usable frames");

    EigenModel model = compute_pca(set);
    model.sample_rate = static_cast<std::uint32_t>(fs);
    model.f0_star = report.f0_star;
    report.r = model.order();
    report.k = std::max<std::size_t>(1, select_k(model, cfg.pca_threshold));
    model.k_default = static_cast<std::uint32_t>(report.k);
    return {std::move(model), report};
}

}  // namespace eigenres
