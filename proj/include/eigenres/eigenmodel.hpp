#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigenres/detail/binio.hpp"
#include "eigenres/pitch.hpp"
#include "eigenres/signal.hpp"

namespace eigenres {

struct FrameProvenance {
    int utterance = 0;
    int gci_index = 0;
    double period = 0.0;  // samples before normalization
    double energy = 0.0;  // L2 norm before normalization
};

// N unit-energy residual frames of m samples each: the PCA input.
struct ResidualFrameSet {
    std::size_t frame_len = 0;
    std::vector<Frame> frames;
    std::vector<FrameProvenance> provenance;
};

struct EigenModel {
    std::vector<double> mean;          // m
    std::vector<Frame> basis;          // r x m, orthonormal rows (eigenresiduals)
    std::vector<double> eigenvalues;   // r, non-increasing
    double f0_star = 0.0;
    std::uint32_t m = 0;
    std::uint32_t sample_rate = 0;
    std::uint32_t k_default = 0;

    std::size_t order() const { return basis.size(); }
};

struct ExtractedFrames {
    std::vector<Frame> frames;      // unit L2 norm, length m
    std::vector<double> gains;      // pre-normalization norms
    std::vector<std::size_t> gci_index;
    std::size_t skipped = 0;
};

inline std::uint32_t normalized_frame_len(int sample_rate, double f0_star) {
    if (f0_star <= 0.0) throw std::invalid_argument("normalized_frame_len: f0_star must be > 0");
    long m = 2 * std::lround(static_cast<double>(sample_rate) / f0_star);
    if (m % 2 != 0) ++m;
    return static_cast<std::uint32_t>(std::max(4L, m));
}

// Cuts a two-period window around each GCI, Hanning-windows it, resamples it
// onto m points and scales to unit energy. Frames running past the signal
// edges (or with negligible energy) are skipped and counted.
inline ExtractedFrames extract_frames(const Signal& residual, const GciList& gcis,
                                      std::uint32_t m) {
    if (m < 4 || m % 2 != 0) throw std::invalid_argument("extract_frames: m must be even, >= 4");
    ExtractedFrames out;
    const long n = static_cast<long>(residual.samples.size());
    for (std::size_t g = 0; g < gcis.size(); ++g) {
        const long T = std::lround(gcis[g].period);
        if (T < 2) { ++out.skipped; continue; }
        const long lo = gcis[g].sample - T;
        const long hi = gcis[g].sample + T;  // exclusive
        if (lo < 0 || hi > n) { ++out.skipped; continue; }

        Frame f(static_cast<std::size_t>(2 * T));
        const Frame w = hanning_window(static_cast<std::size_t>(2 * T));
        for (long j = 0; j < 2 * T; ++j)
            f[static_cast<std::size_t>(j)] =
                residual.samples[static_cast<std::size_t>(lo + j)] * w[static_cast<std::size_t>(j)];
        Frame r = resample_frame(f, m);
        double norm = 0.0;
        for (double v : r) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-6) { ++out.skipped; continue; }
        for (double& v : r) v /= norm;
        out.frames.push_back(std::move(r));
        out.gains.push_back(norm);
        out.gci_index.push_back(g);
    }
    return out;
}

// PCA of the mean-centered frame matrix via SVD (stable for N < m as well).
// Eigenvalues are squared singular values over N-1; eigenvector signs are
// fixed so the largest-magnitude element of each row is positive.
inline EigenModel compute_pca(const ResidualFrameSet& set) {
    const std::size_t n = set.frames.size();
    const std::size_t m = set.frame_len;
    if (n < 2) throw std::invalid_argument("compute_pca: need at least 2 frames");
    for (const Frame& f : set.frames) {
        if (f.size() != m) throw std::invalid_argument("compute_pca: frame length mismatch");
        for (double v : f)
            if (!std::isfinite(v)) throw std::invalid_argument("compute_pca: non-finite input");
    }

    Eigen::MatrixXd x(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) x(static_cast<long>(i), static_cast<long>(j)) = set.frames[i][j];

    EigenModel model;
    model.m = static_cast<std::uint32_t>(m);
    Eigen::RowVectorXd mean = x.colwise().mean();
    model.mean.assign(mean.data(), mean.data() + m);
    x.rowwise() -= mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const std::size_t r = std::min(n - 1, m);
    model.basis.resize(r);
    model.eigenvalues.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double s = svd.singularValues()(static_cast<long>(i));
        model.eigenvalues[i] = std::max(0.0, s * s / static_cast<double>(n - 1));
        Frame& v = model.basis[i];
        v.resize(m);
        for (std::size_t j = 0; j < m; ++j) v[j] = svd.matrixV()(static_cast<long>(j), static_cast<long>(i));
        // deterministic sign: largest |element| positive
        std::size_t arg = 0;
        for (std::size_t j = 1; j < m; ++j)
            if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
        if (v[arg] < 0.0)
            for (double& e : v) e = -e;
    }
    return model;
}

// Cumulative eigenvalue mass ratio. Zero total dispersion counts as 1.
inline double information_rate(const EigenModel& model, std::size_t k) {
    const std::size_t r = model.order();
    if (k > r) throw std::invalid_argument("information_rate: k out of range");
    double total = 0.0;
    for (double l : model.eigenvalues) total += l;
    if (total <= 0.0) return 1.0;
    double head = 0.0;
    for (std::size_t i = 0; i < k; ++i) head += model.eigenvalues[i];
    return head / total;
}

inline std::size_t select_k(const EigenModel& model, double threshold = 0.75) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("select_k: threshold out of range");
    const std::size_t r = model.order();
    for (std::size_t k = 0; k <= r; ++k)
        if (information_rate(model, k) >= threshold) return k;
    return r;
}

inline std::vector<double> project(const Frame& frame, const EigenModel& model, std::size_t k) {
    if (frame.size() != model.m) throw std::invalid_argument("project: frame length mismatch");
    if (k > model.order()) throw std::invalid_argument("project: k out of range");
    std::vector<double> coeffs(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double c = 0.0;
        const Frame& mu = model.basis[i];
        for (std::size_t j = 0; j < frame.size(); ++j) c += (frame[j] - model.mean[j]) * mu[j];
        coeffs[i] = c;
    }
    return coeffs;
}

// mean + sum c_i mu_i, without the unit-energy renormalization.
inline Frame reconstruct_raw(const std::vector<double>& coeffs, const EigenModel& model) {
    if (coeffs.size() > model.order())
        throw std::invalid_argument("reconstruct: too many coefficients");
    Frame f(model.mean);
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        for (std::size_t j = 0; j < f.size(); ++j) f[j] += coeffs[i] * model.basis[i][j];
    return f;
}

// Synthesis frames re-enter the unit-energy convention.
inline Frame reconstruct(const std::vector<double>& coeffs, const EigenModel& model) {
    Frame f = reconstruct_raw(coeffs, model);
    double norm = 0.0;
    for (double v : f) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 1e-12)
        for (double& v : f) v /= norm;
    return f;
}

// Model file: magic "EGRS", version u16=1, sample_rate u32, m u32, r u32,
// k_default u32, f0_star f64, then mean, eigenvalues, eigenresiduals as f64.
inline void save_model(const EigenModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_model: cannot open " + path);
    os.write("EGRS", 4);
    detail::put_u16(os, 1);
    detail::put_u32(os, model.sample_rate);
    detail::put_u32(os, model.m);
    detail::put_u32(os, static_cast<std::uint32_t>(model.order()));
    detail::put_u32(os, model.k_default);
    detail::put_f64(os, model.f0_star);
    for (double v : model.mean) detail::put_f64(os, v);
    for (double v : model.eigenvalues) detail::put_f64(os, v);
    for (const Frame& row : model.basis)
        for (double v : row) detail::put_f64(os, v);
    if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

inline EigenModel load_model(const std::string& path) {
    detail::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "EGRS", 4) != 0)
        throw std::runtime_error("load_model: not an eigenmodel file: " + path);
    const std::uint16_t version = r.u16();
    if (version != 1)
        throw std::runtime_error("load_model: unsupported version " + std::to_string(version));
    EigenModel model;
    model.sample_rate = r.u32();
    model.m = r.u32();
    const std::uint32_t rank = r.u32();
    model.k_default = r.u32();
    model.f0_star = r.f64();
    model.mean.resize(model.m);
    for (double& v : model.mean) v = r.f64();
    model.eigenvalues.resize(rank);
    for (double& v : model.eigenvalues) v = r.f64();
    model.basis.assign(rank, Frame(model.m));
    for (Frame& row : model.basis)
        for (double& v : row) v = r.f64();
    for (double v : model.mean)
        if (!std::isfinite(v)) throw std::runtime_error("load_model: NaN payload in " + path);
    for (double v : model.eigenvalues)
        if (!std::isfinite(v)) throw std::runtime_error("load_model: NaN payload in " + path);
    for (const Frame& row : model.basis)
        for (double v : row)
            if (!std::isfinite(v)) throw std::runtime_error("load_model: NaN payload in " + path);
    if (model.k_default > rank) throw std::runtime_error("load_model: k_default exceeds rank");
    return model;
}

}  // namespace eigenres
