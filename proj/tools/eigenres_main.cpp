#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "eigenres/eigenmodel.hpp"
#include "eigenres/envelope.hpp"
#include "eigenres/pitch.hpp"
#include "eigenres/train.hpp"
#include "eigenres/vocoder.hpp"
#include "eigenres/wav.hpp"

namespace fs = std::filesystem;
using namespace eigenres;

namespace {

struct RunConfig {
    TrainConfig train;
    std::uint64_t seed = 0;
    long k_override = -1;  // -1: use the model default

    static RunConfig from_file(const std::string& path) {
        RunConfig cfg;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config: expected key=value at line " +
                                         std::to_string(lineno));
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        auto num = [&](double lo, double hi) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(value, &used);
            } catch (const std::exception&) {
                throw std::runtime_error("config: bad value for " + key + ": " + value);
            }
            if (used != value.size() || v < lo || v > hi)
                throw std::runtime_error("config: bad value for " + key + ": " + value);
            return v;
        };
        if (key == "envelope.order") train.env.order = static_cast<int>(num(1, 128));
        else if (key == "envelope.frame_ms") train.env.frame_len_ms = num(1, 200);
        else if (key == "envelope.hop_ms") train.env.hop_ms = num(0.5, 100);
        else if (key == "envelope.pre_emphasis") train.env.pre_emphasis = num(0, 0.999);
        else if (key == "f0.min") train.pitch.f0_min = num(20, 1000);
        else if (key == "f0.max") train.pitch.f0_max = num(20, 2000);
        else if (key == "f0.hop_ms") train.pitch.hop_ms = num(0.5, 100);
        else if (key == "f0.voicing_threshold") train.pitch.voicing_threshold = num(0, 1);
        else if (key == "pitch.bin_width") train.pitch.bin_width_hz = num(0.1, 50);
        else if (key == "pitch.upper_mass") train.pitch.upper_mass = num(0.01, 1);
        else if (key == "pca.threshold") train.pca_threshold = num(0.01, 1);
        else if (key == "seed") seed = static_cast<std::uint64_t>(num(0, 1e18));
        else if (key == "k") k_override = static_cast<long>(num(1, 1e6));
        else throw std::runtime_error("config: unknown key: " + key);
    }
};

std::uint64_t env_seed_fallback(std::uint64_t cli_seed, bool cli_given) {
    if (cli_given) return cli_seed;
    if (const char* e = std::getenv("EIGENRES_SEED")) return std::strtoull(e, nullptr, 10);
    return cli_seed;
}

int run_train(const std::string& corpus_dir, const std::string& out_model, const RunConfig& cfg) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());

    std::vector<Signal> corpus;
    for (const std::string& f : files) {
        try {
            corpus.push_back(read_wav(f));
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << f << ": " << e.what() << "\n";
        }
    }
    if (corpus.empty()) {
        std::cerr << "error: no usable frames\n";
        return 2;
    }
    std::pair<EigenModel, TrainReport> trained;
    try {
        trained = train_model(corpus, cfg.train);
    } catch (const std::exception& e) {
        std::cerr << "error: no usable frames (" << e.what() << ")\n";
        return 2;
    }
    EigenModel& model = trained.first;
    const TrainReport& rep = trained.second;
    if (cfg.k_override > 0)
        model.k_default = static_cast<std::uint32_t>(
            std::min<long>(cfg.k_override, static_cast<long>(model.order())));

    std::cout << "N=" << rep.n_frames << " skipped=" << rep.skipped_frames << " m=" << rep.m
              << " f0_star=" << rep.f0_star << " r=" << rep.r << " k=" << model.k_default << "\n";
    std::cout << "k,I(k)\n";
    const std::size_t show = std::min<std::size_t>(model.order(), 2 * model.k_default + 5);
    for (std::size_t k = 1; k <= show; ++k)
        std::cout << k << "," << information_rate(model, k) << "\n";
    save_model(model, out_model);
    return 0;
}

int run_analyze(const std::string& wav, const std::string& model_path,
                const std::string& out_track, bool csv, const RunConfig& cfg) {
    const Signal signal = read_wav(wav);
    EigenModel model = load_model(model_path);
    if (static_cast<std::uint32_t>(signal.sample_rate) != model.sample_rate) {
        std::cerr << "error: sample rate mismatch\n";
        return 2;
    }
    if (cfg.k_override > 0)
        model.k_default = static_cast<std::uint32_t>(
            std::min<long>(cfg.k_override, static_cast<long>(model.order())));
    const ParameterTrack track = analyze_utterance(signal, model, cfg.train.env, cfg.train.pitch);
    save_track(track, out_track);
    if (csv) {
        std::ofstream os(out_track + ".csv");
        os << track_csv(track);
    }
    std::cout << "records=" << track.voiced.size() << " unvoiced_segments=" << track.unvoiced.size()
              << "\n";
    return 0;
}

int run_synth(const std::string& track_path, const std::string& model_path,
              const std::string& out_wav, const std::string& excitation, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.noise_seed = seed;
    cfg.excitation =
        excitation == "pulse" ? SynthConfig::Excitation::pulse : SynthConfig::Excitation::eigen;
    const ParameterTrack track = load_track(track_path);
    EigenModel model;
    const EigenModel* model_ptr = nullptr;
    if (cfg.excitation == SynthConfig::Excitation::eigen) {
        model = load_model(model_path);
        model_ptr = &model;
    }
    const SynthResult res = synthesize(track, model_ptr, cfg);
    if (res.peak_normalized) std::cerr << "warning: output peak-normalized to 0.9\n";
    write_wav(res.signal, out_wav);
    std::cout << "samples=" << res.signal.samples.size() << "\n";
    return 0;
}

int run_copysynth(const std::string& wav, const std::string& model_path,
                  const std::string& out_dir, std::uint64_t seed, const RunConfig& cfg) {
    const Signal signal = read_wav(wav);
    EigenModel model = load_model(model_path);
    if (static_cast<std::uint32_t>(signal.sample_rate) != model.sample_rate) {
        std::cerr << "error: sample rate mismatch\n";
        return 2;
    }
    if (cfg.k_override > 0)
        model.k_default = static_cast<std::uint32_t>(
            std::min<long>(cfg.k_override, static_cast<long>(model.order())));
    const ParameterTrack track = analyze_utterance(signal, model, cfg.train.env, cfg.train.pitch);

    SynthConfig scfg;
    scfg.noise_seed = seed;
    scfg.excitation = SynthConfig::Excitation::eigen;
    const SynthResult eigen_out = synthesize(track, &model, scfg);
    scfg.excitation = SynthConfig::Excitation::pulse;
    const SynthResult pulse_out = synthesize(track, nullptr, scfg);

    fs::create_directories(out_dir);
    const std::string stem = fs::path(wav).stem().string();
    write_wav(eigen_out.signal, (fs::path(out_dir) / (stem + "_eigen.wav")).string());
    write_wav(pulse_out.signal, (fs::path(out_dir) / (stem + "_pulse.wav")).string());

    const std::vector<bool> mask = voiced_mask_from_track(track);
    const double lsd_eigen = log_spectral_distortion(signal, eigen_out.signal, mask);
    const double lsd_pulse = log_spectral_distortion(signal, pulse_out.signal, mask);
    std::cout << "lsd_eigen=" << lsd_eigen << " lsd_pulse=" << lsd_pulse
              << " winner=" << (lsd_eigen <= lsd_pulse ? "eigen" : "pulse") << "\n";
    return 0;
}

int run_inspect(const std::string& model_path, const std::string& out_dir) {
    const EigenModel model = load_model(model_path);
    fs::create_directories(out_dir);

    std::ofstream ik((fs::path(out_dir) / "ik_curve.csv").string());
    ik << "k,I(k)\n";
    ik.precision(12);
    for (std::size_t k = 0; k <= model.order(); ++k)
        ik << k << "," << information_rate(model, k) << "\n";

    for (std::uint32_t i = 1; i <= model.k_default; ++i) {
        std::ofstream os(
            (fs::path(out_dir) / ("eigenresidual_" + std::to_string(i) + ".csv")).string());
        os.precision(12);
        for (double v : model.basis[i - 1]) os << v << "\n";
    }

    std::ostringstream summary;
    summary << "m=" << model.m << " r=" << model.order() << " f0_star=" << model.f0_star
            << " k_default=" << model.k_default;
    std::ofstream sf((fs::path(out_dir) / "summary.txt").string());
    sf << summary.str() << "\n";
    std::cout << summary.str() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"eigenresidual excitation vocoder"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value config file");

    std::string corpus_dir, model_path, wav_path, track_path, out_path, out_dir;
    std::string excitation = "eigen";
    std::uint64_t seed = 0;
    bool csv = false;

    CLI::App* train = app.add_subcommand("train", "build an eigenresidual model from a corpus");
    train->add_option("corpus_dir", corpus_dir)->required();
    train->add_option("out_model", out_path)->required();

    CLI::App* analyze = app.add_subcommand("analyze", "extract a parameter track from a wav");
    analyze->add_option("wav", wav_path)->required();
    analyze->add_option("model", model_path)->required();
    analyze->add_option("out_track", out_path)->required();
    analyze->add_flag("--csv", csv, "also write a CSV of the excitation records");

    CLI::App* synth = app.add_subcommand("synth", "synthesize speech from a parameter track");
    synth->add_option("track", track_path)->required();
    synth->add_option("out_wav", out_path)->required();
    synth->add_option("--model", model_path, "eigenresidual model (required for eigen excitation)");
    synth->add_option("--excitation", excitation)->check(CLI::IsMember({"eigen", "pulse"}));
    CLI::Option* seed_opt = synth->add_option("--seed", seed);

    CLI::App* copysynth = app.add_subcommand("copysynth", "analyze then resynthesize both ways");
    copysynth->add_option("wav", wav_path)->required();
    copysynth->add_option("model", model_path)->required();
    copysynth->add_option("out_dir", out_dir)->required();
    CLI::Option* cs_seed_opt = copysynth->add_option("--seed", seed);

    CLI::App* inspect = app.add_subcommand("inspect", "export model curves and waveforms as CSV");
    inspect->add_option("model", model_path)->required();
    inspect->add_option("out_dir", out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);

        if (train->parsed()) return run_train(corpus_dir, out_path, cfg);
        if (analyze->parsed()) return run_analyze(wav_path, model_path, out_path, csv, cfg);
        if (synth->parsed()) {
            if (excitation == "eigen" && model_path.empty()) {
                std::cerr << "error: --model is required with --excitation eigen\n";
                return 2;
            }
            return run_synth(track_path, model_path, out_path, excitation,
                             env_seed_fallback(seed, !seed_opt->empty()));
        }
        if (copysynth->parsed())
            return run_copysynth(wav_path, model_path, out_dir,
                                 env_seed_fallback(seed, !cs_seed_opt->empty()), cfg);
        if (inspect->parsed()) return run_inspect(model_path, out_dir);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        // input-shaped problems exit 2, everything else 1
        if (msg.find("config:") == 0 || msg.find("cannot open") != std::string::npos ||
            msg.find("not a") != std::string::npos || msg.find("unsupported") != std::string::npos ||
            msg.find("mismatch") != std::string::npos)
            return 2;
        return 1;
    }
    return 1;
}
