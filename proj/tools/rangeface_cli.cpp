// rangeface: command line driver for the synthetic face recognition experiment.
//
//   rangeface pipeline --work run --subjects 100 --seed 1
//   rangeface synth --work run --set synth.landmark_noise=0.02
//   rangeface eval --scores a.csv b.csv --out report
//
// Exit codes: 0 ok, 2 usage, 3 data error, 4 numeric failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rangeface/config.hpp"
#include "rangeface/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
namespace rp = rangeface::pipeline;

struct CommonOptions {
    std::string work = "work";
    std::string config_file;
    std::vector<std::string> overrides;
    int threads = 0;
    std::optional<std::size_t> subjects;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("-w,--work", o.work, "work directory holding all stage artifacts")->capture_default_str();
    app->add_option("-c,--config", o.config_file, "config file with [section] key = value lines")->check(CLI::ExistingFile);
    app->add_option("-s,--set", o.overrides, "override one setting, e.g. --set fusion.scope=per_probe");
    app->add_option("-j,--threads", o.threads, "worker threads (sets RANGEFACE_THREADS)")->check(CLI::PositiveNumber);
    app->add_option("--subjects", o.subjects, "shortcut for --set synth.subjects=N");
    app->add_option("--seed", o.seed, "shortcut for --set synth.seed=N");
}

// Config file first, then --set overrides, then the shortcut flags.
rangeface::Config resolve(const CommonOptions& o) {
    rangeface::Config c;
    if (!o.config_file.empty()) rangeface::apply_config_text(c, rangeface::textio::read_file(o.config_file));
    for (const auto& s : o.overrides) rangeface::apply_override(c, s);
    if (o.subjects) c.synth.subjects = *o.subjects;
    if (o.seed) c.synth.seed = *o.seed;
    rangeface::validate(c);
    if (o.threads > 0) setenv("RANGEFACE_THREADS", std::to_string(o.threads).c_str(), 1);
    return c;
}

void timed(std::string_view name, const std::function<void()>& stage) {
    const auto t0 = std::chrono::steady_clock::now();
    stage();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::fprintf(stderr, "%-10s %.2f s\n", std::string(name).c_str(), dt.count());
}

void print_results(const rp::Layout& l) {
    std::cout << rangeface::textio::read_file(l.results());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal 3D face recognition on synthetic range scans"};
    app.require_subcommand(1);

    CommonOptions opts;
    using Stage = void (*)(const rangeface::Config&, const rp::Layout&);
    const std::vector<std::tuple<std::string, std::string, Stage>> stages{
        {"synth", "generate synthetic gallery and probe scans", rp::run_synth},
        {"preprocess", "crop, align and resample scans into range grids", rp::run_preprocess},
        {"train", "train shape, color and image subspaces on the gallery", rp::run_train},
        {"match", "score probes against the gallery with both metrics", rp::run_match},
        {"fuse", "normalize and fuse shape and color scores", rp::run_fuse},
    };
    std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
    for (const auto& [name, help, fn] : stages) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, opts);
        stage_cmds.emplace_back(sub, fn);
    }

    CLI::App* eval = app.add_subcommand("eval", "CMC, ROC and the results table");
    add_common(eval, opts);
    std::vector<std::string> score_files;
    std::string out_dir;
    eval->add_option("--scores", score_files, "evaluate these score CSVs instead of the work directory")->check(CLI::ExistingFile);
    eval->add_option("--out", out_dir, "output directory for --scores mode");

    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    add_common(pipeline, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(rangeface::ExitCode::usage);
    }

    try {
        const rangeface::Config config = resolve(opts);
        const rp::Layout layout{opts.work};
        for (const auto& [cmd, fn] : stage_cmds)
            if (cmd->parsed()) timed(cmd->get_name(), [&] { fn(config, layout); });
        if (eval->parsed()) {
            if (!score_files.empty()) {
                if (out_dir.empty()) throw rangeface::ConfigError("eval --scores needs --out");
                std::vector<fs::path> files(score_files.begin(), score_files.end());
                timed("eval", [&] {
                    rp::evaluate_files(files, out_dir, config.far_target, rp::stamp(config));
                });
                std::cout << rangeface::textio::read_file(fs::path(out_dir) / "results.csv");
            } else {
                timed("eval", [&] { rp::run_eval(config, layout); });
                print_results(layout);
            }
        }
        if (pipeline->parsed()) {
            const auto t0 = std::chrono::steady_clock::now();
            for (const auto& [cmd, fn] : stage_cmds) timed(cmd->get_name(), [&] { fn(config, layout); });
            timed("eval", [&] { rp::run_eval(config, layout); });
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            std::fprintf(stderr, "%-10s %.2f s\n", "total", dt.count());
            print_results(layout);
        }
    } catch (const rangeface::Error& e) {
        std::cerr << "rangeface: " << e.what() << "\n";
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "rangeface: " << e.what() << "\n";
        return static_cast<int>(rangeface::ExitCode::data);
    }
    return 0;
}
