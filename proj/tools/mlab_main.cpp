#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "mlab/errors.hpp"
#include "mlab/experiments.hpp"

namespace {

// exit codes: 0 all checks pass (or inconclusive within the censoring cap),
// 1 a check failed, 2 configuration or runtime error
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitError = 2;

int do_list() {
    for (const auto& name : mlab::preset_names())
        std::printf("%-36s %s\n", name.c_str(), mlab::preset_summary(name).c_str());
    return kExitPass;
}

int do_validate(const std::string& config_path) {
    auto cfg = mlab::load_config_file(config_path);
    mlab::validate_config(cfg);
    std::printf("ok: %s (config hash %016llx)\n", cfg.at("experiment").c_str(),
                static_cast<unsigned long long>(mlab::config_hash(cfg)));
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mlab: Monte Carlo laboratory for rank-n radial martingales"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment, write report.json and stats.csv");
    std::string preset, config_path, out_dir = ".";
    std::uint64_t seed = 12345, paths = 0;
    int threads = 1;
    bool dump_paths = false, quiet = false;
    auto* opt_preset = run->add_option("--preset", preset, "builtin experiment name");
    auto* opt_config = run->add_option("--config", config_path, "key=value config file");
    opt_preset->excludes(opt_config);
    auto* opt_seed = run->add_option("--seed", seed, "master seed (default 12345)");
    run->add_option("--paths", paths, "override the configured path count");
    auto* opt_threads = run->add_option("--threads", threads, "worker threads (default 1)")
                            ->check(CLI::Range(1, 256));
    auto* opt_out = run->add_option("--out", out_dir, "output directory (default .)");
    auto* opt_dump = run->add_flag("--dump-paths", dump_paths, "also write per-path CSV traces");
    run->add_flag("--quiet", quiet, "suppress per-verdict output lines");

    auto* list = app.add_subcommand("list", "list builtin experiments");

    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    std::string validate_path;
    validate->add_option("--config", validate_path, "key=value config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitError;
    }

    try {
        if (list->parsed()) return do_list();
        if (validate->parsed()) return do_validate(validate_path);

        if (opt_preset->count() == 0 && opt_config->count() == 0)
            throw mlab::config_error("run needs --preset or --config");
        mlab::ExperimentConfig cfg = opt_preset->count()
                                         ? mlab::preset_config(preset)
                                         : mlab::load_config_file(config_path);

        mlab::RunOptions opt;
        // runtime keys in the file act as defaults; explicit flags win
        if (cfg.count("seed") && opt_seed->count() == 0)
            seed = static_cast<std::uint64_t>(std::stoull(cfg.at("seed")));
        if (cfg.count("threads") && opt_threads->count() == 0)
            threads = std::stoi(cfg.at("threads"));
        if (cfg.count("out") && opt_out->count() == 0) out_dir = cfg.at("out");
        if (cfg.count("dump_paths") && opt_dump->count() == 0)
            dump_paths = cfg.at("dump_paths") == "1" || cfg.at("dump_paths") == "true";
        opt.seed = seed;
        opt.threads = threads;
        opt.out_dir = out_dir;
        opt.dump_paths = dump_paths;
        opt.quiet = quiet;
        if (paths > 0) cfg["paths"] = std::to_string(paths);

        mlab::RunResult res = mlab::run_experiment(cfg, opt);
        if (!quiet)
            std::printf("verdict: %s [%s]  (report: %s/report.json)\n", res.verdict.c_str(),
                        res.passed ? "pass" : "FAIL", out_dir.c_str());
        return res.passed ? kExitPass : kExitFail;
    } catch (const mlab::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
}
