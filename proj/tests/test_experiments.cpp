#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "mlab/errors.hpp"
#include "mlab/experiments.hpp"

using namespace mlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() / (std::string("mlab_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("preset catalog is complete and self-consistent") {
    auto names = preset_names();
    std::set<std::string> set(names.begin(), names.end());
    CHECK(names.size() == 10);
    CHECK(set.count("transience-n3-euclidean") == 1);
    CHECK(set.count("transience-n2-hyperbolic") == 1);
    CHECK(set.count("transience-n2-log") == 1);
    CHECK(set.count("angle-convergence-hyperbolic-n2") == 1);
    CHECK(set.count("angle-threshold-n3") == 1);
    CHECK(set.count("angle-nonconvergence-euclidean-n2") == 1);
    CHECK(set.count("minimal-surface-helicoid") == 1);
    CHECK(set.count("minimal-surface-catenoid") == 1);
    CHECK(set.count("subriemannian-h3") == 1);
    CHECK(set.count("harmonic-evidence") == 1);
    for (const auto& n : names) {
        CHECK(!preset_summary(n).empty());
        ExperimentConfig cfg = preset_config(n);
        CHECK(cfg.at("experiment") == n);
        CHECK_NOTHROW(validate_config(cfg));
    }
    CHECK_THROWS_AS(preset_config("no-such-experiment"), config_error);
}

TEST_CASE("canonical form and hash ignore runtime keys only") {
    ExperimentConfig cfg = preset_config("transience-n3-euclidean");
    std::uint64_t h = config_hash(cfg);
    ExperimentConfig c2 = cfg;
    c2["seed"] = "999";
    c2["threads"] = "8";
    c2["out"] = "/tmp/x";
    CHECK(config_hash(c2) == h);
    ExperimentConfig c3 = cfg;
    c3["paths"] = "777";
    CHECK(config_hash(c3) != h);

    std::string canon = canonical_config(cfg);
    CHECK(canon.find("seed=") == std::string::npos);
    CHECK(canon.find("experiment=transience-n3-euclidean\n") != std::string::npos);
    // numeric values are normalized before hashing
    ExperimentConfig a = cfg, b = cfg;
    a["r_outer"] = "1e4";
    b["r_outer"] = "10000";
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(config_hash(a) == config_hash(b));
    // keys come out sorted, so map iteration order cannot leak in
    CHECK(canon.find("eta=") < canon.find("experiment="));
    CHECK(canon.find("experiment=") < canon.find("monitored="));
}

TEST_CASE("config files parse with comments and strict keys") {
    fs::path dir = temp_dir("cfg");
    fs::path file = dir / "exp.cfg";
    {
        std::ofstream out(file);
        out << "# transience check\n"
            << "experiment = transience-n3-euclidean\n"
            << "profile = euclidean   # pinned\n"
            << "policy=radial\n"
            << "n = 3\nm = 4\nr0 = 1\nr_outer = 1e4\n"
            << "monitored = 5\npairs = 1:10,1:30,1:100\n"
            << "paths = 10000\neta = 0.05\n\n";
    }
    ExperimentConfig cfg = load_config_file(file.string());
    CHECK(cfg.at("r_outer") == "1e4");
    CHECK_NOTHROW(validate_config(cfg));
    CHECK(config_hash(cfg) == config_hash(preset_config("transience-n3-euclidean")));

    {
        std::ofstream out(file);
        out << "experiment = transience-n3-euclidean\nn = 3\nn = 4\n";
    }
    CHECK_THROWS_AS(load_config_file(file.string()), config_error);
    {
        std::ofstream out(file);
        out << "just some words\n";
    }
    CHECK_THROWS_AS(load_config_file(file.string()), config_error);
    CHECK_THROWS_AS(load_config_file((dir / "absent.cfg").string()), config_error);
    fs::remove_all(dir);
}

TEST_CASE("validation names the offending key") {
    ExperimentConfig cfg = preset_config("transience-n3-euclidean");
    cfg["n"] = "5";
    cfg["m"] = "4";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("rank"), config_error);

    cfg = preset_config("transience-n3-euclidean");
    cfg["bogus"] = "1";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("bogus"), config_error);

    cfg = preset_config("transience-n3-euclidean");
    cfg.erase("pairs");
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("pairs"), config_error);

    cfg = preset_config("transience-n2-log");
    cfg["blend_radius"] = "0.5";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("blend_radius"), config_error);

    cfg = preset_config("transience-n3-euclidean");
    cfg["paths"] = "50";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("paths"), config_error);

    cfg = preset_config("angle-threshold-n3");
    cfg["c_diverge"] = "0.7";
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("c_diverge"), config_error);

    ExperimentConfig unknown;
    unknown["experiment"] = "mystery";
    CHECK_THROWS_AS(validate_config(unknown), config_error);
}

TEST_CASE("small runs are deterministic and write the full artifact set") {
    ExperimentConfig cfg = preset_config("transience-n3-euclidean");
    cfg["paths"] = "200";
    RunOptions opt;
    opt.seed = 99;
    opt.quiet = true;

    fs::path d1 = temp_dir("run1");
    opt.out_dir = d1.string();
    opt.dump_paths = true;
    RunResult r1 = run_experiment(cfg, opt);
    CHECK(r1.report.at("experiment") == "transience-n3-euclidean");
    CHECK(r1.report.at("batches").at(0).at("paths") == 200);
    CHECK(r1.report.at("master_seed") == 99);
    CHECK(fs::exists(d1 / "report.json"));
    CHECK(fs::exists(d1 / "stats.csv"));
    int dumps = 0;
    for (auto& e : fs::directory_iterator(d1))
        if (e.path().filename().string().rfind("path_", 0) == 0) ++dumps;
    CHECK(dumps > 0);
    CHECK(dumps <= 16);
    {
        std::ifstream in(d1 / ("path_main_0.csv"));
        REQUIRE(in.good());
        std::string header;
        std::getline(in, header);
        CHECK(header == "t,r,z");
    }

    // identical run, different directory and thread count: identical report
    // apart from the isolated timing block
    fs::path d2 = temp_dir("run2");
    opt.out_dir = d2.string();
    opt.threads = 2;
    opt.dump_paths = false;
    RunResult r2 = run_experiment(cfg, opt);
    nlohmann::ordered_json a = r1.report, b = r2.report;
    a.erase("timing");
    b.erase("timing");
    CHECK(a == b);

    // different seed changes the data
    opt.seed = 100;
    RunResult r3 = run_experiment(cfg, opt);
    nlohmann::ordered_json c = r3.report;
    c.erase("timing");
    CHECK(c != b);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("log preset writes the warp table next to the report") {
    ExperimentConfig cfg = preset_config("transience-n2-log");
    cfg["paths"] = "100";
    RunOptions opt;
    opt.quiet = true;
    fs::path d = temp_dir("warp");
    opt.out_dir = d.string();
    run_experiment(cfg, opt);
    std::ifstream in(d / "warp.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "r,G,Gprime");
    fs::remove_all(d);
}

TEST_CASE("pathwise drift sign harness sees an exact martingale as flat") {
    // f(r) = 1/r is harmonic for the flat rank-3 radial process, so the mean
    // in-region increment sum must be statistically zero from either side
    Verdict sup = run_drift_experiment(DriftFunctional::inv_r, 0.0,
                                       CurvatureProfile::euclidean(), 3, 4, 10.0, 2.0, 50.0,
                                       -1, 300, 71, 1, "inv_r_flat");
    CHECK(sup.passed);
    Verdict sub = run_drift_experiment(DriftFunctional::inv_r, 0.0,
                                       CurvatureProfile::euclidean(), 3, 4, 10.0, 2.0, 50.0,
                                       +1, 300, 71, 1, "inv_r_flat");
    CHECK(sub.passed);
    CHECK(sup.diagnostics.at("mean_increment_sum") == sub.diagnostics.at("mean_increment_sum"));
    CHECK_THROWS_AS(run_drift_experiment(DriftFunctional::inv_r, 0.0,
                                         CurvatureProfile::euclidean(), 3, 4, 1.0, 2.0, 50.0,
                                         -1, 300, 71, 1, "bad"),
                    config_error);
}
