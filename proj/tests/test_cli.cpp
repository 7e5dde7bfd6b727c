#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_root() {
    const auto p = fs::temp_directory_path() / "bell_cli_tests";
    fs::create_directories(p);
    return p;
}

fs::path fresh_dir(const std::string& tag) {
    const auto p = scratch_root() / tag;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunResult run(const std::vector<std::string>& args,
              const std::string& env_prefix = "") {
    static int counter = 0;
    const auto out_file =
        scratch_root() / ("stdout_" + std::to_string(counter) + ".txt");
    const auto err_file =
        scratch_root() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = env_prefix + "'" + BELLSIM_PATH + "'";
    for (const auto& a : args) cmd += " '" + a + "'";
    cmd += " > '" + out_file.string() + "' 2> '" + err_file.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

void write_file(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

const std::string kRecipes = std::string(BELL_SOURCE_DIR) + "/recipes";

json contexts_config(const std::string& recipe, std::int64_t counts,
                     std::uint64_t seed) {
    return json{{"recipe_path", kRecipes + "/" + recipe + ".json"},
                {"protocol", "contexts"},
                {"seed", seed},
                {"params", {{"counts", counts}}}};
}

}  // namespace

TEST_CASE("a config without a seed is a config error naming the field") {
    const auto dir = fresh_dir("noseed");
    json cfg = contexts_config("demo_eq3", 10, 1);
    cfg.erase("seed");
    write_file(dir / "config.json", cfg.dump());
    const RunResult r = run({"simulate", "--config",
                             (dir / "config.json").string(), "--out",
                             dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("simulate is reproducible byte for byte, whatever the thread count") {
    const auto d1 = fresh_dir("rep1");
    const auto d2 = fresh_dir("rep2");
    const auto d3 = fresh_dir("rep3");
    const json cfg = contexts_config("demo_eq3", 3000, 55);
    for (const auto& d : {d1, d2, d3})
        write_file(d / "config.json", cfg.dump());

    CHECK(run({"simulate", "--config", (d1 / "config.json").string(), "--out",
               d1.string()})
              .code == 0);
    CHECK(run({"simulate", "--config", (d2 / "config.json").string(), "--out",
               d2.string()})
              .code == 0);
    CHECK(run({"simulate", "--config", (d3 / "config.json").string(), "--out",
               d3.string()},
              "BELL_THREADS=4 ")
              .code == 0);

    const std::string base = slurp(d1 / "dataset.csv");
    CHECK(!base.empty());
    CHECK(slurp(d2 / "dataset.csv") == base);
    CHECK(slurp(d3 / "dataset.csv") == base);
    CHECK(slurp(d2 / "dataset.provenance.json") ==
          slurp(d1 / "dataset.provenance.json"));
}

TEST_CASE("analyze writes a full report and the post-selected dataset") {
    const auto dir = fresh_dir("analyze");
    write_file(dir / "config.json", contexts_config("demo_eq3", 5000, 7).dump());
    REQUIRE(run({"simulate", "--config", (dir / "config.json").string(), "--out",
                 dir.string()})
                .code == 0);

    const RunResult r =
        run({"analyze", "--data", "dataset.csv", "--out", dir.string(),
             "--post-select", "--chsh", "--eberhard", "--nosignaling", "--cbd"});
    CHECK(r.code == 0);
    REQUIRE(fs::exists(dir / "report.json"));
    REQUIRE(fs::exists(dir / "report.txt"));
    REQUIRE(fs::exists(dir / "final.csv"));

    const json rep = read_json(dir / "report.json");
    for (const char* key : {"dataset", "correlations", "chsh", "eberhard",
                            "nosignaling", "cbd", "post_selection"})
        CHECK(rep.contains(key));
    CHECK(rep["chsh"]["defined"].get<bool>());
    // post-selected ternary demo: S above 2, and J stays a raw-data question
    CHECK(rep["chsh"]["s_max"].get<double>() > 2.0);
    const std::string text = slurp(dir / "report.txt");
    CHECK(text.find("chsh") != std::string::npos);

    // the count inequality must refuse post-selected input
    const RunResult bad = run({"analyze", "--data", "final.csv", "--out",
                               dir.string(), "--eberhard"});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("an empty dataset analyzes to defined-false statistics") {
    const auto dir = fresh_dir("empty");
    write_file(dir / "config.json", contexts_config("demo_eq3", 0, 3).dump());
    REQUIRE(run({"simulate", "--config", (dir / "config.json").string(), "--out",
                 dir.string()})
                .code == 0);
    const RunResult r =
        run({"analyze", "--data", "dataset.csv", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    const json rep = read_json(dir / "report.json");
    CHECK(!rep["chsh"]["defined"].get<bool>());
    CHECK(!rep["eberhard"]["defined"].get<bool>());
    CHECK(!rep.contains("cbd"));  // needs every context populated
}

TEST_CASE("click streams demand a window, then match and analyze cleanly") {
    const auto dir = fresh_dir("streams");
    const json cfg{{"recipe_path", kRecipes + "/demo_timetag.json"},
                   {"protocol", "timeseries"},
                   {"seed", 19},
                   {"params",
                    {{"emissions", 8000},
                     {"spacing", 1.0},
                     {"schedule", {{"kind", "random_per_epoch"}}}}}};
    write_file(dir / "config.json", cfg.dump());
    REQUIRE(run({"simulate", "--config", (dir / "config.json").string(), "--out",
                 dir.string()})
                .code == 0);

    const RunResult no_window =
        run({"analyze", "--data", "dataset.csv", "--out", dir.string()});
    CHECK(no_window.code == 1);
    CHECK(no_window.err.find("window") != std::string::npos);

    const RunResult ok = run({"analyze", "--data", "dataset.csv", "--out",
                              dir.string(), "--window", "0.5", "--post-select"});
    CHECK(ok.code == 0);
    REQUIRE(fs::exists(dir / "matched.csv"));
    REQUIRE(fs::exists(dir / "final.csv"));
    const json rep = read_json(dir / "report.json");
    CHECK(rep["matching"]["window"].get<double>() == 0.5);
    CHECK(rep["chsh"]["s_max"].get<double>() > 2.0);

    // --window on trial data is a usage error
    const auto dir2 = fresh_dir("window_misuse");
    write_file(dir2 / "config.json", contexts_config("demo_eq3", 10, 1).dump());
    REQUIRE(run({"simulate", "--config", (dir2 / "config.json").string(),
                 "--out", dir2.string()})
                .code == 0);
    CHECK(run({"analyze", "--data", "dataset.csv", "--out", dir2.string(),
               "--window", "0.5"})
              .code == 2);
}

TEST_CASE("window-scan produces the pinned CSV and a JSON twin") {
    const auto dir = fresh_dir("scan");
    const json cfg{{"recipe_path", kRecipes + "/demo_timetag.json"},
                   {"seed", 99},
                   {"params",
                    {{"emissions", 6000},
                     {"spacing", 1.0},
                     {"schedule", {{"kind", "random_per_epoch"}}}}},
                   {"windows", {0.5, 1.0}}};
    write_file(dir / "config.json", cfg.dump());
    const RunResult r = run({"window-scan", "--config",
                             (dir / "config.json").string(), "--out",
                             dir.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(dir / "scan.csv");
    CHECK(csv.rfind("window,retained_fraction,E_xy,E_xyp,E_xpy,E_xpyp,S", 0) ==
          0);
    const json scan = read_json(dir / "scan.json");
    REQUIRE(scan["rows"].size() == 2);
    CHECK(scan["rows"][1]["retained_fraction"].get<double>() == 1.0);
}

TEST_CASE("replicate writes the frequency table in both formats") {
    const auto dir = fresh_dir("replicate");
    const json cfg{{"recipe_path", kRecipes + "/saturating_mixture.json"},
                   {"seed", 1},
                   {"params", {{"replications", 400}, {"n_per_context", 50}}}};
    write_file(dir / "config.json", cfg.dump());
    const RunResult r = run({"replicate", "--config",
                             (dir / "config.json").string(), "--out",
                             dir.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(dir / "replications.csv");
    CHECK(csv.rfind("replications,n_per_context,count_ge,count_gt,frac_ge,"
                    "frac_gt,wilson_se_ge",
                    0) == 0);
    const json j = read_json(dir / "replications.json");
    CHECK(j["replications"].get<std::int64_t>() == 400);
    CHECK(j["model_id"].get<std::string>() == "saturating_mixture");
    CHECK(j["frac_ge"].get<double>() > 0.3);
    CHECK(j["frac_gt"].get<double>() < j["frac_ge"].get<double>());

    // both row and per-context counts at once is ambiguous
    json bad = cfg;
    bad["params"]["rows"] = 50;
    write_file(dir / "bad.json", bad.dump());
    CHECK(run({"replicate", "--config", (dir / "bad.json").string(), "--out",
               dir.string()})
              .code == 2);
}

TEST_CASE("check-jp decides a table file and names the verdict") {
    const auto dir = fresh_dir("jp");
    write_file(dir / "pr.csv",
               "context,p_pp,p_pm,p_mp,p_mm\n"
               "xy,1/2,0,0,1/2\n"
               "xyp,1/2,0,0,1/2\n"
               "xpy,1/2,0,0,1/2\n"
               "xpyp,0,1/2,1/2,0\n");
    const RunResult r = run(
        {"check-jp", "--table", (dir / "pr.csv").string(), "--out", dir.string()});
    CHECK(r.code == 0);
    const json rep = read_json(dir / "jp.json");
    CHECK(rep["jp"]["status"].get<std::string>() == "infeasible");
    CHECK(rep["jp"]["certificate"]["value_exact"].get<std::string>() == "4");
    const std::string text = slurp(dir / "jp.txt");
    CHECK(text.find("> 2") != std::string::npos);

    write_file(dir / "table.txt", "not a table");
    CHECK(run({"check-jp", "--table", (dir / "table.txt").string(), "--out",
               dir.string()})
              .code == 2);
}

TEST_CASE("report aggregates whatever earlier commands left behind") {
    const auto dir = fresh_dir("aggregate");
    write_file(dir / "config.json", contexts_config("demo_eq3", 2000, 5).dump());
    REQUIRE(run({"simulate", "--config", (dir / "config.json").string(), "--out",
                 dir.string()})
                .code == 0);
    REQUIRE(run({"analyze", "--data", "dataset.csv", "--out", dir.string()})
                .code == 0);
    const json rep_cfg{{"recipe_path", kRecipes + "/saturating_mixture.json"},
                       {"seed", 2},
                       {"params", {{"replications", 100}, {"n_per_context", 20}}}};
    write_file(dir / "rep.json", rep_cfg.dump());
    REQUIRE(run({"replicate", "--config", (dir / "rep.json").string(), "--out",
                 dir.string()})
                .code == 0);

    const RunResult r = run({"report", "--out", dir.string()});
    CHECK(r.code == 0);
    const json summary = read_json(dir / "summary.json");
    CHECK(summary.contains("analysis"));
    CHECK(summary.contains("violation_frequency"));
    CHECK(fs::exists(dir / "summary.txt"));

    const auto nothing = fresh_dir("aggregate_empty");
    CHECK(run({"report", "--out", nothing.string()}).code == 2);
}

TEST_CASE("usage errors exit with the config-error code") {
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"simulate", "--nope"}).code == 2);
    CHECK(run({}).code == 2);  // a subcommand is required
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"analyze", "--data", "/nonexistent/x.csv", "--out",
               scratch_root().string()})
              .code == 2);
}
