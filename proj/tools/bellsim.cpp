// bellsim: batch driver for the simulation pipeline.
//
//   simulate     recipe + protocol + seed -> dataset.csv (+ provenance)
//   analyze      dataset -> report.json / report.txt (statistics by flag)
//   replicate    many short runs -> violation-frequency summary
//   window-scan  click streams -> coincidence scan.csv
//   check-jp     pairwise table -> joint-distribution feasibility report
//   report       aggregate prior outputs in --out into one summary
//
// Exit codes: 0 ok, 1 domain error (valid request, impossible data/model
// combination), 2 config error (bad file, bad field, bad flag).

#include "bell/jp.hpp"
#include "bell/model_json.hpp"
#include "bell/processing.hpp"
#include "bell/protocols.hpp"
#include "bell/reports.hpp"
#include "bell/stats.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using bell::config_error;
using bell::domain_error;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string out = ".";
};

fs::path out_dir(const CommonOpts& c) { return fs::path(c.out); }

// Inputs named on the command line resolve against --out first (that is
// where a previous step put them), then against the working directory.
fs::path resolve_input(const std::string& given, const CommonOpts& c) {
    fs::path p(given);
    if (p.is_absolute()) return p;
    if (fs::exists(out_dir(c) / p)) return out_dir(c) / p;
    return p;
}

// Configs usually live next to the invocation, so try as-given first.
fs::path resolve_config(const std::string& given, const CommonOpts& c) {
    fs::path p(given);
    if (p.is_absolute() || fs::exists(p)) return p;
    if (fs::exists(out_dir(c) / p)) return out_dir(c) / p;
    return p;  // let the open fail with the name the user typed
}

json load_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in)
        throw config_error(std::string(what) + ": cannot open '" +
                           path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(std::string(what) + ": '" + path.string() +
                           "' is not valid JSON: " + e.what());
    }
    return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".")
                                                      : path.parent_path());
    std::ofstream outf(path, std::ios::binary);
    if (!outf)
        throw config_error("cannot write '" + path.string() + "'");
    outf << text;
}

void write_json_file(const fs::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

const json& require_field(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key))
        throw config_error(std::string(where) + ": missing field \"" + key +
                           "\"");
    return j[key];
}

std::uint64_t read_seed(const json& cfg, const char* where) {
    const json& s = require_field(cfg, "seed", where);
    if (!s.is_number_unsigned() && !s.is_number_integer())
        throw config_error(std::string(where) + ": \"seed\" must be a "
                           "non-negative integer");
    if (s.is_number_integer() && s.get<std::int64_t>() < 0)
        throw config_error(std::string(where) + ": \"seed\" must be a "
                           "non-negative integer");
    return s.get<std::uint64_t>();
}

std::int64_t read_count(const json& j, const char* key, const char* where) {
    if (!j.contains(key))
        throw config_error(std::string(where) + ": missing field \"" + key +
                           "\"");
    const json& v = j[key];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw config_error(std::string(where) + ": \"" + key +
                           "\" must be a non-negative integer");
    return v.get<std::int64_t>();
}

// A config names its model either inline ("recipe": {...}) or by file
// ("recipe_path"), resolved relative to the config's directory.
bell::Model model_from_config(const json& cfg, const fs::path& cfg_dir,
                              const CommonOpts& c, const char* where) {
    const bool inline_recipe = cfg.contains("recipe");
    const bool by_path = cfg.contains("recipe_path");
    if (inline_recipe == by_path)
        throw config_error(std::string(where) +
                           ": give exactly one of \"recipe\" or \"recipe_path\"");
    if (inline_recipe)
        return bell::model_from_recipe_json(json{{"recipe", cfg["recipe"]}});
    const std::string rel = cfg["recipe_path"].get<std::string>();
    fs::path p(rel);
    if (!p.is_absolute()) {
        if (fs::exists(cfg_dir / p))
            p = cfg_dir / p;
        else if (fs::exists(out_dir(c) / p))
            p = out_dir(c) / p;
    }
    return bell::load_recipe_file(p);
}

json dataset_section(const bell::Dataset& ds, const std::string& csv_name) {
    json d;
    d["csv"] = csv_name;
    d["kind"] = std::string(bell::dataset_kind_name(ds.kind));
    d["records"] = ds.size();
    if (ds.provenance.contains("model_id")) d["model_id"] = ds.provenance["model_id"];
    return d;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, const CommonOpts& c) {
    const fs::path cfg_path = resolve_config(config_path, c);
    const json cfg = load_json_file(cfg_path, "simulate config");
    const char* where = "simulate config";

    const bell::Model model =
        model_from_config(cfg, cfg_path.parent_path(), c, where);
    const std::uint64_t seed = read_seed(cfg, where);
    const std::string protocol =
        require_field(cfg, "protocol", where).get<std::string>();
    const json params = cfg.value("params", json::object());

    bell::Dataset ds;
    if (protocol == "contexts") {
        std::array<std::int64_t, 4> counts{};
        const json& cj = require_field(params, "counts", "simulate params");
        if (cj.is_number_integer()) {
            counts.fill(cj.get<std::int64_t>());
        } else if (cj.is_array() && cj.size() == 4) {
            for (std::size_t i = 0; i < 4; ++i) counts[i] = cj[i].get<std::int64_t>();
        } else {
            throw config_error("simulate params: \"counts\" must be an integer "
                               "or an array of four integers");
        }
        for (auto n : counts)
            if (n < 0)
                throw config_error("simulate params: counts must be >= 0");
        ds = bell::run_context_protocol(model, counts, seed);
    } else if (protocol == "spreadsheet") {
        ds = bell::run_spreadsheet_protocol(
            model, read_count(params, "rows", "simulate params"), seed);
    } else if (protocol == "timeseries") {
        const std::int64_t emissions =
            read_count(params, "emissions", "simulate params");
        if (!params.contains("spacing") || !params["spacing"].is_number())
            throw config_error("simulate params: missing field \"spacing\"");
        const double spacing = params["spacing"].get<double>();
        const bell::ScheduleSpec sched = bell::schedule_from_json(
            require_field(params, "schedule", "simulate params"),
            "simulate params.schedule");
        ds = bell::run_timeseries_protocol(model, emissions, spacing, sched, seed);
    } else {
        throw config_error(std::string(where) + ": unknown protocol '" +
                           protocol + "' (contexts, spreadsheet, timeseries)");
    }

    fs::create_directories(out_dir(c));
    bell::write_dataset(ds, out_dir(c) / "dataset.csv");
    std::cout << "wrote " << (out_dir(c) / "dataset.csv").string() << " ("
              << ds.size() << " records)\n";
    return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOpts {
    std::string data;
    bool post_select = false;
    bool chsh = false;
    bool eberhard = false;
    bool nosignaling = false;
    bool cbd = false;
    std::optional<double> window;
};

int cmd_analyze(const AnalyzeOpts& opt, const CommonOpts& c) {
    bell::Dataset ds = bell::load_dataset(resolve_input(opt.data, c));
    fs::create_directories(out_dir(c));

    json report;
    report["dataset"] = dataset_section(ds, opt.data);

    if (ds.kind == bell::DatasetKind::streams) {
        if (!opt.window)
            throw domain_error(
                "analyze: click streams carry no paired outcomes; pass "
                "--window to run coincidence matching first");
        ds = bell::match_coincidences(ds, *opt.window);
        bell::write_dataset(ds, out_dir(c) / "matched.csv");
        report["matching"] = bell::match_json(bell::match_summary(ds));
        report["matching"]["window"] = *opt.window;
        report["dataset"]["matched_csv"] = "matched.csv";
    } else if (opt.window) {
        throw config_error("analyze: --window only applies to click streams");
    }

    // The count inequality is a raw-data statistic: when post-selection is
    // also requested, take the counts before the zeros are dropped.
    if (opt.eberhard && ds.kind == bell::DatasetKind::raw)
        report["eberhard"] = bell::eberhard_json(bell::eberhard_from_dataset(ds));

    if (opt.post_select) {
        ds = bell::post_select(ds);
        report["post_selection"] =
            bell::post_selection_json(bell::post_selection_summary(ds));
        bell::write_dataset(ds, out_dir(c) / "final.csv");
        report["dataset"]["final_csv"] = "final.csv";
    }

    const bool defaults =
        !opt.chsh && !opt.eberhard && !opt.nosignaling && !opt.cbd;

    bell::CorrelationTable table =
        ds.kind == bell::DatasetKind::spreadsheet
            ? bell::spreadsheet_correlations(ds)
            : bell::estimate_correlations(ds);
    report["correlations"] = bell::correlations_json(table);
    if (!table.all_defined())
        std::cerr << "warning: some contexts have no data; dependent "
                     "statistics are undefined\n";

    if (defaults || opt.chsh) {
        const auto s = bell::chsh_from_table(table);
        report["chsh"] = bell::chsh_json(s);
        if (ds.kind == bell::DatasetKind::spreadsheet && s.defined)
            report["chsh"]["s_in_local_range"] =
                s.s_fixed >= -2.0 && s.s_fixed <= 2.0;
    }
    if (!report.contains("eberhard") &&
        (opt.eberhard || (defaults && ds.kind == bell::DatasetKind::raw)))
        report["eberhard"] = bell::eberhard_json(bell::eberhard_from_dataset(ds));
    if (defaults || opt.nosignaling)
        report["nosignaling"] = bell::signaling_json(bell::nosignaling_from_table(table));
    if (opt.cbd || (defaults && table.all_defined()))
        report["cbd"] = bell::cbd_json(bell::cbd_from_table(table));

    write_json_file(out_dir(c) / "report.json", report);
    const std::string text = bell::text_report(report);
    write_text_file(out_dir(c) / "report.txt", text);
    std::cout << text;
    return 0;
}

// --------------------------------------------------------------- replicate

int cmd_replicate(const std::string& config_path, const CommonOpts& c) {
    const fs::path cfg_path = resolve_config(config_path, c);
    const json cfg = load_json_file(cfg_path, "replicate config");
    const char* where = "replicate config";

    const bell::Model model =
        model_from_config(cfg, cfg_path.parent_path(), c, where);
    const std::uint64_t seed = read_seed(cfg, where);
    const json params = require_field(cfg, "params", where);
    const std::int64_t reps =
        read_count(params, "replications", "replicate params");

    const bool per_context = params.contains("n_per_context");
    const bool per_row = params.contains("rows");
    if (per_context == per_row)
        throw config_error("replicate params: give exactly one of "
                           "\"n_per_context\" (context protocol) or \"rows\" "
                           "(spreadsheet protocol)");

    bell::ViolationFrequency v;
    if (per_context)
        v = bell::violation_frequency(
            model, read_count(params, "n_per_context", "replicate params"),
            reps, seed);
    else
        v = bell::violation_frequency_rows(
            model, read_count(params, "rows", "replicate params"), reps, seed);

    fs::create_directories(out_dir(c));
    json j = bell::violation_json(v);
    j["model_id"] = model.id;
    j["seed"] = seed;
    j["protocol"] = per_context ? "contexts" : "spreadsheet";
    write_json_file(out_dir(c) / "replications.json", j);

    std::ostringstream csv;
    csv << "replications,n_per_context,count_ge,count_gt,frac_ge,frac_gt,"
           "wilson_se_ge\n";
    csv << v.replications << ',' << v.n_per_context << ',' << v.count_ge << ','
        << v.count_gt << ',' << bell::format_double(v.frac_ge) << ','
        << bell::format_double(v.frac_gt) << ','
        << bell::format_double(v.wilson_se_ge) << '\n';
    write_text_file(out_dir(c) / "replications.csv", csv.str());

    std::cout << "S_obs >= 2 in " << v.count_ge << "/" << v.replications
              << " replications (frac " << bell::format_double(v.frac_ge)
              << ", Wilson se " << bell::format_double(v.wilson_se_ge) << ")\n";
    return 0;
}

// ------------------------------------------------------------- window-scan

int cmd_window_scan(const std::string& config_path, const CommonOpts& c) {
    const fs::path cfg_path = resolve_config(config_path, c);
    const json cfg = load_json_file(cfg_path, "window-scan config");
    const char* where = "window-scan config";

    bell::Dataset streams;
    if (cfg.contains("data")) {
        streams = bell::load_dataset(
            resolve_input(cfg["data"].get<std::string>(), c));
        if (streams.kind != bell::DatasetKind::streams)
            throw domain_error("window-scan: '" +
                               cfg["data"].get<std::string>() +
                               "' is not a click-stream dataset");
    } else {
        const bell::Model model =
            model_from_config(cfg, cfg_path.parent_path(), c, where);
        const std::uint64_t seed = read_seed(cfg, where);
        const json params = require_field(cfg, "params", where);
        const std::int64_t emissions =
            read_count(params, "emissions", "window-scan params");
        if (!params.contains("spacing") || !params["spacing"].is_number())
            throw config_error("window-scan params: missing field \"spacing\"");
        const bell::ScheduleSpec sched = bell::schedule_from_json(
            require_field(params, "schedule", "window-scan params"),
            "window-scan params.schedule");
        streams = bell::run_timeseries_protocol(
            model, emissions, params["spacing"].get<double>(), sched, seed);
    }

    const bool in_params =
        cfg.contains("params") && cfg["params"].contains("windows");
    const json& wj = require_field(in_params ? cfg["params"] : cfg, "windows",
                                   "window-scan config");
    if (!wj.is_array() || wj.empty())
        throw config_error("window-scan config: \"windows\" must be a "
                           "non-empty array of positive numbers");
    std::vector<double> windows;
    for (const auto& w : wj) {
        if (!w.is_number() || w.get<double>() <= 0)
            throw config_error("window-scan config: \"windows\" must be a "
                               "non-empty array of positive numbers");
        windows.push_back(w.get<double>());
    }

    const auto rows = bell::window_scan(streams, windows);
    fs::create_directories(out_dir(c));
    bell::write_window_scan_csv(rows, out_dir(c) / "scan.csv");

    json out;
    out["rows"] = json::array();
    for (const auto& r : rows) {
        json e = json::array(), np = json::array();
        for (auto v : r.e) e.push_back(v);
        for (auto v : r.n_pairs) np.push_back(v);
        out["rows"].push_back({{"window", r.window},
                               {"retained_fraction", r.retained_fraction},
                               {"e", std::move(e)},
                               {"s_max", r.s_max},
                               {"n_pairs", std::move(np)}});
    }
    write_json_file(out_dir(c) / "scan.json", out);
    std::cout << "wrote " << (out_dir(c) / "scan.csv").string() << " ("
              << rows.size() << " windows)\n";
    return 0;
}

// ---------------------------------------------------------------- check-jp

int cmd_check_jp(const std::string& table_path, const CommonOpts& c) {
    const fs::path path = resolve_input(table_path, c);
    bell::PairwiseSystem sys;
    if (path.extension() == ".json")
        sys = bell::load_pairwise_json(path);
    else if (path.extension() == ".csv")
        sys = bell::load_pairwise_csv(path);
    else
        throw config_error("check-jp: '" + path.string() +
                           "' must be a .csv or .json table");

    const bell::JpResult res = bell::jp_feasible(sys);
    json report;
    report["table"] = table_path;
    report["jp"] = bell::jp_json(res);

    fs::create_directories(out_dir(c));
    write_json_file(out_dir(c) / "jp.json", report);
    const std::string text = bell::text_report(report);
    write_text_file(out_dir(c) / "jp.txt", text);
    std::cout << text;
    return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const CommonOpts& c) {
    json summary;
    std::ostringstream text;
    bool found = false;

    const fs::path report_path = out_dir(c) / "report.json";
    if (fs::exists(report_path)) {
        summary["analysis"] = load_json_file(report_path, "report");
        text << bell::text_report(summary["analysis"]);
        found = true;
    }
    const fs::path reps_path = out_dir(c) / "replications.json";
    if (fs::exists(reps_path)) {
        summary["violation_frequency"] = load_json_file(reps_path, "report");
        text << bell::text_report(
            json{{"violation_frequency", summary["violation_frequency"]}});
        found = true;
    }
    const fs::path scan_path = out_dir(c) / "scan.json";
    if (fs::exists(scan_path)) {
        const json scan = load_json_file(scan_path, "report");
        summary["window_scan"] = scan;
        text << "window scan\n";
        text << "  window  retained       S\n";
        for (const auto& r : scan["rows"]) {
            text << "  " << r["window"].dump() << "  "
                 << r["retained_fraction"].dump() << "  " << r["s_max"].dump()
                 << '\n';
        }
        text << '\n';
        found = true;
    }
    const fs::path jp_path = out_dir(c) / "jp.json";
    if (fs::exists(jp_path)) {
        const json jp = load_json_file(jp_path, "report");
        summary["jp"] = jp["jp"];
        text << bell::text_report(json{{"jp", jp["jp"]}});
        found = true;
    }

    if (!found)
        throw config_error("report: nothing to aggregate in '" +
                           out_dir(c).string() +
                           "' (expected report.json, replications.json, "
                           "scan.json, or jp.json)");

    write_json_file(out_dir(c) / "summary.json", summary);
    write_text_file(out_dir(c) / "summary.txt", text.str());
    std::cout << text.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bell-test simulation and analysis driver"};
    app.require_subcommand(1);

    CommonOpts common;
    AnalyzeOpts an;
    std::string config_path, table_path;
    double window_value = 0;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", common.out,
                        "Output directory (inputs resolve against it too)")
            ->capture_default_str();
    };

    auto* sim = app.add_subcommand("simulate", "Run a protocol on a recipe");
    sim->add_option("--config", config_path, "Experiment config JSON")
        ->required();
    add_out(sim);
    sim->callback([&] { cmd_simulate(config_path, common); });

    auto* ana = app.add_subcommand("analyze", "Compute statistics of a dataset");
    ana->add_option("--data", an.data, "Dataset CSV (relative to --out)")
        ->required();
    ana->add_flag("--post-select", an.post_select,
                  "Drop undetected trials before estimating");
    ana->add_flag("--chsh", an.chsh, "CHSH combinations");
    ana->add_flag("--eberhard", an.eberhard, "Count-based J (raw data only)");
    ana->add_flag("--nosignaling", an.nosignaling, "Marginal-consistency deltas");
    ana->add_flag("--cbd", an.cbd, "Cyclic-system contextuality check");
    auto* wopt = ana->add_option("--window", window_value,
                                 "Coincidence window for click streams");
    add_out(ana);
    ana->callback([&] {
        if (wopt->count()) an.window = window_value;
        cmd_analyze(an, common);
    });

    auto* rep = app.add_subcommand("replicate",
                                   "Violation frequency over many runs");
    rep->add_option("--config", config_path, "Replication config JSON")
        ->required();
    add_out(rep);
    rep->callback([&] { cmd_replicate(config_path, common); });

    auto* scan = app.add_subcommand("window-scan",
                                    "Coincidence-window scan of click streams");
    scan->add_option("--config", config_path, "Scan config JSON")->required();
    add_out(scan);
    scan->callback([&] { cmd_window_scan(config_path, common); });

    auto* jp = app.add_subcommand("check-jp",
                                  "Joint-distribution feasibility of a table");
    jp->add_option("--table", table_path, "Pairwise table (.csv or .json)")
        ->required();
    add_out(jp);
    jp->callback([&] { cmd_check_jp(table_path, common); });

    auto* agg = app.add_subcommand("report", "Aggregate prior outputs in --out");
    add_out(agg);
    agg->callback([&] { cmd_report(common); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
