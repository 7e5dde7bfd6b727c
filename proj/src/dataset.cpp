#include "bell/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bell {

std::string_view dataset_kind_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::raw: return "raw";
        case DatasetKind::final: return "final";
        case DatasetKind::spreadsheet: return "spreadsheet";
        case DatasetKind::streams: return "streams";
    }
    throw std::logic_error("dataset_kind_name: bad kind");
}

std::optional<DatasetKind> dataset_kind_from_name(std::string_view s) {
    for (auto k : {DatasetKind::raw, DatasetKind::final, DatasetKind::spreadsheet,
                   DatasetKind::streams})
        if (dataset_kind_name(k) == s) return k;
    return std::nullopt;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string format_timestamp(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", t);
    return buf;
}

void check_sign(int v, DatasetKind kind, std::size_t record) {
    const bool zero_ok =
        kind == DatasetKind::raw || kind == DatasetKind::spreadsheet;
    if (!valid_outcome(v) || (v == 0 && !zero_ok))
        throw config_error("dataset: outcome " + std::to_string(v) +
                           " not allowed in " +
                           std::string(dataset_kind_name(kind)) + " record " +
                           std::to_string(record));
}

}  // namespace

void validate_dataset(const Dataset& ds) {
    switch (ds.kind) {
        case DatasetKind::raw:
        case DatasetKind::final: {
            if (!ds.rows.empty() || !ds.events.empty())
                throw config_error("dataset: trial dataset carries non-trial rows");
            std::int64_t prev = -1;
            for (std::size_t i = 0; i < ds.trials.size(); ++i) {
                const auto& r = ds.trials[i];
                check_sign(r.a, ds.kind, i);
                check_sign(r.b, ds.kind, i);
                if (r.trial_index <= prev)
                    throw config_error(
                        "dataset: trial_index not strictly increasing at record " +
                        std::to_string(i));
                prev = r.trial_index;
            }
            break;
        }
        case DatasetKind::spreadsheet: {
            if (!ds.trials.empty() || !ds.events.empty())
                throw config_error("dataset: spreadsheet carries non-row records");
            std::int64_t prev = -1;
            for (std::size_t i = 0; i < ds.rows.size(); ++i) {
                const auto& r = ds.rows[i];
                for (int v : {int(r.a_x), int(r.a_xp), int(r.b_y), int(r.b_yp)})
                    check_sign(v, ds.kind, i);
                if (r.row <= prev)
                    throw config_error(
                        "dataset: row index not strictly increasing at record " +
                        std::to_string(i));
                prev = r.row;
            }
            break;
        }
        case DatasetKind::streams: {
            if (!ds.trials.empty() || !ds.rows.empty())
                throw config_error("dataset: streams carry non-event records");
            double prev = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < ds.events.size(); ++i) {
                const auto& e = ds.events[i];
                if (!valid_sign(e.sign))
                    throw config_error("dataset: stream sign must be ±1 at record " +
                                       std::to_string(i));
                if (slot_side(e.setting) != e.side)
                    throw config_error("dataset: setting does not belong to side "
                                       "at record " + std::to_string(i));
                if (e.t < prev)
                    throw config_error("dataset: timestamps decrease at record " +
                                       std::to_string(i));
                prev = e.t;
            }
            break;
        }
    }
}

std::filesystem::path provenance_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".provenance.json");
    return p;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path) {
    validate_dataset(ds);
    std::ofstream out(csv_path);
    if (!out)
        throw config_error("cannot write dataset file '" + csv_path.string() + "'");
    switch (ds.kind) {
        case DatasetKind::raw:
        case DatasetKind::final:
            out << "trial_index,context,a,b\n";
            for (const auto& r : ds.trials)
                out << r.trial_index << ',' << context_name(r.context) << ','
                    << int(r.a) << ',' << int(r.b) << '\n';
            break;
        case DatasetKind::spreadsheet:
            out << "row,a_x,a_xp,b_y,b_yp\n";
            for (const auto& r : ds.rows)
                out << r.row << ',' << int(r.a_x) << ',' << int(r.a_xp) << ','
                    << int(r.b_y) << ',' << int(r.b_yp) << '\n';
            break;
        case DatasetKind::streams:
            out << "side,timestamp,setting,sign\n";
            for (const auto& e : ds.events)
                out << side_name(e.side) << ',' << format_timestamp(e.t) << ','
                    << setting_name(e.setting) << ',' << int(e.sign) << '\n';
            break;
    }
    if (!out)
        throw config_error("failed writing dataset file '" + csv_path.string() + "'");
    out.close();

    nlohmann::json prov = ds.provenance;
    prov["dataset_kind"] = std::string(dataset_kind_name(ds.kind));
    const auto ppath = provenance_path_for(csv_path);
    std::ofstream pout(ppath);
    if (!pout)
        throw config_error("cannot write provenance file '" + ppath.string() + "'");
    pout << prov.dump(2) << "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw config_error(where + ": cannot parse integer '" + s + "'");
    return v;
}

double parse_float(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error(where + ": cannot parse number '" + s + "'");
    }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw config_error("cannot open dataset file '" + csv_path.string() + "'");
    const auto ppath = provenance_path_for(csv_path);
    std::ifstream pin(ppath);
    if (!pin)
        throw config_error("cannot open provenance file '" + ppath.string() +
                           "' (expected next to the CSV)");
    Dataset ds;
    try {
        pin >> ds.provenance;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("provenance file '" + ppath.string() + "': " + e.what());
    }
    const auto jkind = ds.provenance.find("dataset_kind");
    if (jkind == ds.provenance.end() || !jkind->is_string())
        throw config_error("provenance file '" + ppath.string() +
                           "': missing dataset_kind");
    const auto kind = dataset_kind_from_name(jkind->get<std::string>());
    if (!kind)
        throw config_error("provenance file '" + ppath.string() +
                           "': unknown dataset_kind '" +
                           jkind->get<std::string>() + "'");
    ds.kind = *kind;

    const std::string where = "dataset file '" + csv_path.string() + "'";
    std::string header;
    if (!std::getline(in, header))
        throw config_error(where + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    const std::string expected =
        ds.kind == DatasetKind::spreadsheet ? "row,a_x,a_xp,b_y,b_yp"
        : ds.kind == DatasetKind::streams   ? "side,timestamp,setting,sign"
                                            : "trial_index,context,a,b";
    if (header != expected)
        throw config_error(where + ": header '" + header + "' does not match '" +
                           expected + "' for a " +
                           std::string(dataset_kind_name(ds.kind)) + " dataset");

    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        const std::string at = where + " line " + std::to_string(lineno);
        switch (ds.kind) {
            case DatasetKind::raw:
            case DatasetKind::final: {
                if (f.size() != 4)
                    throw config_error(at + ": expected 4 fields");
                const auto ctx = context_from_name(f[1]);
                if (!ctx)
                    throw config_error(at + ": unknown context '" + f[1] + "'");
                ds.trials.push_back(
                    {parse_int(f[0], at), *ctx,
                     static_cast<std::int8_t>(parse_int(f[2], at)),
                     static_cast<std::int8_t>(parse_int(f[3], at))});
                break;
            }
            case DatasetKind::spreadsheet: {
                if (f.size() != 5)
                    throw config_error(at + ": expected 5 fields");
                ds.rows.push_back({parse_int(f[0], at),
                                   static_cast<std::int8_t>(parse_int(f[1], at)),
                                   static_cast<std::int8_t>(parse_int(f[2], at)),
                                   static_cast<std::int8_t>(parse_int(f[3], at)),
                                   static_cast<std::int8_t>(parse_int(f[4], at))});
                break;
            }
            case DatasetKind::streams: {
                if (f.size() != 4)
                    throw config_error(at + ": expected 4 fields");
                const auto side = side_from_name(f[0]);
                if (!side)
                    throw config_error(at + ": unknown side '" + f[0] + "'");
                const auto slot = setting_from_name(f[2]);
                if (!slot)
                    throw config_error(at + ": unknown setting '" + f[2] + "'");
                ds.events.push_back(
                    {*side, parse_float(f[1], at), *slot,
                     static_cast<std::int8_t>(parse_int(f[3], at))});
                break;
            }
        }
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace bell
