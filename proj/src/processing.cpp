#include "bell/processing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bell {

Dataset match_coincidences(const Dataset& streams, double window) {
    if (streams.kind != DatasetKind::streams)
        throw domain_error("match_coincidences: dataset is not click streams");
    if (!(window > 0) || !std::isfinite(window))
        throw config_error("match_coincidences: window must be a positive number");
    const TimeseriesInfo info = timeseries_info(streams.provenance);
    const auto schedule =
        materialize_schedule(info.schedule, info.emissions, info.seed);

    // Per-side event lists inherit time order from the dataset.
    std::array<std::vector<const ClickEvent*>, 2> side_events;
    for (const auto& e : streams.events)
        side_events[idx(e.side)].push_back(&e);

    Dataset out;
    out.kind = DatasetKind::raw;
    out.trials.resize(static_cast<std::size_t>(info.emissions));
    const double half = window / 2;
    std::array<std::size_t, 2> cursor{0, 0};
    std::int64_t claimed_total = 0;

    for (std::int64_t e = 0; e < info.emissions; ++e) {
        const double center = static_cast<double>(e) * info.spacing;
        const double lo = center - half, hi = center + half;
        const auto [sa, sb] = schedule[static_cast<std::size_t>(e)];
        std::array<std::int8_t, 2> outcome{0, 0};
        for (Side side : {Side::alice, Side::bob}) {
            auto& cur = cursor[idx(side)];
            const auto& events = side_events[idx(side)];
            // Events before the window can never be claimed again: windows
            // only move right.
            while (cur < events.size() && events[cur]->t < lo) ++cur;
            if (cur < events.size() && events[cur]->t <= hi) {
                const ClickEvent& ev = *events[cur];
                const SettingSlot expected =
                    make_slot(side, side == Side::alice ? sa : sb);
                if (ev.setting != expected)
                    throw domain_error(
                        "match_coincidences: event at t=" + std::to_string(ev.t) +
                        " has setting " + std::string(setting_name(ev.setting)) +
                        " but the schedule says " +
                        std::string(setting_name(expected)) +
                        " — streams and provenance disagree");
                outcome[idx(side)] = ev.sign;
                ++cur;
                ++claimed_total;
            }
        }
        out.trials[static_cast<std::size_t>(e)] = {
            e, make_context(sa, sb), outcome[0], outcome[1]};
    }

    MatchSummary s;
    s.epochs = info.emissions;
    for (const auto& t : out.trials) {
        const bool a = t.a != 0, b = t.b != 0;
        s.both += a && b;
        s.alice_only += a && !b;
        s.bob_only += !a && b;
        s.neither += !a && !b;
    }
    s.unclaimed_events =
        static_cast<std::int64_t>(streams.events.size()) - claimed_total;

    out.provenance = streams.provenance;
    out.provenance["processing"] = {
        {"matched",
         {{"window", window},
          {"epochs", s.epochs},
          {"both", s.both},
          {"alice_only", s.alice_only},
          {"bob_only", s.bob_only},
          {"neither", s.neither},
          {"unclaimed_events", s.unclaimed_events}}}};
    validate_dataset(out);
    return out;
}

MatchSummary match_summary(const Dataset& matched_raw) {
    const auto& p = matched_raw.provenance;
    if (!p.contains("processing") || !p["processing"].contains("matched"))
        throw domain_error("match_summary: dataset was not produced by "
                           "match_coincidences");
    const auto& m = p["processing"]["matched"];
    MatchSummary s;
    s.epochs = m.at("epochs").get<std::int64_t>();
    s.both = m.at("both").get<std::int64_t>();
    s.alice_only = m.at("alice_only").get<std::int64_t>();
    s.bob_only = m.at("bob_only").get<std::int64_t>();
    s.neither = m.at("neither").get<std::int64_t>();
    s.unclaimed_events = m.at("unclaimed_events").get<std::int64_t>();
    return s;
}

Dataset post_select(const Dataset& ds) {
    if (ds.kind != DatasetKind::raw && ds.kind != DatasetKind::final)
        throw domain_error("post_select: requires a raw or final trial dataset");
    PostSelectionSummary s;
    Dataset out;
    out.kind = DatasetKind::final;
    out.trials.reserve(ds.trials.size());
    for (const auto& t : ds.trials) {
        if (t.a != 0 && t.b != 0) {
            out.trials.push_back(t);
            ++s.retained[idx(t.context)];
        } else {
            ++s.discarded[idx(t.context)];
        }
    }
    for (auto c : all_contexts) {
        s.total_retained += s.retained[idx(c)];
        s.total_discarded += s.discarded[idx(c)];
    }
    out.provenance = ds.provenance;
    out.provenance["post_selection"] = {{"retained", s.retained},
                                        {"discarded", s.discarded},
                                        {"total_retained", s.total_retained},
                                        {"total_discarded", s.total_discarded}};
    validate_dataset(out);
    return out;
}

PostSelectionSummary post_selection_summary(const Dataset& final_ds) {
    const auto& p = final_ds.provenance;
    if (!p.contains("post_selection"))
        throw domain_error("post_selection_summary: dataset was not produced by "
                           "post_select");
    const auto& j = p["post_selection"];
    PostSelectionSummary s;
    for (auto c : all_contexts) {
        s.retained[idx(c)] = j.at("retained")[idx(c)].get<std::int64_t>();
        s.discarded[idx(c)] = j.at("discarded")[idx(c)].get<std::int64_t>();
    }
    s.total_retained = j.at("total_retained").get<std::int64_t>();
    s.total_discarded = j.at("total_discarded").get<std::int64_t>();
    return s;
}

std::vector<WindowScanRow> window_scan(const Dataset& streams,
                                       std::vector<double> windows) {
    if (windows.empty())
        throw config_error("window_scan: no windows given");
    std::sort(windows.begin(), windows.end());
    std::vector<WindowScanRow> rows;
    rows.reserve(windows.size());
    for (double w : windows) {
        const Dataset matched = match_coincidences(streams, w);
        WindowScanRow row{};
        row.window = w;
        std::array<std::int64_t, 4> prod_sum{};
        std::int64_t both = 0;
        for (const auto& t : matched.trials) {
            if (t.a == 0 || t.b == 0) continue;
            ++both;
            ++row.n_pairs[idx(t.context)];
            prod_sum[idx(t.context)] += t.a * t.b;
        }
        row.retained_fraction =
            matched.trials.empty()
                ? 0.0
                : static_cast<double>(both) /
                      static_cast<double>(matched.trials.size());
        for (auto c : all_contexts)
            row.e[idx(c)] = row.n_pairs[idx(c)] == 0
                                ? std::numeric_limits<double>::quiet_NaN()
                                : static_cast<double>(prod_sum[idx(c)]) /
                                      static_cast<double>(row.n_pairs[idx(c)]);
        const bool defined = row.n_pairs[0] && row.n_pairs[1] && row.n_pairs[2] &&
                             row.n_pairs[3];
        row.s_max = defined ? chsh_max(row.e)
                            : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

void write_window_scan_csv(const std::vector<WindowScanRow>& rows,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw config_error("cannot write scan file '" + path.string() + "'");
    out << "window,retained_fraction,E_xy,E_xyp,E_xpy,E_xpyp,S\n";
    for (const auto& r : rows) {
        out << format_double(r.window) << ',' << format_double(r.retained_fraction);
        for (auto c : all_contexts) out << ',' << format_double(r.e[idx(c)]);
        out << ',' << format_double(r.s_max) << '\n';
    }
}

}  // namespace bell
