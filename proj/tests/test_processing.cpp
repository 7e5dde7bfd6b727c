#include "bell/processing.hpp"

#include "bell/recipes.hpp"
#include "bell/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace bell;

namespace {

Dataset demo_streams(std::int64_t epochs, std::uint64_t seed) {
    ScheduleSpec sched;  // random per epoch
    return run_timeseries_protocol(demo_timetag_model(), epochs,
                                   demo_timetag_spacing(), sched, seed);
}

std::filesystem::path fresh_dir(const char* tag) {
    auto p = std::filesystem::temp_directory_path() /
             (std::string("bell_proc_") + tag);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("matching claims one trial per epoch, context from the schedule") {
    const std::int64_t epochs = 5000;
    const Dataset streams = demo_streams(epochs, 11);
    const Dataset matched = match_coincidences(streams, 0.5);
    CHECK(matched.kind == DatasetKind::raw);
    REQUIRE(matched.trials.size() == static_cast<std::size_t>(epochs));

    const TimeseriesInfo info = timeseries_info(streams.provenance);
    const auto schedule =
        materialize_schedule(info.schedule, info.emissions, info.seed);
    for (std::int64_t e = 0; e < epochs; ++e) {
        const auto& t = matched.trials[static_cast<std::size_t>(e)];
        CHECK(t.trial_index == e);
        const auto [sa, sb] = schedule[static_cast<std::size_t>(e)];
        CHECK(t.context == make_context(sa, sb));
    }
}

TEST_CASE("match summary accounts for every epoch and every event") {
    const std::int64_t epochs = 40000;
    const Dataset streams = demo_streams(epochs, 13);
    const Dataset matched = match_coincidences(streams, 0.5);
    const MatchSummary s = match_summary(matched);
    CHECK(s.epochs == epochs);
    CHECK(s.both + s.alice_only + s.bob_only + s.neither == epochs);
    // at this window every event is either claimed or late on both reads
    CHECK(s.unclaimed_events ==
          2 * epochs - (2 * s.both + s.alice_only + s.bob_only));

    // coincidence fraction: every context retains 13/40 of its epochs
    const double p = 13.0 / 40.0;
    const double frac = static_cast<double>(s.both) / static_cast<double>(epochs);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(epochs));
    CHECK(std::abs(frac - p) < 4 * se);

    CHECK_THROWS_AS(
        match_summary(run_context_protocol(demo_eq3_model(), {5, 5, 5, 5}, 1)),
        domain_error);
}

TEST_CASE("matched pair distributions equal the window-truncated model") {
    // matching a stream at window W must reproduce, context by context, the
    // exact ternary distribution of the closed-form truncated model
    const std::int64_t epochs = 60000;
    const Dataset streams = demo_streams(epochs, 17);
    const Dataset matched = match_coincidences(streams, 0.5);
    const Model wm = windowed_model(demo_timetag_model(), 0.5, 1.0);

    std::array<std::array<std::int64_t, 9>, 4> counts{};
    for (const auto& t : matched.trials)
        ++counts[idx(t.context)]
                [static_cast<std::size_t>((t.a + 1) * 3 + (t.b + 1))];
    for (auto c : all_contexts) {
        const auto [stat, dof] =
            chi_square_gof(counts[idx(c)], enumerate_context(wm, c).p);
        CHECK(stat < chi_square_quantile(dof, 0.999));
    }
}

TEST_CASE("matching rejects nonsense inputs") {
    const Dataset streams = demo_streams(100, 3);
    CHECK_THROWS_AS(match_coincidences(streams, 0.0), config_error);
    CHECK_THROWS_AS(match_coincidences(streams, -1.0), config_error);
    CHECK_THROWS_AS(
        match_coincidences(run_context_protocol(demo_eq3_model(), {1, 1, 1, 1}, 1),
                           0.5),
        domain_error);
}

TEST_CASE("a stream whose settings contradict its provenance is refused") {
    Dataset streams = demo_streams(200, 5);
    // flip the setting label of one alice event
    for (auto& ev : streams.events) {
        if (ev.side != Side::alice) continue;
        const auto lab = slot_label(ev.setting) == SettingLabel::plain
                             ? SettingLabel::prime
                             : SettingLabel::plain;
        ev.setting = make_slot(Side::alice, lab);
        break;
    }
    CHECK_THROWS_WITH_AS(match_coincidences(streams, 1.0),
                         doctest::Contains("streams and provenance disagree"),
                         domain_error);
}

TEST_CASE("post-selection keeps exactly the doubly detected records") {
    const Dataset streams = demo_streams(20000, 19);
    const Dataset matched = match_coincidences(streams, 0.5);
    const Dataset final_ds = post_select(matched);
    CHECK(final_ds.kind == DatasetKind::final);
    for (const auto& t : final_ds.trials) {
        CHECK(t.a != 0);
        CHECK(t.b != 0);
    }
    std::int64_t pairs = 0;
    for (const auto& t : matched.trials) pairs += (t.a != 0 && t.b != 0);
    CHECK(static_cast<std::int64_t>(final_ds.trials.size()) == pairs);

    const PostSelectionSummary s = post_selection_summary(final_ds);
    CHECK(s.total_retained == pairs);
    CHECK(s.total_retained + s.total_discarded ==
          static_cast<std::int64_t>(matched.trials.size()));
    std::int64_t check_ret = 0;
    for (auto c : all_contexts) check_ret += s.retained[idx(c)];
    CHECK(check_ret == s.total_retained);

    // idempotent: a second pass discards nothing and keeps the trials
    const Dataset again = post_select(final_ds);
    CHECK(again.trials.size() == final_ds.trials.size());
    CHECK(post_selection_summary(again).total_discarded == 0);

    CHECK_THROWS_AS(post_select(streams), domain_error);
    CHECK_THROWS_AS(post_selection_summary(matched), domain_error);
}

TEST_CASE("window scan is ascending, monotone, and hits the demo landmarks") {
    const std::int64_t epochs = 40000;
    const Dataset streams = demo_streams(epochs, 23);
    // deliberately shuffled input order
    const auto rows = window_scan(streams, {0.7, 0.2, 1.0, 0.5});
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].window > rows[i - 1].window);
        CHECK(rows[i].retained_fraction >= rows[i - 1].retained_fraction);
    }
    CHECK(rows[0].window == 0.2);
    CHECK(rows[3].window == 1.0);
    CHECK(rows[3].retained_fraction == 1.0);  // every answer arrives in time

    // narrow window: the post-selected S sits near 36/13; full window: 9/10
    CHECK(std::abs(rows[1].s_max - 36.0 / 13.0) < 0.12);
    CHECK(std::abs(rows[3].s_max - 9.0 / 10.0) < 0.12);
    for (const auto& r : rows) {
        std::int64_t n = 0;
        for (auto c : all_contexts) n += r.n_pairs[idx(c)];
        CHECK(std::abs(static_cast<double>(n) / static_cast<double>(epochs) -
                       r.retained_fraction) < 1e-12);
    }

    CHECK_THROWS_AS(window_scan(streams, {}), config_error);
}

TEST_CASE("window scan CSV carries the pinned header") {
    const Dataset streams = demo_streams(2000, 29);
    const auto rows = window_scan(streams, {0.5, 1.0});
    const auto dir = fresh_dir("scan");
    const auto path = dir / "scan.csv";
    write_window_scan_csv(rows, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "window,retained_fraction,E_xy,E_xyp,E_xpy,E_xpyp,S");
    int data_lines = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++data_lines;
    CHECK(data_lines == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("matching at the demo windows reproduces the retained fractions") {
    const std::int64_t epochs = 40000;
    const Dataset streams = demo_streams(epochs, 31);
    const std::array<std::pair<double, double>, 3> expect{
        {{0.2, 13.0 / 40.0}, {0.7, 11.0 / 20.0}, {1.0, 1.0}}};
    for (const auto& [w, p] : expect) {
        const MatchSummary s = match_summary(match_coincidences(streams, w));
        const double frac =
            static_cast<double>(s.both) / static_cast<double>(epochs);
        const double se =
            std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(epochs));
        CHECK(std::abs(frac - p) < 5 * se + 1e-12);
    }
}
