#include "bell/protocols.hpp"

#include "bell/recipes.hpp"
#include "bell/rng.hpp"
#include "bell/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace bell;

namespace {

bool same_trials(const Dataset& a, const Dataset& b) {
    if (a.trials.size() != b.trials.size()) return false;
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
        const auto& x = a.trials[i];
        const auto& y = b.trials[i];
        if (x.trial_index != y.trial_index || x.context != y.context ||
            x.a != y.a || x.b != y.b)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("context protocol: counts, indices, provenance") {
    const Model m = demo_eq3_model();
    const Dataset ds = run_context_protocol(m, {100, 200, 50, 0}, 99);
    CHECK(ds.kind == DatasetKind::raw);
    CHECK(ds.trials.size() == 350);
    validate_dataset(ds);

    std::array<std::int64_t, 4> got{};
    std::set<std::int64_t> indices;
    for (const auto& t : ds.trials) {
        ++got[idx(t.context)];
        indices.insert(t.trial_index);
    }
    CHECK(got == std::array<std::int64_t, 4>{100, 200, 50, 0});
    CHECK(indices.size() == 350);  // all distinct
    CHECK(*indices.begin() == 0);
    CHECK(*indices.rbegin() == 349);

    CHECK(ds.provenance["model_id"] == "demo_eq3");
    CHECK(ds.provenance["protocol"] == "contexts");
    CHECK(ds.provenance["master_seed"] == 99);
    CHECK(ds.provenance.contains("recipe"));
}

TEST_CASE("context protocol is deterministic and seed-sensitive") {
    const Model m = demo_eq3_model();
    const Dataset a = run_context_protocol(m, {1000, 1000, 1000, 1000}, 7);
    const Dataset b = run_context_protocol(m, {1000, 1000, 1000, 1000}, 7);
    const Dataset c = run_context_protocol(m, {1000, 1000, 1000, 1000}, 8);
    CHECK(same_trials(a, b));
    CHECK(!same_trials(a, c));
}

TEST_CASE("context protocol output does not depend on the worker count") {
    const Model m = demo_eq3_model();
    // > kBlock trials per context so several blocks actually run
    set_worker_count(1);
    const Dataset a = run_context_protocol(m, {9000, 9000, 9000, 9000}, 41);
    set_worker_count(3);
    const Dataset b = run_context_protocol(m, {9000, 9000, 9000, 9000}, 41);
    set_worker_count(1);
    CHECK(same_trials(a, b));
}

TEST_CASE("spreadsheet protocol accepts product models only") {
    CHECK_THROWS_WITH_AS(run_spreadsheet_protocol(demo_eq5_model(), 10, 1),
                         doctest::Contains("joint draw"), domain_error);
    CHECK_THROWS_WITH_AS(run_spreadsheet_protocol(demo_eq3_model(), 10, 1),
                         doctest::Contains("coupling"), domain_error);
    CHECK_THROWS_WITH_AS(run_spreadsheet_protocol(demo_timetag_model(), 10, 1),
                         doctest::Contains("timeseries"), domain_error);
}

TEST_CASE("spreadsheet rows obey the per-row CHSH identity") {
    const Model m = random_deterministic_local(5);
    const Dataset ds = run_spreadsheet_protocol(m, 2000, 17);
    CHECK(ds.kind == DatasetKind::spreadsheet);
    CHECK(ds.rows.size() == 2000);
    validate_dataset(ds);
    for (const auto& r : ds.rows) {
        const int t = per_row_chsh(r);
        CHECK((t == 2 || t == -2));
    }
    // and therefore the sample CHSH cannot leave [-2, 2]
    const auto s = chsh_from_table(spreadsheet_correlations(ds));
    CHECK(s.s_fixed <= 2.0);
    CHECK(s.s_fixed >= -2.0);
    CHECK(s.s_max <= 2.0);
}

TEST_CASE("per-row CHSH spot values and error path") {
    SpreadsheetRow r{0, 1, -1, 1, 1};
    CHECK(per_row_chsh(r) == 2);  // 1*1 + 1*1 + (-1)*1 - (-1)*1 = 2
    SpreadsheetRow z{1, 1, 0, 1, 1};
    CHECK_THROWS_AS(per_row_chsh(z), domain_error);
}

TEST_CASE("spreadsheet of a coupled ternary model keeps the zeros visible") {
    const Model m = build_coupling(demo_eq3_model());
    const Dataset ds = run_spreadsheet_protocol(m, 4000, 23);
    validate_dataset(ds);
    bool saw_zero = false;
    for (const auto& r : ds.rows)
        if (r.a_x == 0 || r.a_xp == 0 || r.b_y == 0 || r.b_yp == 0)
            saw_zero = true;
    CHECK(saw_zero);
    // same rows feed every context, so the marginals agree exactly
    const auto sig = nosignaling_from_table(spreadsheet_correlations(ds));
    REQUIRE(sig.defined);
    for (const auto& d : sig.deltas) CHECK(d.delta == 0.0);
}

TEST_CASE("timeseries protocol emits schedule-consistent tagged events") {
    const Model m = demo_timetag_model();
    const double spacing = demo_timetag_spacing();
    const std::int64_t epochs = 400;
    ScheduleSpec sched;  // random per epoch
    const Dataset ds = run_timeseries_protocol(m, epochs, spacing, sched, 31);
    CHECK(ds.kind == DatasetKind::streams);
    CHECK(ds.events.size() == 2 * static_cast<std::size_t>(epochs));
    validate_dataset(ds);

    const auto settings = materialize_schedule(sched, epochs, 31);
    REQUIRE(settings.size() == static_cast<std::size_t>(epochs));

    std::map<Side, std::int64_t> per_side;
    for (const auto& ev : ds.events) {
        ++per_side[ev.side];
        CHECK(slot_side(ev.setting) == ev.side);
    }
    CHECK(per_side[Side::alice] == epochs);
    CHECK(per_side[Side::bob] == epochs);

    // every event's setting matches the materialized schedule of its epoch
    for (const auto& ev : ds.events) {
        const double frac = ev.t / spacing;
        const auto epoch = static_cast<std::int64_t>(std::floor(frac));
        const auto off = ev.t - static_cast<double>(epoch) * spacing;
        // delays are 0, 0.3 (alice) or 0, 0.45 (bob), all < spacing
        const auto [la, lb] = settings[static_cast<std::size_t>(epoch)];
        if (ev.side == Side::alice) {
            CHECK(slot_label(ev.setting) == la);
            CHECK((std::abs(off) < 1e-12 || std::abs(off - 0.3) < 1e-12));
        } else {
            CHECK(slot_label(ev.setting) == lb);
            CHECK((std::abs(off) < 1e-12 || std::abs(off - 0.45) < 1e-12));
        }
    }
}

TEST_CASE("timeseries offsets occur with the delay-table frequencies") {
    // alice at x is late on source atoms 3,4 (weight 9/40 each); the coin
    // atom (1/10) is on time -> P(late | x) = 18/40 of emissions
    const Model m = demo_timetag_model();
    ScheduleSpec fixed{ScheduleSpec::Kind::fixed, SettingLabel::plain,
                       SettingLabel::plain};
    const std::int64_t epochs = 100000;
    const Dataset ds =
        run_timeseries_protocol(m, epochs, demo_timetag_spacing(), fixed, 57);
    std::int64_t late_a = 0;
    for (const auto& ev : ds.events) {
        if (ev.side != Side::alice) continue;
        const double off = ev.t - std::floor(ev.t);
        if (off > 0.15) ++late_a;
    }
    const double frac = static_cast<double>(late_a) / static_cast<double>(epochs);
    const double se = std::sqrt(0.45 * 0.55 / static_cast<double>(epochs));
    CHECK(std::abs(frac - 0.45) < 4 * se);
}

TEST_CASE("timeseries requires a time_tag model") {
    ScheduleSpec sched;
    CHECK_THROWS_AS(run_timeseries_protocol(demo_eq3_model(), 10, 1.0, sched, 1),
                    domain_error);
}

TEST_CASE("timeseries provenance round trips") {
    const Model m = demo_timetag_model();
    ScheduleSpec sched{ScheduleSpec::Kind::fixed, SettingLabel::prime,
                       SettingLabel::plain};
    const Dataset ds = run_timeseries_protocol(m, 123, 0.5, sched, 77);
    const TimeseriesInfo info = timeseries_info(ds.provenance);
    CHECK(info.emissions == 123);
    CHECK(info.spacing == 0.5);
    CHECK(info.seed == 77);
    CHECK(info.schedule.kind == ScheduleSpec::Kind::fixed);
    CHECK(info.schedule.alice == SettingLabel::prime);
    CHECK(info.schedule.bob == SettingLabel::plain);
}

TEST_CASE("materialize_schedule: fixed repeats, random is deterministic") {
    ScheduleSpec fixed{ScheduleSpec::Kind::fixed, SettingLabel::plain,
                       SettingLabel::prime};
    for (const auto& [a, b] : materialize_schedule(fixed, 50, 3)) {
        CHECK(a == SettingLabel::plain);
        CHECK(b == SettingLabel::prime);
    }
    ScheduleSpec rnd;  // random_per_epoch
    const auto s1 = materialize_schedule(rnd, 5000, 3);
    const auto s2 = materialize_schedule(rnd, 5000, 3);
    CHECK(s1 == s2);
    // all four contexts show up about equally often
    std::array<int, 4> ctx{};
    for (const auto& [a, b] : s1) ++ctx[idx(make_context(a, b))];
    for (int k : ctx) CHECK(std::abs(k - 1250) < 200);
}

TEST_CASE("schedule JSON round trip and errors") {
    ScheduleSpec fixed{ScheduleSpec::Kind::fixed, SettingLabel::prime,
                       SettingLabel::prime};
    const ScheduleSpec back = schedule_from_json(schedule_to_json(fixed), "t");
    CHECK(back.kind == ScheduleSpec::Kind::fixed);
    CHECK(back.alice == SettingLabel::prime);
    CHECK(back.bob == SettingLabel::prime);

    CHECK_THROWS_AS(schedule_from_json(nlohmann::json{{"kind", "hourly"}}, "t"),
                    config_error);
    CHECK_THROWS_AS(schedule_from_json(nlohmann::json{{"kind", "fixed"}}, "t"),
                    config_error);
    // a bob-side setting cannot be assigned to alice
    CHECK_THROWS_AS(
        schedule_from_json(
            nlohmann::json{{"kind", "fixed"}, {"alice", "y"}, {"bob", "y"}}, "t"),
        config_error);
}

TEST_CASE("empty runs are valid datasets") {
    const Dataset a = run_context_protocol(demo_eq3_model(), {0, 0, 0, 0}, 1);
    CHECK(a.trials.empty());
    validate_dataset(a);
    ScheduleSpec sched;
    const Dataset b =
        run_timeseries_protocol(demo_timetag_model(), 0, 1.0, sched, 1);
    CHECK(b.events.empty());
    validate_dataset(b);
}

TEST_CASE("sampled context distributions match enumeration (chi-square)") {
    const Model m = demo_eq3_model();
    const Dataset ds = run_context_protocol(m, {100000, 0, 0, 0}, 2025);
    std::array<std::int64_t, 9> counts{};
    for (const auto& t : ds.trials)
        ++counts[static_cast<std::size_t>((t.a + 1) * 3 + (t.b + 1))];
    const auto [stat, dof] = chi_square_gof(counts, enumerate_context(m, ContextId::xy).p);
    CHECK(stat < chi_square_quantile(dof, 0.999));
}
