#include "bell/protocols.hpp"

#include "bell/model_json.hpp"

#include <algorithm>

namespace bell {

namespace {

constexpr std::int64_t kBlock = 4096;

nlohmann::json base_provenance(const Model& m, const char* protocol,
                               std::uint64_t seed) {
    nlohmann::json p;
    p["model_id"] = m.id;
    p["recipe"] = recipe_to_json(m)["recipe"];
    p["protocol"] = protocol;
    p["master_seed"] = seed;
    return p;
}

}  // namespace

nlohmann::json schedule_to_json(const ScheduleSpec& s) {
    if (s.kind == ScheduleSpec::Kind::random_per_epoch)
        return {{"kind", "random_per_epoch"}};
    return {{"kind", "fixed"},
            {"alice", std::string(setting_name(make_slot(Side::alice, s.alice)))},
            {"bob", std::string(setting_name(make_slot(Side::bob, s.bob)))}};
}

ScheduleSpec schedule_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw config_error(where + ": expected a schedule object with 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    ScheduleSpec s;
    if (kind == "random_per_epoch") {
        s.kind = ScheduleSpec::Kind::random_per_epoch;
        return s;
    }
    if (kind != "fixed")
        throw config_error(where + ".kind: unknown schedule kind '" + kind + "'");
    s.kind = ScheduleSpec::Kind::fixed;
    auto read_side = [&](const char* key, Side side) {
        if (!j.contains(key) || !j[key].is_string())
            throw config_error(where + ": fixed schedule needs '" +
                               std::string(key) + "'");
        const auto slot = setting_from_name(j[key].get<std::string>());
        if (!slot || slot_side(*slot) != side)
            throw config_error(where + "." + key + ": invalid setting '" +
                               j[key].get<std::string>() + "'");
        return slot_label(*slot);
    };
    s.alice = read_side("alice", Side::alice);
    s.bob = read_side("bob", Side::bob);
    return s;
}

Dataset run_context_protocol(const Model& m,
                             const std::array<std::int64_t, 4>& counts,
                             std::uint64_t seed) {
    validate_model(m);
    for (auto c : all_contexts)
        if (counts[idx(c)] < 0)
            throw config_error("context protocol: negative trial count for " +
                               std::string(context_name(c)));
    const TrialSampler sampler(m);

    std::array<std::int64_t, 4> offset{};
    std::int64_t total = 0;
    for (auto c : all_contexts) {
        offset[idx(c)] = total;
        total += counts[idx(c)];
    }
    Dataset ds;
    ds.kind = DatasetKind::raw;
    ds.trials.resize(static_cast<std::size_t>(total));

    struct BlockJob {
        ContextId ctx;
        std::int64_t first, n, block_index;
    };
    std::vector<BlockJob> jobs;
    for (auto c : all_contexts) {
        for (std::int64_t first = 0; first < counts[idx(c)]; first += kBlock)
            jobs.push_back({c, first,
                            std::min(kBlock, counts[idx(c)] - first),
                            first / kBlock});
    }
    parallel_for_blocks(jobs.size(), [&](std::size_t jb) {
        const BlockJob& job = jobs[jb];
        Rng rng(derive_seed(seed, {stream_tag::context_protocol, idx(job.ctx),
                                   static_cast<std::uint64_t>(job.block_index)}));
        for (std::int64_t k = 0; k < job.n; ++k) {
            const auto [a, b] = sampler.sample(job.ctx, rng);
            const std::int64_t pos = offset[idx(job.ctx)] + job.first + k;
            ds.trials[static_cast<std::size_t>(pos)] = {
                pos, job.ctx, static_cast<std::int8_t>(a),
                static_cast<std::int8_t>(b)};
        }
    });

    ds.provenance = base_provenance(m, "contexts", seed);
    ds.provenance["params"] = {{"counts", counts}};
    validate_dataset(ds);
    return ds;
}

Dataset run_spreadsheet_protocol(const Model& m, std::int64_t n_rows,
                                 std::uint64_t seed) {
    validate_model(m);
    if (n_rows < 0)
        throw config_error("spreadsheet protocol: negative row count");
    switch (m.kind) {
        case ModelKind::deterministic_local:
        case ModelKind::stochastic_local:
        case ModelKind::coupled_joint:
            break;
        case ModelKind::contextual_correlated:
            throw domain_error(
                "spreadsheet protocol: model '" + m.id +
                "' draws each context's instrument pair from a joint "
                "distribution specific to that context; there is no joint "
                "draw that fills all four columns of one row");
        case ModelKind::contextual_product:
            throw domain_error("spreadsheet protocol: model '" + m.id +
                               "' is a per-context family; build its coupling "
                               "first to emit joint rows");
        case ModelKind::time_tag:
            throw domain_error("spreadsheet protocol: model '" + m.id +
                               "' produces timed click streams; use the "
                               "timeseries protocol");
    }
    const HiddenSampler sampler(m);
    Dataset ds;
    ds.kind = DatasetKind::spreadsheet;
    ds.rows.resize(static_cast<std::size_t>(n_rows));
    const std::size_t n_blocks =
        static_cast<std::size_t>((n_rows + kBlock - 1) / kBlock);
    parallel_for_blocks(n_blocks, [&](std::size_t block) {
        Rng rng(derive_seed(seed, {stream_tag::spreadsheet,
                                   static_cast<std::uint64_t>(block)}));
        const std::int64_t first = static_cast<std::int64_t>(block) * kBlock;
        const std::int64_t n = std::min(kBlock, n_rows - first);
        for (std::int64_t k = 0; k < n; ++k) {
            const HiddenDraw h = sampler.sample(rng);
            auto out = [&](SettingSlot slot) {
                return static_cast<std::int8_t>(sampler.outcome(m, slot, h));
            };
            ds.rows[static_cast<std::size_t>(first + k)] = {
                first + k, out(SettingSlot::ax), out(SettingSlot::axp),
                out(SettingSlot::by), out(SettingSlot::byp)};
        }
    });
    ds.provenance = base_provenance(m, "spreadsheet", seed);
    ds.provenance["params"] = {{"rows", n_rows}};
    validate_dataset(ds);
    return ds;
}

std::vector<std::pair<SettingLabel, SettingLabel>> materialize_schedule(
    const ScheduleSpec& schedule, std::int64_t n_emissions, std::uint64_t seed) {
    if (n_emissions < 0)
        throw config_error("schedule: negative emission count");
    std::vector<std::pair<SettingLabel, SettingLabel>> out(
        static_cast<std::size_t>(n_emissions));
    if (schedule.kind == ScheduleSpec::Kind::fixed) {
        std::fill(out.begin(), out.end(), std::pair(schedule.alice, schedule.bob));
        return out;
    }
    const std::size_t n_blocks =
        static_cast<std::size_t>((n_emissions + kBlock - 1) / kBlock);
    parallel_for_blocks(n_blocks, [&](std::size_t block) {
        Rng rng(derive_seed(seed, {stream_tag::schedule,
                                   static_cast<std::uint64_t>(block)}));
        const std::int64_t first = static_cast<std::int64_t>(block) * kBlock;
        const std::int64_t n = std::min(kBlock, n_emissions - first);
        for (std::int64_t k = 0; k < n; ++k)
            out[static_cast<std::size_t>(first + k)] = {
                static_cast<SettingLabel>(rng.below(2)),
                static_cast<SettingLabel>(rng.below(2))};
    });
    return out;
}

Dataset run_timeseries_protocol(const Model& m, std::int64_t n_emissions,
                                double spacing, const ScheduleSpec& schedule,
                                std::uint64_t seed) {
    validate_model(m);
    if (m.kind != ModelKind::time_tag)
        throw domain_error("timeseries protocol: model '" + m.id +
                           "' carries no delay tables");
    if (n_emissions < 0)
        throw config_error("timeseries protocol: negative emission count");
    if (!(spacing > 0))
        throw config_error("timeseries protocol: spacing must be > 0");
    const HiddenSampler sampler(m);
    const auto settings = materialize_schedule(schedule, n_emissions, seed);

    Dataset ds;
    ds.kind = DatasetKind::streams;
    ds.events.resize(static_cast<std::size_t>(2 * n_emissions));
    const std::size_t n_blocks =
        static_cast<std::size_t>((n_emissions + kBlock - 1) / kBlock);
    parallel_for_blocks(n_blocks, [&](std::size_t block) {
        Rng rng(derive_seed(seed, {stream_tag::timeseries,
                                   static_cast<std::uint64_t>(block)}));
        const std::int64_t first = static_cast<std::int64_t>(block) * kBlock;
        const std::int64_t n = std::min(kBlock, n_emissions - first);
        for (std::int64_t k = 0; k < n; ++k) {
            const std::int64_t e = first + k;
            // Fixed draw order per epoch: source pair, Alice instrument,
            // Bob instrument.
            const HiddenDraw h = sampler.sample(rng);
            const auto [sa, sb] = settings[static_cast<std::size_t>(e)];
            const auto slot_a = make_slot(Side::alice, sa);
            const auto slot_b = make_slot(Side::bob, sb);
            const double t0 = static_cast<double>(e) * spacing;
            ds.events[static_cast<std::size_t>(2 * e)] = {
                Side::alice, t0 + m.delay(Side::alice, sa, h.l1), slot_a,
                static_cast<std::int8_t>(sampler.outcome(m, slot_a, h))};
            ds.events[static_cast<std::size_t>(2 * e + 1)] = {
                Side::bob, t0 + m.delay(Side::bob, sb, h.l2), slot_b,
                static_cast<std::int8_t>(sampler.outcome(m, slot_b, h))};
        }
    });
    // Canonical event order: time, then side, then setting.
    std::stable_sort(ds.events.begin(), ds.events.end(),
                     [](const ClickEvent& a, const ClickEvent& b) {
                         if (a.t != b.t) return a.t < b.t;
                         if (a.side != b.side) return idx(a.side) < idx(b.side);
                         return idx(a.setting) < idx(b.setting);
                     });
    ds.provenance = base_provenance(m, "timeseries", seed);
    ds.provenance["params"] = {{"emissions", n_emissions},
                               {"spacing", spacing},
                               {"schedule", schedule_to_json(schedule)}};
    validate_dataset(ds);
    return ds;
}

TimeseriesInfo timeseries_info(const nlohmann::json& provenance) {
    const auto fail = [](const std::string& msg) -> TimeseriesInfo {
        throw config_error("timeseries provenance: " + msg);
    };
    if (!provenance.contains("params")) return fail("missing params");
    const auto& p = provenance["params"];
    if (!p.contains("emissions") || !p["emissions"].is_number_integer())
        return fail("missing params.emissions");
    if (!p.contains("spacing") || !p["spacing"].is_number())
        return fail("missing params.spacing");
    if (!p.contains("schedule")) return fail("missing params.schedule");
    if (!provenance.contains("master_seed") ||
        !provenance["master_seed"].is_number_unsigned())
        return fail("missing master_seed");
    TimeseriesInfo info;
    info.emissions = p["emissions"].get<std::int64_t>();
    info.spacing = p["spacing"].get<double>();
    info.schedule =
        schedule_from_json(p["schedule"], "timeseries provenance params.schedule");
    info.seed = provenance["master_seed"].get<std::uint64_t>();
    return info;
}

int per_row_chsh(const SpreadsheetRow& r) {
    for (int v : {int(r.a_x), int(r.a_xp), int(r.b_y), int(r.b_yp)})
        if (v == 0)
            throw domain_error("per_row_chsh: row " + std::to_string(r.row) +
                               " contains an undetected (0) outcome");
    return r.a_x * r.b_y + r.a_x * r.b_yp + r.a_xp * r.b_y - r.a_xp * r.b_yp;
}

}  // namespace bell
