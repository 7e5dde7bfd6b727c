#pragma once

// Data-taking protocols.  All three are deterministic functions of
// (model, parameters, master seed): work is split into fixed-size blocks,
// each block draws from its own derived random stream, and results land in
// preallocated slots — so outputs are byte-identical for any worker count.
//
//   context protocol     per-context runs; one (a, b) record per trial
//   spreadsheet protocol reveals all four outcomes per emission; only
//                        product-type models (local or coupled) can do this
//   timeseries protocol  emits per-side click events with time tags from a
//                        time_tag model; context data only exist after
//                        coincidence matching

#include "bell/dataset.hpp"
#include "bell/model.hpp"

#include <array>

namespace bell {

struct ScheduleSpec {
    enum class Kind : std::uint8_t { fixed, random_per_epoch };
    Kind kind = Kind::random_per_epoch;
    // fixed only:
    SettingLabel alice = SettingLabel::plain;
    SettingLabel bob = SettingLabel::plain;
};

nlohmann::json schedule_to_json(const ScheduleSpec& s);
ScheduleSpec schedule_from_json(const nlohmann::json& j, const std::string& where);

Dataset run_context_protocol(const Model& m,
                             const std::array<std::int64_t, 4>& counts,
                             std::uint64_t seed);

Dataset run_spreadsheet_protocol(const Model& m, std::int64_t n_rows,
                                 std::uint64_t seed);

Dataset run_timeseries_protocol(const Model& m, std::int64_t n_emissions,
                                double spacing, const ScheduleSpec& schedule,
                                std::uint64_t seed);

// The per-epoch settings a timeseries run used, reconstructed exactly from
// the schedule spec and master seed (the random schedule is re-derived from
// its own stream, independent of the emission stream).
std::vector<std::pair<SettingLabel, SettingLabel>> materialize_schedule(
    const ScheduleSpec& schedule, std::int64_t n_emissions, std::uint64_t seed);

// Reads emissions/spacing/schedule/master_seed back out of a timeseries
// dataset's provenance.
struct TimeseriesInfo {
    std::int64_t emissions;
    double spacing;
    ScheduleSpec schedule;
    std::uint64_t seed;
};
TimeseriesInfo timeseries_info(const nlohmann::json& provenance);

// The per-row CHSH combination a_x b_y + a_x b_y' + a_x' b_y - a_x' b_y',
// which is ±2 for any ±1 entries.  Throws domain_error on undetected (0)
// entries; callers decide how to count such rows.
int per_row_chsh(const SpreadsheetRow& r);

}  // namespace bell
