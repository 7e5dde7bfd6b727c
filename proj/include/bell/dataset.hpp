#pragma once

// Datasets and their on-disk form.  A dataset is a CSV file plus a
// provenance sidecar (same path with the extension replaced by
// ".provenance.json") recording the recipe, protocol, seed, and any
// processing steps, so every shipped artifact can be regenerated exactly.
//
// CSV formats (headers are pinned):
//   raw / final   trial_index,context,a,b          context in {xy,xyp,xpy,xpyp}
//   spreadsheet   row,a_x,a_xp,b_y,b_yp
//   streams       side,timestamp,setting,sign      timestamp printed as %.9f
//
// Outcome 0 (no detection) may appear in raw datasets and — for couplings of
// zero-emitting models — in spreadsheet rows; final datasets and stream
// signs are strictly ±1.

#include "bell/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bell {

enum class DatasetKind : std::uint8_t { raw, final, spreadsheet, streams };

std::string_view dataset_kind_name(DatasetKind k);
std::optional<DatasetKind> dataset_kind_from_name(std::string_view s);

struct TrialRecord {
    std::int64_t trial_index;
    ContextId context;
    std::int8_t a, b;
};

struct SpreadsheetRow {
    std::int64_t row;
    std::int8_t a_x, a_xp, b_y, b_yp;
};

struct ClickEvent {
    Side side;
    double t;
    SettingSlot setting;
    std::int8_t sign;
};

struct Dataset {
    DatasetKind kind = DatasetKind::raw;
    std::vector<TrialRecord> trials;     // raw / final
    std::vector<SpreadsheetRow> rows;    // spreadsheet
    std::vector<ClickEvent> events;      // streams, sorted by time per side
    nlohmann::json provenance = nlohmann::json::object();

    std::size_t size() const {
        switch (kind) {
            case DatasetKind::raw:
            case DatasetKind::final: return trials.size();
            case DatasetKind::spreadsheet: return rows.size();
            case DatasetKind::streams: return events.size();
        }
        return 0;
    }
};

// Structural checks (outcome ranges, ordering, kind/content agreement).
void validate_dataset(const Dataset& ds);

std::filesystem::path provenance_path_for(const std::filesystem::path& csv_path);

void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);

// Shortest round-trip decimal form of a double (exponent-free for the
// magnitudes we print).
std::string format_double(double v);

}  // namespace bell
