#pragma once

// Turning click streams into trial data, and trial data into coincidences.
//
// Coincidence matching is epoch-anchored: emission e owns the time window
// [e*spacing - w/2, e*spacing + w/2], and on each side claims the earliest
// not-yet-claimed event inside that window.  Every epoch yields exactly one
// raw record; a side with no claimable event contributes outcome 0.  The
// matched record's context comes from the run's setting schedule.

#include "bell/dataset.hpp"
#include "bell/protocols.hpp"

namespace bell {

struct MatchSummary {
    std::int64_t epochs = 0;
    std::int64_t both = 0;        // records with two detections
    std::int64_t alice_only = 0;
    std::int64_t bob_only = 0;
    std::int64_t neither = 0;
    std::int64_t unclaimed_events = 0;  // events no window claimed
};

Dataset match_coincidences(const Dataset& streams, double window);
MatchSummary match_summary(const Dataset& matched_raw);

struct PostSelectionSummary {
    std::array<std::int64_t, 4> retained{};
    std::array<std::int64_t, 4> discarded{};
    std::int64_t total_retained = 0;
    std::int64_t total_discarded = 0;
};

// Drops every record with an undetected outcome.  Raw in, final out;
// applying it to an already-final dataset is the identity (and records a
// zero-discard summary), so the operation is idempotent.
Dataset post_select(const Dataset& ds);
PostSelectionSummary post_selection_summary(const Dataset& final_ds);

struct WindowScanRow {
    double window;
    double retained_fraction;             // both-detected epochs / epochs
    std::array<double, 4> e;              // post-selected E per context (NaN if empty)
    double s_max;                         // NaN if any context is empty
    std::array<std::int64_t, 4> n_pairs;  // post-selected trials per context
};

// One matching + post-selection + estimation pass per window, windows
// processed in ascending order.
std::vector<WindowScanRow> window_scan(const Dataset& streams,
                                       std::vector<double> windows);

// CSV with pinned header: window,retained_fraction,E_xy,E_xyp,E_xpy,E_xpyp,S
// (S is the odd-sign-maximized CHSH combination of the four estimates).
void write_window_scan_csv(const std::vector<WindowScanRow>& rows,
                           const std::filesystem::path& path);

}  // namespace bell
