#pragma once

// JSON and plain-text rendering of analysis results.  Exact rational
// quantities appear twice: a double for plotting and a "p/q" string under
// an *_exact key.

#include "bell/jp.hpp"
#include "bell/processing.hpp"
#include "bell/stats.hpp"

#include <json.hpp>

namespace bell {

nlohmann::json correlations_json(const CorrelationTable& t);
nlohmann::json chsh_json(const ChshEstimate& s);
nlohmann::json eberhard_json(const EberhardReport& r);
nlohmann::json signaling_json(const SignalingReport& r);
nlohmann::json cbd_json(const CbdReport& r);
nlohmann::json violation_json(const ViolationFrequency& v);
nlohmann::json audit_json(const LgAudit& a);
nlohmann::json jp_json(const JpResult& r);
nlohmann::json coupling_json(const CouplingReport& r);
nlohmann::json match_json(const MatchSummary& m);
nlohmann::json post_selection_json(const PostSelectionSummary& s);

// Renders the sections present in an analyze/check-jp report document into
// a readable fixed-width text block.
std::string text_report(const nlohmann::json& report);

}  // namespace bell
