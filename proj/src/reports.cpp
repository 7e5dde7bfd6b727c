#include "bell/reports.hpp"

#include "bell/dataset.hpp"

#include <cstdio>
#include <sstream>

namespace bell {

using nlohmann::json;

namespace {

json q_json(const BigQ& q) { return rational_to_string(q); }

}  // namespace

json correlations_json(const CorrelationTable& t) {
    json out;
    out["source_kind"] = std::string(dataset_kind_name(t.source_kind));
    json per_ctx;
    for (auto c : all_contexts) {
        const auto& s = t.ctx[idx(c)];
        json j;
        j["n"] = s.n;
        j["n_pairs"] = s.n_pairs;
        j["defined"] = s.defined;
        if (s.defined) {
            j["e"] = s.e;
            j["se_e"] = s.se_e;
            j["ma"] = s.ma;
            j["se_ma"] = s.se_ma;
            j["mb"] = s.mb;
            j["se_mb"] = s.se_mb;
        }
        json counts;
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
                const auto k =
                    s.counts[static_cast<std::size_t>((a + 1) * 3 + (b + 1))];
                if (k)
                    counts[std::to_string(a) + "," + std::to_string(b)] = k;
            }
        j["counts"] = std::move(counts);
        per_ctx[std::string(context_name(c))] = std::move(j);
    }
    out["contexts"] = std::move(per_ctx);
    return out;
}

json chsh_json(const ChshEstimate& s) {
    json j;
    j["defined"] = s.defined;
    if (s.defined) {
        j["s_fixed"] = s.s_fixed;
        j["s_grouped"] = s.s_grouped;
        j["s_max"] = s.s_max;
        j["se"] = s.se;
    }
    return j;
}

json eberhard_json(const EberhardReport& r) {
    json j;
    j["defined"] = r.defined;
    if (r.defined) j["j"] = r.j;
    j["counts"] = {{"pp_xy", r.n_pp_xy},     {"pm_xyp", r.n_pm_xyp},
                   {"p0_xyp", r.n_p0_xyp},   {"mp_xpy", r.n_mp_xpy},
                   {"zp_xpy", r.n_0p_xpy},   {"pp_xpyp", r.n_pp_xpyp}};
    j["n"] = r.n;
    return j;
}

json signaling_json(const SignalingReport& r) {
    json j;
    j["defined"] = r.defined;
    json deltas = json::array();
    for (const auto& d : r.deltas) {
        json e;
        e["side"] = std::string(side_name(d.side));
        e["setting"] =
            std::string(setting_name(make_slot(d.side, d.setting)));
        e["contexts"] = {std::string(context_name(d.lhs)),
                         std::string(context_name(d.rhs))};
        if (r.defined) {
            e["delta"] = d.delta;
            e["se"] = d.se;
            e["z"] = d.z;
        }
        deltas.push_back(std::move(e));
    }
    j["deltas"] = std::move(deltas);
    if (r.defined) j["max_abs_z"] = r.max_abs_z;
    return j;
}

json cbd_json(const CbdReport& r) {
    return {{"s_odd", r.s_odd},
            {"delta_c", r.delta_c},
            {"threshold", r.threshold},
            {"contextual", r.contextual}};
}

json violation_json(const ViolationFrequency& v) {
    return {{"replications", v.replications},
            {"n_per_context", v.n_per_context},
            {"count_ge", v.count_ge},
            {"count_gt", v.count_gt},
            {"frac_ge", v.frac_ge},
            {"frac_gt", v.frac_gt},
            {"wilson_se_ge", v.wilson_se_ge},
            {"wilson95_ge", {v.wilson_lo_ge, v.wilson_hi_ge}},
            {"wilson95_gt", {v.wilson_lo_gt, v.wilson_hi_gt}}};
}

json audit_json(const LgAudit& a) {
    json j;
    j["delta"] = to_double(a.delta);
    j["delta_exact"] = q_json(a.delta);
    j["bound"] = to_double(a.bound);
    j["bound_exact"] = q_json(a.bound);
    j["s_defined"] = a.s_defined;
    if (a.s_defined) {
        j["s_post_max"] = to_double(a.s_post_max);
        j["s_post_max_exact"] = q_json(a.s_post_max);
    }
    j["satisfied"] = a.satisfied;
    return j;
}

json jp_json(const JpResult& r) {
    json j;
    switch (r.status) {
        case JpResult::Status::feasible: j["status"] = "feasible"; break;
        case JpResult::Status::infeasible: j["status"] = "infeasible"; break;
        case JpResult::Status::marginal_inconsistent:
            j["status"] = "marginal_inconsistent";
            break;
    }
    if (r.witness) {
        json w = json::array();
        for (const auto& q : r.witness->w) w.push_back(q_json(q));
        j["witness"] = std::move(w);
        j["witness_max_error"] = r.witness_max_error;
    }
    if (r.certificate) {
        json c;
        c["kind"] = r.certificate->kind == JpCertificate::Kind::chsh_violation
                        ? "chsh_violation"
                        : "marginal_mismatch";
        if (r.certificate->kind == JpCertificate::Kind::chsh_violation)
            c["signs"] = r.certificate->signs;
        c["value"] = to_double(r.certificate->value);
        c["value_exact"] = q_json(r.certificate->value);
        c["detail"] = r.certificate->detail;
        j["certificate"] = std::move(c);
    }
    return j;
}

json coupling_json(const CouplingReport& r) {
    json rows = json::array();
    for (std::size_t i = 0; i < 8; ++i)
        rows.push_back({{"quantity", r.labels[i]},
                        {"product", to_double(r.product_side[i])},
                        {"product_exact", q_json(r.product_side[i])},
                        {"coupled", to_double(r.coupled_side[i])},
                        {"coupled_exact", q_json(r.coupled_side[i])},
                        {"residual_exact", q_json(r.residuals[i])}});
    return {{"rows", std::move(rows)}, {"all_zero", r.all_zero}};
}

json match_json(const MatchSummary& m) {
    return {{"epochs", m.epochs},
            {"both", m.both},
            {"alice_only", m.alice_only},
            {"bob_only", m.bob_only},
            {"neither", m.neither},
            {"unclaimed_events", m.unclaimed_events}};
}

json post_selection_json(const PostSelectionSummary& s) {
    return {{"retained", s.retained},
            {"discarded", s.discarded},
            {"total_retained", s.total_retained},
            {"total_discarded", s.total_discarded}};
}

namespace {

std::string fmt(const json& v) {
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string fixed6(const json& v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v.get<double>());
    return buf;
}

void render_correlations(std::ostringstream& os, const json& c) {
    os << "correlations (" << c["source_kind"].get<std::string>() << " data)\n";
    os << "  context         n      pairs           E          mA          mB\n";
    for (auto ctx : all_contexts) {
        const auto& j = c["contexts"][std::string(context_name(ctx))];
        os << "  " << std::string(context_name(ctx));
        for (std::size_t pad = context_name(ctx).size(); pad < 7; ++pad) os << ' ';
        auto col = [&](const std::string& s, std::size_t width) {
            os << "  ";
            if (s.size() < width) os << std::string(width - s.size(), ' ');
            os << s;
        };
        col(j["n"].dump(), 7);
        col(j["n_pairs"].dump(), 9);
        for (const char* key : {"e", "ma", "mb"})
            col(j.contains(key) ? fixed6(j[key]) : std::string("-"), 10);
        os << '\n';
    }
}

}  // namespace

std::string text_report(const json& report) {
    std::ostringstream os;
    if (report.contains("dataset")) {
        const auto& d = report["dataset"];
        os << "dataset: " << d["csv"].get<std::string>() << " ("
           << d["kind"].get<std::string>() << ", " << d["records"]
           << " records)\n";
        if (d.contains("model_id"))
            os << "model:   " << d["model_id"].get<std::string>() << "\n";
        os << "\n";
    }
    if (report.contains("correlations")) {
        render_correlations(os, report["correlations"]);
        os << "\n";
    }
    if (report.contains("chsh")) {
        const auto& s = report["chsh"];
        if (s["defined"].get<bool>()) {
            os << "chsh: S_fixed = " << fmt(s["s_fixed"])
               << "   |E1-E2|+|E3+E4| = " << fmt(s["s_grouped"])
               << "   S_max = " << fmt(s["s_max"]) << "  (se " << fmt(s["se"])
               << ")\n\n";
        } else {
            os << "chsh: undefined (empty context)\n\n";
        }
    }
    if (report.contains("eberhard")) {
        const auto& e = report["eberhard"];
        if (e["defined"].get<bool>())
            os << "eberhard: J = " << fmt(e["j"]) << " per trial\n\n";
        else
            os << "eberhard: undefined (empty context)\n\n";
    }
    if (report.contains("nosignaling")) {
        const auto& r = report["nosignaling"];
        os << "marginal consistency (no-signaling)\n";
        for (const auto& d : r["deltas"]) {
            os << "  " << d["side"].get<std::string>() << " @ "
               << d["setting"].get<std::string>() << ": ";
            if (d.contains("delta"))
                os << "delta = " << fmt(d["delta"]) << "  (z = " << fmt(d["z"])
                   << ")";
            else
                os << "undefined";
            os << '\n';
        }
        os << "\n";
    }
    if (report.contains("cbd")) {
        const auto& c = report["cbd"];
        os << "cyclic-system analysis: s_odd = " << fmt(c["s_odd"])
           << ", delta_c = " << fmt(c["delta_c"]) << ", threshold 2+delta_c = "
           << fmt(c["threshold"]) << " -> "
           << (c["contextual"].get<bool>() ? "contextual" : "not contextual")
           << "\n\n";
    }
    if (report.contains("post_selection")) {
        const auto& p = report["post_selection"];
        os << "post-selection: retained " << p["total_retained"]
           << ", discarded " << p["total_discarded"] << "\n\n";
    }
    if (report.contains("jp")) {
        const auto& j = report["jp"];
        os << "joint distribution: " << j["status"].get<std::string>() << '\n';
        if (j.contains("certificate"))
            os << "  certificate: "
               << j["certificate"]["detail"].get<std::string>() << '\n';
        if (j.contains("witness_max_error"))
            os << "  witness projection error <= "
               << fmt(j["witness_max_error"]) << '\n';
        os << "\n";
    }
    if (report.contains("violation_frequency")) {
        const auto& v = report["violation_frequency"];
        os << "violation frequency: " << v["count_ge"] << "/"
           << v["replications"] << " with S_obs >= 2 (frac "
           << fmt(v["frac_ge"]) << "), " << v["count_gt"]
           << " strictly above (frac " << fmt(v["frac_gt"]) << ")\n\n";
    }
    if (report.contains("audit")) {
        const auto& a = report["audit"];
        os << "detection-overlap audit: delta = " << a["delta_exact"].get<std::string>()
           << ", bound 4-2*delta = " << a["bound_exact"].get<std::string>();
        if (a["s_defined"].get<bool>())
            os << ", S_post_max = " << a["s_post_max_exact"].get<std::string>();
        os << " -> " << (a["satisfied"].get<bool>() ? "satisfied" : "VIOLATED")
           << "\n\n";
    }
    return os.str();
}

}  // namespace bell
