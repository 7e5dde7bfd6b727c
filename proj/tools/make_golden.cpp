// Regenerates the committed recipe files and the golden statistics the test
// suite checks sampled estimates against.  Every number here comes from the
// exact enumeration path (rational arithmetic end to end); the unit tests
// additionally pin the headline values to hand-derived literals, so the
// sampling code, the enumeration code, and the by-hand algebra must all
// agree before anything passes.
//
// Usage: make_golden <output-dir>   (writes <dir>/*.json and <dir>/golden/)

#include "bell/jp.hpp"
#include "bell/model_json.hpp"
#include "bell/recipes.hpp"
#include "bell/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace bell;
using nlohmann::json;

namespace {

json q(const BigQ& v) { return rational_to_string(v); }

json q4(const std::array<BigQ, 4>& v) {
    return json::array({q(v[0]), q(v[1]), q(v[2]), q(v[3])});
}

json d4(const std::array<double, 4>& v) {
    return json::array({v[0], v[1], v[2], v[3]});
}

const char* jp_status_name(JpResult::Status s) {
    switch (s) {
        case JpResult::Status::feasible: return "feasible";
        case JpResult::Status::infeasible: return "infeasible";
        case JpResult::Status::marginal_inconsistent:
            return "marginal_inconsistent";
    }
    return "?";
}

// Exact statistics shared by every model: raw and (where defined)
// post-selected correlations, CHSH maxima, marginal deltas, the count
// inequality, and the joint-distribution verdict on the post-selected table.
json model_golden(const Model& m) {
    const ExactCorrelations ec = exact_correlations(m);
    json g;
    g["id"] = m.id;

    json raw;
    const auto raw_e = ec.raw_e();
    raw["e"] = q4(raw_e);
    std::array<BigQ, 4> raw_ma, raw_mb, coinc;
    for (std::size_t c = 0; c < 4; ++c) {
        raw_ma[c] = ec.ctx[c].raw_ma;
        raw_mb[c] = ec.ctx[c].raw_mb;
        coinc[c] = ec.ctx[c].coincidence;
    }
    raw["ma"] = q4(raw_ma);
    raw["mb"] = q4(raw_mb);
    raw["s_fixed"] = q(chsh_fixed(raw_e));
    raw["s_max"] = q(chsh_max(raw_e));
    raw["deltas"] = q4(nosignaling_exact(m, false));
    raw["eberhard_j"] = q(eberhard_exact(m));
    g["raw"] = std::move(raw);
    g["coincidence"] = q4(coinc);

    if (ec.all_post_defined()) {
        json post;
        const auto post_e = ec.post_e();
        post["e"] = q4(post_e);
        std::array<BigQ, 4> post_ma, post_mb;
        for (std::size_t c = 0; c < 4; ++c) {
            post_ma[c] = ec.ctx[c].post_ma;
            post_mb[c] = ec.ctx[c].post_mb;
        }
        post["ma"] = q4(post_ma);
        post["mb"] = q4(post_mb);
        post["s_fixed"] = q(chsh_fixed(post_e));
        post["s_max"] = q(chsh_max(post_e));
        post["deltas"] = q4(nosignaling_exact(m, true));
        const CbdExact cbd = cbd_exact(m, true);
        post["cbd"] = {{"s_odd", q(cbd.s_odd)},
                       {"delta_c", q(cbd.delta_c)},
                       {"contextual", cbd.contextual}};
        const JpResult jp = jp_feasible(system_from_exact(ec, true));
        post["jp_status"] = jp_status_name(jp.status);
        if (jp.certificate) post["jp_certificate_value"] = q(jp.certificate->value);
        g["post"] = std::move(post);
    }

    if (m.kind != ModelKind::contextual_correlated) {
        const LgAudit audit = larsson_gill_audit(m);
        json lg;
        lg["delta"] = q(audit.delta);
        lg["bound"] = q(audit.bound);
        lg["satisfied"] = audit.satisfied;
        g["detection_overlap"] = std::move(lg);
    }
    return g;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_golden <output-dir>\n";
        return 2;
    }
    const fs::path dir(argv[1]);
    const fs::path golden = dir / "golden";
    fs::create_directories(golden);

    const Model eq3 = demo_eq3_model();
    const Model eq3_disjoint = demo_eq3_disjoint_model();
    const Model eq5 = demo_eq5_model();
    const Model timetag = demo_timetag_model();
    const Model mixture = saturating_mixture_model();

    for (const Model* m : {&eq3, &eq3_disjoint, &eq5, &timetag, &mixture})
        save_recipe_file(*m, dir / (m->id + ".json"));

    write_json_file(golden / "demo_eq3.golden.json", model_golden(eq3));
    write_json_file(golden / "demo_eq3_disjoint.golden.json",
                    model_golden(eq3_disjoint));
    write_json_file(golden / "demo_eq5.golden.json", model_golden(eq5));
    write_json_file(golden / "saturating_mixture.golden.json",
                    model_golden(mixture));

    // demo_timetag: the stream-level model plus, per shipped window, the
    // exact statistics of the equivalent post-selection model (valid while
    // every delay stays under spacing - window/2).
    {
        json g = model_golden(timetag);
        const double spacing = demo_timetag_spacing();
        g["spacing"] = spacing;
        json rows = json::array();
        for (double w : demo_timetag_windows()) {
            const Model win = windowed_model(timetag, w, spacing);
            const ExactCorrelations ec = exact_correlations(win);
            json row;
            row["window"] = w;
            std::array<BigQ, 4> coinc;
            BigQ retained = 0;
            for (std::size_t c = 0; c < 4; ++c) {
                coinc[c] = ec.ctx[c].coincidence;
                retained += ec.ctx[c].coincidence;
            }
            retained /= 4;  // uniform random schedule
            row["coincidence"] = q4(coinc);
            row["retained"] = q(retained);
            if (ec.all_post_defined()) {
                const auto pe = ec.post_e();
                row["post_e"] = q4(pe);
                row["s_max"] = q(chsh_max(pe));
            }
            row["eberhard_j"] = q(eberhard_exact(win));
            const LgAudit audit = larsson_gill_audit_windowed(timetag, w, spacing);
            row["lg_delta"] = q(audit.delta);
            row["lg_bound"] = q(audit.bound);
            row["lg_satisfied"] = audit.satisfied;
            rows.push_back(std::move(row));
        }
        g["windows"] = std::move(rows);
        write_json_file(golden / "demo_timetag.golden.json", g);
    }

    // Reference tables with no underlying model: the quantum singlet at the
    // optimal angles and the PR box, both of which must fail the
    // joint-distribution test.
    {
        json g;
        const auto e = quantum_optimal_correlations();
        const double pi = std::acos(-1.0);
        g["quantum_optimal"] = {{"e", d4(e)},
                                {"s_max", chsh_max(e)},
                                {"angles", {0.0, pi / 4, pi / 8, 3 * pi / 8}}};
        const PairwiseSystem qsys = system_from_correlations(e, {0, 0}, {0, 0});
        const JpResult qjp = jp_feasible(qsys);
        g["quantum_optimal"]["jp_status"] = jp_status_name(qjp.status);
        if (qjp.certificate) {
            g["quantum_optimal"]["jp_certificate_value"] =
                to_double(qjp.certificate->value);
            g["quantum_optimal"]["jp_certificate_signs"] = qjp.certificate->signs;
        }

        const PairwiseSystem pr =
            system_from_correlations({1, 1, 1, -1}, {0, 0}, {0, 0});
        const JpResult prjp = jp_feasible(pr);
        g["pr_box"] = {{"e", {1, 1, 1, -1}},
                       {"jp_status", jp_status_name(prjp.status)}};
        if (prjp.certificate)
            g["pr_box"]["jp_certificate_value"] = q(prjp.certificate->value);
        write_json_file(golden / "reference_tables.golden.json", g);
    }

    // Coupling residuals for the demo product models: all eight identities
    // must be exactly zero.
    {
        json g = json::array();
        for (const Model* base : {&eq3, &eq3_disjoint}) {
            const Model coupled = build_coupling(*base);
            const CouplingReport rep = coupling_equalities(*base, coupled);
            json e;
            e["base"] = base->id;
            e["all_zero"] = rep.all_zero;
            json residuals = json::array();
            for (const auto& r : rep.residuals) residuals.push_back(q(r));
            e["residuals"] = std::move(residuals);
            g.push_back(std::move(e));
        }
        write_json_file(golden / "couplings.golden.json", g);
    }

    std::cout << "wrote recipes and golden statistics under " << dir.string()
              << "\n";
    return 0;
}
