#include "bell/jp.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace bell {

BigQ PairwiseSystem::e(ContextId c) const {
    const auto& q = cells[idx(c)];
    return q[0] - q[1] - q[2] + q[3];
}

BigQ PairwiseSystem::ma(ContextId c) const {
    const auto& q = cells[idx(c)];
    return q[0] + q[1] - q[2] - q[3];
}

BigQ PairwiseSystem::mb(ContextId c) const {
    const auto& q = cells[idx(c)];
    return q[0] - q[1] + q[2] - q[3];
}

void PairwiseSystem::validate_and_normalize() {
    for (auto c : all_contexts) {
        auto& q = cells[idx(c)];
        BigQ total(0);
        for (const auto& p : q) {
            if (p < 0)
                throw config_error("pairwise system: negative probability in "
                                   "context " + std::string(context_name(c)));
            total += p;
        }
        if (total == 0)
            throw config_error("pairwise system: context " +
                               std::string(context_name(c)) + " sums to zero");
        if (std::abs(to_double(total) - 1.0) > 1e-12)
            throw config_error("pairwise system: context " +
                               std::string(context_name(c)) + " sums to " +
                               rational_to_string(total) +
                               " (off by more than 1e-12 from 1)");
        if (total != 1)
            for (auto& p : q) p /= total;
    }
}

namespace {

std::array<BigQ, 4> cells_from_moments(const BigQ& e, const BigQ& ma,
                                       const BigQ& mb, const std::string& where) {
    std::array<BigQ, 4> q;
    for (int a : {1, -1})
        for (int b : {1, -1}) {
            const BigQ p = (1 + a * ma + b * mb + a * b * e) / 4;
            if (p < 0)
                throw config_error(where + ": moments (E=" + rational_to_string(e) +
                                   ", mA=" + rational_to_string(ma) +
                                   ", mB=" + rational_to_string(mb) +
                                   ") are not a probability distribution");
            q[PairwiseSystem::cell_index(a, b)] = p;
        }
    return q;
}

}  // namespace

PairwiseSystem system_from_correlations(const std::array<double, 4>& e,
                                        const std::array<double, 2>& m_alice,
                                        const std::array<double, 2>& m_bob) {
    PairwiseSystem s;
    for (auto c : all_contexts) {
        s.cells[idx(c)] = cells_from_moments(
            rational_from_double(e[idx(c)]),
            rational_from_double(m_alice[idx(alice_label(c))]),
            rational_from_double(m_bob[idx(bob_label(c))]),
            "pairwise system context " + std::string(context_name(c)));
    }
    s.validate_and_normalize();
    return s;
}

PairwiseSystem system_from_table(const CorrelationTable& t) {
    PairwiseSystem s;
    for (auto c : all_contexts) {
        const auto& ctx = t.ctx[idx(c)];
        if (ctx.n_pairs <= 0)
            throw domain_error("system_from_table: context " +
                               std::string(context_name(c)) +
                               " has no double-detection pairs");
        auto& q = s.cells[idx(c)];
        for (int a : {1, -1})
            for (int b : {1, -1})
                q[PairwiseSystem::cell_index(a, b)] =
                    BigQ(ctx.counts[static_cast<std::size_t>((a + 1) * 3 + (b + 1))],
                         ctx.n_pairs);
    }
    s.validate_and_normalize();
    return s;
}

PairwiseSystem system_from_exact(const ExactCorrelations& ec, bool post_selected) {
    PairwiseSystem s;
    for (auto c : all_contexts) {
        const auto& ctx = ec.ctx[idx(c)];
        auto& q = s.cells[idx(c)];
        if (post_selected) {
            if (!ctx.post_defined)
                throw domain_error("system_from_exact: context " +
                                   std::string(context_name(c)) +
                                   " has zero coincidence probability");
            for (int a : {1, -1})
                for (int b : {1, -1})
                    q[PairwiseSystem::cell_index(a, b)] =
                        ctx.pairs.at(a, b) / ctx.coincidence;
        } else {
            q = cells_from_moments(ctx.raw_e, ctx.raw_ma, ctx.raw_mb,
                                   "raw moments of context " +
                                       std::string(context_name(c)));
        }
    }
    s.validate_and_normalize();
    return s;
}

PairwiseSystem load_pairwise_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open system file '" + path.string() + "'");
    std::string header;
    if (!std::getline(in, header))
        throw config_error("system file '" + path.string() + "': empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "context,p_pp,p_pm,p_mp,p_mm")
        throw config_error("system file '" + path.string() +
                           "': header must be context,p_pp,p_pm,p_mp,p_mm");
    PairwiseSystem s;
    std::array<bool, 4> seen{};
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        const std::string at =
            "system file '" + path.string() + "' line " + std::to_string(lineno);
        if (fields.size() != 5)
            throw config_error(at + ": expected 5 fields");
        const auto ctx = context_from_name(fields[0]);
        if (!ctx) throw config_error(at + ": unknown context '" + fields[0] + "'");
        if (seen[idx(*ctx)])
            throw config_error(at + ": duplicate context '" + fields[0] + "'");
        seen[idx(*ctx)] = true;
        for (std::size_t i = 0; i < 4; ++i) {
            try {
                s.cells[idx(*ctx)][i] = parse_rational(fields[i + 1]);
            } catch (const std::invalid_argument&) {
                // Not a rational literal; fall back to an exact double parse.
                try {
                    s.cells[idx(*ctx)][i] = rational_from_double(
                        std::stod(fields[i + 1]));
                } catch (const std::exception&) {
                    throw config_error(at + ": cannot parse probability '" +
                                       fields[i + 1] + "'");
                }
            }
        }
    }
    for (auto c : all_contexts)
        if (!seen[idx(c)])
            throw config_error("system file '" + path.string() +
                               "': missing context " +
                               std::string(context_name(c)));
    s.validate_and_normalize();
    return s;
}

PairwiseSystem load_pairwise_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open system file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("system file '" + path.string() + "': " + e.what());
    }
    auto to_q = [&](const nlohmann::json& v, const std::string& where) -> BigQ {
        if (v.is_string()) {
            try {
                return parse_rational(v.get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw config_error(where + ": " + e.what());
            }
        }
        if (v.is_number_integer()) return BigQ(v.get<long long>());
        if (v.is_number_float()) return rational_from_double(v.get<double>());
        throw config_error(where + ": expected a number or \"p/q\" string");
    };
    if (doc.contains("system")) {
        const auto& sys = doc["system"];
        PairwiseSystem s;
        for (auto c : all_contexts) {
            const std::string name(context_name(c));
            if (!sys.contains(name) || !sys[name].is_array() ||
                sys[name].size() != 4)
                throw config_error("system file '" + path.string() +
                                   "': system." + name +
                                   " must be an array of 4 probabilities");
            for (std::size_t i = 0; i < 4; ++i)
                s.cells[idx(c)][i] =
                    to_q(sys[name][i], "system." + name + "[" + std::to_string(i) + "]");
        }
        s.validate_and_normalize();
        return s;
    }
    if (doc.contains("correlations")) {
        const auto& corr = doc["correlations"];
        auto read = [&](const char* key, std::size_t n) {
            if (!corr.contains(key) || !corr[key].is_array() ||
                corr[key].size() != n)
                throw config_error("system file '" + path.string() +
                                   "': correlations." + key + " must have " +
                                   std::to_string(n) + " entries");
            std::vector<double> out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = corr[key][i].get<double>();
            return out;
        };
        const auto e = read("e", 4);
        const auto m_alice = corr.contains("m_alice")
                                 ? read("m_alice", 2)
                                 : std::vector<double>{0.0, 0.0};
        const auto m_bob = corr.contains("m_bob") ? read("m_bob", 2)
                                                  : std::vector<double>{0.0, 0.0};
        return system_from_correlations({e[0], e[1], e[2], e[3]},
                                        {m_alice[0], m_alice[1]},
                                        {m_bob[0], m_bob[1]});
    }
    throw config_error("system file '" + path.string() +
                       "': expected a 'system' or 'correlations' key");
}

BigQ JointWitness::project(ContextId c, int a, int b) const {
    BigQ p(0);
    for (std::size_t s = 0; s < 16; ++s) {
        const int sx = (s & 8) ? 1 : -1;
        const int sxp = (s & 4) ? 1 : -1;
        const int sy = (s & 2) ? 1 : -1;
        const int syp = (s & 1) ? 1 : -1;
        const int va = alice_label(c) == SettingLabel::plain ? sx : sxp;
        const int vb = bob_label(c) == SettingLabel::plain ? sy : syp;
        if (va == a && vb == b) p += w[s];
    }
    return p;
}

std::array<std::array<int, 4>, 8> fine_patterns() {
    std::array<std::array<int, 4>, 8> out;
    std::size_t k = 0;
    for (int mask = 0; mask < 16; ++mask) {
        int minus = 0;
        for (int i = 0; i < 4; ++i) minus += (mask >> i) & 1;
        if (minus % 2 == 0) continue;
        for (int i = 0; i < 4; ++i)
            out[k][static_cast<std::size_t>(i)] = (mask >> i) & 1 ? -1 : 1;
        ++k;
    }
    return out;
}

std::array<BigQ, 8> fine_values(const PairwiseSystem& s) {
    const auto patterns = fine_patterns();
    std::array<BigQ, 8> out;
    for (std::size_t i = 0; i < 8; ++i) {
        BigQ v(0);
        for (auto c : all_contexts) v += patterns[i][idx(c)] * s.e(c);
        out[i] = v - 2;
    }
    return out;
}

namespace {

// Exact phase-1 simplex with Bland's rule: minimize the sum of artificial
// variables subject to A w = b, w >= 0.  Returns the optimal objective and,
// when it is zero, the feasible w in `solution`.
struct Phase1 {
    BigQ objective;
    std::array<BigQ, 16> solution{};
};

Phase1 phase1_simplex(std::array<std::array<BigQ, 17>, 9> rows) {
    constexpr std::size_t n_rows = 9, n_real = 16;
    constexpr std::size_t n_cols = n_real + n_rows + 1;  // + artificials + rhs
    constexpr std::size_t rhs = n_cols - 1;

    // Bring every right-hand side to >= 0, then append the identity for the
    // artificial basis.
    std::array<std::array<BigQ, n_cols>, n_rows> t{};
    for (std::size_t i = 0; i < n_rows; ++i) {
        const bool flip = rows[i][16] < 0;
        for (std::size_t j = 0; j < n_real; ++j)
            t[i][j] = flip ? BigQ(-rows[i][j]) : rows[i][j];
        t[i][rhs] = flip ? BigQ(-rows[i][16]) : rows[i][16];
        t[i][n_real + i] = 1;
    }
    std::array<std::size_t, n_rows> basis;
    for (std::size_t i = 0; i < n_rows; ++i) basis[i] = n_real + i;

    // Reduced-cost row for min sum(artificials): cbar_j = c_j - sum_i t[i][j].
    std::array<BigQ, n_cols> obj{};
    for (std::size_t j = 0; j < n_cols; ++j) {
        BigQ colsum(0);
        for (std::size_t i = 0; i < n_rows; ++i) colsum += t[i][j];
        const BigQ cj = (j >= n_real && j < rhs) ? 1 : 0;
        obj[j] = cj - colsum;  // for j == rhs this is -(current objective)
    }

    for (;;) {
        // Bland: entering column = lowest index with negative reduced cost.
        std::size_t enter = n_cols;
        for (std::size_t j = 0; j < rhs; ++j)
            if (obj[j] < 0) {
                enter = j;
                break;
            }
        if (enter == n_cols) break;

        // Ratio test; Bland tie-break on the leaving basis variable index.
        std::size_t leave = n_rows;
        BigQ best_ratio;
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (t[i][enter] <= 0) continue;
            const BigQ ratio = t[i][rhs] / t[i][enter];
            if (leave == n_rows || ratio < best_ratio ||
                (ratio == best_ratio && basis[i] < basis[leave])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave == n_rows)
            throw std::logic_error("phase1_simplex: unbounded phase-1 problem");

        const BigQ pivot = t[leave][enter];
        for (std::size_t j = 0; j < n_cols; ++j) t[leave][j] /= pivot;
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (i == leave || t[i][enter] == 0) continue;
            const BigQ f = t[i][enter];
            for (std::size_t j = 0; j < n_cols; ++j)
                t[i][j] -= f * t[leave][j];
        }
        {
            const BigQ f = obj[enter];
            if (f != 0)
                for (std::size_t j = 0; j < n_cols; ++j)
                    obj[j] -= f * t[leave][j];
        }
        basis[leave] = enter;
    }

    Phase1 out;
    out.objective = -obj[rhs];
    if (out.objective == 0)
        for (std::size_t i = 0; i < n_rows; ++i)
            if (basis[i] < n_real) out.solution[basis[i]] = t[i][rhs];
    return out;
}

}  // namespace

JpResult jp_feasible(const PairwiseSystem& input, double tol) {
    PairwiseSystem s = input;
    s.validate_and_normalize();
    JpResult result;

    // One mean per variable: compare its value in the two contexts it
    // appears in, then symmetrize exactly.
    struct VarMean {
        const char* name;
        ContextId c1, c2;
        bool alice;
    };
    static constexpr std::array<VarMean, 4> vars = {{
        {"A_x", ContextId::xy, ContextId::xyp, true},
        {"A_x'", ContextId::xpy, ContextId::xpyp, true},
        {"B_y", ContextId::xy, ContextId::xpy, false},
        {"B_y'", ContextId::xyp, ContextId::xpyp, false},
    }};
    std::array<BigQ, 4> mean;
    for (std::size_t v = 0; v < 4; ++v) {
        const auto& spec = vars[v];
        const BigQ m1 = spec.alice ? s.ma(spec.c1) : s.mb(spec.c1);
        const BigQ m2 = spec.alice ? s.ma(spec.c2) : s.mb(spec.c2);
        const BigQ diff = bell::abs(m1 - m2);
        if (to_double(diff) > tol) {
            result.status = JpResult::Status::marginal_inconsistent;
            JpCertificate cert;
            cert.kind = JpCertificate::Kind::marginal_mismatch;
            cert.value = diff;
            cert.detail = std::string("mean of ") + spec.name + " is " +
                          rational_to_string(m1) + " in context " +
                          std::string(context_name(spec.c1)) + " but " +
                          rational_to_string(m2) + " in context " +
                          std::string(context_name(spec.c2));
            result.certificate = std::move(cert);
            return result;
        }
        mean[v] = (m1 + m2) / 2;
    }

    // Equation rows: normalization, four means, four correlations.  The
    // single-variable sign of assignment s and the pairwise product signs.
    std::array<std::array<BigQ, 17>, 9> rows{};
    auto sign_of = [](std::size_t assignment, std::size_t var) {
        return (assignment >> (3 - var)) & 1 ? 1 : -1;
    };
    for (std::size_t a = 0; a < 16; ++a) {
        rows[0][a] = 1;
        for (std::size_t v = 0; v < 4; ++v) rows[1 + v][a] = sign_of(a, v);
        for (auto c : all_contexts) {
            const std::size_t va = alice_label(c) == SettingLabel::plain ? 0 : 1;
            const std::size_t vb = bob_label(c) == SettingLabel::plain ? 2 : 3;
            rows[5 + idx(c)][a] = sign_of(a, va) * sign_of(a, vb);
        }
    }
    rows[0][16] = 1;
    for (std::size_t v = 0; v < 4; ++v) rows[1 + v][16] = mean[v];
    for (auto c : all_contexts) rows[5 + idx(c)][16] = s.e(c);

    const Phase1 lp = phase1_simplex(rows);

    // Fine cross-check: the LP verdict and the eight inequalities must agree
    // on every call.
    const auto fv = fine_values(s);
    const bool all_fine_hold =
        std::all_of(fv.begin(), fv.end(), [](const BigQ& v) { return v <= 0; });
    if ((lp.objective == 0) != all_fine_hold)
        throw std::logic_error("jp_feasible: LP verdict disagrees with the "
                               "odd-sign inequality test");

    if (lp.objective == 0) {
        result.status = JpResult::Status::feasible;
        JointWitness w;
        w.w = lp.solution;
        double max_err = 0;
        for (auto c : all_contexts)
            for (int a : {1, -1})
                for (int b : {1, -1}) {
                    const BigQ diff =
                        w.project(c, a, b) -
                        s.cells[idx(c)][PairwiseSystem::cell_index(a, b)];
                    max_err = std::max(max_err, std::abs(to_double(diff)));
                }
        result.witness_max_error = max_err;
        if (max_err > tol)
            throw std::logic_error("jp_feasible: witness projection error "
                                   "exceeds tolerance");
        result.witness = std::move(w);
        return result;
    }

    result.status = JpResult::Status::infeasible;
    const auto patterns = fine_patterns();
    std::size_t worst = 0;
    for (std::size_t i = 1; i < 8; ++i)
        if (fv[i] > fv[worst]) worst = i;
    JpCertificate cert;
    cert.kind = JpCertificate::Kind::chsh_violation;
    cert.signs = patterns[worst];
    cert.value = fv[worst] + 2;
    std::string expr;
    for (auto c : all_contexts) {
        expr += patterns[worst][idx(c)] > 0 ? (idx(c) ? " + " : "") : (idx(c) ? " - " : "-");
        expr += "E(";
        expr += context_name(c);
        expr += ")";
    }
    cert.detail = expr + " = " + rational_to_string(cert.value) + " > 2";
    result.certificate = std::move(cert);
    return result;
}

CouplingReport coupling_equalities(const Model& product, const Model& coupled) {
    if (coupled.kind != ModelKind::coupled_joint)
        throw domain_error("coupling_equalities: '" + coupled.id +
                           "' is not a coupled_joint model");
    if (product.kind != ModelKind::deterministic_local &&
        product.kind != ModelKind::stochastic_local &&
        product.kind != ModelKind::contextual_product)
        throw domain_error("coupling_equalities: '" + product.id +
                           "' is not a product-type model");
    const bool same = product.n1 == coupled.n1 && product.n2 == coupled.n2 &&
                      product.source == coupled.source &&
                      product.instr_n == coupled.instr_n &&
                      product.instr == coupled.instr &&
                      product.a_table == coupled.a_table &&
                      product.b_table == coupled.b_table;
    if (!same)
        throw domain_error("coupling_equalities: '" + coupled.id +
                           "' was not built from '" + product.id +
                           "' — the ingredient tables differ");

    const Joint4Dist joint = enumerate_joint4(coupled);
    const ExactCorrelations ec = exact_correlations(product);

    CouplingReport r;
    r.labels = {"E[A_x]",     "E[A_x']",    "E[B_y]",      "E[B_y']",
                "E[A_x B_y]", "E[A_x B_y']", "E[A_x' B_y]", "E[A_x' B_y']"};

    // Coupled side: moments of the 4-outcome joint distribution.
    std::array<BigQ, 8> cs{};
    for (int ax = -1; ax <= 1; ++ax)
        for (int axp = -1; axp <= 1; ++axp)
            for (int by = -1; by <= 1; ++by)
                for (int byp = -1; byp <= 1; ++byp) {
                    const BigQ& p = joint.at(ax, axp, by, byp);
                    if (p == 0) continue;
                    cs[0] += p * ax;
                    cs[1] += p * axp;
                    cs[2] += p * by;
                    cs[3] += p * byp;
                    cs[4] += p * ax * by;
                    cs[5] += p * ax * byp;
                    cs[6] += p * axp * by;
                    cs[7] += p * axp * byp;
                }

    // Product side: raw context moments.  Single-variable means must agree
    // between the two contexts sharing the variable — that is the built-in
    // parameter independence of product models.
    auto raw_ma = [&](ContextId c) { return ec.ctx[idx(c)].raw_ma; };
    auto raw_mb = [&](ContextId c) { return ec.ctx[idx(c)].raw_mb; };
    if (raw_ma(ContextId::xy) != raw_ma(ContextId::xyp) ||
        raw_ma(ContextId::xpy) != raw_ma(ContextId::xpyp) ||
        raw_mb(ContextId::xy) != raw_mb(ContextId::xpy) ||
        raw_mb(ContextId::xyp) != raw_mb(ContextId::xpyp))
        throw std::logic_error("coupling_equalities: product model marginals "
                               "depend on the partner setting");
    std::array<BigQ, 8> ps = {raw_ma(ContextId::xy),
                              raw_ma(ContextId::xpy),
                              raw_mb(ContextId::xy),
                              raw_mb(ContextId::xyp),
                              ec.ctx[idx(ContextId::xy)].raw_e,
                              ec.ctx[idx(ContextId::xyp)].raw_e,
                              ec.ctx[idx(ContextId::xpy)].raw_e,
                              ec.ctx[idx(ContextId::xpyp)].raw_e};

    r.product_side = ps;
    r.coupled_side = cs;
    r.all_zero = true;
    for (std::size_t i = 0; i < 8; ++i) {
        r.residuals[i] = bell::abs(cs[i] - ps[i]);
        r.all_zero = r.all_zero && r.residuals[i] == 0;
    }
    return r;
}

}  // namespace bell
