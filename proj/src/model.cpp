#include "bell/model.hpp"

#include <algorithm>
#include <cmath>

namespace bell {

std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::deterministic_local: return "deterministic_local";
        case ModelKind::stochastic_local: return "stochastic_local";
        case ModelKind::contextual_product: return "contextual_product";
        case ModelKind::contextual_correlated: return "contextual_correlated";
        case ModelKind::time_tag: return "time_tag";
        case ModelKind::coupled_joint: return "coupled_joint";
    }
    throw std::logic_error("model_kind_name: bad kind");
}

std::optional<ModelKind> model_kind_from_name(std::string_view s) {
    for (auto k : {ModelKind::deterministic_local, ModelKind::stochastic_local,
                   ModelKind::contextual_product, ModelKind::contextual_correlated,
                   ModelKind::time_tag, ModelKind::coupled_joint})
        if (model_kind_name(k) == s) return k;
    return std::nullopt;
}

namespace {

void check_outcome_values(const std::vector<std::int8_t>& table, bool allow_zero,
                          const std::string& where) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        const int v = table[i];
        if (!valid_outcome(v))
            throw config_error(where + ": outcome value " + std::to_string(v) +
                               " at flat index " + std::to_string(i) +
                               " is not in {-1, 0, 1}");
        if (v == 0 && !allow_zero)
            throw config_error(where + ": outcome 0 at flat index " +
                               std::to_string(i) +
                               " is not allowed for this model kind");
    }
}

}  // namespace

void validate_model(const Model& m) {
    const std::string at = "model '" + m.id + "'";
    if (m.id.empty()) throw config_error("model: empty id");
    if (m.n1 == 0 || m.n2 == 0)
        throw config_error(at + ": hidden-label spaces must be non-empty");
    if (m.source.shape() != std::vector<std::size_t>{m.n1, m.n2})
        throw config_error(at + ": source table shape does not match label spaces");
    if (bell::abs(m.source.total() - 1) != 0)
        throw config_error(at + ": source table is not normalized");

    const bool joint = m.uses_joint_instruments();
    for (auto slot : all_slots) {
        const std::size_t k = idx(slot);
        if (m.instr_n[k] == 0)
            throw config_error(at + ": empty instrument space for setting " +
                               std::string(setting_name(slot)));
        if (!joint) {
            if (m.instr[k].shape() != std::vector<std::size_t>{m.instr_n[k]})
                throw config_error(at + ": instrument table shape mismatch for " +
                                   std::string(setting_name(slot)));
            if (bell::abs(m.instr[k].total() - 1) != 0)
                throw config_error(at + ": instrument table for " +
                                   std::string(setting_name(slot)) +
                                   " is not normalized");
        }
    }
    if (joint) {
        for (auto c : all_contexts) {
            const auto& t = m.instr_joint[idx(c)];
            const std::size_t na = m.instr_n[idx(alice_slot(c))];
            const std::size_t nb = m.instr_n[idx(bob_slot(c))];
            if (t.shape() != std::vector<std::size_t>{na, nb})
                throw config_error(at + ": joint instrument table shape mismatch "
                                        "for context " +
                                   std::string(context_name(c)));
            if (bell::abs(t.total() - 1) != 0)
                throw config_error(at + ": joint instrument table for context " +
                                   std::string(context_name(c)) +
                                   " is not normalized");
        }
    }

    // Zero outcomes are the defining feature of contextual_product; every
    // other kind must produce a definite sign on each emission.
    const bool allow_zero = m.kind == ModelKind::contextual_product ||
                            m.kind == ModelKind::coupled_joint;
    for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
        const std::size_t la = idx(label);
        const auto sa = make_slot(Side::alice, label);
        const auto sb = make_slot(Side::bob, label);
        if (m.a_table[la].size() != m.n1 * m.instr_n[idx(sa)])
            throw config_error(at + ": outcome table size mismatch for alice " +
                               std::string(setting_name(sa)));
        if (m.b_table[la].size() != m.n2 * m.instr_n[idx(sb)])
            throw config_error(at + ": outcome table size mismatch for bob " +
                               std::string(setting_name(sb)));
        check_outcome_values(m.a_table[la], allow_zero,
                             at + ".outcome_tables.alice[" +
                                 std::string(setting_name(sa)) + "]");
        check_outcome_values(m.b_table[la], allow_zero,
                             at + ".outcome_tables.bob[" +
                                 std::string(setting_name(sb)) + "]");
    }
    if (m.kind == ModelKind::deterministic_local) {
        for (auto slot : all_slots)
            if (m.instr_n[idx(slot)] != 1)
                throw config_error(at + ": deterministic model must use size-1 "
                                        "instrument spaces");
    }
    if (m.kind == ModelKind::time_tag) {
        for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
            if (m.a_delay[idx(label)].size() != m.n1 ||
                m.b_delay[idx(label)].size() != m.n2)
                throw config_error(at + ": delay table size mismatch");
            for (double d : m.a_delay[idx(label)])
                if (!(d >= 0) || !std::isfinite(d))
                    throw config_error(at + ": delays must be finite and >= 0");
            for (double d : m.b_delay[idx(label)])
                if (!(d >= 0) || !std::isfinite(d))
                    throw config_error(at + ": delays must be finite and >= 0");
        }
    } else {
        for (auto label : {SettingLabel::plain, SettingLabel::prime})
            if (!m.a_delay[idx(label)].empty() || !m.b_delay[idx(label)].empty())
                throw config_error(at + ": delay tables are only valid for "
                                        "time_tag models");
    }
}

PairDist enumerate_context(const Model& m, ContextId c) {
    const auto la = alice_label(c);
    const auto lb = bob_label(c);
    const auto sa = alice_slot(c);
    const auto sb = bob_slot(c);
    const std::size_t na = m.instr_n[idx(sa)];
    const std::size_t nb = m.instr_n[idx(sb)];
    const bool joint = m.uses_joint_instruments();
    const ProbTable* jt = joint ? &m.instr_joint[idx(c)] : nullptr;

    PairDist out;
    for (std::size_t l1 = 0; l1 < m.n1; ++l1) {
        for (std::size_t l2 = 0; l2 < m.n2; ++l2) {
            const BigQ& ps = m.source.at(l1, l2);
            if (ps == 0) continue;
            for (std::size_t i = 0; i < na; ++i) {
                const Outcome a = m.a_out(la, l1, i);
                for (std::size_t j = 0; j < nb; ++j) {
                    const BigQ w = joint ? jt->at(i, j)
                                         : BigQ(m.instr[idx(sa)].at(i) *
                                                m.instr[idx(sb)].at(j));
                    if (w == 0) continue;
                    out.at(a, m.b_out(lb, l2, j)) += ps * w;
                }
            }
        }
    }
    return out;
}

namespace {

ExactContext summarize(const PairDist& d) {
    ExactContext c;
    c.pairs = d;
    for (Outcome a : {-1, 0, 1}) {
        for (Outcome b : {-1, 0, 1}) {
            const BigQ& p = d.at(a, b);
            if (p == 0) continue;
            c.raw_e += p * a * b;
            c.raw_ma += p * a;
            c.raw_mb += p * b;
            if (a != 0 && b != 0) c.coincidence += p;
        }
    }
    c.post_defined = c.coincidence > 0;
    if (c.post_defined) {
        BigQ e(0), ma(0), mb(0);
        for (Outcome a : {-1, 1})
            for (Outcome b : {-1, 1}) {
                const BigQ& p = d.at(a, b);
                e += p * a * b;
                ma += p * a;
                mb += p * b;
            }
        c.post_e = e / c.coincidence;
        c.post_ma = ma / c.coincidence;
        c.post_mb = mb / c.coincidence;
    }
    return c;
}

}  // namespace

ExactCorrelations exact_correlations(const Model& m) {
    ExactCorrelations out;
    for (auto c : all_contexts)
        out.ctx[idx(c)] = summarize(enumerate_context(m, c));
    return out;
}

std::array<BigQ, 4> ExactCorrelations::raw_e() const {
    return {ctx[0].raw_e, ctx[1].raw_e, ctx[2].raw_e, ctx[3].raw_e};
}

bool ExactCorrelations::all_post_defined() const {
    return ctx[0].post_defined && ctx[1].post_defined && ctx[2].post_defined &&
           ctx[3].post_defined;
}

std::array<BigQ, 4> ExactCorrelations::post_e() const {
    if (!all_post_defined())
        throw domain_error("post-selected correlations undefined: some context "
                           "has zero coincidence probability");
    return {ctx[0].post_e, ctx[1].post_e, ctx[2].post_e, ctx[3].post_e};
}

BigQ chsh_fixed(const std::array<BigQ, 4>& e) {
    return e[0] + e[1] + e[2] - e[3];
}

BigQ chsh_grouped(const std::array<BigQ, 4>& e) {
    return bell::abs(e[0] - e[1]) + bell::abs(e[2] + e[3]);
}

BigQ chsh_max(const std::array<BigQ, 4>& e) {
    BigQ best(0);
    for (int minus = 0; minus < 4; ++minus) {
        BigQ s(0);
        for (int k = 0; k < 4; ++k)
            s += (k == minus) ? -e[static_cast<std::size_t>(k)]
                              : e[static_cast<std::size_t>(k)];
        best = std::max(best, bell::abs(s));
    }
    return best;
}

double chsh_fixed(const std::array<double, 4>& e) {
    return e[0] + e[1] + e[2] - e[3];
}

double chsh_grouped(const std::array<double, 4>& e) {
    return std::abs(e[0] - e[1]) + std::abs(e[2] + e[3]);
}

double chsh_max(const std::array<double, 4>& e) {
    double best = 0;
    for (int minus = 0; minus < 4; ++minus) {
        double s = 0;
        for (int k = 0; k < 4; ++k)
            s += (k == minus) ? -e[static_cast<std::size_t>(k)]
                              : e[static_cast<std::size_t>(k)];
        best = std::max(best, std::abs(s));
    }
    return best;
}

Joint4Dist enumerate_joint4(const Model& m) {
    if (m.uses_joint_instruments())
        throw domain_error("model '" + m.id +
                           "': no joint outcome distribution exists — the "
                           "instrument indices of different contexts are not "
                           "defined on a common space");
    Joint4Dist out;
    const auto& ix = m.instr[idx(SettingSlot::ax)];
    const auto& ixp = m.instr[idx(SettingSlot::axp)];
    const auto& iy = m.instr[idx(SettingSlot::by)];
    const auto& iyp = m.instr[idx(SettingSlot::byp)];
    for (std::size_t l1 = 0; l1 < m.n1; ++l1) {
        for (std::size_t l2 = 0; l2 < m.n2; ++l2) {
            const BigQ& ps = m.source.at(l1, l2);
            if (ps == 0) continue;
            for (std::size_t a = 0; a < ix.size(); ++a) {
                const Outcome vx = m.a_out(SettingLabel::plain, l1, a);
                const BigQ wa = ps * ix.at(a);
                if (wa == 0) continue;
                for (std::size_t ap = 0; ap < ixp.size(); ++ap) {
                    const Outcome vxp = m.a_out(SettingLabel::prime, l1, ap);
                    const BigQ wap = wa * ixp.at(ap);
                    if (wap == 0) continue;
                    for (std::size_t b = 0; b < iy.size(); ++b) {
                        const Outcome vy = m.b_out(SettingLabel::plain, l2, b);
                        const BigQ wb = wap * iy.at(b);
                        if (wb == 0) continue;
                        for (std::size_t bp = 0; bp < iyp.size(); ++bp) {
                            const BigQ w = wb * iyp.at(bp);
                            if (w == 0) continue;
                            out.at(vx, vxp, vy,
                                   m.b_out(SettingLabel::prime, l2, bp)) += w;
                        }
                    }
                }
            }
        }
    }
    return out;
}

TrialSampler::TrialSampler(const Model& m) {
    for (auto c : all_contexts) {
        const PairDist d = enumerate_context(m, c);
        std::vector<double> weights;
        auto& vals = values_[idx(c)];
        for (Outcome a : {-1, 0, 1})
            for (Outcome b : {-1, 0, 1}) {
                const BigQ& p = d.at(a, b);
                if (p == 0) continue;
                weights.push_back(to_double(p));
                vals.emplace_back(a, b);
            }
        cdf_[idx(c)] = CdfSampler(weights);
    }
}

std::pair<Outcome, Outcome> TrialSampler::sample(ContextId c, Rng& rng) const {
    return values_[idx(c)][cdf_[idx(c)].sample(rng)];
}

HiddenSampler::HiddenSampler(const Model& m) {
    if (m.uses_joint_instruments())
        throw domain_error("model '" + m.id +
                           "': hidden-coordinate sampling requires per-setting "
                           "instrument spaces");
    std::vector<double> sw;
    for (std::size_t l1 = 0; l1 < m.n1; ++l1)
        for (std::size_t l2 = 0; l2 < m.n2; ++l2) {
            const BigQ& p = m.source.at(l1, l2);
            if (p == 0) continue;
            sw.push_back(to_double(p));
            source_values_.emplace_back(l1, l2);
        }
    source_cdf_ = CdfSampler(sw);
    for (auto slot : all_slots) {
        std::vector<double> w(m.instr_n[idx(slot)]);
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = to_double(m.instr[idx(slot)].at(i));
        instr_cdf_[idx(slot)] = CdfSampler(w);
    }
}

HiddenDraw HiddenSampler::sample(Rng& rng) const {
    HiddenDraw h{};
    const auto [l1, l2] = source_values_[source_cdf_.sample(rng)];
    h.l1 = l1;
    h.l2 = l2;
    for (auto slot : all_slots) h.instr[idx(slot)] = instr_cdf_[idx(slot)].sample(rng);
    return h;
}

}  // namespace bell
