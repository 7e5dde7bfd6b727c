#include "bell/stats.hpp"

#include "bell/recipes.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>

namespace bell {

namespace {

double plug_in_se(double mean_sq, double mean, std::int64_t n) {
    if (n <= 0) return 0;
    const double var = std::max(0.0, mean_sq - mean * mean);
    return std::sqrt(var / static_cast<double>(n));
}

void finish_stats(ContextStats& c) {
    c.defined = c.n > 0;
    if (!c.defined) return;
    std::int64_t sum_ab = 0, sum_a = 0, sum_b = 0;
    std::int64_t sum_ab2 = 0, sum_a2 = 0, sum_b2 = 0;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
            const std::int64_t k =
                c.counts[static_cast<std::size_t>((a + 1) * 3 + (b + 1))];
            sum_ab += k * a * b;
            sum_a += k * a;
            sum_b += k * b;
            sum_ab2 += k * a * a * b * b;
            sum_a2 += k * a * a;
            sum_b2 += k * b * b;
        }
    const double n = static_cast<double>(c.n);
    c.e = static_cast<double>(sum_ab) / n;
    c.ma = static_cast<double>(sum_a) / n;
    c.mb = static_cast<double>(sum_b) / n;
    c.se_e = plug_in_se(static_cast<double>(sum_ab2) / n, c.e, c.n);
    c.se_ma = plug_in_se(static_cast<double>(sum_a2) / n, c.ma, c.n);
    c.se_mb = plug_in_se(static_cast<double>(sum_b2) / n, c.mb, c.n);
}

}  // namespace

CorrelationTable estimate_correlations(const Dataset& ds) {
    if (ds.kind != DatasetKind::raw && ds.kind != DatasetKind::final)
        throw domain_error("estimate_correlations: requires a raw or final trial "
                           "dataset, got " +
                           std::string(dataset_kind_name(ds.kind)));
    CorrelationTable t;
    t.source_kind = ds.kind;
    for (const auto& r : ds.trials) {
        auto& c = t.ctx[idx(r.context)];
        ++c.n;
        ++c.counts[static_cast<std::size_t>((r.a + 1) * 3 + (r.b + 1))];
        if (r.a != 0 && r.b != 0) ++c.n_pairs;
    }
    for (auto& c : t.ctx) finish_stats(c);
    return t;
}

CorrelationTable spreadsheet_correlations(const Dataset& ds) {
    if (ds.kind != DatasetKind::spreadsheet)
        throw domain_error("spreadsheet_correlations: requires a spreadsheet "
                           "dataset, got " +
                           std::string(dataset_kind_name(ds.kind)));
    CorrelationTable t;
    t.source_kind = ds.kind;
    for (const auto& r : ds.rows) {
        const std::array<std::pair<std::int8_t, std::int8_t>, 4> pairs = {
            {{r.a_x, r.b_y}, {r.a_x, r.b_yp}, {r.a_xp, r.b_y}, {r.a_xp, r.b_yp}}};
        for (std::size_t k = 0; k < 4; ++k) {
            auto& c = t.ctx[k];
            ++c.n;
            ++c.counts[static_cast<std::size_t>((pairs[k].first + 1) * 3 +
                                                (pairs[k].second + 1))];
            if (pairs[k].first != 0 && pairs[k].second != 0) ++c.n_pairs;
        }
    }
    for (auto& c : t.ctx) finish_stats(c);
    return t;
}

ChshEstimate chsh_from_table(const CorrelationTable& t) {
    ChshEstimate out;
    out.defined = t.all_defined();
    if (!out.defined) return out;
    const std::array<double, 4> e = {t.ctx[0].e, t.ctx[1].e, t.ctx[2].e,
                                     t.ctx[3].e};
    out.s_fixed = chsh_fixed(e);
    out.s_grouped = chsh_grouped(e);
    out.s_max = chsh_max(e);
    double var = 0;
    for (const auto& c : t.ctx) var += c.se_e * c.se_e;
    out.se = std::sqrt(var);
    return out;
}

// Why J <= 0 for every product-space local model: condition on the hidden
// coordinates of one emission, which fix a deterministic assignment
// (a1, a2, b1, b2) in {-1,0,+1}^4 of all four outcomes.  The per-emission
// contribution is
//   [a1=+][b1=+] - [a1=+][b2=-] - [a1=+][b2=0] - [a2=-][b1=+]
//                                - [a2=0][b1=+] - [a2=+][b2=+].
// If the first bracket is 0 the sum is trivially <= 0.  If a1=+ and b1=+,
// look at b2: if b2 is - or 0, one of the next two terms fires; if b2=+,
// look at a2: whichever of {-, 0, +} it is, exactly one of the last three
// terms fires.  So the contribution is never positive, and averaging over
// emissions keeps it that way.  Only selection that couples the two sides
// (discarding rows by the joint outcome) can break the argument.
EberhardReport eberhard_from_dataset(const Dataset& ds) {
    if (ds.kind != DatasetKind::raw)
        throw domain_error(
            "eberhard_from_dataset: needs raw counts including undetected "
            "outcomes; a " + std::string(dataset_kind_name(ds.kind)) +
            " dataset has no record of them");
    const CorrelationTable t = estimate_correlations(ds);
    EberhardReport r;
    auto cnt = [&](ContextId c, int a, int b) {
        return t.ctx[idx(c)].counts[static_cast<std::size_t>((a + 1) * 3 + (b + 1))];
    };
    for (auto c : all_contexts) r.n[idx(c)] = t.ctx[idx(c)].n;
    r.defined = t.all_defined();
    r.n_pp_xy = cnt(ContextId::xy, 1, 1);
    r.n_pm_xyp = cnt(ContextId::xyp, 1, -1);
    r.n_p0_xyp = cnt(ContextId::xyp, 1, 0);
    r.n_mp_xpy = cnt(ContextId::xpy, -1, 1);
    r.n_0p_xpy = cnt(ContextId::xpy, 0, 1);
    r.n_pp_xpyp = cnt(ContextId::xpyp, 1, 1);
    if (r.defined) {
        auto rate = [](std::int64_t k, std::int64_t n) {
            return static_cast<double>(k) / static_cast<double>(n);
        };
        r.j = rate(r.n_pp_xy, r.n[0]) -
              rate(r.n_pm_xyp + r.n_p0_xyp, r.n[1]) -
              rate(r.n_mp_xpy + r.n_0p_xpy, r.n[2]) -
              rate(r.n_pp_xpyp, r.n[3]);
    }
    return r;
}

BigQ eberhard_exact(const Model& m) {
    const auto xy = enumerate_context(m, ContextId::xy);
    const auto xyp = enumerate_context(m, ContextId::xyp);
    const auto xpy = enumerate_context(m, ContextId::xpy);
    const auto xpyp = enumerate_context(m, ContextId::xpyp);
    return xy.at(1, 1) - xyp.at(1, -1) - xyp.at(1, 0) - xpy.at(-1, 1) -
           xpy.at(0, 1) - xpyp.at(1, 1);
}

namespace {

struct DeltaSpec {
    Side side;
    SettingLabel setting;
    ContextId lhs, rhs;
};

constexpr std::array<DeltaSpec, 4> delta_specs = {{
    {Side::alice, SettingLabel::plain, ContextId::xy, ContextId::xyp},
    {Side::alice, SettingLabel::prime, ContextId::xpy, ContextId::xpyp},
    {Side::bob, SettingLabel::plain, ContextId::xy, ContextId::xpy},
    {Side::bob, SettingLabel::prime, ContextId::xyp, ContextId::xpyp},
}};

}  // namespace

SignalingReport nosignaling_from_table(const CorrelationTable& t) {
    SignalingReport r;
    r.defined = t.all_defined();
    for (std::size_t i = 0; i < delta_specs.size(); ++i) {
        const auto& spec = delta_specs[i];
        auto& d = r.deltas[i];
        d.side = spec.side;
        d.setting = spec.setting;
        d.lhs = spec.lhs;
        d.rhs = spec.rhs;
        if (!r.defined) continue;
        const auto& l = t.ctx[idx(spec.lhs)];
        const auto& h = t.ctx[idx(spec.rhs)];
        const double ml = spec.side == Side::alice ? l.ma : l.mb;
        const double mh = spec.side == Side::alice ? h.ma : h.mb;
        const double sl = spec.side == Side::alice ? l.se_ma : l.se_mb;
        const double sh = spec.side == Side::alice ? h.se_ma : h.se_mb;
        d.delta = ml - mh;
        d.se = std::sqrt(sl * sl + sh * sh);
        d.z = d.se > 0 ? d.delta / d.se
                       : (d.delta == 0 ? 0.0
                                       : std::numeric_limits<double>::infinity());
        r.max_abs_z = std::max(r.max_abs_z, std::abs(d.z));
    }
    return r;
}

std::array<BigQ, 4> nosignaling_exact(const Model& m, bool post_selected) {
    const ExactCorrelations ec = exact_correlations(m);
    if (post_selected && !ec.all_post_defined())
        throw domain_error("nosignaling_exact: post-selected marginals undefined "
                           "(a context never produces coincidences)");
    auto marginal = [&](ContextId c, Side side) {
        const auto& ctx = ec.ctx[idx(c)];
        if (post_selected) return side == Side::alice ? ctx.post_ma : ctx.post_mb;
        return side == Side::alice ? ctx.raw_ma : ctx.raw_mb;
    };
    std::array<BigQ, 4> out;
    for (std::size_t i = 0; i < delta_specs.size(); ++i) {
        const auto& spec = delta_specs[i];
        out[i] = marginal(spec.lhs, spec.side) - marginal(spec.rhs, spec.side);
    }
    return out;
}

CbdReport cbd_from_values(const std::array<double, 4>& e,
                          const std::array<double, 4>& ma_ctx,
                          const std::array<double, 4>& mb_ctx) {
    CbdReport r;
    r.s_odd = chsh_max(e);
    r.delta_c = 0;
    for (const auto& spec : delta_specs) {
        const auto& m = spec.side == Side::alice ? ma_ctx : mb_ctx;
        r.delta_c += std::abs(m[idx(spec.lhs)] - m[idx(spec.rhs)]);
    }
    r.threshold = 2 + r.delta_c;
    r.contextual = r.s_odd > r.threshold;
    return r;
}

CbdReport cbd_from_table(const CorrelationTable& t) {
    if (!t.all_defined())
        throw domain_error("cbd_from_table: every context needs data");
    std::array<double, 4> e, ma, mb;
    for (std::size_t c = 0; c < 4; ++c) {
        e[c] = t.ctx[c].e;
        ma[c] = t.ctx[c].ma;
        mb[c] = t.ctx[c].mb;
    }
    return cbd_from_values(e, ma, mb);
}

CbdExact cbd_exact(const Model& m, bool post_selected) {
    const ExactCorrelations ec = exact_correlations(m);
    std::array<BigQ, 4> e;
    if (post_selected) {
        e = ec.post_e();
    } else {
        e = ec.raw_e();
    }
    CbdExact r;
    r.s_odd = chsh_max(e);
    const auto deltas = nosignaling_exact(m, post_selected);
    r.delta_c = 0;
    for (const auto& d : deltas) r.delta_c += bell::abs(d);
    r.contextual = r.s_odd > 2 + r.delta_c;
    return r;
}

namespace {

ViolationFrequency count_violations(
    std::int64_t n_per_unit, std::int64_t replications, std::uint64_t seed,
    const std::function<bool(Rng&, std::int64_t&)>& rep_ge_gt) {
    if (replications <= 0)
        throw config_error("violation frequency: replications must be > 0");
    ViolationFrequency v;
    v.replications = replications;
    v.n_per_context = n_per_unit;
    constexpr std::int64_t chunk = 64;
    const std::size_t n_chunks =
        static_cast<std::size_t>((replications + chunk - 1) / chunk);
    std::vector<std::int64_t> ge(n_chunks, 0), gt(n_chunks, 0);
    parallel_for_blocks(n_chunks, [&](std::size_t cix) {
        const std::int64_t first = static_cast<std::int64_t>(cix) * chunk;
        const std::int64_t n = std::min(chunk, replications - first);
        for (std::int64_t k = 0; k < n; ++k) {
            Rng rng(derive_seed(seed, {stream_tag::replication,
                                       static_cast<std::uint64_t>(first + k)}));
            std::int64_t margin = 0;  // integer sum minus the 2n bound
            rep_ge_gt(rng, margin);
            if (margin >= 0) ++ge[cix];
            if (margin > 0) ++gt[cix];
        }
    });
    for (std::size_t i = 0; i < n_chunks; ++i) {
        v.count_ge += ge[i];
        v.count_gt += gt[i];
    }
    v.frac_ge = static_cast<double>(v.count_ge) / static_cast<double>(replications);
    v.frac_gt = static_cast<double>(v.count_gt) / static_cast<double>(replications);
    v.wilson_se_ge = wilson_halfwidth(v.count_ge, replications, 1.0);
    std::tie(v.wilson_lo_ge, v.wilson_hi_ge) =
        wilson_interval(v.count_ge, replications, 1.96);
    std::tie(v.wilson_lo_gt, v.wilson_hi_gt) =
        wilson_interval(v.count_gt, replications, 1.96);
    return v;
}

}  // namespace

ViolationFrequency violation_frequency(const Model& m, std::int64_t n_per_context,
                                       std::int64_t replications,
                                       std::uint64_t seed) {
    if (n_per_context <= 0)
        throw config_error("violation frequency: n_per_context must be > 0");
    const TrialSampler sampler(m);
    return count_violations(
        n_per_context, replications, seed, [&](Rng& rng, std::int64_t& margin) {
            std::array<std::int64_t, 4> k{};
            for (auto c : all_contexts)
                for (std::int64_t t = 0; t < n_per_context; ++t) {
                    const auto [a, b] = sampler.sample(c, rng);
                    k[idx(c)] += a * b;
                }
            // S_obs >= 2 iff k1+k2+k3-k4 >= 2n, decided in integers.
            margin = k[0] + k[1] + k[2] - k[3] - 2 * n_per_context;
            return true;
        });
}

ViolationFrequency violation_frequency_rows(const Model& m, std::int64_t n_rows,
                                            std::int64_t replications,
                                            std::uint64_t seed) {
    if (n_rows <= 0)
        throw config_error("violation frequency: n_rows must be > 0");
    if (m.kind != ModelKind::deterministic_local &&
        m.kind != ModelKind::stochastic_local &&
        m.kind != ModelKind::coupled_joint)
        throw domain_error("violation_frequency_rows: model '" + m.id +
                           "' cannot emit spreadsheet rows");
    const HiddenSampler sampler(m);
    return count_violations(
        n_rows, replications, seed, [&](Rng& rng, std::int64_t& margin) {
            std::int64_t sum = 0;
            for (std::int64_t t = 0; t < n_rows; ++t) {
                const HiddenDraw h = sampler.sample(rng);
                const int ax = sampler.outcome(m, SettingSlot::ax, h);
                const int axp = sampler.outcome(m, SettingSlot::axp, h);
                const int by = sampler.outcome(m, SettingSlot::by, h);
                const int byp = sampler.outcome(m, SettingSlot::byp, h);
                sum += ax * by + ax * byp + axp * by - axp * byp;
            }
            margin = sum - 2 * n_rows;
            return true;
        });
}

namespace {

// P(outcome != 0) for one side/setting at a fixed hidden label.
BigQ detect_probability(const Model& m, SettingSlot slot, std::size_t label) {
    const auto s = slot_label(slot);
    const std::size_t k = m.instr_n[idx(slot)];
    BigQ p(0);
    for (std::size_t i = 0; i < k; ++i) {
        const Outcome o = slot_side(slot) == Side::alice ? m.a_out(s, label, i)
                                                         : m.b_out(s, label, i);
        if (o != 0) p += m.instr[idx(slot)].at(i);
    }
    return p;
}

}  // namespace

LgAudit larsson_gill_audit(const Model& m) {
    if (m.uses_joint_instruments())
        throw domain_error(
            "larsson_gill_audit: model '" + m.id +
            "' has no common hidden space across contexts, so the overlap of "
            "the four detection regions is undefined");
    LgAudit a;
    a.delta = 0;
    for (std::size_t l1 = 0; l1 < m.n1; ++l1)
        for (std::size_t l2 = 0; l2 < m.n2; ++l2) {
            const BigQ& ps = m.source.at(l1, l2);
            if (ps == 0) continue;
            a.delta += ps * detect_probability(m, SettingSlot::ax, l1) *
                       detect_probability(m, SettingSlot::axp, l1) *
                       detect_probability(m, SettingSlot::by, l2) *
                       detect_probability(m, SettingSlot::byp, l2);
        }
    a.bound = 4 - 2 * a.delta;
    const ExactCorrelations ec = exact_correlations(m);
    a.s_defined = ec.all_post_defined();
    if (a.s_defined) {
        a.s_post_max = chsh_max(ec.post_e());
        a.satisfied = a.s_post_max <= a.bound;
    } else {
        a.satisfied = true;  // no post-selected S exists to violate the bound
    }
    return a;
}

LgAudit larsson_gill_audit_windowed(const Model& time_tag, double window,
                                    double spacing) {
    return larsson_gill_audit(windowed_model(time_tag, window, spacing));
}

double wilson_halfwidth(std::int64_t k, std::int64_t n, double z) {
    if (n <= 0) throw config_error("wilson_halfwidth: n must be > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    return z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
}

std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n,
                                          double z) {
    if (n <= 0) throw config_error("wilson_interval: n must be > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double center = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    const double hw = wilson_halfwidth(k, n, z);
    return {center - hw, center + hw};
}

std::pair<double, int> chi_square_gof(const std::array<std::int64_t, 9>& counts,
                                      const std::array<BigQ, 9>& probs) {
    std::int64_t n = 0;
    for (auto k : counts) n += k;
    if (n <= 0) throw domain_error("chi_square_gof: no observations");
    double stat = 0;
    int cells = 0;
    for (std::size_t i = 0; i < 9; ++i) {
        if (probs[i] == 0) {
            if (counts[i] != 0)
                throw domain_error("chi_square_gof: observed count in a "
                                   "zero-probability bucket");
            continue;
        }
        ++cells;
        const double expi = to_double(probs[i]) * static_cast<double>(n);
        const double d = static_cast<double>(counts[i]) - expi;
        stat += d * d / expi;
    }
    return {stat, cells - 1};
}

double chi_square_quantile(int dof, double p) {
    if (dof <= 0) throw domain_error("chi_square_quantile: dof must be > 0");
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, p);
}

}  // namespace bell
