#include "bell/recipes.hpp"

#include <cmath>
#include <numeric>

namespace bell {

namespace {

Model finalize(Model m) {
    validate_model(m);
    return m;
}

ProbTable diag_source(const std::vector<BigQ>& weights) {
    const std::size_t n = weights.size();
    ProbTable t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = weights[i];
    return t;
}

ProbTable point_mass() {
    ProbTable t({1});
    t.at(0) = 1;
    return t;
}

}  // namespace

Model build_deterministic_local(std::string id, ProbTable source,
                                std::array<std::vector<std::int8_t>, 2> a_table,
                                std::array<std::vector<std::int8_t>, 2> b_table) {
    Model m;
    m.kind = ModelKind::deterministic_local;
    m.id = std::move(id);
    const auto& shape = source.shape();
    if (shape.size() != 2)
        throw config_error("model '" + m.id + "': source table must be 2-d");
    m.n1 = shape[0];
    m.n2 = shape[1];
    source.validate_and_normalize("model '" + m.id + "'.weights.source");
    m.source = std::move(source);
    for (auto slot : all_slots) m.instr[idx(slot)] = point_mass();
    m.a_table = std::move(a_table);
    m.b_table = std::move(b_table);
    return finalize(std::move(m));
}

Model build_stochastic_local(std::string id, ProbTable source,
                             std::array<std::vector<BigQ>, 2> pa_plus,
                             std::array<std::vector<BigQ>, 2> pb_plus) {
    Model m;
    m.kind = ModelKind::stochastic_local;
    m.id = std::move(id);
    const auto& shape = source.shape();
    if (shape.size() != 2)
        throw config_error("model '" + m.id + "': source table must be 2-d");
    m.n1 = shape[0];
    m.n2 = shape[1];
    source.validate_and_normalize("model '" + m.id + "'.weights.source");
    m.source = std::move(source);

    // Realize P(+1 | setting, label) exactly: the instrument space for a
    // setting has L = lcm(all denominators) points with uniform weights, and
    // the outcome is +1 on the first p*L of them.
    auto realize = [&](SettingSlot slot, const std::vector<BigQ>& probs,
                       std::size_t n_labels) {
        const std::string where = "model '" + m.id + "'.outcome_probs." +
                                  std::string(side_name(slot_side(slot))) + "[" +
                                  std::string(setting_name(slot)) + "]";
        if (probs.size() != n_labels)
            throw config_error(where + ": expected " + std::to_string(n_labels) +
                               " probabilities");
        BigZ lcm_den(1);
        for (const auto& p : probs) {
            if (p < 0 || p > 1)
                throw config_error(where + ": probability outside [0, 1]");
            lcm_den = boost::multiprecision::lcm(
                lcm_den, boost::multiprecision::denominator(p));
        }
        if (lcm_den > (1 << 20))
            throw config_error(where + ": probabilities need an instrument space "
                                       "of more than 2^20 points (common "
                                       "denominator " + lcm_den.str() + ")");
        const std::size_t L = lcm_den.convert_to<std::size_t>();
        m.instr_n[idx(slot)] = L;
        m.instr[idx(slot)] = ProbTable::uniform({L});
        std::vector<std::int8_t> table(n_labels * L);
        for (std::size_t l = 0; l < n_labels; ++l) {
            const BigZ k = boost::multiprecision::numerator(probs[l]) *
                           (lcm_den / boost::multiprecision::denominator(probs[l]));
            const std::size_t cut = k.convert_to<std::size_t>();
            for (std::size_t i = 0; i < L; ++i)
                table[l * L + i] = i < cut ? std::int8_t{1} : std::int8_t{-1};
        }
        return table;
    };
    m.a_table[idx(SettingLabel::plain)] =
        realize(SettingSlot::ax, pa_plus[idx(SettingLabel::plain)], m.n1);
    m.a_table[idx(SettingLabel::prime)] =
        realize(SettingSlot::axp, pa_plus[idx(SettingLabel::prime)], m.n1);
    m.b_table[idx(SettingLabel::plain)] =
        realize(SettingSlot::by, pb_plus[idx(SettingLabel::plain)], m.n2);
    m.b_table[idx(SettingLabel::prime)] =
        realize(SettingSlot::byp, pb_plus[idx(SettingLabel::prime)], m.n2);
    m.a_prob = std::move(pa_plus);
    m.b_prob = std::move(pb_plus);
    return finalize(std::move(m));
}

Model build_contextual_product(std::string id, ProbTable source,
                               std::array<ProbTable, 4> instr,
                               std::array<std::vector<std::int8_t>, 2> a_table,
                               std::array<std::vector<std::int8_t>, 2> b_table) {
    Model m;
    m.kind = ModelKind::contextual_product;
    m.id = std::move(id);
    const auto& shape = source.shape();
    if (shape.size() != 2)
        throw config_error("model '" + m.id + "': source table must be 2-d");
    m.n1 = shape[0];
    m.n2 = shape[1];
    source.validate_and_normalize("model '" + m.id + "'.weights.source");
    m.source = std::move(source);
    for (auto slot : all_slots) {
        auto& t = instr[idx(slot)];
        if (t.shape().size() != 1)
            throw config_error("model '" + m.id + "': instrument table for " +
                               std::string(setting_name(slot)) + " must be 1-d");
        t.validate_and_normalize("model '" + m.id + "'.weights." +
                                 std::string(setting_name(slot)));
        m.instr_n[idx(slot)] = t.shape()[0];
        m.instr[idx(slot)] = std::move(t);
    }
    m.a_table = std::move(a_table);
    m.b_table = std::move(b_table);
    return finalize(std::move(m));
}

Model build_contextual_correlated(std::string id, ProbTable source,
                                  std::array<std::size_t, 4> instr_n,
                                  std::array<ProbTable, 4> instr_joint,
                                  std::array<std::vector<std::int8_t>, 2> a_table,
                                  std::array<std::vector<std::int8_t>, 2> b_table) {
    Model m;
    m.kind = ModelKind::contextual_correlated;
    m.id = std::move(id);
    const auto& shape = source.shape();
    if (shape.size() != 2)
        throw config_error("model '" + m.id + "': source table must be 2-d");
    m.n1 = shape[0];
    m.n2 = shape[1];
    source.validate_and_normalize("model '" + m.id + "'.weights.source");
    m.source = std::move(source);
    m.instr_n = instr_n;
    for (auto c : all_contexts) {
        auto& t = instr_joint[idx(c)];
        t.validate_and_normalize("model '" + m.id + "'.weights.context_" +
                                 std::string(context_name(c)));
        m.instr_joint[idx(c)] = std::move(t);
    }
    m.a_table = std::move(a_table);
    m.b_table = std::move(b_table);
    return finalize(std::move(m));
}

Model build_timetag_model(std::string id, ProbTable source,
                          std::array<ProbTable, 4> instr,
                          std::array<std::vector<std::int8_t>, 2> a_table,
                          std::array<std::vector<std::int8_t>, 2> b_table,
                          std::array<std::vector<double>, 2> a_delay,
                          std::array<std::vector<double>, 2> b_delay) {
    Model m = build_contextual_product(std::move(id), std::move(source),
                                       std::move(instr), std::move(a_table),
                                       std::move(b_table));
    m.kind = ModelKind::time_tag;
    m.a_delay = std::move(a_delay);
    m.b_delay = std::move(b_delay);
    return finalize(std::move(m));
}

Model build_coupling(const Model& base, std::string id) {
    if (base.kind != ModelKind::deterministic_local &&
        base.kind != ModelKind::stochastic_local &&
        base.kind != ModelKind::contextual_product)
        throw domain_error("build_coupling: base model '" + base.id +
                           "' of kind " + std::string(model_kind_name(base.kind)) +
                           " has no product-space coupling");
    Model m = base;
    m.kind = ModelKind::coupled_joint;
    m.base_kind = base.kind;
    m.id = id.empty() ? base.id + ".coupled" : std::move(id);
    return finalize(std::move(m));
}

Model build_angle_correlated(std::string id, std::array<double, 4> angles,
                             const std::function<double(double)>& g_of_cos) {
    std::array<ProbTable, 4> joint;
    for (auto c : all_contexts) {
        const double rel =
            angles[idx(bob_slot(c))] - angles[idx(alice_slot(c))];
        const double e = g_of_cos(std::cos(rel));
        if (!std::isfinite(e) || e < -1.0 || e > 1.0)
            throw config_error("model '" + id + "': correlation function value " +
                               std::to_string(e) + " outside [-1, 1] for context " +
                               std::string(context_name(c)));
        // Exact dyadic rational of the double, so identical relative angles
        // give identical tables.
        const BigQ q = rational_from_double(e);
        ProbTable t({2, 2});
        t.at(0, 0) = t.at(1, 1) = (1 + q) / 4;
        t.at(0, 1) = t.at(1, 0) = (1 - q) / 4;
        joint[idx(c)] = std::move(t);
    }
    // Outcome = sign carried by the instrument index itself.
    const std::vector<std::int8_t> sign_of_index = {1, -1};
    Model m = build_contextual_correlated(
        std::move(id), diag_source({BigQ(1)}), {2, 2, 2, 2}, std::move(joint),
        {sign_of_index, sign_of_index}, {sign_of_index, sign_of_index});
    for (auto slot : all_slots) m.angles[idx(slot)] = angles[idx(slot)];
    return m;
}

double malus_correlation(double cos_theta) {
    return 1.0 - 2.0 * cos_theta * cos_theta;
}

double quantum_singlet_correlation(double alpha, double beta) {
    return -std::cos(2.0 * (alpha - beta));
}

std::array<double, 4> quantum_optimal_correlations() {
    const double pi = std::acos(-1.0);
    const std::array<double, 4> angles = {0.0, pi / 4, pi / 8, 3 * pi / 8};
    std::array<double, 4> e;
    for (auto c : all_contexts)
        e[idx(c)] = quantum_singlet_correlation(angles[idx(alice_slot(c))],
                                                angles[idx(bob_slot(c))]);
    return e;
}

// --------------------------------------------------------------------------
// Shipped demos.
//
// demo_eq3 lives on five equally-hidden "atoms" shared by both sides
// (source concentrated on the diagonal l1 = l2).  Atoms 0..3 (weight 9/40
// each) answer deterministically but each setting only *detects* two of
// them; the detection regions are arranged so that within every context
// exactly one atom yields a double detection, with the product +1 in three
// contexts and -1 in the fourth.  Atom 4 (weight 1/10) always detects and
// answers by an independent coin on each side, diluting nothing after
// post-selection but keeping every single-side marginal honest.  The result:
// raw correlations ±9/40 (S_max = 9/10), post-selected correlations ±9/13
// (S_max = 36/13 ≈ 2.77), and a single nonzero marginal mismatch of 18/13
// for Bob's primed setting across contexts.

namespace {

struct DemoTables {
    std::array<std::vector<std::int8_t>, 2> a, b;
};

// Ternary tables for the five-atom construction, instrument size 2 per
// setting (the second index only matters for the coin atom 4).
DemoTables demo_eq3_tables() {
    auto expand = [](std::initializer_list<int> per_label) {
        std::vector<std::int8_t> t;
        for (int v : per_label) {
            t.push_back(static_cast<std::int8_t>(v));
            t.push_back(static_cast<std::int8_t>(v));
        }
        // Atom 4: the two instrument values are the two coin faces.
        t.push_back(1);
        t.push_back(-1);
        return t;
    };
    DemoTables t;
    t.a[idx(SettingLabel::plain)] = expand({1, 1, 0, 0});
    t.a[idx(SettingLabel::prime)] = expand({0, 0, 1, 1});
    t.b[idx(SettingLabel::plain)] = expand({1, 0, 1, 0});
    t.b[idx(SettingLabel::prime)] = expand({0, 1, 0, -1});
    return t;
}

}  // namespace

Model demo_eq3_model() {
    const BigQ w(9, 40), noise(1, 10);
    DemoTables t = demo_eq3_tables();
    return build_contextual_product(
        "demo_eq3", diag_source({w, w, w, w, noise}),
        {ProbTable::uniform({2}), ProbTable::uniform({2}),
         ProbTable::uniform({2}), ProbTable::uniform({2})},
        std::move(t.a), std::move(t.b));
}

// The four detecting atoms alone: every pair of settings on the same side
// has disjoint detection regions, so no emission can ever answer both of a
// side's settings.  Post-selected correlations are then all ±1 and S
// saturates at 4.
Model demo_eq3_disjoint_model() {
    const BigQ w(1, 4);
    auto row = [](std::initializer_list<int> v) {
        std::vector<std::int8_t> t;
        for (int x : v) t.push_back(static_cast<std::int8_t>(x));
        return t;
    };
    return build_contextual_product(
        "demo_eq3_disjoint", diag_source({w, w, w, w}),
        {ProbTable::uniform({1}), ProbTable::uniform({1}),
         ProbTable::uniform({1}), ProbTable::uniform({1})},
        {row({1, 1, 0, 0}), row({0, 0, 1, 1})},
        {row({1, 0, 1, 0}), row({0, 1, 0, -1})});
}

// demo_eq5: one source atom; each context draws the two outcomes from its
// own joint instrument table.  Three contexts share correlation +3/4, the
// fourth gets -3/4, so S_max = 3 with every outcome ±1 and uniform marginals.
Model demo_eq5_model() {
    ProbTable aligned({2, 2}), anti({2, 2});
    aligned.at(0, 0) = aligned.at(1, 1) = BigQ(7, 16);
    aligned.at(0, 1) = aligned.at(1, 0) = BigQ(1, 16);
    anti.at(0, 0) = anti.at(1, 1) = BigQ(1, 16);
    anti.at(0, 1) = anti.at(1, 0) = BigQ(7, 16);
    const std::vector<std::int8_t> sign_of_index = {1, -1};
    return build_contextual_correlated(
        "demo_eq5", diag_source({BigQ(1)}), {2, 2, 2, 2},
        {aligned, aligned, aligned, anti},
        {sign_of_index, sign_of_index}, {sign_of_index, sign_of_index});
}

// demo_timetag: the five-atom structure again, but every emission carries a
// definite ±1 answer for each setting, and the two "wrong" atoms of a
// setting respond *late* instead of not at all (Alice late by 0.3, Bob by
// 0.45, against emission spacing 1.0).  A coincidence window narrower than
// twice the delay drops exactly the late answers and reproduces the
// demo_eq3 post-selected statistics; a window wide enough to catch
// everything shows the plainly local raw correlations.
Model demo_timetag_model() {
    const BigQ w(9, 40), noise(1, 10);
    const double late_a = 0.3, late_b = 0.45;
    auto expand = [](std::initializer_list<int> per_label) {
        std::vector<std::int8_t> t;
        for (int v : per_label) {
            t.push_back(static_cast<std::int8_t>(v));
            t.push_back(static_cast<std::int8_t>(v));
        }
        t.push_back(1);
        t.push_back(-1);
        return t;
    };
    auto delays = [](double late, std::initializer_list<int> is_late) {
        std::vector<double> d;
        for (int v : is_late) d.push_back(v ? late : 0.0);
        d.push_back(0.0);
        return d;
    };
    return build_timetag_model(
        "demo_timetag", diag_source({w, w, w, w, noise}),
        {ProbTable::uniform({2}), ProbTable::uniform({2}),
         ProbTable::uniform({2}), ProbTable::uniform({2})},
        {expand({1, 1, -1, -1}), expand({-1, -1, 1, 1})},
        {expand({1, -1, 1, -1}), expand({-1, 1, -1, -1})},
        {delays(late_a, {0, 0, 1, 1}), delays(late_a, {1, 1, 0, 0})},
        {delays(late_b, {0, 1, 0, 1}), delays(late_b, {1, 0, 1, 0})});
}

Model windowed_model(const Model& time_tag, double window, double spacing) {
    if (time_tag.kind != ModelKind::time_tag)
        throw domain_error("windowed_model: model '" + time_tag.id +
                           "' has no delay tables");
    if (!(window > 0) || !(spacing > 0))
        throw config_error("windowed_model: window and spacing must be > 0");
    const double half = window / 2;
    for (auto label : {SettingLabel::plain, SettingLabel::prime})
        for (const auto* side : {&time_tag.a_delay, &time_tag.b_delay})
            for (double d : (*side)[idx(label)])
                if (!(d < spacing - half))
                    throw domain_error(
                        "windowed_model: delay " + std::to_string(d) +
                        " can reach a neighboring emission's window; the "
                        "per-emission description breaks down");
    Model m = time_tag;
    m.kind = ModelKind::contextual_product;
    m.id = time_tag.id + ".window";
    m.a_delay = {};
    m.b_delay = {};
    auto knock_out = [&](std::array<std::vector<std::int8_t>, 2>& tables,
                         const std::array<std::vector<double>, 2>& delays,
                         Side side) {
        for (auto label : {SettingLabel::plain, SettingLabel::prime}) {
            const std::size_t k =
                m.instr_n[idx(make_slot(side, label))];
            auto& t = tables[idx(label)];
            for (std::size_t l = 0; l < delays[idx(label)].size(); ++l)
                if (delays[idx(label)][l] > half)
                    for (std::size_t i = 0; i < k; ++i) t[l * k + i] = 0;
        }
    };
    knock_out(m.a_table, time_tag.a_delay, Side::alice);
    knock_out(m.b_table, time_tag.b_delay, Side::bob);
    validate_model(m);
    return m;
}

double demo_timetag_spacing() { return 1.0; }

std::vector<double> demo_timetag_windows() { return {0.2, 0.5, 0.7, 1.0}; }

// Equal mixture of two deterministic strategies that differ only in A_x':
// E(xy) = E(xyp) = 1 exactly, E(xpy) = E(xpyp) = 0, so the fixed-sign CHSH
// sum sits exactly on the local bound and finite samples land at or above 2
// about half the time.
Model saturating_mixture_model() {
    auto row = [](std::initializer_list<int> v) {
        std::vector<std::int8_t> t;
        for (int x : v) t.push_back(static_cast<std::int8_t>(x));
        return t;
    };
    return build_deterministic_local(
        "saturating_mixture", diag_source({BigQ(1, 2), BigQ(1, 2)}),
        {row({1, 1}), row({1, -1})}, {row({1, 1}), row({1, 1})});
}

// --------------------------------------------------------------------------
// Randomized recipes.

namespace {

ProbTable random_source(Rng& rng, std::size_t n1, std::size_t n2) {
    ProbTable t({n1, n2});
    BigQ total(0);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const BigQ w(1 + static_cast<long long>(rng.below(8)));
            t.at(i, j) = w;
            total += w;
        }
    for (std::size_t i = 0; i < t.size(); ++i) t.flat(i) /= total;
    return t;
}

std::vector<std::int8_t> random_sign_table(Rng& rng, std::size_t n,
                                           bool allow_zero) {
    std::vector<std::int8_t> t(n);
    for (auto& v : t) {
        if (allow_zero) {
            const auto r = rng.below(3);
            v = r == 0 ? std::int8_t{-1} : (r == 1 ? std::int8_t{0} : std::int8_t{1});
        } else {
            v = rng.below(2) ? std::int8_t{1} : std::int8_t{-1};
        }
    }
    return t;
}

}  // namespace

Model random_deterministic_local(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {stream_tag::random_model, 0}));
    const std::size_t n1 = 1 + rng.below(4), n2 = 1 + rng.below(4);
    return build_deterministic_local(
        "random_det_" + std::to_string(seed), random_source(rng, n1, n2),
        {random_sign_table(rng, n1, false), random_sign_table(rng, n1, false)},
        {random_sign_table(rng, n2, false), random_sign_table(rng, n2, false)});
}

Model random_stochastic_local(std::uint64_t seed) {
    Rng rng(derive_seed(seed, {stream_tag::random_model, 1}));
    const std::size_t n1 = 1 + rng.below(4), n2 = 1 + rng.below(4);
    auto probs = [&](std::size_t n) {
        std::vector<BigQ> p(n);
        for (auto& q : p) q = BigQ(static_cast<long long>(rng.below(9)), 8);
        return p;
    };
    return build_stochastic_local("random_stoch_" + std::to_string(seed),
                                  random_source(rng, n1, n2),
                                  {probs(n1), probs(n1)}, {probs(n2), probs(n2)});
}

Model random_contextual_product(std::uint64_t seed, bool allow_zero) {
    Rng rng(derive_seed(seed, {stream_tag::random_model, 2}));
    const std::size_t n1 = 1 + rng.below(4), n2 = 1 + rng.below(4);
    std::array<ProbTable, 4> instr;
    std::array<std::size_t, 4> sz;
    for (auto slot : all_slots) {
        const std::size_t k = 1 + rng.below(3);
        sz[idx(slot)] = k;
        ProbTable t({k});
        BigQ total(0);
        for (std::size_t i = 0; i < k; ++i) {
            const BigQ w(1 + static_cast<long long>(rng.below(8)));
            t.at(i) = w;
            total += w;
        }
        for (std::size_t i = 0; i < k; ++i) t.at(i) /= total;
        instr[idx(slot)] = std::move(t);
    }
    return build_contextual_product(
        "random_ctx_" + std::to_string(seed), random_source(rng, n1, n2),
        std::move(instr),
        {random_sign_table(rng, n1 * sz[0], allow_zero),
         random_sign_table(rng, n1 * sz[1], allow_zero)},
        {random_sign_table(rng, n2 * sz[2], allow_zero),
         random_sign_table(rng, n2 * sz[3], allow_zero)});
}

}  // namespace bell
