#pragma once

// Hidden-variable models over finite discrete spaces.
//
// A model has a source distribution over pairs (l1, l2) of hidden labels and,
// per measurement setting, an "instrument" space whose index is drawn locally
// at the measuring station.  The outcome of Alice's setting depends only on
// (l1, instrument index) and Bob's only on (l2, instrument index) — so
// parameter independence is structural, not asserted.  Outcomes take values
// in {-1, 0, +1}; 0 means the trial produced no detection on that side.
//
// Model kinds:
//   deterministic_local    outcomes are functions of the hidden label alone
//   stochastic_local       per-setting response probabilities, realized as
//                          deterministic functions of an instrument index
//   contextual_product     per-setting instrument distributions; outcomes may
//                          be 0, so post-selection on coincidences can bend
//                          the observed statistics
//   contextual_correlated  the two instrument indices of a *context* are
//                          drawn jointly (per-context distribution); there is
//                          no common instrument space across contexts
//   time_tag               a local model plus per-(setting, label) detection
//                          delays; zeros arise downstream via time windows
//   coupled_joint          a product-type model reinterpreted as emitting all
//                          four outcomes (x, x', y, y') on every trial
//
// All distributions are exact rationals, and context statistics are computed
// by exact enumeration, so claims like "S <= 2" are decided, not estimated.

#include "bell/prob_table.hpp"
#include "bell/rational.hpp"
#include "bell/rng.hpp"
#include "bell/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bell {

enum class ModelKind : std::uint8_t {
    deterministic_local,
    stochastic_local,
    contextual_product,
    contextual_correlated,
    time_tag,
    coupled_joint,
};

std::string_view model_kind_name(ModelKind k);
std::optional<ModelKind> model_kind_from_name(std::string_view s);

struct Model {
    ModelKind kind = ModelKind::deterministic_local;
    std::string id;

    std::size_t n1 = 0;  // size of Alice's hidden-label space
    std::size_t n2 = 0;  // size of Bob's hidden-label space
    ProbTable source;    // shape {n1, n2}

    // Instrument spaces per setting slot (ax, axp, by, byp).  Deterministic
    // models use size-1 spaces.  For contextual_correlated, `instr` holds the
    // marginal sizes only and `instr_joint[c]` carries the per-context joint
    // distribution over (alice index, bob index).
    std::array<std::size_t, 4> instr_n = {1, 1, 1, 1};
    std::array<ProbTable, 4> instr;        // shape {instr_n[slot]}
    std::array<ProbTable, 4> instr_joint;  // contextual_correlated only

    // Outcome tables, flattened as [label][l * instr_n[slot] + i] -> {-1,0,1}.
    std::array<std::vector<std::int8_t>, 2> a_table;  // [plain, prime]
    std::array<std::vector<std::int8_t>, 2> b_table;

    // time_tag only: detection delay per (setting label, hidden label).
    std::array<std::vector<double>, 2> a_delay;
    std::array<std::vector<double>, 2> b_delay;

    // stochastic_local only: the response probabilities P(+1 | setting, label)
    // the instrument realization was built from (kept for serialization).
    std::array<std::vector<BigQ>, 2> a_prob;
    std::array<std::vector<BigQ>, 2> b_prob;

    // Optional polarizer angles per slot, carried for angle-based recipes.
    std::array<std::optional<double>, 4> angles;

    // coupled_joint only: the kind of the product-type model it was built from.
    ModelKind base_kind = ModelKind::deterministic_local;

    Outcome a_out(SettingLabel s, std::size_t l1, std::size_t i) const {
        return a_table[idx(s)][l1 * instr_n[idx(make_slot(Side::alice, s))] + i];
    }
    Outcome b_out(SettingLabel s, std::size_t l2, std::size_t i) const {
        return b_table[idx(s)][l2 * instr_n[idx(make_slot(Side::bob, s))] + i];
    }
    double delay(Side side, SettingLabel s, std::size_t l) const {
        return side == Side::alice ? a_delay[idx(s)][l] : b_delay[idx(s)][l];
    }
    bool uses_joint_instruments() const {
        return kind == ModelKind::contextual_correlated;
    }
};

// Full structural validation; throws config_error with a path-like message.
void validate_model(const Model& m);

// ---------------------------------------------------------------------------
// Exact enumeration

// Joint outcome distribution of one context over the 9 buckets (a, b) with
// a, b in {-1, 0, +1}; bucket index = (a + 1) * 3 + (b + 1).
struct PairDist {
    std::array<BigQ, 9> p{};

    const BigQ& at(Outcome a, Outcome b) const {
        return p[static_cast<std::size_t>((a + 1) * 3 + (b + 1))];
    }
    BigQ& at(Outcome a, Outcome b) {
        return p[static_cast<std::size_t>((a + 1) * 3 + (b + 1))];
    }
};

PairDist enumerate_context(const Model& m, ContextId c);

// Raw and coincidence-conditioned moments of one context.
struct ExactContext {
    PairDist pairs;
    BigQ raw_e;       // E[a b] counting zeros
    BigQ raw_ma;      // E[a]
    BigQ raw_mb;      // E[b]
    BigQ coincidence; // P(a != 0 and b != 0)
    bool post_defined = false;  // coincidence > 0
    BigQ post_e;      // E[a b | both detected]
    BigQ post_ma;
    BigQ post_mb;
};

struct ExactCorrelations {
    std::array<ExactContext, 4> ctx;

    std::array<BigQ, 4> raw_e() const;
    std::array<BigQ, 4> post_e() const;  // throws domain_error if undefined
    bool all_post_defined() const;
};

ExactCorrelations exact_correlations(const Model& m);

// CHSH combinations of four correlations (canonical context order).
// chsh_fixed: E1 + E2 + E3 - E4.
// chsh_grouped: |E1 - E2| + |E3 + E4|.
// chsh_max: max over the 8 sign patterns with an odd number of minus signs.
BigQ chsh_fixed(const std::array<BigQ, 4>& e);
BigQ chsh_grouped(const std::array<BigQ, 4>& e);
BigQ chsh_max(const std::array<BigQ, 4>& e);
double chsh_fixed(const std::array<double, 4>& e);
double chsh_grouped(const std::array<double, 4>& e);
double chsh_max(const std::array<double, 4>& e);

// Joint distribution over 4-tuples (a_x, a_xp, b_y, b_yp), available for
// product-type kinds only (everything except contextual_correlated).
// Flat index: ((ax+1)*3 + (axp+1))*9 + (by+1)*3 + (byp+1).
struct Joint4Dist {
    std::array<BigQ, 81> p{};

    const BigQ& at(Outcome ax, Outcome axp, Outcome by, Outcome byp) const {
        return p[flat(ax, axp, by, byp)];
    }
    BigQ& at(Outcome ax, Outcome axp, Outcome by, Outcome byp) {
        return p[flat(ax, axp, by, byp)];
    }
    static std::size_t flat(Outcome ax, Outcome axp, Outcome by, Outcome byp) {
        return static_cast<std::size_t>(((ax + 1) * 3 + (axp + 1)) * 9 +
                                        (by + 1) * 3 + (byp + 1));
    }
};

Joint4Dist enumerate_joint4(const Model& m);

// ---------------------------------------------------------------------------
// Sampling

// Draws context outcome pairs from the exact per-context distributions.
// Consumes exactly one uniform per trial.
class TrialSampler {
public:
    explicit TrialSampler(const Model& m);

    std::pair<Outcome, Outcome> sample(ContextId c, Rng& rng) const;

private:
    std::array<CdfSampler, 4> cdf_;
    std::array<std::vector<std::pair<Outcome, Outcome>>, 4> values_;
};

// Draws the hidden coordinates (source labels + all four instrument indices)
// of one emission.  Product-type kinds only.  Consumes exactly five uniforms
// per emission, in a fixed order.
struct HiddenDraw {
    std::size_t l1, l2;
    std::array<std::size_t, 4> instr;  // per slot
};

class HiddenSampler {
public:
    explicit HiddenSampler(const Model& m);

    HiddenDraw sample(Rng& rng) const;

    Outcome outcome(const Model& m, SettingSlot slot, const HiddenDraw& h) const {
        const auto label = slot_label(slot);
        return slot_side(slot) == Side::alice
                   ? m.a_out(label, h.l1, h.instr[idx(slot)])
                   : m.b_out(label, h.l2, h.instr[idx(slot)]);
    }

private:
    CdfSampler source_cdf_;
    std::vector<std::pair<std::size_t, std::size_t>> source_values_;
    std::array<CdfSampler, 4> instr_cdf_;
};

}  // namespace bell
