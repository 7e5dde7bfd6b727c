#pragma once

// Existence of a joint distribution for the four observables (A_x, A_x',
// B_y, B_y') given one pairwise distribution per context.
//
// Decision route: exact phase-1 simplex over the 16 deterministic
// assignments s in {-1,+1}^4 — find w >= 0 with sum 1 reproducing the four
// single-variable means and four context correlations.  Feasible systems get
// the witness w; infeasible ones get a separating odd-sign CHSH functional
// (by Fine's theorem one must be violated, and the test suite cross-checks
// the LP verdict against all eight inequalities on every call).
// Cross-context marginal inconsistency beyond tolerance short-circuits to
// its own status: no joint distribution can give one variable two different
// means.  Marginals consistent within tolerance are symmetrized by exact
// rational averaging before the LP, so the decision itself is exact.

#include "bell/model.hpp"
#include "bell/stats.hpp"

#include <filesystem>
#include <optional>

namespace bell {

struct PairwiseSystem {
    // Per context, cell probabilities over (a, b) in the fixed order
    // (+,+), (+,-), (-,+), (-,-).
    std::array<std::array<BigQ, 4>, 4> cells;

    static std::size_t cell_index(int a, int b) {
        return static_cast<std::size_t>((a == 1 ? 0 : 2) + (b == 1 ? 0 : 1));
    }

    BigQ e(ContextId c) const;
    BigQ ma(ContextId c) const;
    BigQ mb(ContextId c) const;

    // Non-negativity and per-context totals within 1e-12 of 1, then exact
    // renormalization.
    void validate_and_normalize();
};

PairwiseSystem system_from_correlations(const std::array<double, 4>& e,
                                        const std::array<double, 2>& m_alice,
                                        const std::array<double, 2>& m_bob);
// Empirical cells from the double-detection counts of a correlation table.
PairwiseSystem system_from_table(const CorrelationTable& t);
// Exact cells from enumerated context distributions.
PairwiseSystem system_from_exact(const ExactCorrelations& ec, bool post_selected);

// CSV with header context,p_pp,p_pm,p_mp,p_mm (one line per context), or a
// JSON document {"system": {"xy": [p_pp, p_pm, p_mp, p_mm], ...}} /
// {"correlations": {"e": [4], "m_alice": [2], "m_bob": [2]}}.
PairwiseSystem load_pairwise_csv(const std::filesystem::path& path);
PairwiseSystem load_pairwise_json(const std::filesystem::path& path);

struct JointWitness {
    // Index bits (3,2,1,0) = (A_x, A_x', B_y, B_y') positive.
    std::array<BigQ, 16> w{};

    BigQ project(ContextId c, int a, int b) const;
};

struct JpCertificate {
    enum class Kind : std::uint8_t { chsh_violation, marginal_mismatch };
    Kind kind = Kind::chsh_violation;
    std::array<int, 4> signs{};  // chsh_violation: sum(signs . E) = value > 2
    BigQ value;
    std::string detail;
};

struct JpResult {
    enum class Status : std::uint8_t {
        feasible,
        infeasible,
        marginal_inconsistent
    };
    Status status = Status::infeasible;
    std::optional<JointWitness> witness;
    std::optional<JpCertificate> certificate;
    // Max |witness projection - input cell| over all 32 cells (0 when exact;
    // nonzero only reflects the within-tolerance symmetrization of inputs).
    double witness_max_error = 0;
};

JpResult jp_feasible(const PairwiseSystem& s, double tol = 1e-9);

// The eight odd-minus-sign CHSH functional values sum(signs . E) - 2;
// a joint distribution exists iff all are <= 0 (marginally consistent
// systems).  fine_patterns()[i] is the sign vector of value i.
std::array<std::array<int, 4>, 8> fine_patterns();
std::array<BigQ, 8> fine_values(const PairwiseSystem& s);

// The eight coupling identities between a product-type context family and
// its joint reinterpretation: four single-variable means and four pairwise
// correlations, which coincide exactly because both sides integrate the
// same functions over the same space.
struct CouplingReport {
    std::array<std::string, 8> labels;
    std::array<BigQ, 8> product_side;
    std::array<BigQ, 8> coupled_side;
    std::array<BigQ, 8> residuals;  // |coupled - product|
    bool all_zero = false;
};
CouplingReport coupling_equalities(const Model& product, const Model& coupled);

}  // namespace bell
