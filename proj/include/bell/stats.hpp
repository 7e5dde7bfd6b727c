#pragma once

// Estimators and model-level diagnostics: correlation/marginal estimates
// with plug-in standard errors, CHSH combinations, the Eberhard count
// inequality, marginal-consistency (no-signaling) deltas, a cyclic-system
// contextuality criterion, finite-sample violation frequencies, and the
// detection-overlap bound audit.  Each sampled statistic has an exact
// enumeration counterpart used as the test oracle.

#include "bell/dataset.hpp"
#include "bell/model.hpp"

namespace bell {

struct ContextStats {
    std::int64_t n = 0;                    // records in this context
    std::array<std::int64_t, 9> counts{};  // bucket (a+1)*3+(b+1)
    std::int64_t n_pairs = 0;              // both sides detected
    bool defined = false;                  // n > 0
    double e = 0, se_e = 0;                // mean of a*b (zeros count as 0)
    double ma = 0, se_ma = 0;
    double mb = 0, se_mb = 0;
};

struct CorrelationTable {
    DatasetKind source_kind = DatasetKind::raw;
    std::array<ContextStats, 4> ctx;
    bool all_defined() const {
        return ctx[0].defined && ctx[1].defined && ctx[2].defined &&
               ctx[3].defined;
    }
};

// Raw or final trial data only.
CorrelationTable estimate_correlations(const Dataset& ds);
// Spreadsheet data: every row carries all four outcomes, so each context's
// statistics are computed over the same rows.  Marginals then agree across
// contexts exactly and S_fixed obeys |S| <= 2 by the per-row identity.
CorrelationTable spreadsheet_correlations(const Dataset& ds);

struct ChshEstimate {
    bool defined = false;  // every context non-empty
    double s_fixed = 0;    // E1 + E2 + E3 - E4
    double s_grouped = 0;  // |E1 - E2| + |E3 + E4|
    double s_max = 0;      // max over odd-minus sign patterns
    double se = 0;         // sqrt(sum of the four se_e^2)
};
ChshEstimate chsh_from_table(const CorrelationTable& t);

// Count-based inequality on raw (detection-inclusive) data:
//   J = n++(x,y)/n1 - [n+-(x,y') + n+0(x,y')]/n2
//     - [n-+(x',y) + n0+(x',y)]/n3 - n++(x',y')/n4
// J <= 0 for every product-space local model (see the derivation note in
// stats.cpp); post-selected contextual data can push it positive.
struct EberhardReport {
    bool defined = false;
    double j = 0;
    std::int64_t n_pp_xy = 0, n_pm_xyp = 0, n_p0_xyp = 0;
    std::int64_t n_mp_xpy = 0, n_0p_xpy = 0, n_pp_xpyp = 0;
    std::array<std::int64_t, 4> n{};
};
// Requires a raw dataset: final data have discarded the undetected outcomes
// the counts depend on.
EberhardReport eberhard_from_dataset(const Dataset& ds);
// Exact per-trial rate under equal context weighting.
BigQ eberhard_exact(const Model& m);

struct SignalingDelta {
    Side side;
    SettingLabel setting;
    ContextId lhs, rhs;  // the two contexts whose marginals are compared
    double delta = 0, se = 0, z = 0;
};
struct SignalingReport {
    bool defined = false;
    std::array<SignalingDelta, 4> deltas;
    double max_abs_z = 0;
};
SignalingReport nosignaling_from_table(const CorrelationTable& t);
// Exact deltas in the order A@x, A@x', B@y, B@y'.
std::array<BigQ, 4> nosignaling_exact(const Model& m, bool post_selected);

// Cyclic-system criterion for a 4-context table: contextual iff
// s_odd > 2 + delta_c, where s_odd is the odd-minus CHSH maximum and
// delta_c the total cross-context marginal inconsistency.
struct CbdReport {
    double s_odd = 0;
    double delta_c = 0;
    double threshold = 0;  // 2 + delta_c
    bool contextual = false;
};
CbdReport cbd_from_values(const std::array<double, 4>& e,
                          const std::array<double, 4>& ma_ctx,
                          const std::array<double, 4>& mb_ctx);
CbdReport cbd_from_table(const CorrelationTable& t);
struct CbdExact {
    BigQ s_odd;
    BigQ delta_c;
    bool contextual = false;
};
CbdExact cbd_exact(const Model& m, bool post_selected);

// Fraction of replications whose finite-sample fixed-sign CHSH value lands
// at or above the local bound.  The comparison is done on integer product
// sums (S_obs >= 2 iff k1+k2+k3-k4 >= 2n), so boundary cases are exact.
struct ViolationFrequency {
    std::int64_t replications = 0;
    std::int64_t n_per_context = 0;
    std::int64_t count_ge = 0, count_gt = 0;
    double frac_ge = 0, frac_gt = 0;
    double wilson_se_ge = 0;  // half-width of the z=1 Wilson interval
    double wilson_lo_ge = 0, wilson_hi_ge = 0;  // z=1.96 Wilson interval
    double wilson_lo_gt = 0, wilson_hi_gt = 0;
};
ViolationFrequency violation_frequency(const Model& m, std::int64_t n_per_context,
                                       std::int64_t replications,
                                       std::uint64_t seed);
// Spreadsheet-protocol variant: per-row CHSH terms summed over n rows;
// |sum| <= 2n makes strict violation impossible by construction.
ViolationFrequency violation_frequency_rows(const Model& m, std::int64_t n_rows,
                                            std::int64_t replications,
                                            std::uint64_t seed);

// Detection-overlap audit: delta is the probability that all four settings
// would detect (the overlap of the four nonzero-outcome regions on the
// common hidden space), and post-selected correlations obey
// S_max <= 4 - 2*delta.  delta = 1 (no zeros anywhere) recovers the local
// bound 2; disjoint detection regions give delta = 0 and the trivial bound 4.
struct LgAudit {
    BigQ delta;
    BigQ bound;  // 4 - 2*delta
    bool s_defined = false;
    BigQ s_post_max;
    bool satisfied = false;  // vacuously true when s is undefined
};
LgAudit larsson_gill_audit(const Model& m);
// Audit of the model a time_tag run turns into under a coincidence window.
LgAudit larsson_gill_audit_windowed(const Model& time_tag, double window,
                                    double spacing);

// Wilson score interval for a binomial proportion.
double wilson_halfwidth(std::int64_t k, std::int64_t n, double z);
std::pair<double, double> wilson_interval(std::int64_t k, std::int64_t n,
                                          double z);

// Pearson chi-square statistic of observed bucket counts against exact
// probabilities; zero-probability buckets must have zero counts (that is
// asserted, not tested statistically) and do not enter the statistic.
// Returns the statistic and the degrees of freedom.
std::pair<double, int> chi_square_gof(const std::array<std::int64_t, 9>& counts,
                                      const std::array<BigQ, 9>& probs);
double chi_square_quantile(int dof, double p);

}  // namespace bell
