#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htdmc/channel.hpp"
#include "htdmc/info.hpp"
#include "htdmc/prob.hpp"
#include "htdmc/projection.hpp"

// Achievable type-II error exponents for distributed hypothesis testing over
// a DMC: the separation-based scheme, the hybrid-coding scheme, the one-bit
// scheme, testing against conditional independence, the zero-capacity exact
// value, and the desk-scale k = n = 1 multi-letter value. Values in nats.

namespace htdmc::ht {

/// The full problem: per-letter joints under both hypotheses, the channel,
/// and the bandwidth ratio tau = n/k. Axes must be named "U","V" and the
/// channel "X" -> "Y". An optional (|E|,|Z|) factorization of V (row-major,
/// v = e*|Z| + z) declares the TACI structure.
struct HTInstance {
    JointDist p_uv;
    JointDist q_uv;
    CondDist channel;
    double tau = 1.0;
    std::optional<std::pair<int, int>> v_factor;

    void validate() const;
};

struct SearchConfig {
    int w_card = 0;          // auxiliary |W|; 0 -> |U| + 1
    double grid_step = 0.05;
    int r_grid = 40;         // rate grid points
    int refine_rounds = 2;
    int s_card = 0;          // time-sharing support; 0 -> |X| (SHTCC), 1 (JHTCC)
    int threads = 1;
};

struct ShtccBreakdown {
    double e1 = 0, e2 = 0, e3 = 0, e4 = 0;  // nats, +inf allowed
    double value = 0;                        // min of the four
    bool feasible = false;                   // membership in the rate set B
    double i_uw = 0, i_uw_v = 0, i_vw = 0, i_xy_s = 0, h_w_v = 0;
    double ex = 0, em = 0;                   // channel terms at the evaluated point
};

struct JhtccParams {
    FiniteDist p_s;
    CondDist wbar_given_us;   // rows over (u,s) row-major
    CondDist xp_given_us;     // rows over (u,s) row-major
    CondDist x_given_uswbar;  // rows over (u,s,wbar) row-major
};

struct JhtccBreakdown {
    double e1 = 0, e2 = 0, e3 = 0;
    double value = 0;
    bool feasible = false;          // strict I(U;Wb|S) < I(Wb;V,Y|S)
    bool degenerate_analog = false; // both sides ~ 0: uncoded-style special case
    double i_uw_s = 0, i_wvy_s = 0;
};

struct OneBitParts {
    double beta0 = 0;
    double ec = 0;
    double d_pv_qv = 0;
};

struct ExponentReport {
    std::string scheme;
    double value_nats = 0.0;
    bool exact = false;              // true only where the value is provably optimal
    bool no_feasible_point = false;

    // achieving parameters, populated per scheme
    std::optional<CondDist> w_given_u;
    std::optional<chan::InputDist> input;
    double rate_nats = -1.0;
    std::optional<JhtccParams> jhtcc_params;

    std::optional<ShtccBreakdown> shtcc_terms;
    std::optional<JhtccBreakdown> jhtcc_terms;
    std::optional<OneBitParts> onebit_parts;

    long points_visited = 0;
    long points_feasible = 0;
    std::string notes;

    double value_bits() const { return info::nats_to_bits(value_nats); }
};

/// All four separation-scheme terms at one (P_{W|U}, P_SX, R) point;
/// infeasible points are still evaluated, only flagged.
ShtccBreakdown shtcc_objective(const HTInstance& inst, const CondDist& w_given_u,
                               const chan::InputDist& input, double r_nats);

/// Grid + coordinate-refined supremum of the separation scheme over the rate
/// set B. Every reported value is an exactly re-evaluated feasible point.
ExponentReport shtcc_exponent(const HTInstance& inst, const SearchConfig& cfg = {});

/// Hybrid-coding terms at one parameter tuple (tau = 1 only).
JhtccBreakdown jhtcc_objective(const HTInstance& inst, const JhtccParams& params);

/// Seeded (uncoded + factorized) coordinate-ascent search of the hybrid
/// scheme; never reports below the uncoded value. tau must be 1.
ExponentReport jhtcc_exponent(const HTInstance& inst, const SearchConfig& cfg = {});

/// D(P_VY || Q_VY) for X = U through the channel. Needs |U| = |X|.
double uncoded_exponent(const HTInstance& inst);

/// One-bit scheme: D(P_V||Q_V) at tau = 0, else min{beta_0, tau E_c + D(P_V||Q_V)}.
ExponentReport onebit_exponent(const HTInstance& inst);

/// Testing against conditional independence: sup I(E;W|Z) over P_{W|U} with
/// I(U;W|Z) <= tau C, |W| = |U| + 1. Requires the declared V = (E,Z)
/// factorization and the conditional-independence structure of Q.
ExponentReport taci_exponent(const HTInstance& inst, const SearchConfig& cfg = {});

/// Exact optimum D(P_V || Q_V) for channels with identical rows.
double zero_capacity_exponent(const HTInstance& inst);

/// Desk-scale k = n = 1 evaluation of the multi-letter formula: maximizes
/// D(P_VY || Q_VY) over single-letter maps P_{X|U}. tau must be 1.
double multiletter_k1(const HTInstance& inst, double grid_step = 0.05);

// shared helpers
CondDist identity_channel(const Alphabet& from, const Alphabet& to);
JointDist attach_independent(const JointDist& j, const FiniteDist& d);

/// Reinterpret the V axis of a TACI instance as (E,Z), v = e*|Z| + z.
JointDist split_v_axis(const JointDist& j_uv, int e_size, int z_size);

}  // namespace htdmc::ht
