#pragma once

#include <optional>
#include <utility>

#include "htdmc/info.hpp"
#include "htdmc/prob.hpp"

// Channel-side quantities: capacity, the expurgated exponent at rate R (free
// and fixed input), the red-alert exponent for a single special message, and
// the best pairwise row divergence. All rates and values in nats.

namespace htdmc::chan {

/// Input distribution P_SX factored as P_S * P_{X|S}; the time-sharing
/// alphabet S is a copy of the channel input alphabet X.
struct InputDist {
    FiniteDist p_s;
    CondDist p_x_given_s;
};

struct ChannelExponentValue {
    double value_nats = 0.0;   // clamped >= 0; may be +inf
    double rho = 1.0;          // maximizing rho (expurgated); meaningless otherwise
    bool rho_at_limit = false; // supremum approached as rho -> inf
    bool feasible = true;      // red_alert_max: false when no grid point meets the rate band
    std::optional<InputDist> input;  // optimizer for the free/max searches
};

/// Blahut-Arimoto fixed point. Returns (I, argmax P_X) with the certified
/// upper/lower bound gap <= tol.
std::pair<double, FiniteDist> capacity(const CondDist& channel, double tol_nats = 1e-9);

/// I(X;Y|S) for the composed S - X - Y chain.
double input_conditional_info(const InputDist& input, const CondDist& channel);

/// Expurgated exponent at rate r_nats for a fixed input distribution:
///   max_{rho >= 1} { -rho r - rho log sum_{s,x,x~} P_S P_{X|S} P_{X|S} Z(x,x~)^{1/rho} },
/// Z(x,x~) = sum_y sqrt(P(y|x) P(y|x~)). Cells with Z = 0 contribute nothing
/// at finite rho; when the whole admissible weight shrinks the value diverges
/// for small rates and +inf is returned. The rho -> inf limit is evaluated
/// analytically when the golden-section maximum sits on the right edge.
ChannelExponentValue expurgated_fixed(double r_nats, const InputDist& input,
                                      const CondDist& channel);

/// sup over P_X (no time sharing) of expurgated_fixed, by simplex grid plus
/// one round of local refinement.
ChannelExponentValue expurgated_free(double r_nats, const CondDist& channel,
                                     double grid_step = 0.02);

/// E_m(P_SX) = sum_s P_S(s) D(P_{Y|S=s} || P_{Y|X=s}); +inf when absolute
/// continuity fails.
ChannelExponentValue red_alert_fixed(const InputDist& input, const CondDist& channel);

/// Red-alert exponent at rate r_nats: grid search over P_SX with the
/// equality I(X;Y|S) = r relaxed to a band of half-width `band_tol`.
ChannelExponentValue red_alert_max(double r_nats, const CondDist& channel, double band_tol,
                                   double grid_step = 0.05);

/// max over ordered input pairs (a,b) of D(P_{Y|X=a} || P_{Y|X=b}); ties keep
/// the lexicographically smallest pair.
double max_pair_divergence(const CondDist& channel);

/// Binary symmetric channel with crossover q, axes named "X" -> "Y".
CondDist bsc(double q);

}  // namespace htdmc::chan
