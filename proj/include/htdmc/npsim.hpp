#pragma once

#include <cstdint>
#include <vector>

#include "htdmc/info.hpp"
#include "htdmc/prob.hpp"

// Desk-scale validation of exponents by exact Neyman-Pearson error
// computation. The per-symbol log-likelihood ratio has finitely many atoms;
// its n-fold sum is convolved exactly on a lattice of width `bin_width`.
// Small n uses the fixed base lattice; large n uses power-of-two doubling
// with certified lattice coarsening (values only ever rounded down on the
// test branch and up on the converse branch), so the reported
// [beta_lo, beta_hi] always brackets the optimal NP beta:
//   beta_hi  is the type-II error of the implementable rounded-LLR test,
//   beta_lo  is an information-spectrum converse bound from the up-rounded sum.

namespace htdmc::sim {

struct PairSource {
    JointDist p;
    JointDist q;
};

struct NpResult {
    double alpha = 0.0;
    double beta_lo = 0.0, beta_hi = 0.0;
    double ln_beta_lo = 0.0, ln_beta_hi = 0.0;  // natural logs (betas can underflow)
    double threshold_nats = 0.0;                // accept H0 iff rounded LLR sum > threshold
    bool tree_path = false;                     // lattice coarsening was used
    int64_t bins = 0;
};

NpResult exact_np_errors(const PairSource& src, int n, double eps, double bin_width = 1e-4);

struct ErrorCurve {
    std::vector<int> n;
    std::vector<double> alpha, beta_lo, beta_hi;
    std::vector<double> ln_beta_hi;
    std::vector<double> slope_at_n;   // -(1/n) ln beta_hi
    double slope_nats = 0.0;          // least-squares slope of -ln beta_hi vs n
    double intercept = 0.0;
    std::vector<double> residuals;
    double kl_oracle_nats = 0.0;      // D(P || Q): the asymptotic slope
};

ErrorCurve stein_slope(const PairSource& src, const std::vector<int>& n_list, double eps,
                       double bin_width = 1e-4);

struct McResult {
    bool skipped = false;
    std::string note;
    double alpha_hat = 0.0, beta_hat = 0.0;
    double alpha_radius = 0.0, beta_radius = 0.0;  // Wilson 95%
    uint64_t seed = 0;
    int64_t trials = 0;
};

/// Monte Carlo companion to the exact path: same rounded statistic, same
/// deterministic threshold. Skipped (with explanation) when the exact beta is
/// below sampling resolution. Bit-reproducible for a fixed seed.
McResult mc_np_errors(const PairSource& src, int n, double eps, int64_t trials, uint64_t seed,
                      double bin_width = 1e-4);

/// Counter-based 64-bit generator (SplitMix64): state advances by a fixed
/// odd constant, output is a bijective mix. Used for all sampling.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace htdmc::sim
