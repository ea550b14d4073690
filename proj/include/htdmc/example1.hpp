#pragma once

#include <utility>
#include <vector>

#include "htdmc/exponents.hpp"

// The built-in binary example: U,V,X,Y all binary, P_U uniform,
// P_{V|U} = BSC(p0), Q_{V|U} = BSC(p1), channel BSC(q), with
// q = 0.2, p0 = 0.8, p1 = 0.25, tau = 1.

namespace htdmc::ht {

inline constexpr double kExample1Q = 0.2;
inline constexpr double kExample1P0 = 0.8;
inline constexpr double kExample1P1 = 0.25;

// published landmark values (bits) the reproduction is checked against
inline constexpr double kExample1UncodedBits = 0.3244;
inline constexpr double kExample1CeilingBits = 0.161;
inline constexpr double kExample1Branch2Bits = 0.0956;

HTInstance example1_instance();

/// f'(r) = 1 - h_b(r * p0) + E_x(1 - h_b(r)) in bits for the uniform-input
/// BSC(q), sampled on [r_lo, 0.5]. Returns (r, f'(r) bits) pairs.
std::vector<std::pair<double, double>> fig2_curve(double q = kExample1Q, double p0 = kExample1P0,
                                                  double step = 0.005, double r_lo = 0.2);

struct Example1Report {
    double uncoded_bits = 0.0;
    double ceiling_bits = 0.0;        // f'(0.5) = E_x(0)
    double branch2_bound_bits = 0.0;  // 1 - h_b(q * p0)
    double shtcc_bits = 0.0;
    bool uncoded_ok = false;   // |uncoded - 0.3244| <= 1e-3
    bool ceiling_ok = false;   // |ceiling - 0.161| <= 1e-3
    bool branch2_ok = false;   // |branch2 - 0.0956| <= 1e-3
    bool shtcc_ok = false;     // shtcc <= 0.161 + 2e-3
    ExponentReport shtcc;
};

/// Computes the four landmarks, including the full separation-scheme search.
Example1Report example1_report(const SearchConfig& cfg = {});

}  // namespace htdmc::ht
