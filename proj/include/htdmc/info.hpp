#pragma once

#include <limits>
#include <vector>

#include "htdmc/prob.hpp"

// Entropies, mutual informations and KL divergences on the labeled tensors,
// plus the binary-alphabet helpers (those follow the base-2 convention of the
// worked binary example; everything else is in nats).

namespace htdmc::info {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

inline double nats_to_bits(double nats) { return nats / kLn2; }
inline double bits_to_nats(double bits) { return bits * kLn2; }

/// Shannon entropy in nats, 0 log 0 := 0.
double entropy(const FiniteDist& p);
double entropy(const JointDist& j);

/// H(target | given) = H(target, given) - H(given), in nats.
double cond_entropy(const JointDist& j, const std::vector<std::string>& target,
                    const std::vector<std::string>& given);

/// I(A; B) = H(A) + H(B) - H(A,B), clamped to >= 0. Nats.
double mutual_info(const JointDist& j, const std::vector<std::string>& a,
                   const std::vector<std::string>& b);

/// I(A; B | C), clamped to >= 0. Nats.
double cond_mutual_info(const JointDist& j, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c);

/// D(p || q) in nats; +inf iff p puts mass where q has none. Cells with
/// p = q = 0 contribute 0.
double kl_div(const FiniteDist& p, const FiniteDist& q);

/// Joint version; q's axes may be ordered differently, they are matched by
/// name. Shape mismatch is a dimension error.
double kl_div(const JointDist& p, const JointDist& q);

/// h_b(r) in bits, r in [0,1].
double binary_entropy(double r);

/// Inverse of h_b on [0, 0.5], by bisection to |dh| <= 1e-12. h in [0,1].
double inv_binary_entropy(double h);

/// p*q := (1-p)q + p(1-q).
double binary_convolve(double a, double b);

/// Binary KL divergence in bits.
double binary_kl(double p, double q);

/// h_b(h_b^{-1}(H) * p), bits: the conditional-entropy floor after a binary
/// symmetric link (Mrs. Gerber).
double mgl_bound(double H_bits, double p);

}  // namespace htdmc::info
