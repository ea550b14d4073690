#include "htdmc/info.hpp"

#include <algorithm>
#include <cmath>

namespace htdmc::info {

namespace {

double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

std::vector<std::string> axis_union(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
    std::vector<std::string> u = a;
    for (const auto& n : b)
        if (std::find(u.begin(), u.end(), n) == u.end()) u.push_back(n);
    return u;
}

}  // namespace

double entropy(const FiniteDist& p) { return entropy_of(p.probs()); }
double entropy(const JointDist& j) { return entropy_of(j.probs()); }

double cond_entropy(const JointDist& j, const std::vector<std::string>& target,
                    const std::vector<std::string>& given) {
    const auto tg = axis_union(target, given);
    double h = entropy(j.marginalize(tg));
    if (!given.empty()) h -= entropy(j.marginalize(given));
    return h;
}

double mutual_info(const JointDist& j, const std::vector<std::string>& a,
                   const std::vector<std::string>& b) {
    double i = entropy(j.marginalize(a)) + entropy(j.marginalize(b)) -
               entropy(j.marginalize(axis_union(a, b)));
    return std::max(i, 0.0);
}

double cond_mutual_info(const JointDist& j, const std::vector<std::string>& a,
                        const std::vector<std::string>& b, const std::vector<std::string>& c) {
    if (c.empty()) return mutual_info(j, a, b);
    // I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)
    double i = entropy(j.marginalize(axis_union(a, c))) +
               entropy(j.marginalize(axis_union(b, c))) -
               entropy(j.marginalize(axis_union(axis_union(a, b), c))) -
               entropy(j.marginalize(c));
    return std::max(i, 0.0);
}

namespace {

double kl_of(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;  // 0 log(0/q) = 0 even when q = 0
        if (q[i] <= 0.0) return kInf;
        d += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(d, 0.0);
}

}  // namespace

double kl_div(const FiniteDist& p, const FiniteDist& q) {
    if (p.size() != q.size())
        throw DimensionError("kl_div: alphabet sizes " + std::to_string(p.size()) + " vs " +
                             std::to_string(q.size()));
    return kl_of(p.probs(), q.probs());
}

double kl_div(const JointDist& p, const JointDist& q) {
    if (p.dim() != q.dim()) throw DimensionError("kl_div: tensor ranks differ");
    bool same_order = true;
    for (int i = 0; i < p.dim(); ++i)
        if (!(p.axes()[i] == q.axes()[i])) same_order = false;
    if (same_order) return kl_of(p.probs(), q.probs());
    std::vector<std::string> order;
    for (const auto& a : p.axes()) order.push_back(a.name);
    return kl_of(p.probs(), q.reordered(order).probs());  // throws if names mismatch
}

double binary_entropy(double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw DomainError("binary_entropy: argument outside [0,1]");
    double h = 0.0;
    if (r > 0.0) h -= r * std::log2(r);
    if (r < 1.0) h -= (1.0 - r) * std::log2(1.0 - r);
    return h;
}

double inv_binary_entropy(double h) {
    if (!(h >= 0.0 && h <= 1.0)) throw DomainError("inv_binary_entropy: argument outside [0,1]");
    if (h == 0.0) return 0.0;
    if (h == 1.0) return 0.5;
    double lo = 0.0, hi = 0.5;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (binary_entropy(mid) < h ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double binary_convolve(double a, double b) {
    if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
        throw DomainError("binary_convolve: arguments outside [0,1]");
    return (1.0 - a) * b + a * (1.0 - b);
}

double binary_kl(double p, double q) {
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
        throw DomainError("binary_kl: arguments outside [0,1]");
    double d = 0.0;
    if (p > 0.0) {
        if (q <= 0.0) return kInf;
        d += p * std::log2(p / q);
    }
    if (p < 1.0) {
        if (q >= 1.0) return kInf;
        d += (1.0 - p) * std::log2((1.0 - p) / (1.0 - q));
    }
    return std::max(d, 0.0);
}

double mgl_bound(double H_bits, double p) {
    return binary_entropy(binary_convolve(inv_binary_entropy(H_bits), p));
}

}  // namespace htdmc::info
