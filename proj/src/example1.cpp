#include "htdmc/example1.hpp"

#include <cmath>

namespace htdmc::ht {

HTInstance example1_instance() {
    const double q = kExample1Q, p0 = kExample1P0, p1 = kExample1P1;
    Alphabet u{"U", 2}, v{"V", 2};
    auto joint = [&](double flip) {
        return JointDist::from_matrix(
            u, v, {{0.5 * (1.0 - flip), 0.5 * flip}, {0.5 * flip, 0.5 * (1.0 - flip)}});
    };
    return HTInstance{joint(p0), joint(p1), chan::bsc(q), 1.0, std::nullopt};
}

std::vector<std::pair<double, double>> fig2_curve(double q, double p0, double step, double r_lo) {
    std::vector<std::pair<double, double>> out;
    const CondDist channel = chan::bsc(q);
    FiniteDist uniform(channel.from(), {0.5, 0.5});
    std::vector<std::vector<double>> rows(2, uniform.probs());
    std::vector<double> ps{1.0, 0.0};
    chan::InputDist input{FiniteDist(channel.from(), ps),
                          CondDist(channel.from(), channel.from(), rows)};

    const int n = static_cast<int>(std::llround((0.5 - r_lo) / step));
    for (int k = 0; k <= n; ++k) {
        const double r = std::min(r_lo + k * step, 0.5);
        const double rate_nats = info::bits_to_nats(1.0 - info::binary_entropy(r));
        const double ex_bits =
            info::nats_to_bits(chan::expurgated_fixed(rate_nats, input, channel).value_nats);
        const double f = 1.0 - info::binary_entropy(info::binary_convolve(r, p0)) + ex_bits;
        out.emplace_back(r, f);
    }
    return out;
}

Example1Report example1_report(const SearchConfig& cfg) {
    Example1Report rep;
    const HTInstance inst = example1_instance();

    rep.uncoded_bits = info::nats_to_bits(uncoded_exponent(inst));
    auto curve = fig2_curve();
    rep.ceiling_bits = curve.back().second;
    rep.branch2_bound_bits =
        1.0 - info::binary_entropy(info::binary_convolve(kExample1Q, kExample1P0));
    rep.shtcc = shtcc_exponent(inst, cfg);
    rep.shtcc_bits = rep.shtcc.value_bits();

    rep.uncoded_ok = std::fabs(rep.uncoded_bits - kExample1UncodedBits) <= 1e-3;
    rep.ceiling_ok = std::fabs(rep.ceiling_bits - kExample1CeilingBits) <= 1e-3;
    rep.branch2_ok = std::fabs(rep.branch2_bound_bits - kExample1Branch2Bits) <= 1e-3;
    rep.shtcc_ok = rep.shtcc_bits <= kExample1CeilingBits + 2e-3;
    return rep;
}

}  // namespace htdmc::ht
