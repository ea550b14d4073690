#include "doctest.h"

#include <cmath>

#include "htdmc/info.hpp"
#include "htdmc/npsim.hpp"

using namespace htdmc;
using info::kInf;

namespace {

JointDist random_joint(std::vector<Alphabet> axes, uint64_t seed, double floor_mass = 0.02) {
    sim::SplitMix64 rng(seed);
    size_t cells = 1;
    for (const auto& a : axes) cells *= static_cast<size_t>(a.size);
    std::vector<double> p(cells);
    double s = 0.0;
    for (auto& v : p) {
        v = floor_mass + rng.uniform();
        s += v;
    }
    for (auto& v : p) v /= s;
    return JointDist(std::move(axes), std::move(p));
}

}  // namespace

TEST_CASE("entropy basics") {
    CHECK(info::entropy(FiniteDist({"A", 2}, {0.5, 0.5})) == doctest::Approx(std::log(2.0)));
    CHECK(info::entropy(FiniteDist({"A", 2}, {1.0, 0.0})) == 0.0);
}

TEST_CASE("conditional entropy of a product equals the target entropy") {
    JointDist a = random_joint({{"A", 3}}, 3);
    CondDist bc(Alphabet{"(unit)", 1}, Alphabet{"B", 2}, {{0.3, 0.7}});
    JointDist prod = a.compose(CondDist({"A", 3}, {"B", 2}, {{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}),
                               {"A"});
    (void)bc;
    CHECK(info::cond_entropy(prod, {"B"}, {"A"}) ==
          doctest::Approx(info::entropy(prod.marginalize({"B"}))).epsilon(1e-12));
    CHECK(info::mutual_info(prod, {"A"}, {"B"}) == doctest::Approx(0.0));
}

TEST_CASE("chain rule holds on random joints") {
    for (uint64_t s = 1; s <= 20; ++s) {
        JointDist j = random_joint({{"A", 3}, {"B", 4}}, s);
        const double lhs = info::entropy(j);
        const double rhs = info::entropy(j.marginalize({"A"})) + info::cond_entropy(j, {"B"}, {"A"});
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("I(U;V) for the example joint matches the binary closed form") {
    JointDist p_uv = JointDist::from_matrix({"U", 2}, {"V", 2}, {{0.1, 0.4}, {0.4, 0.1}});
    const double want_bits = 1.0 - info::binary_entropy(0.8);
    CHECK(info::nats_to_bits(info::mutual_info(p_uv, {"U"}, {"V"})) ==
          doctest::Approx(want_bits).epsilon(1e-12));
}

TEST_CASE("conditioning on a singleton axis changes nothing") {
    JointDist j = random_joint({{"X", 2}, {"Y", 3}, {"S", 1}}, 17);
    CHECK(info::cond_mutual_info(j, {"X"}, {"Y"}, {"S"}) ==
          doctest::Approx(info::mutual_info(j, {"X"}, {"Y"})).epsilon(1e-12));
}

TEST_CASE("kl divergence basics") {
    FiniteDist p({"A", 2}, {1.0, 0.0}), u({"A", 2}, {0.5, 0.5});
    CHECK(info::kl_div(p, p) == 0.0);
    CHECK(info::kl_div(u, u) == 0.0);
    CHECK(info::kl_div(p, u) == doctest::Approx(std::log(2.0)));
    CHECK(info::kl_div(u, p) == kInf);
    CHECK_THROWS_AS(info::kl_div(p, FiniteDist({"B", 3}, {0.2, 0.3, 0.5})), DimensionError);
}

TEST_CASE("uncoded-joint divergence reproduces the 0.3244-bit landmark") {
    // per-letter (V,Y) laws with X = U: BSC(0.68) vs BSC(0.35) pairs
    auto vy = [](double flip) {
        return JointDist::from_matrix({"V", 2}, {"Y", 2},
                                      {{0.5 * (1 - flip), 0.5 * flip},
                                       {0.5 * flip, 0.5 * (1 - flip)}});
    };
    const double bits = info::nats_to_bits(info::kl_div(vy(0.68), vy(0.35)));
    CHECK(bits == doctest::Approx(0.3244).epsilon(5e-4));
    CHECK(bits == doctest::Approx(info::binary_kl(0.68, 0.35)).epsilon(1e-12));
}

TEST_CASE("divergence data processing: marginals never increase KL") {
    for (uint64_t s = 1; s <= 25; ++s) {
        JointDist p = random_joint({{"A", 3}, {"B", 2}}, 2 * s);
        JointDist q = random_joint({{"A", 3}, {"B", 2}}, 2 * s + 1);
        const double full = info::kl_div(p, q);
        CHECK(info::kl_div(p.marginalize({"A"}), q.marginalize({"A"})) <= full + 1e-12);
        CHECK(info::kl_div(p.marginalize({"B"}), q.marginalize({"B"})) <= full + 1e-12);
    }
}

TEST_CASE("binary helpers hit the worked-example constants") {
    CHECK(info::binary_convolve(0.2, 0.8) == doctest::Approx(0.68));
    CHECK(info::binary_convolve(0.2, 0.25) == doctest::Approx(0.35));
    CHECK(info::binary_convolve(0.37, 0.5) == doctest::Approx(0.5));
    CHECK(info::binary_kl(0.68, 0.35) == doctest::Approx(0.3244).epsilon(2e-4));
    CHECK(info::binary_kl(0.42, 0.42) == doctest::Approx(0.0));
    CHECK(info::binary_kl(0.5, 0.0) == kInf);
    CHECK(1.0 - info::binary_entropy(0.68) == doctest::Approx(0.0956).epsilon(1e-3));
}

TEST_CASE("inverse binary entropy") {
    CHECK(info::inv_binary_entropy(1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(info::inv_binary_entropy(0.0) == doctest::Approx(0.0));
    for (int k = 0; k <= 1000; ++k) {
        const double h = k / 1000.0;
        CHECK(info::binary_entropy(info::inv_binary_entropy(h)) == doctest::Approx(h).epsilon(1e-9));
    }
    CHECK_THROWS_AS(info::inv_binary_entropy(1.5), DomainError);
    CHECK_THROWS_AS(info::binary_entropy(-0.1), DomainError);
}

TEST_CASE("Mrs. Gerber bound: endpoints, example value, monotonicity") {
    CHECK(info::mgl_bound(1.0, 0.3) == doctest::Approx(1.0));
    CHECK(info::mgl_bound(0.0, 0.3) == doctest::Approx(info::binary_entropy(0.3)));
    CHECK(info::mgl_bound(info::binary_entropy(0.2), 0.8) ==
          doctest::Approx(info::binary_entropy(0.68)).epsilon(1e-10));
    double prev = -1.0;
    for (int k = 0; k <= 50; ++k) {
        const double v = info::mgl_bound(k / 50.0, 0.27);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}
