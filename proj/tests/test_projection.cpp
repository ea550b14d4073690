#include "doctest.h"

#include <cmath>

#include "htdmc/info.hpp"
#include "htdmc/npsim.hpp"
#include "htdmc/projection.hpp"

using namespace htdmc;
using info::kInf;
using proj::EntropyFloorConstraint;
using proj::MarginalConstraint;
using proj::TKind;

namespace {

JointDist random_joint(std::vector<Alphabet> axes, uint64_t seed, double floor_mass = 0.05) {
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

// gently tilted companion of q: marginal targets stay well inside the simplex
JointDist tilted(const JointDist& q, uint64_t seed, double strength = 0.35) {
    sim::SplitMix64 rng(seed);
    std::vector<double> p(q.probs());
    double s = 0.0;
    for (auto& v : p) {
        v *= std::exp(strength * (2.0 * rng.uniform() - 1.0));
        s += v;
    }
    for (auto& v : p) v /= s;
    return JointDist(q.axes(), std::move(p));
}

const std::vector<Alphabet> kUVW{{"U", 2}, {"V", 2}, {"W", 2}};

}  // namespace

TEST_CASE("Q feasible for its own constraints gives value 0") {
    JointDist q = random_joint(kUVW, 11);
    std::vector<MarginalConstraint> m{{{"U", "W"}, q.marginalize({"U", "W"})},
                                      {{"V", "W"}, q.marginalize({"V", "W"})}};
    auto r = proj::min_kl(q, m);
    CHECK(r.feasible);
    CHECK(r.value_nats == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("pinning the full joint returns kl_div exactly") {
    JointDist q = random_joint(kUVW, 21);
    JointDist p = tilted(q, 22);
    std::vector<MarginalConstraint> m{{{"U", "V", "W"}, p}};
    auto r = proj::min_kl(q, m);
    CHECK(r.feasible);
    CHECK(r.value_nats == doctest::Approx(info::kl_div(p, q)).epsilon(1e-9));
    CHECK(proj::min_kl_bruteforce(q, m, {}, 1e-3) ==
          doctest::Approx(info::kl_div(p, q)).epsilon(1e-9));
}

TEST_CASE("no constraints: the minimum sits at Q itself") {
    JointDist q = random_joint({{"A", 2}, {"B", 2}}, 31);
    auto r = proj::min_kl(q, {});
    CHECK(r.value_nats == doctest::Approx(0.0));
    CHECK(proj::min_kl_bruteforce(q, {}, {}, 1e-3) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("inconsistent marginal constraints are infeasible, not fatal") {
    JointDist q = random_joint(kUVW, 41);
    // two constraints disagreeing on the shared W marginal
    JointDist a = random_joint({{"U", 2}, {"W", 2}}, 42);
    JointDist b = random_joint({{"V", 2}, {"W", 2}}, 43);
    std::vector<MarginalConstraint> m{{{"U", "W"}, a}, {{"V", "W"}, b}};
    auto r = proj::min_kl(q, m);
    CHECK_FALSE(r.feasible);
    CHECK(r.value_nats == kInf);
}

TEST_CASE("mass demanded outside supp(Q) is infeasible") {
    JointDist q({{"U", 2}, {"V", 2}}, {0.5, 0.5, 0.0, 0.0});  // U=1 has no mass
    JointDist pu({{"U", 2}}, {0.4, 0.6});
    auto r = proj::min_kl(q, {{{"U"}, pu}});
    CHECK_FALSE(r.feasible);
    CHECK(r.value_nats == kInf);
    CHECK(proj::min_kl_bruteforce(q, {{{"U"}, pu}}, {}, 1e-3) == kInf);
}

TEST_CASE("T-set projections: P = Q gives zero for every kind") {
    JointDist q = random_joint(kUVW, 51);
    for (TKind k : {TKind::T1, TKind::T2, TKind::T3}) {
        auto r = proj::t_set_projection(k, q, q);
        CHECK(r.feasible);
        CHECK(r.value_nats == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("example-1 structure: Q_UVW lies in T2 and T3") {
    // P_UV = BSC(0.8) pair, Q_UV = BSC(0.25) pair, shared P_{W|U}
    JointDist p_uv = JointDist::from_matrix({"U", 2}, {"V", 2}, {{0.1, 0.4}, {0.4, 0.1}});
    JointDist q_uv = JointDist::from_matrix({"U", 2}, {"V", 2}, {{0.375, 0.125}, {0.125, 0.375}});
    CondDist w(Alphabet{"U", 2}, Alphabet{"W", 3}, {{0.8, 0.15, 0.05}, {0.1, 0.2, 0.7}});
    JointDist p = p_uv.compose(w, {"U"});
    JointDist q = q_uv.compose(w, {"U"});
    auto r2 = proj::t_set_projection(TKind::T2, p, q);
    auto r3 = proj::t_set_projection(TKind::T3, p, q);
    CHECK(r2.value_nats == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(r3.value_nats == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("oracle agreement on random 2x2x2 instances, all three kinds") {
    // the acceptance suite runs 50 per kind; keep a quick 8 per kind here
    for (uint64_t s = 1; s <= 8; ++s) {
        JointDist q = random_joint(kUVW, 100 + s);
        JointDist p = tilted(q, 200 + s);
        for (TKind k : {TKind::T1, TKind::T2, TKind::T3}) {
            auto r = proj::t_set_projection(k, p, q);
            std::vector<MarginalConstraint> m;
            std::vector<EntropyFloorConstraint> fl;
            if (k == TKind::T1) {
                m = {{{"U", "W"}, p.marginalize({"U", "W"})},
                     {{"V", "W"}, p.marginalize({"V", "W"})}};
            } else {
                m = {{{"U", "W"}, p.marginalize({"U", "W"})}, {{"V"}, p.marginalize({"V"})}};
                if (k == TKind::T2)
                    fl = {{"W", {"V"}, info::cond_entropy(p, {"W"}, {"V"})}};
            }
            const double brute = proj::min_kl_bruteforce(q, m, fl, 1e-3);
            REQUIRE(r.feasible);
            CHECK(std::fabs(r.value_nats - brute) <= 1e-3);
            CHECK(r.value_nats <= brute + 1e-6);  // oracle upper-bounds the true min
        }
    }
}

TEST_CASE("relaxing a constraint never increases the minimum") {
    for (uint64_t s = 1; s <= 6; ++s) {
        JointDist q = random_joint(kUVW, 300 + s);
        JointDist p = tilted(q, 400 + s);
        auto both = proj::min_kl(q, {{{"U", "W"}, p.marginalize({"U", "W"})},
                                     {{"V", "W"}, p.marginalize({"V", "W"})}});
        auto one = proj::min_kl(q, {{{"U", "W"}, p.marginalize({"U", "W"})}});
        CHECK(one.value_nats <= both.value_nats + 1e-9);

        // and the T2 floor only ever adds to T3
        auto t2 = proj::t_set_projection(TKind::T2, p, q);
        auto t3 = proj::t_set_projection(TKind::T3, p, q);
        CHECK(t3.value_nats <= t2.value_nats + 1e-9);
    }
}

TEST_CASE("argmin is optimal against random feasible competitors") {
    JointDist q = random_joint(kUVW, 501);
    JointDist p = tilted(q, 502);
    std::vector<MarginalConstraint> m{{{"U", "W"}, p.marginalize({"U", "W"})},
                                      {{"V", "W"}, p.marginalize({"V", "W"})}};
    auto r = proj::min_kl(q, m);
    REQUIRE(r.feasible);
    // feasible competitors: mix the argmin with the independent coupling of the
    // same pinned marginals (both lie in the affine constraint set)
    JointDist puw = p.marginalize({"U", "W"});
    JointDist pvw = p.marginalize({"V", "W"});
    JointDist pw = p.marginalize({"W"});
    std::vector<double> indep(8);
    for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v)
            for (int w = 0; w < 2; ++w)
                indep[(u * 2 + v) * 2 + w] =
                    pw[w] <= 0.0 ? 0.0
                                 : puw[u * 2 + w] * pvw[v * 2 + w] / pw[w];
    sim::SplitMix64 rng(503);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = rng.uniform();
        std::vector<double> mix(8);
        for (int i = 0; i < 8; ++i) mix[i] = (1.0 - t) * r.argmin[i] + t * indep[i];
        JointDist f(q.axes(), mix);
        CHECK(info::kl_div(f, q) >= r.value_nats - 1e-9);
    }
}

TEST_CASE("binding entropy floor: solver matches the oracle") {
    for (uint64_t s = 1; s <= 6; ++s) {
        JointDist q = random_joint(kUVW, 600 + s);
        JointDist p = tilted(q, 700 + s, 0.5);
        std::vector<MarginalConstraint> m{{{"U", "W"}, p.marginalize({"U", "W"})},
                                          {{"V"}, p.marginalize({"V"})}};
        // first solve without a floor, then demand strictly more conditional
        // entropy than the unconstrained solution delivers
        auto base = proj::min_kl(q, m);
        REQUIRE(base.feasible);
        const double h0 = info::cond_entropy(base.argmin, {"W"}, {"V"});
        const double hmax = info::entropy(p.marginalize({"W"}));  // product coupling reaches H(W)
        if (h0 + 1e-4 >= hmax) continue;
        const double floor = h0 + 0.5 * (hmax - h0);
        std::vector<EntropyFloorConstraint> fl{{"W", {"V"}, floor}};
        auto r = proj::min_kl(q, m, fl);
        REQUIRE(r.feasible);
        CHECK(info::cond_entropy(r.argmin, {"W"}, {"V"}) >= floor - 1e-7);
        CHECK(r.value_nats >= base.value_nats - 1e-10);
        const double brute = proj::min_kl_bruteforce(q, m, fl, 1e-3);
        CHECK(std::fabs(r.value_nats - brute) <= 2e-3);
    }
}

TEST_CASE("beta0-style projection on the 2x2 simplex") {
    // uniform marginals against the example's Q_UV: Q already qualifies
    JointDist q = JointDist::from_matrix({"U", 2}, {"V", 2}, {{0.375, 0.125}, {0.125, 0.375}});
    JointDist pu({{"U", 2}}, {0.5, 0.5});
    JointDist pv({{"V", 2}}, {0.5, 0.5});
    std::vector<MarginalConstraint> m{{{"U"}, pu}, {{"V"}, pv}};
    auto r = proj::min_kl(q, m);
    CHECK(r.value_nats == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(proj::min_kl_bruteforce(q, m, {}, 1e-3) == doctest::Approx(0.0).epsilon(1e-6));

    // a skewed Q forces a genuine projection; oracle agreement again
    JointDist q2 = JointDist::from_matrix({"U", 2}, {"V", 2}, {{0.5, 0.2}, {0.2, 0.1}});
    auto r2 = proj::min_kl(q2, m);
    const double brute2 = proj::min_kl_bruteforce(q2, m, {}, 1e-3);
    CHECK(std::fabs(r2.value_nats - brute2) <= 1e-3);
    CHECK(r2.value_nats > 0.01);
}

TEST_CASE("size guards on the brute force") {
    JointDist big = random_joint({{"A", 4}, {"B", 4}}, 901);
    CHECK_THROWS_AS(proj::min_kl_bruteforce(big, {}, {}, 1e-3), GuardError);
    JointDist q = random_joint({{"A", 2}, {"B", 2}}, 902);
    CHECK_THROWS_AS(proj::min_kl_bruteforce(q, {}, {}, 1e-4), GuardError);
}
