#include "doctest.h"

#include <cmath>

#include "htdmc/npsim.hpp"
#include "htdmc/prob.hpp"

using namespace htdmc;

namespace {

// seeded random joint for property checks
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

const Alphabet kU{"U", 2}, kV{"V", 2};

JointDist example1_puv() {
    return JointDist::from_matrix(kU, kV, {{0.1, 0.4}, {0.4, 0.1}});
}

}  // namespace

TEST_CASE("finiteDist validation") {
    CHECK_THROWS_AS(FiniteDist({"A", 2}, {0.6, 0.6}), ValidationError);
    CHECK_THROWS_AS(FiniteDist({"A", 2}, {1.5, -0.5}), ValidationError);
    CHECK_THROWS_AS(FiniteDist({"A", 3}, {0.5, 0.5}), DimensionError);
    FiniteDist d({"A", 2}, {0.25, 0.75});
    CHECK(d[1] == doctest::Approx(0.75));
}

TEST_CASE("compose with identity map keeps the marginal") {
    // P_U = [0.5, 0.5] composed through X = U
    JointDist p_uv = example1_puv();
    CondDist ident(kU, Alphabet{"X", 2}, {{1.0, 0.0}, {0.0, 1.0}});
    JointDist j = p_uv.compose(ident, {"U"});
    JointDist px = j.marginalize({"X"});
    CHECK(px[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(px[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("compose with a deterministic constant map is a point mass") {
    JointDist p_uv = example1_puv();
    CondDist cst(kU, Alphabet{"W", 3}, {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}});
    JointDist j = p_uv.compose(cst, {"U"});
    JointDist pw = j.marginalize({"W"});
    CHECK(pw[0] == 0.0);
    CHECK(pw[1] == doctest::Approx(1.0));
    CHECK(pw[2] == 0.0);
}

TEST_CASE("compose then marginalize V recovers the V marginal") {
    // P_U uniform composed with the example's P_{V|U} (BSC 0.8): P_V = [0.5,0.5]
    JointDist p_u({kU}, {0.5, 0.5});
    CondDist pv_u(kU, kV, {{0.2, 0.8}, {0.8, 0.2}});
    JointDist j = p_u.compose(pv_u, {"U"});
    JointDist pv = j.marginalize({"V"});
    CHECK(pv[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pv[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("marginalize: product joint, keep-all, example V marginal") {
    JointDist p = random_joint({{"A", 3}, {"B", 2}}, 7);
    JointDist q = random_joint({{"C", 2}}, 8);
    // build the product via compose on no axes
    CondDist qc(Alphabet{"(unit)", 1}, Alphabet{"C", 2}, {q.probs()});
    JointDist prod = p.compose(qc, {});
    JointDist back = prod.marginalize({"A", "B"});
    for (size_t f = 0; f < p.cells(); ++f) CHECK(back[f] == doctest::Approx(p[f]).epsilon(1e-13));

    JointDist keep_all = p.marginalize({"A", "B"});
    for (size_t f = 0; f < p.cells(); ++f) CHECK(keep_all[f] == p[f]);

    JointDist pv = example1_puv().marginalize({"V"});
    CHECK(pv[0] == doctest::Approx(0.5));

    CHECK_THROWS_AS(p.marginalize({"Z"}), DimensionError);
}

TEST_CASE("marginalize commutes with axis reordering") {
    JointDist j = random_joint({{"A", 2}, {"B", 3}, {"C", 2}}, 99);
    JointDist m1 = j.marginalize({"C", "A"});
    JointDist m2 = j.reordered({"B", "C", "A"}).marginalize({"C", "A"});
    for (size_t f = 0; f < m1.cells(); ++f) CHECK(m1[f] == doctest::Approx(m2[f]).epsilon(1e-13));
}

TEST_CASE("condition round trips through compose") {
    JointDist p_u({kU}, {0.3, 0.7});
    CondDist pv_u(kU, kV, {{0.2, 0.8}, {0.9, 0.1}});
    JointDist j = p_u.compose(pv_u, {"U"});
    auto c = j.condition("V", {"U"});
    CHECK(c.zero_mass_rows == 0);
    for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v) CHECK(c.dist(u, v) == doctest::Approx(pv_u(u, v)).epsilon(1e-12));

    // recompose reproduces the (U,V) marginal within 1e-12
    JointDist again = p_u.compose(c.dist, {"U"});
    for (size_t f = 0; f < j.cells(); ++f) CHECK(again[f] == doctest::Approx(j[f]).epsilon(1e-12));
}

TEST_CASE("condition on a product joint gives the target marginal in every row") {
    JointDist p_u({kU}, {0.4, 0.6});
    CondDist pv(Alphabet{"(unit)", 1}, kV, {{0.15, 0.85}});
    JointDist j = p_u.compose(CondDist(kU, kV, {{0.15, 0.85}, {0.15, 0.85}}), {"U"});
    (void)pv;
    auto c = j.condition("V", {"U"});
    for (int u = 0; u < 2; ++u) {
        CHECK(c.dist(u, 0) == doctest::Approx(0.15));
        CHECK(c.dist(u, 1) == doctest::Approx(0.85));
    }
}

TEST_CASE("condition flags zero-mass rows and fills them uniformly") {
    JointDist j({kU, kV}, {0.5, 0.5, 0.0, 0.0});
    auto c = j.condition("V", {"U"});
    CHECK(c.zero_mass_rows == 1);
    CHECK(c.dist(1, 0) == doctest::Approx(0.5));
    CHECK(c.dist(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("simplex grid enumerates the lattice in descending-lex order") {
    auto g = simplex_grid(2, 0.5);
    REQUIRE(g.size() == 3);
    CHECK(g[0][0] == doctest::Approx(1.0));
    CHECK(g[1][0] == doctest::Approx(0.5));
    CHECK(g[1][1] == doctest::Approx(0.5));
    CHECK(g[2][1] == doctest::Approx(1.0));

    CHECK(simplex_grid(3, 0.5).size() == 6);   // C(4,2)
    CHECK(simplex_grid(2, 0.25).size() == 5);
    CHECK(simplex_grid_size(3, 0.05) == 231);  // C(22,2)
    for (int d = 1; d <= 4; ++d)
        CHECK(simplex_grid(d, 0.25).size() == simplex_grid_size(d, 0.25));
}

TEST_CASE("compose rejects axis mismatches") {
    JointDist p_uv = example1_puv();
    CondDist c3(Alphabet{"T", 3}, Alphabet{"W", 2}, {{1, 0}, {1, 0}, {0, 1}});
    CHECK_THROWS_AS(p_uv.compose(c3, {"U"}), DimensionError);
    CondDist cv(kU, kV, {{1, 0}, {0, 1}});
    CHECK_THROWS_AS(p_uv.compose(cv, {"U"}), DimensionError);  // name clash on V
}
