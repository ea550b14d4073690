#include "htdmc/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

namespace htdmc::ht {

using info::kInf;
using proj::KlProjector;
using proj::SolveOptions;

namespace {

double ent_flat(const std::vector<double>& v) {
    double h = 0.0;
    for (double p : v)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

// min(a, b) with +inf behaving as identity
double imin(double a, double b) { return a < b ? a : b; }

struct Axes {
    Alphabet u, v, w;
};

}  // namespace

void HTInstance::validate() const {
    if (p_uv.dim() != 2 || q_uv.dim() != 2)
        throw ValidationError("HTInstance: P_UV and Q_UV must be two-axis joints");
    if (!(p_uv.axes()[0].name == "U" && p_uv.axes()[1].name == "V"))
        throw ValidationError("HTInstance: P_UV axes must be named U,V");
    if (!(p_uv.axes()[0] == q_uv.axes()[0]) || !(p_uv.axes()[1] == q_uv.axes()[1]))
        throw ValidationError("HTInstance: P_UV and Q_UV must share alphabets");
    if (!(tau >= 0.0)) throw ValidationError("HTInstance: tau must be >= 0");
    if (v_factor) {
        if (v_factor->first < 1 || v_factor->second < 1 ||
            v_factor->first * v_factor->second != p_uv.axes()[1].size)
            throw ValidationError("HTInstance: |E|*|Z| must equal |V|");
    }
}

CondDist identity_channel(const Alphabet& from, const Alphabet& to) {
    if (from.size != to.size) throw DimensionError("identity_channel: sizes differ");
    std::vector<std::vector<double>> rows(from.size, std::vector<double>(to.size, 0.0));
    for (int i = 0; i < from.size; ++i) rows[i][i] = 1.0;
    return CondDist(from, to, rows);
}

JointDist attach_independent(const JointDist& j, const FiniteDist& d) {
    CondDist c(Alphabet{"(unit)", 1}, d.alphabet(), {d.probs()});
    return j.compose(c, {});
}

JointDist split_v_axis(const JointDist& j_uv, int e_size, int z_size) {
    const int nu = j_uv.axes()[0].size;
    if (e_size * z_size != j_uv.axes()[1].size)
        throw DimensionError("split_v_axis: |E|*|Z| != |V|");
    std::vector<double> p(static_cast<size_t>(nu) * e_size * z_size);
    for (int u = 0; u < nu; ++u)
        for (int e = 0; e < e_size; ++e)
            for (int z = 0; z < z_size; ++z)
                p[(static_cast<size_t>(u) * e_size + e) * z_size + z] =
                    j_uv[static_cast<size_t>(u) * (e_size * z_size) + e * z_size + z];
    return JointDist({j_uv.axes()[0], Alphabet{"E", e_size}, Alphabet{"Z", z_size}}, std::move(p));
}

// ---------------------------------------------------------------------------
// separation scheme (Theorem-1 style terms)
// ---------------------------------------------------------------------------

ShtccBreakdown shtcc_objective(const HTInstance& inst, const CondDist& w_given_u,
                               const chan::InputDist& input, double r_nats) {
    inst.validate();
    const JointDist p_uvw = inst.p_uv.compose(w_given_u, {"U"});
    const JointDist q_uvw = inst.q_uv.compose(w_given_u, {"U"});

    ShtccBreakdown b;
    b.i_uw = info::mutual_info(p_uvw, {"U"}, {"W"});
    b.i_uw_v = info::cond_mutual_info(p_uvw, {"U"}, {"W"}, {"V"});
    b.i_vw = info::mutual_info(p_uvw, {"V"}, {"W"});
    b.h_w_v = info::cond_entropy(p_uvw, {"W"}, {"V"});
    b.i_xy_s = chan::input_conditional_info(input, inst.channel);
    b.feasible = (r_nats >= b.i_uw_v - 1e-12) && (r_nats < inst.tau * b.i_xy_s);

    const double t1 = proj::t_set_projection(proj::TKind::T1, p_uvw, q_uvw).value_nats;
    const double t2 = proj::t_set_projection(proj::TKind::T2, p_uvw, q_uvw).value_nats;
    const double t3 = proj::t_set_projection(proj::TKind::T3, p_uvw, q_uvw).value_nats;

    // tau = 0 renders the channel terms inert (the stated tau*E_m := 0
    // convention, applied to both channel exponents)
    b.ex = inst.tau > 0.0
               ? chan::expurgated_fixed(r_nats / inst.tau, input, inst.channel).value_nats
               : 0.0;
    b.em = chan::red_alert_fixed(input, inst.channel).value_nats;
    const double tau_ex = inst.tau > 0.0 ? inst.tau * b.ex : 0.0;
    const double tau_em = inst.tau > 0.0 && b.em == kInf ? kInf
                          : inst.tau > 0.0              ? inst.tau * b.em
                                                        : 0.0;

    const double d_pv_qv = info::kl_div(inst.p_uv.marginalize({"V"}), inst.q_uv.marginalize({"V"}));
    const bool high = b.i_uw > r_nats;
    b.e1 = t1;
    b.e2 = high ? t2 + r_nats - b.i_uw_v : kInf;
    b.e3 = t3 + (high ? r_nats - b.i_uw_v : b.i_vw) + tau_ex;
    b.e4 = d_pv_qv + (high ? r_nats - b.i_uw_v : b.i_vw) + tau_em;
    b.value = imin(imin(b.e1, b.e2), imin(b.e3, b.e4));
    return b;
}

namespace {

// Precompiled fast path for one instance: flat tensors over (U,V,W) plus the
// three T-set projectors. Marginal layouts follow KlProjector's row-major
// convention over the constraint axes.
struct ShtccScanner {
    int nu, nv, nw;
    std::vector<double> p_uv, q_uv;  // nu x nv
    std::vector<double> p_u, p_v;
    double h_uv, h_v, d_pv_qv;
    KlProjector t1, t2, t3;
    SolveOptions scan_opts;

    ShtccScanner(const HTInstance& inst, int w_card)
        : nu(inst.p_uv.axes()[0].size),
          nv(inst.p_uv.axes()[1].size),
          nw(w_card),
          p_uv(inst.p_uv.probs()),
          q_uv(inst.q_uv.probs()),
          t1(KlProjector::Spec{{nu, nv, nw}, {{0, 2}, {1, 2}}, std::nullopt}),
          t2(KlProjector::Spec{{nu, nv, nw},
                               {{0, 2}, {1}},
                               KlProjector::FloorSpec{2, {1}}}),
          t3(KlProjector::Spec{{nu, nv, nw}, {{0, 2}, {1}}, std::nullopt}) {
        p_u.assign(nu, 0.0);
        p_v.assign(nv, 0.0);
        for (int u = 0; u < nu; ++u)
            for (int v = 0; v < nv; ++v) {
                p_u[u] += p_uv[static_cast<size_t>(u) * nv + v];
                p_v[v] += p_uv[static_cast<size_t>(u) * nv + v];
            }
        h_uv = ent_flat(p_uv);
        h_v = ent_flat(p_v);
        std::vector<double> q_v(nv, 0.0);
        for (int u = 0; u < nu; ++u)
            for (int v = 0; v < nv; ++v) q_v[v] += q_uv[static_cast<size_t>(u) * nv + v];
        d_pv_qv = 0.0;
        for (int v = 0; v < nv; ++v) {
            if (p_v[v] <= 0.0) continue;
            if (q_v[v] <= 0.0) {
                d_pv_qv = kInf;
                break;
            }
            d_pv_qv += p_v[v] * std::log(p_v[v] / q_v[v]);
        }
        scan_opts.tv_tol = 1e-10;
        scan_opts.max_sweeps = 20000;
    }

    struct WPoint {
        double i_uw, i_uw_v, i_vw, h_w_v;
        double t1v, t2v, t3v;
        bool t2_exact;  // false when the floor would bind and t2v is a lower bound
    };

    // rows: nu pointers to W-rows
    WPoint eval(const std::vector<const std::vector<double>*>& rows) const {
        WPoint wp{};
        std::vector<double> p(static_cast<size_t>(nu) * nv * nw), q(p.size());
        std::vector<double> puw(static_cast<size_t>(nu) * nw, 0.0),
            pvw(static_cast<size_t>(nv) * nw, 0.0), pw(nw, 0.0);
        for (int u = 0; u < nu; ++u) {
            const auto& rw = *rows[u];
            for (int v = 0; v < nv; ++v) {
                const double pc = p_uv[static_cast<size_t>(u) * nv + v];
                const double qc = q_uv[static_cast<size_t>(u) * nv + v];
                for (int w = 0; w < nw; ++w) {
                    const size_t f = (static_cast<size_t>(u) * nv + v) * nw + w;
                    p[f] = pc * rw[w];
                    q[f] = qc * rw[w];
                    puw[static_cast<size_t>(u) * nw + w] += p[f];
                    pvw[static_cast<size_t>(v) * nw + w] += p[f];
                    pw[w] += p[f];
                }
            }
        }
        const double h_u = ent_flat(p_u), h_w = ent_flat(pw);
        const double h_uw = ent_flat(puw), h_vw = ent_flat(pvw), h_uvw = ent_flat(p);
        wp.i_uw = std::max(h_u + h_w - h_uw, 0.0);
        wp.i_vw = std::max(h_v + h_w - h_vw, 0.0);
        wp.i_uw_v = std::max(h_uv + h_vw - h_uvw - h_v, 0.0);
        wp.h_w_v = h_vw - h_v;

        const std::vector<double> pv_target(p_v);
        auto r1 = t1.solve(q, {puw, pvw}, 0.0, scan_opts);
        auto r3 = t3.solve(q, {puw, pv_target}, 0.0, scan_opts);
        wp.t1v = r1.feasible ? r1.value : kInf;
        wp.t3v = r3.feasible ? r3.value : kInf;
        // exact T2 only when the floor is slack at the T3 argmin
        wp.t2_exact = true;
        wp.t2v = wp.t3v;
        if (r3.feasible) {
            const double h = cond_h_wv(r3.argmin);
            if (h < wp.h_w_v - 1e-10) wp.t2_exact = false;  // lower bound for scanning
        }
        return wp;
    }

    double exact_t2(const std::vector<const std::vector<double>*>& rows) const {
        std::vector<double> q(static_cast<size_t>(nu) * nv * nw);
        std::vector<double> puw(static_cast<size_t>(nu) * nw, 0.0), pvw_dummy;
        std::vector<double> p(static_cast<size_t>(nu) * nv * nw);
        std::vector<double> pw;
        double h_w_v;
        {
            std::vector<double> pvw(static_cast<size_t>(nv) * nw, 0.0);
            for (int u = 0; u < nu; ++u) {
                const auto& rw = *rows[u];
                for (int v = 0; v < nv; ++v) {
                    const double pc = p_uv[static_cast<size_t>(u) * nv + v];
                    const double qc = q_uv[static_cast<size_t>(u) * nv + v];
                    for (int w = 0; w < nw; ++w) {
                        const size_t f = (static_cast<size_t>(u) * nv + v) * nw + w;
                        p[f] = pc * rw[w];
                        q[f] = qc * rw[w];
                        puw[static_cast<size_t>(u) * nw + w] += p[f];
                        pvw[static_cast<size_t>(v) * nw + w] += p[f];
                    }
                }
            }
            h_w_v = ent_flat(pvw) - h_v;
        }
        auto r = t2.solve(q, {puw, p_v}, h_w_v, scan_opts);
        return r.feasible ? r.value : kInf;
    }

  private:
    double cond_h_wv(const std::vector<double>& p) const {
        std::vector<double> pvw(static_cast<size_t>(nv) * nw, 0.0), pv(nv, 0.0);
        for (int u = 0; u < nu; ++u)
            for (int v = 0; v < nv; ++v)
                for (int w = 0; w < nw; ++w) {
                    const double c = p[(static_cast<size_t>(u) * nv + v) * nw + w];
                    pvw[static_cast<size_t>(v) * nw + w] += c;
                    pv[v] += c;
                }
        return ent_flat(pvw) - ent_flat(pv);
    }
};

struct SxPoint {
    chan::InputDist input;
    double i_xys = 0.0;
    double em = 0.0;
    double ex0 = 0.0;
    std::vector<double> ex_grid;  // over the shared channel-use rate grid
};

struct SxCatalog {
    std::vector<SxPoint> pts;
    std::vector<double> rate_grid;  // channel-use rates for ex_grid
    double i_max = 0.0;

    double ex_at(size_t k, double rate) const {
        const auto& g = rate_grid;
        const auto& e = pts[k].ex_grid;
        if (rate <= g.front()) return e.front();
        if (rate >= g.back()) return e.back();
        const size_t hi = static_cast<size_t>(
            std::upper_bound(g.begin(), g.end(), rate) - g.begin());
        const size_t lo = hi - 1;
        if (e[lo] == kInf || e[hi] == kInf) return e[hi];  // conservative near the +inf wall
        const double t = (rate - g[lo]) / (g[hi] - g[lo]);
        return (1.0 - t) * e[lo] + t * e[hi];
    }
};

SxCatalog build_sx_catalog(const HTInstance& inst, const SearchConfig& cfg, int s_card,
                           std::string& notes) {
    const int nx = inst.channel.from().size;
    double step = cfg.grid_step;
    auto combos_of = [&](double st) {
        const double rows = static_cast<double>(simplex_grid_size(nx, st));
        return static_cast<double>(simplex_grid_size(s_card, st)) * std::pow(rows, s_card);
    };
    while (combos_of(step) > 2e5 && step < 0.5) step *= 2.0;
    if (step != cfg.grid_step) notes += "sx grid coarsened to step " + std::to_string(step) + "; ";

    const auto ps_grid = simplex_grid(s_card, step);
    const auto row_grid = simplex_grid(nx, step);

    std::vector<SxPoint> all;
    std::vector<int> pick(s_card, 0);
    for (const auto& ps_small : ps_grid) {
        std::fill(pick.begin(), pick.end(), 0);
        bool done = false;
        while (!done) {
            std::vector<double> ps(nx, 0.0);
            for (int s = 0; s < s_card; ++s) ps[s] = ps_small[s];
            std::vector<std::vector<double>> rows;
            for (int s = 0; s < nx; ++s)
                rows.push_back(s < s_card ? row_grid[pick[s]].probs()
                                          : std::vector<double>(nx, 1.0 / nx));
            SxPoint pt{chan::InputDist{FiniteDist(inst.channel.from(), ps),
                                       CondDist(inst.channel.from(), inst.channel.from(), rows)},
                       0, 0, 0, {}};
            pt.i_xys = chan::input_conditional_info(pt.input, inst.channel);
            pt.em = chan::red_alert_fixed(pt.input, inst.channel).value_nats;
            pt.ex0 = chan::expurgated_fixed(0.0, pt.input, inst.channel).value_nats;
            all.push_back(std::move(pt));
            done = true;
            for (int s = 0; s < s_card; ++s) {
                if (++pick[s] < static_cast<int>(row_grid.size())) {
                    done = false;
                    break;
                }
                pick[s] = 0;
            }
        }
    }

    // keep the Pareto frontier in (I(X;Y|S), E_m, E_x(0)); dominated points can
    // only ever lose the min/feasibility comparison at every rate we use them
    std::vector<char> dominated(all.size(), 0);
    for (size_t i = 0; i < all.size(); ++i) {
        for (size_t j = 0; j < all.size() && !dominated[i]; ++j) {
            if (i == j || dominated[j]) continue;
            const bool geq = all[j].i_xys >= all[i].i_xys - 1e-12 && all[j].em >= all[i].em - 1e-12 &&
                             all[j].ex0 >= all[i].ex0 - 1e-12;
            const bool strict = all[j].i_xys > all[i].i_xys + 1e-12 || all[j].em > all[i].em + 1e-12 ||
                                all[j].ex0 > all[i].ex0 + 1e-12;
            if (geq && (strict || j < i)) dominated[i] = 1;
        }
    }
    SxCatalog cat;
    for (size_t i = 0; i < all.size(); ++i)
        if (!dominated[i]) cat.pts.push_back(std::move(all[i]));
    if (cat.pts.size() > 256) {
        std::stable_sort(cat.pts.begin(), cat.pts.end(), [](const SxPoint& a, const SxPoint& b) {
            const double sa = a.i_xys + a.em + std::min(a.ex0, 10.0);
            const double sb = b.i_xys + b.em + std::min(b.ex0, 10.0);
            return sa > sb;
        });
        cat.pts.erase(cat.pts.begin() + 256, cat.pts.end());
    }

    for (const auto& p : cat.pts) cat.i_max = std::max(cat.i_max, p.i_xys);
    const int g = 2 * std::max(cfg.r_grid, 8) + 1;
    cat.rate_grid.resize(g);
    for (int k = 0; k < g; ++k) cat.rate_grid[k] = cat.i_max * k / (g - 1);
    for (auto& p : cat.pts) {
        p.ex_grid.resize(g);
        for (int k = 0; k < g; ++k)
            p.ex_grid[k] = chan::expurgated_fixed(cat.rate_grid[k], p.input, inst.channel).value_nats;
    }
    return cat;
}

struct ScanCand {
    double value = -kInf;
    long gidx = 0;
    std::vector<int> row_idx;
    size_t sx = 0;
    double r = 0.0;
};

// top-K scan candidates, kept sorted by (value desc, grid index asc) so the
// merge across threads is deterministic and thread-count independent
struct ScanBest {
    std::vector<ScanCand> top;
    long visited = 0, feasible = 0;

    void offer(ScanCand c, size_t cap) {
        auto pos = std::lower_bound(top.begin(), top.end(), c, [](const ScanCand& a,
                                                                  const ScanCand& b) {
            return a.value > b.value || (a.value == b.value && a.gidx < b.gidx);
        });
        if (pos == top.end() && top.size() >= cap) return;
        top.insert(pos, std::move(c));
        if (top.size() > cap) top.pop_back();
    }
};

// best (sx, r) for one W-point; returns value and writes the choice
double combine_best(const ShtccScanner::WPoint& wp, const SxCatalog& cat, double tau,
                    double d_pv_qv, const std::vector<double>& r_grid, size_t& best_sx,
                    double& best_r, long& feas_count) {
    double best = -kInf;
    std::vector<double> cand;
    for (size_t k = 0; k < cat.pts.size(); ++k) {
        const auto& sx = cat.pts[k];
        const double r_hi = tau * sx.i_xys - 1e-6;
        if (r_hi < wp.i_uw_v - 1e-12) continue;
        cand.clear();
        for (double r : r_grid)
            if (r >= wp.i_uw_v - 1e-12 && r <= r_hi) cand.push_back(r);
        if (wp.i_uw_v <= r_hi) cand.push_back(std::max(wp.i_uw_v, 0.0));
        if (wp.i_uw >= wp.i_uw_v - 1e-12 && wp.i_uw <= r_hi) cand.push_back(wp.i_uw);
        cand.push_back(std::max(r_hi, 0.0));
        for (double r : cand) {
            ++feas_count;
            const bool high = wp.i_uw > r;
            const double slack = high ? r - wp.i_uw_v : wp.i_vw;
            const double ex = tau > 0.0 ? cat.ex_at(k, r / tau) : 0.0;
            const double tau_ex = tau > 0.0 ? tau * ex : 0.0;
            const double tau_em = tau > 0.0 ? (sx.em == kInf ? kInf : tau * sx.em) : 0.0;
            const double e2 = high ? wp.t2v + r - wp.i_uw_v : kInf;
            const double e3 = wp.t3v + slack + tau_ex;
            const double e4 = d_pv_qv + slack + tau_em;
            const double val = imin(imin(wp.t1v, e2), imin(e3, e4));
            if (val > best) {
                best = val;
                best_sx = k;
                best_r = r;
            }
        }
    }
    return best;
}

std::vector<std::vector<double>> local_rows(const std::vector<double>& center, int dim,
                                            double fine_step, double radius) {
    std::vector<std::vector<double>> out;
    for (const auto& c : simplex_grid(dim, fine_step)) {
        bool near = true;
        for (int i = 0; i < dim && near; ++i)
            if (std::fabs(c[i] - center[i]) > radius + 1e-12) near = false;
        if (near) out.push_back(c.probs());
    }
    return out;
}

}  // namespace

ExponentReport shtcc_exponent(const HTInstance& inst, const SearchConfig& cfg) {
    inst.validate();
    ExponentReport rep;
    rep.scheme = "shtcc";

    const int nu = inst.p_uv.axes()[0].size;
    const int nx = inst.channel.from().size;
    const int nw = cfg.w_card > 0 ? cfg.w_card : nu + 1;
    const int s_card = cfg.s_card > 0 ? std::min(cfg.s_card, nx) : nx;

    SxCatalog cat = build_sx_catalog(inst, cfg, s_card, rep.notes);
    if (inst.tau * cat.i_max <= 1e-9) {
        rep.no_feasible_point = true;
        rep.notes += "no feasible (W,SX,R): tau*I(X;Y|S) vanishes; ";
        rep.value_nats = 0.0;
        return rep;
    }

    ShtccScanner scan(inst, nw);

    // source-rate grid shared by every pair
    std::vector<double> r_grid(std::max(cfg.r_grid, 4));
    for (size_t j = 0; j < r_grid.size(); ++j)
        r_grid[j] = (inst.tau * cat.i_max - 1e-6) * static_cast<double>(j) / (r_grid.size() - 1);

    double w_step = cfg.grid_step;
    while (std::pow(static_cast<double>(simplex_grid_size(nw, w_step)), nu) > 3e6 && w_step < 0.5)
        w_step *= 2.0;
    if (w_step != cfg.grid_step)
        rep.notes += "W grid coarsened to step " + std::to_string(w_step) + "; ";
    const auto row_grid = simplex_grid(nw, w_step);
    const long n_rows = static_cast<long>(row_grid.size());
    long total = 1;
    for (int u = 0; u < nu; ++u) total *= n_rows;

    const size_t top_k = 24;
    const int n_threads = std::max(1, cfg.threads);
    std::vector<ScanBest> bests(n_threads);
    auto worker = [&](int tid) {
        ScanBest& bb = bests[tid];
        std::vector<const std::vector<double>*> rows(nu);
        std::vector<int> ridx(nu);
        for (long g = tid; g < total; g += n_threads) {
            long rem = g;
            for (int u = nu - 1; u >= 0; --u) {
                ridx[u] = static_cast<int>(rem % n_rows);
                rem /= n_rows;
            }
            for (int u = 0; u < nu; ++u) rows[u] = &row_grid[ridx[u]].probs();
            ++bb.visited;
            auto wp = scan.eval(rows);
            const double cutoff = bb.top.size() < top_k ? -kInf : bb.top.back().value;
            if (wp.t1v <= cutoff) continue;  // value <= E_1
            size_t sxi = 0;
            double rr = 0.0;
            const double val =
                combine_best(wp, cat, inst.tau, scan.d_pv_qv, r_grid, sxi, rr, bb.feasible);
            if (val > cutoff) bb.offer(ScanCand{val, g, ridx, sxi, rr}, top_k);
        }
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> th;
        for (int t = 0; t < n_threads; ++t) th.emplace_back(worker, t);
        for (auto& t : th) t.join();
    }
    ScanBest merged;
    for (auto& bb : bests) {
        merged.visited += bb.visited;
        merged.feasible += bb.feasible;
        for (auto& c : bb.top) merged.offer(std::move(c), top_k);
    }
    rep.points_visited = merged.visited;
    rep.points_feasible = merged.feasible;

    if (merged.top.empty()) {
        rep.no_feasible_point = true;
        rep.notes += "no feasible (W,SX,R); ";
        rep.value_nats = 0.0;
        return rep;
    }

    // exact re-ranking of the scan candidates (scan values use interpolated
    // channel exponents and a lazily bounded T2 term)
    struct Incumbent {
        double value = -kInf;
        std::vector<std::vector<double>> rows;
        size_t sx = 0;
        double r = 0.0;
    } best;
    const Alphabet u_ab = inst.p_uv.axes()[0];
    const Alphabet w_ab{"W", nw};
    auto exact_eval = [&](const std::vector<std::vector<double>>& rows, size_t sx, double r)
        -> ShtccBreakdown {
        return shtcc_objective(inst, CondDist(u_ab, w_ab, rows), cat.pts[sx].input, r);
    };
    for (const auto& c : merged.top) {
        std::vector<std::vector<double>> rows;
        for (int u = 0; u < nu; ++u) rows.push_back(row_grid[c.row_idx[u]].probs());
        auto bd = exact_eval(rows, c.sx, c.r);
        if (bd.feasible && bd.value != kInf && bd.value > best.value) {
            best.value = bd.value;
            best.rows = rows;
            best.sx = c.sx;
            best.r = c.r;
        }
    }
    if (best.rows.empty()) {
        rep.no_feasible_point = true;
        rep.notes += "no feasible (W,SX,R); ";
        rep.value_nats = 0.0;
        return rep;
    }

    // coordinate refinement around the incumbent: per-u row neighborhoods at
    // shrinking lattice steps, sx/r re-optimized from the catalog, every
    // adoption re-checked exactly
    std::vector<const std::vector<double>*> rows(nu);
    const double margin = 1e-4;  // interpolation slack before paying for exactness
    for (int round = 1; round <= cfg.refine_rounds; ++round) {
        const double fine = w_step / std::pow(4.0, round);
        const double radius = w_step / std::pow(4.0, round - 1);
        for (int u = 0; u < nu; ++u) {
            auto cands = local_rows(best.rows[u], nw, fine, radius);
            for (const auto& cand : cands) {
                auto trial = best.rows;
                trial[u] = cand;
                for (int k = 0; k < nu; ++k) rows[k] = &trial[k];
                auto wp = scan.eval(rows);
                if (wp.t1v <= best.value) continue;
                size_t sxi = best.sx;
                double rr = best.r;
                long dummy = 0;
                const double val =
                    combine_best(wp, cat, inst.tau, scan.d_pv_qv, r_grid, sxi, rr, dummy);
                if (val <= best.value + (wp.t2_exact ? 0.0 : margin) - margin) continue;
                auto bd = exact_eval(trial, sxi, rr);
                if (bd.feasible && bd.value != kInf && bd.value > best.value) {
                    best.value = bd.value;
                    best.rows = trial;
                    best.sx = sxi;
                    best.r = rr;
                }
            }
        }
    }

    // final rate polish at the incumbent (W, SX), all exact
    {
        const double r_hi = inst.tau * cat.pts[best.sx].i_xys - 1e-6;
        std::vector<double> cand{best.r};
        for (int k = -6; k <= 6; ++k)
            cand.push_back(best.r + k * (inst.tau * cat.i_max) / (std::max(cfg.r_grid, 4) * 16.0));
        auto wp_bd = exact_eval(best.rows, best.sx, best.r);
        cand.push_back(wp_bd.i_uw_v);
        cand.push_back(wp_bd.i_uw);
        cand.push_back(r_hi);
        for (double r : cand) {
            if (!(r >= 0.0) || r > r_hi) continue;
            if (r == best.r) continue;
            auto bd = exact_eval(best.rows, best.sx, r);
            if (bd.feasible && bd.value != kInf && bd.value > best.value) {
                best.value = bd.value;
                best.r = r;
            }
        }
    }

    // the reported exponent is a certified exact evaluation at a feasible point
    CondDist w_given_u(u_ab, w_ab, best.rows);
    const chan::InputDist& input = cat.pts[best.sx].input;
    ShtccBreakdown bd = shtcc_objective(inst, w_given_u, input, best.r);
    rep.value_nats = std::max(bd.value == kInf ? 0.0 : bd.value, 0.0);
    rep.shtcc_terms = bd;
    rep.w_given_u = w_given_u;
    rep.input = input;
    rep.rate_nats = best.r;
    if (!bd.feasible) {
        rep.notes += "incumbent re-evaluation left the feasible set; ";
        rep.no_feasible_point = true;
        rep.value_nats = 0.0;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// hybrid-coding scheme
// ---------------------------------------------------------------------------

namespace {

struct JhtccJoints {
    JointDist p_hat;     // U,V,S,W,Xp,X,Y
    JointDist p_uvswy;
    JointDist q_uvswy;
    JointDist p_vsy;
    JointDist q_check_vsy;
};

JhtccJoints build_jhtcc_joints(const HTInstance& inst, const JhtccParams& b) {
    JointDist p = attach_independent(inst.p_uv, b.p_s)
                      .compose(b.wbar_given_us, {"U", "S"})
                      .compose(b.xp_given_us, {"U", "S"})
                      .compose(b.x_given_uswbar, {"U", "S", "W"})
                      .compose(inst.channel, {"X"});
    JointDist q = attach_independent(inst.q_uv, b.p_s)
                      .compose(b.wbar_given_us, {"U", "S"})
                      .compose(b.xp_given_us, {"U", "S"})
                      .compose(b.x_given_uswbar, {"U", "S", "W"})
                      .compose(inst.channel, {"X"});
    JointDist qc = attach_independent(inst.q_uv, b.p_s)
                       .compose(b.xp_given_us, {"U", "S"})
                       .compose(identity_channel(b.xp_given_us.to(), inst.channel.from()), {"Xp"})
                       .compose(inst.channel, {"X"});
    return JhtccJoints{p, p.marginalize({"U", "V", "S", "W", "Y"}),
                       q.marginalize({"U", "V", "S", "W", "Y"}), p.marginalize({"V", "S", "Y"}),
                       qc.marginalize({"V", "S", "Y"})};
}

JhtccBreakdown jhtcc_terms_impl(const HTInstance& inst, const JhtccParams& b, bool exact_floor) {
    JhtccJoints j = build_jhtcc_joints(inst, b);
    JhtccBreakdown out;
    out.i_uw_s = info::cond_mutual_info(j.p_uvswy, {"U"}, {"W"}, {"S"});
    out.i_wvy_s = info::cond_mutual_info(j.p_uvswy, {"W"}, {"V", "Y"}, {"S"});
    out.degenerate_analog = out.i_uw_s <= 1e-12 && out.i_wvy_s <= 1e-12;
    out.feasible = out.i_uw_s < out.i_wvy_s || out.degenerate_analog;

    const double idiff = out.i_wvy_s - out.i_uw_s;
    const double t1 = proj::t_set_projection(proj::TKind::T1p, j.p_uvswy, j.q_uvswy).value_nats;
    double t2;
    if (exact_floor) {
        t2 = proj::t_set_projection(proj::TKind::T2p, j.p_uvswy, j.q_uvswy).value_nats;
    } else {
        // scan mode: floor dropped (lower bound; exact when it is slack anyway)
        proj::TAxes ax;
        std::vector<proj::MarginalConstraint> m{
            {{ax.u, ax.s, ax.w}, j.p_uvswy.marginalize({ax.u, ax.s, ax.w})},
            {{ax.v, ax.s, ax.y}, j.p_uvswy.marginalize({ax.v, ax.s, ax.y})}};
        t2 = proj::min_kl(j.q_uvswy, m).value_nats;
    }
    out.e1 = t1;
    out.e2 = t2 + idiff;
    out.e3 = info::kl_div(j.p_vsy, j.q_check_vsy) + idiff;
    out.value = imin(out.e1, imin(out.e2, out.e3));
    return out;
}

JhtccParams uncoded_params(const HTInstance& inst, int nwb) {
    const Alphabet u_ab = inst.p_uv.axes()[0];
    const Alphabet x_ab = inst.channel.from();
    if (u_ab.size != x_ab.size)
        throw PreconditionError("uncoded seed needs |U| = |X| for the identity embedding");
    FiniteDist p_s(Alphabet{"S", 1}, {1.0});
    std::vector<std::vector<double>> wrows(u_ab.size, std::vector<double>(nwb, 0.0));
    for (auto& r : wrows) r[0] = 1.0;
    CondDist wbar(Alphabet{"U*S", u_ab.size}, Alphabet{"W", nwb}, wrows);
    std::vector<std::vector<double>> xrows(u_ab.size, std::vector<double>(x_ab.size, 0.0));
    for (int u = 0; u < u_ab.size; ++u) xrows[u][u] = 1.0;
    CondDist xp(Alphabet{"U*S", u_ab.size}, Alphabet{"Xp", x_ab.size}, xrows);
    std::vector<std::vector<double>> xurows;
    for (int u = 0; u < u_ab.size; ++u)
        for (int w = 0; w < nwb; ++w) xurows.push_back(xrows[u]);
    CondDist x(Alphabet{"U*S*W", u_ab.size * nwb}, Alphabet{"X", x_ab.size}, xurows);
    return JhtccParams{p_s, wbar, xp, x};
}

}  // namespace

JhtccBreakdown jhtcc_objective(const HTInstance& inst, const JhtccParams& params) {
    inst.validate();
    if (std::fabs(inst.tau - 1.0) > 1e-12)
        throw PreconditionError("jhtcc: unsupported configuration, matched bandwidth tau = 1 required");
    return jhtcc_terms_impl(inst, params, /*exact_floor=*/true);
}

ExponentReport jhtcc_exponent(const HTInstance& inst, const SearchConfig& cfg) {
    inst.validate();
    if (std::fabs(inst.tau - 1.0) > 1e-12)
        throw PreconditionError("jhtcc: unsupported configuration, matched bandwidth tau = 1 required");

    ExponentReport rep;
    rep.scheme = "jhtcc";
    const int nu = inst.p_uv.axes()[0].size;
    const int nx = inst.channel.from().size;
    const int nwb = cfg.w_card > 0 ? cfg.w_card : nu + 1;

    std::vector<JhtccParams> seeds;
    const bool square = nu == nx;
    if (square) seeds.push_back(uncoded_params(inst, nwb));

    // factorized separation-style seeds: W quantizes U, X driven by W alone
    if (square) {
        for (double delta : {0.1, 0.2, 0.3}) {
            JhtccParams s = uncoded_params(inst, nwb);
            std::vector<std::vector<double>> wrows(nu, std::vector<double>(nwb, 0.0));
            for (int u = 0; u < nu; ++u) {
                for (int w = 0; w < nu; ++w)
                    wrows[u][w] = (w == u) ? 1.0 - delta : delta / (nu - 1 > 0 ? nu - 1 : 1);
            }
            s.wbar_given_us = CondDist(Alphabet{"U*S", nu}, Alphabet{"W", nwb}, wrows);
            std::vector<std::vector<double>> xurows;
            for (int u = 0; u < nu; ++u)
                for (int w = 0; w < nwb; ++w) {
                    std::vector<double> r(nx, 0.0);
                    r[std::min(w, nx - 1)] = 1.0;  // transmit the codeword symbol
                    xurows.push_back(r);
                }
            s.x_given_uswbar = CondDist(Alphabet{"U*S*W", nu * nwb}, Alphabet{"X", nx}, xurows);
            // X' mirrors the induced input law given (U,S)
            std::vector<std::vector<double>> xprow(nu, std::vector<double>(nx, 0.0));
            for (int u = 0; u < nu; ++u)
                for (int w = 0; w < nwb; ++w) xprow[u][std::min(w, nx - 1)] += wrows[u][w];
            s.xp_given_us = CondDist(Alphabet{"U*S", nu}, Alphabet{"Xp", nx}, xprow);
            seeds.push_back(std::move(s));
        }
    }
    if (seeds.empty())
        throw PreconditionError("jhtcc: no seed available, |U| != |X| needs an explicit embedding");

    auto lazy_value = [&](const JhtccParams& p) -> JhtccBreakdown {
        return jhtcc_terms_impl(inst, p, /*exact_floor=*/false);
    };

    JhtccParams best = seeds[0];
    JhtccBreakdown best_bd = jhtcc_objective(inst, best);
    double best_val = best_bd.feasible ? best_bd.value : -kInf;
    rep.points_visited = 1;
    for (size_t i = 1; i < seeds.size(); ++i) {
        ++rep.points_visited;
        auto bd = lazy_value(seeds[i]);
        if (!bd.feasible) continue;
        if (bd.value > best_val) {
            auto exact = jhtcc_objective(inst, seeds[i]);
            if (exact.feasible && exact.value > best_val) {
                best_val = exact.value;
                best = seeds[i];
                best_bd = exact;
            }
        }
    }

    // coordinate ascent over the map rows
    const long eval_cap = 20000;
    for (int round = 0; round <= cfg.refine_rounds; ++round) {
        const double sigma = cfg.grid_step / std::pow(4.0, round);
        const double radius = round == 0 ? 1.0 : cfg.grid_step / std::pow(4.0, round - 1);
        bool improved = true;
        int sweeps = 0;
        while (improved && sweeps < 4 && rep.points_visited < eval_cap) {
            improved = false;
            ++sweeps;
            struct Block {
                int map;  // 0: wbar, 1: xp, 2: x
                int row;
            };
            std::vector<Block> blocks;
            for (int r = 0; r < best.wbar_given_us.from().size; ++r) blocks.push_back({0, r});
            for (int r = 0; r < best.xp_given_us.from().size; ++r) blocks.push_back({1, r});
            for (int r = 0; r < best.x_given_uswbar.from().size; ++r) blocks.push_back({2, r});
            for (const auto& blk : blocks) {
                const CondDist& cur = blk.map == 0  ? best.wbar_given_us
                                      : blk.map == 1 ? best.xp_given_us
                                                     : best.x_given_uswbar;
                const int dim = cur.to().size;
                std::vector<double> center(cur.row(blk.row).probs());
                auto cands = local_rows(center, dim, sigma, round == 0 ? 1.0 : radius);
                for (const auto& cand : cands) {
                    if (rep.points_visited >= eval_cap) break;
                    ++rep.points_visited;
                    JhtccParams trial = best;
                    auto patch = [&](const CondDist& m) {
                        std::vector<std::vector<double>> rows;
                        for (int r = 0; r < m.from().size; ++r) rows.push_back(m.row(r).probs());
                        rows[blk.row] = cand;
                        return CondDist(m.from(), m.to(), rows);
                    };
                    if (blk.map == 0)
                        trial.wbar_given_us = patch(best.wbar_given_us);
                    else if (blk.map == 1)
                        trial.xp_given_us = patch(best.xp_given_us);
                    else
                        trial.x_given_uswbar = patch(best.x_given_uswbar);
                    auto bd = lazy_value(trial);
                    if (!bd.feasible) continue;
                    ++rep.points_feasible;
                    if (bd.value > best_val + 1e-12) {
                        auto exact = jhtcc_objective(inst, trial);
                        if (exact.feasible && exact.value > best_val) {
                            best_val = exact.value;
                            best = trial;
                            best_bd = exact;
                            improved = true;
                        }
                    }
                }
            }
        }
    }

    rep.value_nats = std::max(best_val, 0.0);
    rep.jhtcc_terms = best_bd;
    rep.jhtcc_params = best;
    rep.notes += "search lower bound; ";
    return rep;
}

// ---------------------------------------------------------------------------
// special cases
// ---------------------------------------------------------------------------

double uncoded_exponent(const HTInstance& inst) {
    inst.validate();
    const Alphabet u_ab = inst.p_uv.axes()[0];
    if (u_ab.size != inst.channel.from().size)
        throw PreconditionError("uncoded: |U| must equal |X| for the identity embedding");
    CondDist embed = identity_channel(u_ab, inst.channel.from());
    auto through = [&](const JointDist& j) {
        return j.compose(embed, {"U"}).compose(inst.channel, {"X"}).marginalize({"V", "Y"});
    };
    return info::kl_div(through(inst.p_uv), through(inst.q_uv));
}

ExponentReport onebit_exponent(const HTInstance& inst) {
    inst.validate();
    ExponentReport rep;
    rep.scheme = "onebit";
    const double d_pv_qv =
        info::kl_div(inst.p_uv.marginalize({"V"}), inst.q_uv.marginalize({"V"}));
    OneBitParts parts;
    parts.d_pv_qv = d_pv_qv;
    if (inst.tau == 0.0) {
        rep.value_nats = d_pv_qv;
        rep.onebit_parts = parts;
        return rep;
    }
    std::vector<proj::MarginalConstraint> m{{{"U"}, inst.p_uv.marginalize({"U"})},
                                            {{"V"}, inst.p_uv.marginalize({"V"})}};
    auto b0 = proj::min_kl(inst.q_uv, m);
    parts.beta0 = b0.value_nats;
    parts.ec = chan::max_pair_divergence(inst.channel);
    const double second = parts.ec == kInf ? kInf : inst.tau * parts.ec + d_pv_qv;
    rep.value_nats = imin(parts.beta0, second);
    rep.onebit_parts = parts;
    return rep;
}

double zero_capacity_exponent(const HTInstance& inst) {
    inst.validate();
    if (!inst.channel.rows_identical(1e-12))
        throw PreconditionError("zero_capacity: channel rows are not identical");
    return info::kl_div(inst.p_uv.marginalize({"V"}), inst.q_uv.marginalize({"V"}));
}

ExponentReport taci_exponent(const HTInstance& inst, const SearchConfig& cfg) {
    inst.validate();
    if (!inst.v_factor)
        throw PreconditionError("taci: instance does not declare a V = (E,Z) factorization");
    const int ne = inst.v_factor->first, nz = inst.v_factor->second;
    const JointDist p_uez = split_v_axis(inst.p_uv, ne, nz);
    const JointDist q_uez = split_v_axis(inst.q_uv, ne, nz);

    // structure check: Q_UEZ = P_UZ P_{E|Z}
    const JointDist p_uz = p_uez.marginalize({"U", "Z"});
    const auto p_ez_cond = p_uez.marginalize({"Z", "E"}).condition("E", {"Z"});
    const int nu = p_uez.axes()[0].size;
    std::ostringstream bad;
    double tv = 0.0;
    int bad_cells = 0;
    for (int u = 0; u < nu; ++u)
        for (int e = 0; e < ne; ++e)
            for (int z = 0; z < nz; ++z) {
                const double want =
                    p_uz[static_cast<size_t>(u) * nz + z] * p_ez_cond.dist(z, e);
                const double got = q_uez[(static_cast<size_t>(u) * ne + e) * nz + z];
                tv += std::fabs(want - got);
                if (std::fabs(want - got) > 1e-9 && bad_cells < 6) {
                    bad << " (u=" << u << ",e=" << e << ",z=" << z << ": " << got << " != "
                        << want << ")";
                    ++bad_cells;
                }
            }
    if (0.5 * tv > 1e-9)
        throw PreconditionError("taci: Q_UEZ != P_UZ P_{E|Z}; offending cells:" + bad.str());

    ExponentReport rep;
    rep.scheme = "taci";
    rep.exact = true;  // Proposition-level formula; the search only approaches its sup from below
    const double cap = chan::capacity(inst.channel, 1e-10).first;
    const double budget = inst.tau * cap + 1e-9;
    const int nwc = cfg.w_card > 0 ? cfg.w_card : nu + 1;

    auto eval = [&](const std::vector<std::vector<double>>& rows, double& i_uwz) {
        CondDist w(p_uez.axes()[0], Alphabet{"W", nwc}, rows);
        JointDist j = p_uez.compose(w, {"U"});
        i_uwz = info::cond_mutual_info(j, {"U"}, {"W"}, {"Z"});
        return info::cond_mutual_info(j, {"E"}, {"W"}, {"Z"});
    };

    double w_step = cfg.grid_step;
    while (std::pow(static_cast<double>(simplex_grid_size(nwc, w_step)), nu) > 2e6 && w_step < 0.5)
        w_step *= 2.0;
    const auto row_grid = simplex_grid(nwc, w_step);
    const long n_rows = static_cast<long>(row_grid.size());
    long total = 1;
    for (int u = 0; u < nu; ++u) total *= n_rows;

    double best_val = -1.0;
    std::vector<std::vector<double>> best_rows(nu, std::vector<double>(nwc, 0.0));
    {
        std::vector<int> ridx(nu, 0);
        std::vector<std::vector<double>> rows(nu);
        for (long g = 0; g < total; ++g) {
            long rem = g;
            for (int u = nu - 1; u >= 0; --u) {
                ridx[u] = static_cast<int>(rem % n_rows);
                rem /= n_rows;
            }
            for (int u = 0; u < nu; ++u) rows[u] = row_grid[ridx[u]].probs();
            ++rep.points_visited;
            double i_uwz = 0.0;
            const double v = eval(rows, i_uwz);
            if (i_uwz > budget) continue;
            ++rep.points_feasible;
            if (v > best_val) {
                best_val = v;
                best_rows = rows;
            }
        }
    }

    // local ascent with shrinking steps; the optimum typically saturates the
    // rate constraint, so fine steps matter near the boundary
    for (int round = 1; round <= cfg.refine_rounds + 3; ++round) {
        const double fine = w_step / std::pow(4.0, round);
        const double radius = w_step / std::pow(4.0, round - 1);
        if (fine < 1e-4) break;
        bool improved = true;
        while (improved) {
            improved = false;
            for (int u = 0; u < nu; ++u) {
                auto cands = local_rows(best_rows[u], nwc, fine, radius);
                for (const auto& cand : cands) {
                    auto trial = best_rows;
                    trial[u] = cand;
                    ++rep.points_visited;
                    double i_uwz = 0.0;
                    const double v = eval(trial, i_uwz);
                    if (i_uwz > budget) continue;
                    ++rep.points_feasible;
                    if (v > best_val + 1e-13) {
                        best_val = v;
                        best_rows = trial;
                        improved = true;
                    }
                }
            }
        }
    }

    rep.value_nats = std::max(best_val, 0.0);
    rep.w_given_u = CondDist(p_uez.axes()[0], Alphabet{"W", nwc}, best_rows);
    return rep;
}

double multiletter_k1(const HTInstance& inst, double grid_step) {
    inst.validate();
    if (std::fabs(inst.tau - 1.0) > 1e-12)
        throw PreconditionError("multiletter_k1: tau = 1 required");
    const int nu = inst.p_uv.axes()[0].size;
    const int nx = inst.channel.from().size;

    auto value_of = [&](const std::vector<std::vector<double>>& rows) {
        CondDist map(inst.p_uv.axes()[0], Alphabet{"X", nx}, rows);
        auto through = [&](const JointDist& j) {
            return j.compose(map, {"U"}).compose(inst.channel, {"X"}).marginalize({"V", "Y"});
        };
        return info::kl_div(through(inst.p_uv), through(inst.q_uv));
    };

    double best = -1.0;
    std::vector<std::vector<double>> best_rows;
    if (nu == nx) {  // uncoded is grid-adjacent: seed it explicitly
        std::vector<std::vector<double>> ident(nu, std::vector<double>(nx, 0.0));
        for (int u = 0; u < nu; ++u) ident[u][u] = 1.0;
        best = value_of(ident);
        best_rows = ident;
    }

    const auto row_grid = simplex_grid(nx, grid_step);
    const long n_rows = static_cast<long>(row_grid.size());
    long total = 1;
    for (int u = 0; u < nu; ++u) total *= n_rows;
    std::vector<int> ridx(nu, 0);
    std::vector<std::vector<double>> rows(nu);
    for (long g = 0; g < total; ++g) {
        long rem = g;
        for (int u = nu - 1; u >= 0; --u) {
            ridx[u] = static_cast<int>(rem % n_rows);
            rem /= n_rows;
        }
        for (int u = 0; u < nu; ++u) rows[u] = row_grid[ridx[u]].probs();
        const double v = value_of(rows);
        if (v > best) {
            best = v;
            best_rows = rows;
        }
    }
    for (int round = 1; round <= 3; ++round) {
        const double fine = grid_step / std::pow(4.0, round);
        const double radius = grid_step / std::pow(4.0, round - 1);
        for (int u = 0; u < nu; ++u) {
            auto cands = local_rows(best_rows[u], nx, fine, radius);
            for (const auto& cand : cands) {
                auto trial = best_rows;
                trial[u] = cand;
                const double v = value_of(trial);
                if (v > best) {
                    best = v;
                    best_rows = trial;
                }
            }
        }
    }
    return std::max(best, 0.0);
}

}  // namespace htdmc::ht
