#include "htdmc/npsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace htdmc::sim {

using info::kInf;

namespace {

int64_t floordiv2(int64_t i) { return i >= 0 ? i / 2 : -((-i + 1) / 2); }
int64_t ceildiv2(int64_t i) { return -floordiv2(-i); }

constexpr double kFlush = 1e-290;  // relative flush threshold after renormalization

// Distribution of a (rounded) LLR partial sum on the lattice {i * width}.
// pm/qm are unnormalized mantissas; the true masses are pm[i]*exp(lsp) etc.
struct Lattice {
    int64_t lo = 0;
    double width = 0.0;
    std::vector<double> pm, qm;
    double lsp = 0.0, lsq = 0.0;

    void renorm() {
        double m = 0.0;
        for (double v : pm) m = std::max(m, v);
        if (m > 0.0) {
            for (double& v : pm) v = v < m * kFlush ? 0.0 : v / m;
            lsp += std::log(m);
        }
        m = 0.0;
        for (double v : qm) m = std::max(m, v);
        if (m > 0.0) {
            for (double& v : qm) v = v < m * kFlush ? 0.0 : v / m;
            lsq += std::log(m);
        }
    }
};

Lattice convolve(const Lattice& a, const Lattice& b) {
    Lattice out;
    out.lo = a.lo + b.lo;
    out.width = a.width;
    out.pm.assign(a.pm.size() + b.pm.size() - 1, 0.0);
    out.qm.assign(out.pm.size(), 0.0);
    out.lsp = a.lsp + b.lsp;
    out.lsq = a.lsq + b.lsq;
    for (size_t i = 0; i < a.pm.size(); ++i) {
        const double pa = a.pm[i], qa = a.qm[i];
        if (pa == 0.0 && qa == 0.0) continue;
        double* op = out.pm.data() + i;
        double* oq = out.qm.data() + i;
        const double* bp = b.pm.data();
        const double* bq = b.qm.data();
        const size_t nb = b.pm.size();
        for (size_t j = 0; j < nb; ++j) {
            op[j] += pa * bp[j];
            oq[j] += qa * bq[j];
        }
    }
    out.renorm();
    return out;
}

// halve the lattice resolution; `up` rounds values toward +inf
Lattice coarsen(const Lattice& a, bool up) {
    Lattice out;
    out.width = a.width * 2.0;
    out.lsp = a.lsp;
    out.lsq = a.lsq;
    const int64_t hi_idx = a.lo + static_cast<int64_t>(a.pm.size()) - 1;
    out.lo = up ? ceildiv2(a.lo) : floordiv2(a.lo);
    const int64_t out_hi = up ? ceildiv2(hi_idx) : floordiv2(hi_idx);
    out.pm.assign(static_cast<size_t>(out_hi - out.lo + 1), 0.0);
    out.qm.assign(out.pm.size(), 0.0);
    for (size_t i = 0; i < a.pm.size(); ++i) {
        const int64_t idx = a.lo + static_cast<int64_t>(i);
        const int64_t oidx = (up ? ceildiv2(idx) : floordiv2(idx)) - out.lo;
        out.pm[static_cast<size_t>(oidx)] += a.pm[i];
        out.qm[static_cast<size_t>(oidx)] += a.qm[i];
    }
    out.renorm();
    return out;
}

struct Atom {
    int64_t idx_dn, idx_up;
    double p, q;
};

struct SymbolModel {
    std::vector<Atom> atoms;
    double p_inf = 0.0;   // P-mass on cells with Q = 0 (LLR +inf)
    double q_ninf = 0.0;  // Q-mass on cells with P = 0 (LLR -inf)
    double width = 0.0;
};

SymbolModel build_symbol_model(const PairSource& src, double bin_width) {
    if (src.p.dim() != src.q.dim() || src.p.cells() != src.q.cells())
        throw DimensionError("PairSource: P and Q shapes differ");
    SymbolModel m;
    m.width = bin_width;
    for (size_t f = 0; f < src.p.cells(); ++f) {
        const double p = src.p[f], q = src.q[f];
        if (p <= 0.0 && q <= 0.0) continue;
        if (p > 0.0 && q <= 0.0) {
            m.p_inf += p;
            continue;
        }
        if (p <= 0.0 && q > 0.0) {
            m.q_ninf += q;
            continue;
        }
        const double llr = std::log(p / q);
        m.atoms.push_back(Atom{static_cast<int64_t>(std::floor(llr / bin_width)),
                               static_cast<int64_t>(std::ceil(llr / bin_width)), p, q});
    }
    if (m.atoms.empty()) throw GuardError("exact_np_errors: no common support between P and Q");
    return m;
}

Lattice base_lattice(const SymbolModel& m, bool up) {
    int64_t lo = m.atoms.front().idx_dn, hi = lo;
    for (const auto& a : m.atoms) {
        const int64_t i = up ? a.idx_up : a.idx_dn;
        lo = std::min(lo, i);
        hi = std::max(hi, i);
    }
    Lattice l;
    l.lo = lo;
    l.width = m.width;
    l.pm.assign(static_cast<size_t>(hi - lo + 1), 0.0);
    l.qm.assign(l.pm.size(), 0.0);
    for (const auto& a : m.atoms) {
        const int64_t i = (up ? a.idx_up : a.idx_dn) - lo;
        l.pm[static_cast<size_t>(i)] += a.p;
        l.qm[static_cast<size_t>(i)] += a.q;
    }
    l.renorm();
    return l;
}

constexpr int64_t kPureCells = 1 << 22;  // budget for the no-coarsening path

// One branch (down- or up-rounded) of the convolution pipeline, with the
// doubling stages cached across different n.
class Branch {
  public:
    Branch(const SymbolModel& m, bool up) : up_(up) { stages_.push_back(base_lattice(m, up)); }

    bool pure_possible(int n) const {
        return static_cast<int64_t>(stages_[0].pm.size()) * n <= kPureCells;
    }

    Lattice dist_of_sum(int n) {
        if (pure_possible(n)) {
            Lattice acc = stages_[0];
            for (int k = 1; k < n; ++k) acc = convolve(acc, stages_[0]);
            return acc;
        }
        int top = 0;
        while ((1LL << (top + 1)) <= n) ++top;
        for (int j = static_cast<int>(stages_.size()) - 1; j < top; ++j)
            stages_.push_back(coarsen(convolve(stages_[j], stages_[j]), up_));
        Lattice acc;
        bool have = false;
        for (int j = 0; j <= top; ++j) {
            if (!(n & (1LL << j))) continue;
            if (!have) {
                acc = stages_[j];
                have = true;
            } else {
                while (acc.width < stages_[j].width * (1.0 - 1e-12)) acc = coarsen(acc, up_);
                acc = convolve(acc, stages_[j]);
            }
        }
        return acc;
    }

  private:
    bool up_;
    std::vector<Lattice> stages_;
};

struct BranchSet {
    SymbolModel model;
    Branch down, up;
    BranchSet(const PairSource& src, double bin_width)
        : model(build_symbol_model(src, bin_width)),
          down(model, false),
          up(model, true) {}
};

NpResult np_from_branches(BranchSet& br, int n, double eps) {
    NpResult res;
    const double p_inf_total = 1.0 - std::pow(1.0 - br.model.p_inf, n);

    // test branch: deterministic threshold on the down-rounded sum
    Lattice d = br.down.dist_of_sum(n);
    res.tree_path = !br.down.pure_possible(n);
    res.bins = static_cast<int64_t>(d.pm.size());
    const double eps_m = eps * std::exp(-d.lsp);  // eps in mantissa units
    double cum = 0.0;
    int64_t t_idx = d.lo - 1;  // threshold below the whole support: alpha = 0
    for (size_t i = 0; i < d.pm.size(); ++i) {
        if (cum + d.pm[i] <= eps_m) {
            cum += d.pm[i];
            t_idx = d.lo + static_cast<int64_t>(i);
        } else {
            break;
        }
    }
    res.alpha = cum * std::exp(d.lsp);
    res.threshold_nats = static_cast<double>(t_idx) * d.width;
    double tail = 0.0;
    for (int64_t i = static_cast<int64_t>(d.pm.size()) - 1; i >= 0 && d.lo + i > t_idx; --i)
        tail += d.qm[static_cast<size_t>(i)];
    res.ln_beta_hi = tail > 0.0 ? d.lsq + std::log(tail) : -kInf;
    res.beta_hi = std::exp(res.ln_beta_hi);

    // converse branch: beta >= max_t e^{-t} (1 - eps - P(S_up > t))
    Lattice u = br.up.dist_of_sum(n);
    double best = -kInf;
    double up_tail = p_inf_total;  // the +inf bucket always exceeds any t
    // suffix sums from the right; candidate thresholds at each lattice point
    std::vector<double> suffix(u.pm.size() + 1, 0.0);
    for (int64_t i = static_cast<int64_t>(u.pm.size()) - 1; i >= 0; --i)
        suffix[static_cast<size_t>(i)] = suffix[static_cast<size_t>(i) + 1] + u.pm[static_cast<size_t>(i)];
    for (size_t i = 0; i < u.pm.size() + 1; ++i) {
        const double t = static_cast<double>(u.lo + static_cast<int64_t>(i)) * u.width;
        const double p_above = suffix[i] * std::exp(u.lsp) + up_tail;
        const double room = 1.0 - eps - p_above;
        if (room <= 0.0) continue;
        best = std::max(best, std::log(room) - t);
    }
    res.ln_beta_lo = best;
    res.beta_lo = std::exp(best);
    if (res.ln_beta_lo > res.ln_beta_hi) {  // numerically flat case: clamp ordering
        res.ln_beta_lo = res.ln_beta_hi;
        res.beta_lo = res.beta_hi;
    }
    return res;
}

void validate_np_args(int n, double eps, double bin_width) {
    if (n < 1) throw ValidationError("exact_np_errors: n must be >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("exact_np_errors: eps must be in (0,1)");
    if (!(bin_width > 0.0)) throw ValidationError("exact_np_errors: bin_width must be positive");
}

}  // namespace

NpResult exact_np_errors(const PairSource& src, int n, double eps, double bin_width) {
    validate_np_args(n, eps, bin_width);
    BranchSet br(src, bin_width);
    if (static_cast<int64_t>(br.down.dist_of_sum(1).pm.size()) >= 10000000)
        throw GuardError("exact_np_errors: per-symbol lattice exceeds the bin guard");
    return np_from_branches(br, n, eps);
}

ErrorCurve stein_slope(const PairSource& src, const std::vector<int>& n_list, double eps,
                       double bin_width) {
    if (n_list.empty()) throw ValidationError("stein_slope: empty n list");
    for (size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ValidationError("stein_slope: n list must increase");
    validate_np_args(n_list.front(), eps, bin_width);

    BranchSet br(src, bin_width);
    ErrorCurve curve;
    curve.kl_oracle_nats = info::kl_div(src.p, src.q);
    for (int n : n_list) {
        NpResult r = np_from_branches(br, n, eps);
        curve.n.push_back(n);
        curve.alpha.push_back(r.alpha);
        curve.beta_lo.push_back(r.beta_lo);
        curve.beta_hi.push_back(r.beta_hi);
        curve.ln_beta_hi.push_back(r.ln_beta_hi);
        curve.slope_at_n.push_back(r.ln_beta_hi == -kInf ? kInf : -r.ln_beta_hi / n);
    }
    // least squares of y = -ln beta_hi against n
    const size_t m = curve.n.size();
    double sn = 0, sy = 0, snn = 0, sny = 0;
    for (size_t i = 0; i < m; ++i) {
        const double x = curve.n[i], y = -curve.ln_beta_hi[i];
        sn += x;
        sy += y;
        snn += x * x;
        sny += x * y;
    }
    const double det = m * snn - sn * sn;
    curve.slope_nats = det > 0.0 ? (m * sny - sn * sy) / det : 0.0;
    curve.intercept = m > 0 ? (sy - curve.slope_nats * sn) / m : 0.0;
    for (size_t i = 0; i < m; ++i)
        curve.residuals.push_back(-curve.ln_beta_hi[i] -
                                  (curve.intercept + curve.slope_nats * curve.n[i]));
    return curve;
}

McResult mc_np_errors(const PairSource& src, int n, double eps, int64_t trials, uint64_t seed,
                      double bin_width) {
    validate_np_args(n, eps, bin_width);
    if (trials < 1000) throw ValidationError("mc_np_errors: trials must be >= 1000");

    BranchSet br(src, bin_width);
    NpResult exact = np_from_branches(br, n, eps);
    McResult mc;
    mc.seed = seed;
    mc.trials = trials;
    if (exact.beta_hi < 10.0 / static_cast<double>(trials)) {
        mc.skipped = true;
        mc.note = "skipped: exact beta_hi below sampling resolution (10/trials)";
        return mc;
    }
    if (!br.down.pure_possible(n)) {
        mc.skipped = true;
        mc.note = "skipped: n beyond the fixed-lattice regime";
        return mc;
    }

    // per-cell sampling tables
    struct Cell {
        double p, q;
        int64_t idx_dn;  // -1 flag via separate markers below
        int kind;        // 0 finite, 1 p-only (+inf), 2 q-only (-inf)
    };
    std::vector<Cell> cells;
    for (size_t f = 0; f < src.p.cells(); ++f) {
        const double p = src.p[f], q = src.q[f];
        if (p <= 0.0 && q <= 0.0) continue;
        Cell c{p, q, 0, 0};
        if (p > 0.0 && q <= 0.0)
            c.kind = 1;
        else if (p <= 0.0 && q > 0.0)
            c.kind = 2;
        else
            c.idx_dn = static_cast<int64_t>(std::floor(std::log(p / q) / bin_width));
        cells.push_back(c);
    }
    std::vector<double> cum_p, cum_q;
    double ap = 0, aq = 0;
    for (const auto& c : cells) {
        ap += c.p;
        aq += c.q;
        cum_p.push_back(ap);
        cum_q.push_back(aq);
    }

    const int64_t t_idx = static_cast<int64_t>(std::llround(exact.threshold_nats / bin_width));
    auto run_law = [&](bool under_p) {
        const auto& cum = under_p ? cum_p : cum_q;
        int64_t hits = 0;  // under P: rejections (S <= t); under Q: acceptances (S > t)
        const int64_t shard_size = 4096;
        const int64_t shards = (trials + shard_size - 1) / shard_size;
        for (int64_t s = 0; s < shards; ++s) {
            SplitMix64 rng(seed ^ (under_p ? 0x1234ULL : 0x9876ULL) ^
                           (0xA5A5A5A5ULL * static_cast<uint64_t>(s + 1)));
            const int64_t lo = s * shard_size, hi = std::min(trials, lo + shard_size);
            for (int64_t t = lo; t < hi; ++t) {
                int64_t sum = 0;
                bool plus_inf = false, minus_inf = false;
                for (int k = 0; k < n; ++k) {
                    const double u = rng.uniform() * cum.back();
                    const size_t ci = static_cast<size_t>(
                        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
                    const auto& c = cells[std::min(ci, cells.size() - 1)];
                    if (c.kind == 1)
                        plus_inf = true;
                    else if (c.kind == 2)
                        minus_inf = true;
                    else
                        sum += c.idx_dn;
                }
                const bool accept = plus_inf || (!minus_inf && sum > t_idx);
                if (under_p ? !accept : accept) ++hits;
            }
        }
        return hits;
    };
    const double z = 1.959963984540054;
    auto wilson = [&](int64_t hits, double& center, double& radius) {
        const double nn = static_cast<double>(trials);
        const double ph = static_cast<double>(hits) / nn;
        const double denom = 1.0 + z * z / nn;
        center = (ph + z * z / (2.0 * nn)) / denom;
        radius = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / denom;
    };
    wilson(run_law(true), mc.alpha_hat, mc.alpha_radius);
    wilson(run_law(false), mc.beta_hat, mc.beta_radius);
    return mc;
}

}  // namespace htdmc::sim
