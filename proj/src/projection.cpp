#include "htdmc/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace htdmc::proj {

using info::kInf;

namespace {

double kl_flat(const std::vector<double>& p, const std::vector<double>& q) {
    double d = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        d += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(d, 0.0);
}

}  // namespace

KlProjector::KlProjector(Spec spec) : shape_(std::move(spec.shape)), floor_spec_(spec.floor) {
    for (int s : shape_) cells_ *= static_cast<size_t>(s);
    for (const auto& axes : spec.constraint_axes) {
        cons_.push_back(build_group_map(axes));
        group_count_.push_back(cons_.back().count);
    }
    if (floor_spec_) {
        floor_given_ = build_group_map(floor_spec_->given_axes);
        std::vector<int> joint = floor_spec_->given_axes;
        joint.push_back(floor_spec_->target_axis);
        floor_joint_ = build_group_map(joint);
    }
}

KlProjector::GroupMap KlProjector::build_group_map(const std::vector<int>& axes) const {
    GroupMap gm;
    gm.of_cell.resize(cells_);
    int count = 1;
    for (int a : axes) count *= shape_[a];
    gm.count = std::max(count, 1);

    std::vector<size_t> strides(shape_.size(), 1);
    for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i)
        strides[i] = strides[i + 1] * static_cast<size_t>(shape_[i + 1]);

    for (size_t f = 0; f < cells_; ++f) {
        size_t rem = f;
        int g = 0;
        // decode the multi-index lazily for the constrained axes only
        for (int a : axes) {
            size_t coord = (f / strides[a]) % static_cast<size_t>(shape_[a]);
            g = g * shape_[a] + static_cast<int>(coord);
        }
        (void)rem;
        gm.of_cell[f] = g;
    }
    return gm;
}

double KlProjector::cond_entropy_of(const std::vector<double>& p) const {
    // H(target | given) = H(given, target) - H(given)
    std::vector<double> mg(floor_given_.count, 0.0), mj(floor_joint_.count, 0.0);
    for (size_t f = 0; f < cells_; ++f) {
        mg[floor_given_.of_cell[f]] += p[f];
        mj[floor_joint_.of_cell[f]] += p[f];
    }
    double hj = 0.0, hg = 0.0;
    for (double v : mj)
        if (v > 0.0) hj -= v * std::log(v);
    for (double v : mg)
        if (v > 0.0) hg -= v * std::log(v);
    return hj - hg;
}

double KlProjector::max_violation(const std::vector<double>& p,
                                  const std::vector<std::vector<double>>& targets) const {
    double worst = 0.0;
    for (size_t c = 0; c < cons_.size(); ++c) {
        std::vector<double> sums(cons_[c].count, 0.0);
        for (size_t f = 0; f < cells_; ++f) sums[cons_[c].of_cell[f]] += p[f];
        for (int g = 0; g < cons_[c].count; ++g)
            worst = std::max(worst, std::fabs(sums[g] - targets[c][g]));
    }
    return worst;
}

void KlProjector::ipf(std::vector<double>& p, const std::vector<std::vector<double>>& targets,
                      const SolveOptions& opts, long& sweeps, bool& converged) const {
    std::vector<double> prev(p.size());
    std::vector<double> sums;
    double last_checked_violation = kInf;
    converged = false;
    for (long it = 0; it < opts.max_sweeps; ++it) {
        prev = p;
        for (size_t c = 0; c < cons_.size(); ++c) {
            const auto& gm = cons_[c];
            sums.assign(gm.count, 0.0);
            for (size_t f = 0; f < cells_; ++f) sums[gm.of_cell[f]] += p[f];
            for (size_t f = 0; f < cells_; ++f) {
                const int g = gm.of_cell[f];
                p[f] = sums[g] > 0.0 ? p[f] * (targets[c][g] / sums[g]) : 0.0;
            }
        }
        ++sweeps;
        double tv = 0.0;
        for (size_t f = 0; f < cells_; ++f) tv += std::fabs(p[f] - prev[f]);
        if (0.5 * tv < opts.tv_tol) {
            converged = true;
            return;
        }
        // oscillation / stall detection: if the marginal fits stop improving
        // the iteration will never reconcile the constraints
        if ((it & 1023) == 1023) {
            double viol = max_violation(p, targets);
            if (viol > 0.999 * last_checked_violation && viol > opts.feas_tol) return;
            last_checked_violation = viol;
        }
    }
}

KlProjector::Result KlProjector::solve(const std::vector<double>& q,
                                       const std::vector<std::vector<double>>& targets,
                                       double floor_nats, const SolveOptions& opts) const {
    Result res;
    res.argmin = q;

    // support feasibility: a pinned marginal cannot demand mass where Q's own
    // marginal support has none
    for (size_t c = 0; c < cons_.size(); ++c) {
        std::vector<double> qsum(cons_[c].count, 0.0);
        for (size_t f = 0; f < cells_; ++f) qsum[cons_[c].of_cell[f]] += q[f];
        for (int g = 0; g < cons_[c].count; ++g) {
            if (targets[c][g] > 1e-13 && qsum[g] <= 0.0) {
                res.feasible = false;
                res.value = kInf;
                return res;
            }
        }
    }

    std::vector<double> p = q;
    ipf(p, targets, opts, res.iterations, res.converged);
    res.max_violation = max_violation(p, targets);
    if (res.max_violation > opts.feas_tol) {
        res.feasible = false;
        res.value = kInf;
        res.argmin = std::move(p);
        return res;
    }

    if (floor_spec_) {
        const double h0 = cond_entropy_of(p);
        if (h0 < floor_nats - 1e-12) {
            // the floor binds: find the Lagrange multiplier by bisection.
            // For fixed lambda the optimality condition is
            //   P ~ Q * P(target|given)^{-lambda} * (marginal factors),
            // iterated to self-consistency with IPF supplying the factors.
            const int tsz = shape_[floor_spec_->target_axis];
            auto solve_lagrangian = [&](double lambda, std::vector<double>& out) -> double {
                std::vector<double> cur = p;
                std::vector<double> mg(floor_given_.count), mj(floor_joint_.count);
                std::vector<double> tilt(cells_);
                std::vector<double> prev;
                double theta = 1.0;  // damping on the log-conditional, halved on stall
                std::vector<double> logc(cells_, 0.0);
                for (int outer = 0; outer < 400; ++outer) {
                    prev = cur;
                    std::fill(mg.begin(), mg.end(), 0.0);
                    std::fill(mj.begin(), mj.end(), 0.0);
                    for (size_t f = 0; f < cells_; ++f) {
                        mg[floor_given_.of_cell[f]] += cur[f];
                        mj[floor_joint_.of_cell[f]] += cur[f];
                    }
                    double mx = -kInf;
                    for (size_t f = 0; f < cells_; ++f) {
                        if (q[f] <= 0.0) {
                            tilt[f] = 0.0;
                            continue;
                        }
                        const double den = mg[floor_given_.of_cell[f]];
                        double c = den > 0.0 ? mj[floor_joint_.of_cell[f]] / den : 1.0 / tsz;
                        c = std::clamp(c, 1e-14, 1.0);
                        const double lc = theta * std::log(c) + (1.0 - theta) * logc[f];
                        logc[f] = lc;
                        tilt[f] = std::log(q[f]) - lambda * lc;
                        mx = std::max(mx, tilt[f]);
                    }
                    double norm = 0.0;
                    for (size_t f = 0; f < cells_; ++f) {
                        tilt[f] = q[f] > 0.0 ? std::exp(tilt[f] - mx) : 0.0;
                        norm += tilt[f];
                    }
                    for (size_t f = 0; f < cells_; ++f) tilt[f] /= norm;
                    cur = tilt;
                    bool conv = false;
                    ipf(cur, targets, opts, res.iterations, conv);
                    double tv = 0.0;
                    for (size_t f = 0; f < cells_; ++f) tv += std::fabs(cur[f] - prev[f]);
                    if (0.5 * tv < 1e-11) break;
                    if (outer == 60) theta = 0.5;  // damp if self-consistency is slow
                }
                out = cur;
                return cond_entropy_of(cur);
            };

            std::vector<double> cand;
            double lo = 0.0, hi = 1.0;
            double h_hi = solve_lagrangian(hi, cand);
            int doublings = 0;
            while (h_hi < floor_nats - 1e-12 && doublings < 24) {
                lo = hi;
                hi *= 2.0;
                h_hi = solve_lagrangian(hi, cand);
                ++doublings;
            }
            if (h_hi < floor_nats - 1e-9) {
                // floor unattainable inside supp(Q) under the marginals
                res.feasible = false;
                res.value = kInf;
                res.argmin = std::move(cand);
                return res;
            }
            std::vector<double> best = cand;  // feasible (H >= floor) side
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double h = solve_lagrangian(mid, cand);
                if (h >= floor_nats - 1e-12) {
                    hi = mid;
                    best = cand;
                } else {
                    lo = mid;
                }
            }
            p = std::move(best);
            res.max_violation = max_violation(p, targets);
        }
    }

    res.value = kl_flat(p, q);
    res.argmin = std::move(p);
    return res;
}

// ---------------------------------------------------------------------------
// name-aware wrappers
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> overlap_axes(const std::vector<std::string>& a,
                                      const std::vector<std::string>& b) {
    std::vector<std::string> out;
    for (const auto& n : a)
        if (std::find(b.begin(), b.end(), n) != b.end()) out.push_back(n);
    return out;
}

bool constraints_consistent(const std::vector<MarginalConstraint>& marginals) {
    for (size_t i = 0; i < marginals.size(); ++i) {
        for (size_t j = i + 1; j < marginals.size(); ++j) {
            const auto ov = overlap_axes(marginals[i].axes, marginals[j].axes);
            if (ov.empty()) continue;
            const auto mi = marginals[i].target.marginalize(ov);
            const auto mj = marginals[j].target.marginalize(ov);
            double tv = 0.0;
            for (size_t f = 0; f < mi.cells(); ++f) tv += std::fabs(mi[f] - mj[f]);
            if (0.5 * tv > 1e-9) return false;
        }
    }
    return true;
}

}  // namespace

ProjectionResult min_kl(const JointDist& q, const std::vector<MarginalConstraint>& marginals,
                        const std::vector<EntropyFloorConstraint>& floors, const SolveOptions& opts) {
    if (floors.size() > 1)
        throw ValidationError("min_kl: at most one entropy floor is supported");

    ProjectionResult out{0.0, q, 0, true, true, 0.0};
    if (!constraints_consistent(marginals)) {
        out.feasible = false;
        out.value_nats = kInf;
        return out;
    }

    KlProjector::Spec spec;
    for (const auto& a : q.axes()) spec.shape.push_back(a.size);
    std::vector<std::vector<double>> targets;
    for (const auto& mc : marginals) {
        std::vector<int> axes;
        for (const auto& n : mc.axes) axes.push_back(q.axis_index(n));
        // reorder the target to the declared axis order, then flatten
        JointDist t = mc.target.reordered(mc.axes);
        for (size_t i = 0; i < mc.axes.size(); ++i)
            if (t.axes()[i].size != q.axes()[axes[i]].size)
                throw DimensionError("min_kl: constraint axis '" + mc.axes[i] +
                                     "' size mismatch with Q");
        spec.constraint_axes.push_back(std::move(axes));
        targets.push_back(t.probs());
    }
    double floor_nats = 0.0;
    if (!floors.empty()) {
        KlProjector::FloorSpec fs;
        fs.target_axis = q.axis_index(floors[0].target);
        for (const auto& n : floors[0].given) fs.given_axes.push_back(q.axis_index(n));
        spec.floor = fs;
        floor_nats = floors[0].floor_nats;
    }

    KlProjector projector(std::move(spec));
    auto r = projector.solve(q.probs(), targets, floor_nats, opts);
    out.value_nats = r.value;
    out.iterations = r.iterations;
    out.feasible = r.feasible;
    out.converged = r.converged;
    out.max_constraint_violation = r.max_violation;
    if (r.feasible) {
        double s = std::accumulate(r.argmin.begin(), r.argmin.end(), 0.0);
        if (s > 0.0)
            for (double& v : r.argmin) v /= s;
        out.argmin = JointDist(q.axes(), std::move(r.argmin));
    }
    return out;
}

// ---------------------------------------------------------------------------
// brute-force oracle
// ---------------------------------------------------------------------------

namespace {

struct AffineSlice {
    bool consistent = true;
    std::vector<double> x0;                // particular solution (free vars = 0)
    std::vector<std::vector<double>> basis;  // null-space directions, max-abs 1
};

// Solve A x = b by Gauss-Jordan with partial pivoting; return a particular
// solution and a null-space basis over the `n` variables.
AffineSlice affine_slice(std::vector<std::vector<double>> a, std::vector<double> b, size_t n) {
    const double tol = 1e-11;
    const size_t m = a.size();
    std::vector<int> pivot_col_of_row;
    size_t row = 0;
    std::vector<bool> is_pivot(n, false);
    for (size_t col = 0; col < n && row < m; ++col) {
        size_t best = row;
        for (size_t r = row; r < m; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[best][col])) best = r;
        if (std::fabs(a[best][col]) < tol) continue;
        std::swap(a[row], a[best]);
        std::swap(b[row], b[best]);
        const double piv = a[row][col];
        for (size_t c = 0; c < n; ++c) a[row][c] /= piv;
        b[row] /= piv;
        for (size_t r = 0; r < m; ++r) {
            if (r == row) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (size_t c = 0; c < n; ++c) a[r][c] -= f * a[row][c];
            b[r] -= f * b[row];
        }
        pivot_col_of_row.push_back(static_cast<int>(col));
        is_pivot[col] = true;
        ++row;
    }
    AffineSlice s;
    for (size_t r = row; r < m; ++r)
        if (std::fabs(b[r]) > 1e-8) {
            s.consistent = false;
            return s;
        }
    s.x0.assign(n, 0.0);
    for (size_t r = 0; r < row; ++r) s.x0[pivot_col_of_row[r]] = b[r];
    for (size_t col = 0; col < n; ++col) {
        if (is_pivot[col]) continue;
        std::vector<double> dir(n, 0.0);
        dir[col] = 1.0;
        for (size_t r = 0; r < row; ++r) dir[pivot_col_of_row[r]] = -a[r][col];
        double mx = 0.0;
        for (double v : dir) mx = std::max(mx, std::fabs(v));
        for (double& v : dir) v /= mx;
        s.basis.push_back(std::move(dir));
    }
    return s;
}

}  // namespace

double min_kl_bruteforce(const JointDist& q, const std::vector<MarginalConstraint>& marginals,
                         const std::vector<EntropyFloorConstraint>& floors, double step) {
    if (q.cells() > 12)
        throw GuardError("min_kl_bruteforce: " + std::to_string(q.cells()) + " cells exceeds 12");
    if (!(step >= 1e-3))
        throw GuardError("min_kl_bruteforce: step below 1e-3");
    if (!constraints_consistent(marginals)) return kInf;

    // active variables: cells where Q > 0 (mass elsewhere means D = +inf)
    std::vector<size_t> active;
    for (size_t f = 0; f < q.cells(); ++f)
        if (q[f] > 0.0) active.push_back(f);
    const size_t n = active.size();

    std::vector<std::vector<double>> a;
    std::vector<double> b;
    a.emplace_back(n, 1.0);  // total mass
    b.push_back(1.0);
    for (const auto& mc : marginals) {
        std::vector<int> axes;
        for (const auto& name : mc.axes) axes.push_back(q.axis_index(name));
        JointDist t = mc.target.reordered(mc.axes);
        // group index of each active cell
        std::vector<int> idx(q.dim());
        const int groups = static_cast<int>(t.cells());
        std::vector<std::vector<double>> rows(groups, std::vector<double>(n, 0.0));
        for (size_t k = 0; k < n; ++k) {
            q.flat_to_multi(active[k], idx.data());
            int g = 0;
            for (size_t ai = 0; ai < axes.size(); ++ai)
                g = g * q.axes()[axes[ai]].size + idx[axes[ai]];
            rows[g][k] = 1.0;
        }
        for (int g = 0; g < groups; ++g) {
            // a group whose active cells are empty but whose target is positive
            // cannot be met inside supp(Q)
            bool empty = true;
            for (size_t k = 0; k < n; ++k)
                if (rows[g][k] != 0.0) empty = false;
            if (empty && t[g] > 1e-13) return kInf;
            a.push_back(std::move(rows[g]));
            b.push_back(t[g]);
        }
    }

    AffineSlice slice = affine_slice(std::move(a), std::move(b), n);
    if (!slice.consistent) return kInf;
    const size_t d = slice.basis.size();
    if (d > 6) throw GuardError("min_kl_bruteforce: free dimension " + std::to_string(d) + " > 6");

    // floor bookkeeping on active cells
    struct FloorEval {
        std::vector<int> g_of;   // given-group per active cell
        std::vector<int> j_of;   // (given,target)-group per active cell
        int g_count = 0, j_count = 0;
        double floor = 0.0;
    };
    std::vector<FloorEval> fls;
    for (const auto& fc : floors) {
        FloorEval fe;
        std::vector<int> gaxes;
        for (const auto& nm : fc.given) gaxes.push_back(q.axis_index(nm));
        const int taxis = q.axis_index(fc.target);
        fe.g_count = 1;
        for (int ax : gaxes) fe.g_count *= q.axes()[ax].size;
        fe.j_count = fe.g_count * q.axes()[taxis].size;
        std::vector<int> idx(q.dim());
        for (size_t k = 0; k < n; ++k) {
            q.flat_to_multi(active[k], idx.data());
            int g = 0;
            for (int ax : gaxes) g = g * q.axes()[ax].size + idx[ax];
            fe.g_of.push_back(g);
            fe.j_of.push_back(g * q.axes()[taxis].size + idx[taxis]);
        }
        fe.floor = fc.floor_nats;
        fls.push_back(std::move(fe));
    }

    std::vector<double> lnq(n);
    for (size_t k = 0; k < n; ++k) lnq[k] = std::log(q[active[k]]);

    std::vector<double> x(n), mg, mj;
    auto eval = [&](const std::vector<double>& t, double& d_out, double& violation) -> bool {
        violation = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double v = slice.x0[k];
            for (size_t j = 0; j < d; ++j) v += t[j] * slice.basis[j][k];
            if (v < -1e-9) violation += -v;
            x[k] = std::max(v, 0.0);
        }
        if (violation > 0.0) return false;
        for (const auto& fe : fls) {
            mg.assign(fe.g_count, 0.0);
            mj.assign(fe.j_count, 0.0);
            for (size_t k = 0; k < n; ++k) {
                mg[fe.g_of[k]] += x[k];
                mj[fe.j_of[k]] += x[k];
            }
            double h = 0.0;
            for (double v : mj)
                if (v > 0.0) h -= v * std::log(v);
            for (double v : mg)
                if (v > 0.0) h += v * std::log(v);
            if (h < fe.floor - 1e-9) {
                violation = fe.floor - h;
                return false;
            }
        }
        double dv = 0.0;
        for (size_t k = 0; k < n; ++k)
            if (x[k] > 0.0) dv += x[k] * (std::log(x[k]) - lnq[k]);
        d_out = std::max(dv, 0.0);
        return true;
    };

    if (d == 0) {
        double dv, viol;
        return eval({}, dv, viol) ? dv : kInf;
    }

    const int pts_per_dim = d <= 1 ? 65 : d == 2 ? 41 : d == 3 ? 25 : d == 4 ? 11 : 9;
    double width = 2.0;
    std::vector<double> center(d, 0.0), best_t(d, 0.0), fallback_t(d, 0.0);
    double best_d = kInf;
    double least_violation = kInf;
    bool have_best = false;

    std::vector<double> t(d);
    const int stages = 4 + static_cast<int>(std::ceil(std::log(step / 4.0 / 2.0) / std::log(0.45)));
    for (int stage = 0; stage < stages; ++stage) {
        std::vector<int> ctr(d, 0);
        bool done = false;
        while (!done) {
            for (size_t j = 0; j < d; ++j)
                t[j] = center[j] + width * (2.0 * ctr[j] / (pts_per_dim - 1) - 1.0);
            double dv, viol;
            if (eval(t, dv, viol)) {
                if (dv < best_d) {
                    best_d = dv;
                    best_t = t;
                    have_best = true;
                }
            } else if (!have_best && viol < least_violation) {
                least_violation = viol;
                fallback_t = t;
            }
            // odometer
            done = true;
            for (size_t j = 0; j < d; ++j) {
                if (++ctr[j] < pts_per_dim) {
                    done = false;
                    break;
                }
                ctr[j] = 0;
            }
        }
        center = have_best ? best_t : fallback_t;
        width *= 0.45;
    }
    return best_d;
}

ProjectionResult t_set_projection(TKind kind, const JointDist& p_joint, const JointDist& q_joint,
                                  const TAxes& ax, const SolveOptions& opts) {
    std::vector<MarginalConstraint> m;
    std::vector<EntropyFloorConstraint> f;
    switch (kind) {
        case TKind::T1:
            m.push_back({{ax.u, ax.w}, p_joint.marginalize({ax.u, ax.w})});
            m.push_back({{ax.v, ax.w}, p_joint.marginalize({ax.v, ax.w})});
            break;
        case TKind::T2:
            m.push_back({{ax.u, ax.w}, p_joint.marginalize({ax.u, ax.w})});
            m.push_back({{ax.v}, p_joint.marginalize({ax.v})});
            f.push_back({ax.w, {ax.v}, info::cond_entropy(p_joint, {ax.w}, {ax.v})});
            break;
        case TKind::T3:
            m.push_back({{ax.u, ax.w}, p_joint.marginalize({ax.u, ax.w})});
            m.push_back({{ax.v}, p_joint.marginalize({ax.v})});
            break;
        case TKind::T1p:
            m.push_back({{ax.u, ax.s, ax.w}, p_joint.marginalize({ax.u, ax.s, ax.w})});
            m.push_back({{ax.v, ax.s, ax.w, ax.y}, p_joint.marginalize({ax.v, ax.s, ax.w, ax.y})});
            break;
        case TKind::T2p:
            m.push_back({{ax.u, ax.s, ax.w}, p_joint.marginalize({ax.u, ax.s, ax.w})});
            m.push_back({{ax.v, ax.s, ax.y}, p_joint.marginalize({ax.v, ax.s, ax.y})});
            f.push_back({ax.w, {ax.v, ax.s, ax.y},
                         info::cond_entropy(p_joint, {ax.w}, {ax.v, ax.s, ax.y})});
            break;
    }
    return min_kl(q_joint, m, f, opts);
}

}  // namespace htdmc::proj
