#include "htdmc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace htdmc::chan {

using info::kInf;

namespace {

void check_input(const InputDist& input, const CondDist& channel) {
    if (input.p_s.size() != channel.from().size)
        throw DimensionError("InputDist: S alphabet must be a copy of the channel input alphabet");
    if (input.p_x_given_s.from().size != input.p_s.size() ||
        input.p_x_given_s.to().size != channel.from().size)
        throw DimensionError("InputDist: P_{X|S} shape mismatch");
}

double row_kl(const std::vector<double>& p, const CondDist& channel, int row) {
    double d = 0.0;
    for (int y = 0; y < channel.to().size; ++y) {
        if (p[y] <= 0.0) continue;
        const double qy = channel(row, y);
        if (qy <= 0.0) return kInf;
        d += p[y] * std::log(p[y] / qy);
    }
    return std::max(d, 0.0);
}

// I(X;Y) for input row r over the channel: H(sum_x r_x W_x) - sum_x r_x H(W_x)
double row_info(const std::vector<double>& r, const CondDist& channel) {
    const int nx = channel.from().size, ny = channel.to().size;
    std::vector<double> mix(ny, 0.0);
    double hyx = 0.0;
    for (int x = 0; x < nx; ++x) {
        if (r[x] <= 0.0) continue;
        double hx = 0.0;
        for (int y = 0; y < ny; ++y) {
            const double w = channel(x, y);
            mix[y] += r[x] * w;
            if (w > 0.0) hx -= w * std::log(w);
        }
        hyx += r[x] * hx;
    }
    double hy = 0.0;
    for (double v : mix)
        if (v > 0.0) hy -= v * std::log(v);
    return std::max(hy - hyx, 0.0);
}

}  // namespace

std::pair<double, FiniteDist> capacity(const CondDist& channel, double tol_nats) {
    if (!(tol_nats > 0.0)) throw DomainError("capacity: tol must be positive");
    const int nx = channel.from().size, ny = channel.to().size;
    std::vector<double> p(nx, 1.0 / nx), qy(ny), d(nx);
    double ilow = 0.0;
    for (long it = 0; it < 1000000; ++it) {
        std::fill(qy.begin(), qy.end(), 0.0);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) qy[y] += p[x] * channel(x, y);
        double iup = -kInf;
        ilow = 0.0;
        for (int x = 0; x < nx; ++x) {
            double dx = 0.0;
            for (int y = 0; y < ny; ++y) {
                const double w = channel(x, y);
                if (w > 0.0) dx += w * std::log(w / qy[y]);
            }
            d[x] = dx;
            ilow += p[x] * dx;
            iup = std::max(iup, dx);
        }
        if (iup - ilow <= tol_nats) break;
        double norm = 0.0;
        for (int x = 0; x < nx; ++x) {
            p[x] *= std::exp(d[x] - iup);
            norm += p[x];
        }
        for (int x = 0; x < nx; ++x) p[x] /= norm;
    }
    return {std::max(ilow, 0.0), FiniteDist(channel.from(), p)};
}

double input_conditional_info(const InputDist& input, const CondDist& channel) {
    check_input(input, channel);
    const int nx = channel.from().size;
    std::vector<double> row(nx);
    double i = 0.0;
    for (int s = 0; s < input.p_s.size(); ++s) {
        if (input.p_s[s] <= 0.0) continue;
        for (int x = 0; x < nx; ++x) row[x] = input.p_x_given_s(s, x);
        i += input.p_s[s] * row_info(row, channel);
    }
    return i;
}

ChannelExponentValue expurgated_fixed(double r_nats, const InputDist& input,
                                      const CondDist& channel) {
    if (r_nats < 0.0) throw DomainError("expurgated_fixed: rate must be >= 0");
    check_input(input, channel);
    const int nx = channel.from().size, ny = channel.to().size;

    // Bhattacharyya matrix and the pair weights aggregated over s
    std::vector<double> z(static_cast<size_t>(nx) * nx, 0.0);
    for (int x = 0; x < nx; ++x)
        for (int xt = 0; xt < nx; ++xt) {
            double v = 0.0;
            for (int y = 0; y < ny; ++y) v += std::sqrt(channel(x, y) * channel(xt, y));
            z[static_cast<size_t>(x) * nx + xt] = std::min(v, 1.0);
        }
    std::vector<double> w(static_cast<size_t>(nx) * nx, 0.0);
    for (int s = 0; s < input.p_s.size(); ++s) {
        const double ps = input.p_s[s];
        if (ps <= 0.0) continue;
        for (int x = 0; x < nx; ++x)
            for (int xt = 0; xt < nx; ++xt)
                w[static_cast<size_t>(x) * nx + xt] +=
                    ps * input.p_x_given_s(s, x) * input.p_x_given_s(s, xt);
    }

    double w_zero = 0.0;   // weight on pairs with disjoint output supports
    double lbar = 0.0;     // -sum w ln Z over the positive-Z pairs
    for (size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        if (z[i] <= 0.0)
            w_zero += w[i];
        else
            lbar -= w[i] * std::log(z[i]);
    }

    auto g = [&](double rho) {
        double a = 0.0;
        for (size_t i = 0; i < w.size(); ++i)
            if (w[i] > 0.0 && z[i] > 0.0) a += w[i] * std::exp(std::log(z[i]) / rho);
        return -rho * r_nats - rho * std::log(a);
    };

    // golden-section max of the concave g over [1, 1e4]
    const double gr = 0.6180339887498948482;
    double lo = 1.0, hi = 1e4;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 160; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = g(x1);
        }
    }
    ChannelExponentValue out;
    out.rho = 0.5 * (lo + hi);
    double best = std::max(g(out.rho), std::max(g(1.0), 0.0));
    if (g(1.0) >= g(out.rho)) out.rho = 1.0;

    // rho -> inf branch: selected when g is still climbing at the right edge
    if (g(1e4) >= g(1e4 * (1.0 - 1e-4)) - 1e-13) {
        out.rho_at_limit = true;
        if (w_zero > 1e-15) {
            if (r_nats < -std::log1p(-w_zero)) {
                out.value_nats = kInf;
                return out;
            }
        } else if (r_nats == 0.0) {
            best = std::max(best, lbar);
        }
    }
    out.value_nats = std::max(best, 0.0);
    return out;
}

namespace {

// No-time-sharing member of the S = X family: P_S a point mass, every row px.
InputDist trivial_s_input(const FiniteDist& px, const CondDist& channel) {
    Alphabet s_ab = channel.from();
    std::vector<double> ps(s_ab.size, 0.0);
    ps[0] = 1.0;
    std::vector<std::vector<double>> rows(s_ab.size, px.probs());
    return InputDist{FiniteDist(s_ab, ps), CondDist(s_ab, channel.from(), rows)};
}

}  // namespace

ChannelExponentValue expurgated_free(double r_nats, const CondDist& channel, double grid_step) {
    const int nx = channel.from().size;
    ChannelExponentValue best;
    best.value_nats = -1.0;
    auto consider = [&](const FiniteDist& px) {
        InputDist in = trivial_s_input(px, channel);
        ChannelExponentValue v = expurgated_fixed(r_nats, in, channel);
        if (v.value_nats > best.value_nats) {
            best = v;
            best.input = in;
        }
    };
    for (const auto& px : simplex_grid(nx, grid_step)) consider(px);

    // one round of local coordinate refinement around the incumbent
    const FiniteDist coarse = best.input->p_x_given_s.row(0);
    const double fine = grid_step / 8.0;
    for (const auto& px : simplex_grid(nx, fine)) {
        bool near = true;
        for (int i = 0; i < nx; ++i)
            if (std::fabs(px[i] - coarse[i]) > grid_step) near = false;
        if (near) consider(px);
    }
    return best;
}

ChannelExponentValue red_alert_fixed(const InputDist& input, const CondDist& channel) {
    check_input(input, channel);
    const int nx = channel.from().size, ny = channel.to().size;
    ChannelExponentValue out;
    double em = 0.0;
    std::vector<double> mix(ny);
    for (int s = 0; s < input.p_s.size(); ++s) {
        if (input.p_s[s] <= 0.0) continue;
        std::fill(mix.begin(), mix.end(), 0.0);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) mix[y] += input.p_x_given_s(s, x) * channel(x, y);
        const double d = row_kl(mix, channel, s);
        if (d == kInf) {
            out.value_nats = kInf;
            return out;
        }
        em += input.p_s[s] * d;
    }
    out.value_nats = em;
    return out;
}

ChannelExponentValue red_alert_max(double r_nats, const CondDist& channel, double band_tol,
                                   double grid_step) {
    const int nx = channel.from().size, ny = channel.to().size;
    const int ns = nx;  // S = X alphabet

    // candidate rows with their per-row info and per-s divergences
    auto rows = simplex_grid(nx, grid_step);
    struct RowStats {
        double info;
        std::vector<double> d;  // D(mix || W_s) per s
    };
    auto stats_of = [&](const FiniteDist& r) {
        RowStats st;
        st.info = row_info(r.probs(), channel);
        std::vector<double> mix(ny, 0.0);
        for (int x = 0; x < nx; ++x)
            for (int y = 0; y < ny; ++y) mix[y] += r[x] * channel(x, y);
        st.d.resize(ns);
        for (int s = 0; s < ns; ++s) st.d[s] = row_kl(mix, channel, s);
        return st;
    };
    std::vector<RowStats> stats;
    stats.reserve(rows.size());
    for (const auto& r : rows) stats.push_back(stats_of(r));

    auto ps_grid = simplex_grid(ns, grid_step);
    ChannelExponentValue best;
    best.feasible = false;
    best.value_nats = -kInf;

    std::vector<int> pick(ns, 0);
    for (const auto& ps : ps_grid) {
        // enumerate row assignments s -> row index via odometer
        std::fill(pick.begin(), pick.end(), 0);
        bool done = false;
        while (!done) {
            double i = 0.0, em = 0.0;
            for (int s = 0; s < ns; ++s) {
                i += ps[s] * stats[pick[s]].info;
                const double d = stats[pick[s]].d[s];
                em = (ps[s] > 0.0 && d == kInf) ? kInf : em + ps[s] * d;
            }
            if (std::fabs(i - r_nats) <= band_tol && em > best.value_nats) {
                best.value_nats = em;
                best.feasible = true;
                std::vector<std::vector<double>> m;
                for (int s = 0; s < ns; ++s) m.push_back(rows[pick[s]].probs());
                best.input = InputDist{ps, CondDist(channel.from(), channel.from(), m)};
            }
            done = true;
            for (int s = 0; s < ns; ++s) {
                if (++pick[s] < static_cast<int>(rows.size())) {
                    done = false;
                    break;
                }
                pick[s] = 0;
            }
        }
    }
    if (!best.feasible) best.value_nats = -kInf;  // sentinel: empty feasible grid
    return best;
}

double max_pair_divergence(const CondDist& channel) {
    const int nx = channel.from().size, ny = channel.to().size;
    double best = 0.0;
    std::vector<double> pa(ny);
    for (int a = 0; a < nx; ++a) {
        for (int y = 0; y < ny; ++y) pa[y] = channel(a, y);
        for (int b = 0; b < nx; ++b) {
            if (a == b) continue;
            const double d = row_kl(pa, channel, b);
            if (d > best) best = d;  // strict: ties keep the lex-smallest pair
            if (best == kInf) return kInf;
        }
    }
    return best;
}

CondDist bsc(double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("bsc: crossover outside [0,1]");
    return CondDist({"X", 2}, {"Y", 2}, {{1.0 - q, q}, {q, 1.0 - q}});
}

}  // namespace htdmc::chan
