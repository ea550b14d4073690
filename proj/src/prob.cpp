#include "htdmc/prob.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace htdmc {

namespace {

void check_alphabet(const Alphabet& a) {
    if (a.size < 1) throw ValidationError("alphabet '" + a.name + "' must have size >= 1");
    if (a.size > kMaxAlphabet)
        throw ValidationError("alphabet '" + a.name + "' exceeds the supported size " +
                              std::to_string(kMaxAlphabet));
}

void check_prob_vector(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= -kMassTol) || !(v <= 1.0 + kMassTol))
            throw ValidationError(what + ": entry " + std::to_string(v) + " outside [0,1]");
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ValidationError(what + ": mass " + std::to_string(sum) + " != 1");
}

}  // namespace

bool operator==(const Alphabet& a, const Alphabet& b) { return a.name == b.name && a.size == b.size; }

FiniteDist::FiniteDist(Alphabet alphabet, std::vector<double> probs)
    : alphabet_(std::move(alphabet)), p_(std::move(probs)) {
    check_alphabet(alphabet_);
    if (static_cast<int>(p_.size()) != alphabet_.size)
        throw DimensionError("FiniteDist '" + alphabet_.name + "': " + std::to_string(p_.size()) +
                             " entries for alphabet of size " + std::to_string(alphabet_.size));
    check_prob_vector(p_, "FiniteDist '" + alphabet_.name + "'");
    for (double& v : p_)
        if (v < 0.0) v = 0.0;  // clamp representation noise
}

CondDist::CondDist(Alphabet from, Alphabet to, std::vector<std::vector<double>> rows)
    : from_(std::move(from)), to_(std::move(to)) {
    check_alphabet(from_);
    check_alphabet(to_);
    if (static_cast<int>(rows.size()) != from_.size)
        throw DimensionError("CondDist " + to_.name + "|" + from_.name + ": row count " +
                             std::to_string(rows.size()) + " != " + std::to_string(from_.size));
    rows_.reserve(static_cast<size_t>(from_.size) * to_.size);
    for (int r = 0; r < from_.size; ++r) {
        FiniteDist checked(to_, rows[r]);  // validates the row
        for (int c = 0; c < to_.size; ++c) rows_.push_back(checked[c]);
    }
}

FiniteDist CondDist::row(int r) const {
    std::vector<double> v(rows_.begin() + static_cast<size_t>(r) * to_.size,
                          rows_.begin() + static_cast<size_t>(r + 1) * to_.size);
    return FiniteDist(to_, std::move(v));
}

bool CondDist::rows_identical(double tol) const {
    for (int r = 1; r < from_.size; ++r)
        for (int c = 0; c < to_.size; ++c)
            if (std::fabs((*this)(r, c) - (*this)(0, c)) > tol) return false;
    return true;
}

JointDist::JointDist(std::vector<Alphabet> axes, std::vector<double> probs)
    : axes_(std::move(axes)), p_(std::move(probs)) {
    size_t want = 1;
    for (size_t i = 0; i < axes_.size(); ++i) {
        check_alphabet(axes_[i]);
        for (size_t j = i + 1; j < axes_.size(); ++j)
            if (axes_[i].name == axes_[j].name)
                throw ValidationError("JointDist: duplicate axis name '" + axes_[i].name + "'");
        want *= static_cast<size_t>(axes_[i].size);
    }
    if (p_.size() != want)
        throw DimensionError("JointDist: " + std::to_string(p_.size()) + " cells, shape wants " +
                             std::to_string(want));
    double sum = 0.0;
    for (double& v : p_) {
        if (!(v >= -kMassTol)) throw ValidationError("JointDist: negative cell " + std::to_string(v));
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ValidationError("JointDist: total mass " + std::to_string(sum) + " != 1");
    init_strides();
}

void JointDist::init_strides() {
    strides_.assign(axes_.size(), 1);
    for (int i = static_cast<int>(axes_.size()) - 2; i >= 0; --i)
        strides_[i] = strides_[i + 1] * static_cast<size_t>(axes_[i + 1].size);
}

JointDist JointDist::from_matrix(const Alphabet& rows, const Alphabet& cols,
                                 const std::vector<std::vector<double>>& m) {
    if (static_cast<int>(m.size()) != rows.size)
        throw DimensionError("from_matrix: row count mismatch for axis '" + rows.name + "'");
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(rows.size) * cols.size);
    for (const auto& r : m) {
        if (static_cast<int>(r.size()) != cols.size)
            throw DimensionError("from_matrix: column count mismatch for axis '" + cols.name + "'");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return JointDist({rows, cols}, std::move(flat));
}

JointDist JointDist::from_dist(const FiniteDist& d) {
    return JointDist({d.alphabet()}, d.probs());
}

int JointDist::axis_index(const std::string& name) const {
    for (size_t i = 0; i < axes_.size(); ++i)
        if (axes_[i].name == name) return static_cast<int>(i);
    throw DimensionError("JointDist: no axis named '" + name + "'");
}

bool JointDist::has_axis(const std::string& name) const {
    for (const auto& a : axes_)
        if (a.name == name) return true;
    return false;
}

void JointDist::flat_to_multi(size_t flat, int* out) const {
    for (size_t i = 0; i < axes_.size(); ++i) {
        out[i] = static_cast<int>(flat / strides_[i]);
        flat %= strides_[i];
    }
}

size_t JointDist::multi_to_flat(const int* idx) const {
    size_t f = 0;
    for (size_t i = 0; i < axes_.size(); ++i) f += static_cast<size_t>(idx[i]) * strides_[i];
    return f;
}

JointDist JointDist::marginalize(const std::vector<std::string>& keep) const {
    std::vector<int> keep_idx;
    keep_idx.reserve(keep.size());
    for (const auto& n : keep) keep_idx.push_back(axis_index(n));

    JointDist out;
    out.axes_.reserve(keep.size());
    size_t out_cells = 1;
    for (int k : keep_idx) {
        out.axes_.push_back(axes_[k]);
        out_cells *= static_cast<size_t>(axes_[k].size);
    }
    out.p_.assign(out_cells, 0.0);
    out.init_strides();

    std::vector<int> idx(axes_.size());
    for (size_t f = 0; f < p_.size(); ++f) {
        if (p_[f] == 0.0) continue;
        flat_to_multi(f, idx.data());
        size_t of = 0;
        for (size_t i = 0; i < keep_idx.size(); ++i)
            of += static_cast<size_t>(idx[keep_idx[i]]) * out.strides_[i];
        out.p_[of] += p_[f];
    }
    return out;
}

JointDist JointDist::compose(const CondDist& cond, const std::vector<std::string>& on_axes) const {
    std::vector<int> on_idx;
    on_idx.reserve(on_axes.size());
    size_t prod = 1;
    for (const auto& n : on_axes) {
        on_idx.push_back(axis_index(n));
        prod *= static_cast<size_t>(axes_[on_idx.back()].size);
    }
    if (prod != static_cast<size_t>(cond.from().size))
        throw DimensionError("compose: conditioning product size " + std::to_string(prod) +
                             " != cond.from size " + std::to_string(cond.from().size));
    if (has_axis(cond.to().name))
        throw DimensionError("compose: axis '" + cond.to().name + "' already present");

    JointDist out;
    out.axes_ = axes_;
    out.axes_.push_back(cond.to());
    const int nsz = cond.to().size;
    out.p_.assign(p_.size() * static_cast<size_t>(nsz), 0.0);
    out.init_strides();

    std::vector<int> idx(axes_.size());
    for (size_t f = 0; f < p_.size(); ++f) {
        flat_to_multi(f, idx.data());
        size_t row = 0;
        for (int k : on_idx) row = row * static_cast<size_t>(axes_[k].size) + static_cast<size_t>(idx[k]);
        const double base = p_[f];
        for (int c = 0; c < nsz; ++c)
            out.p_[f * static_cast<size_t>(nsz) + c] = base * cond(static_cast<int>(row), c);
    }
    return out;
}

JointDist::Conditioned JointDist::condition(const std::string& target,
                                            const std::vector<std::string>& given) const {
    const int t_idx = axis_index(target);
    std::vector<int> g_idx;
    size_t rows = 1;
    std::string gname;
    for (const auto& n : given) {
        g_idx.push_back(axis_index(n));
        rows *= static_cast<size_t>(axes_[g_idx.back()].size);
        gname += (gname.empty() ? "" : "*") + n;
    }
    if (gname.empty()) gname = "()";

    const int tsz = axes_[t_idx].size;
    std::vector<double> num(rows * static_cast<size_t>(tsz), 0.0);
    std::vector<double> den(rows, 0.0);
    std::vector<int> idx(axes_.size());
    for (size_t f = 0; f < p_.size(); ++f) {
        if (p_[f] == 0.0) continue;
        flat_to_multi(f, idx.data());
        size_t r = 0;
        for (int k : g_idx) r = r * static_cast<size_t>(axes_[k].size) + static_cast<size_t>(idx[k]);
        num[r * static_cast<size_t>(tsz) + static_cast<size_t>(idx[t_idx])] += p_[f];
        den[r] += p_[f];
    }

    int zero_rows = 0;
    std::vector<std::vector<double>> m(rows, std::vector<double>(tsz));
    for (size_t r = 0; r < rows; ++r) {
        if (den[r] <= 0.0) {
            ++zero_rows;
            for (int c = 0; c < tsz; ++c) m[r][c] = 1.0 / tsz;
        } else {
            double s = 0.0;
            for (int c = 0; c < tsz; ++c) {
                m[r][c] = num[r * static_cast<size_t>(tsz) + c] / den[r];
                s += m[r][c];
            }
            // renormalize away accumulated rounding so the row validates
            for (int c = 0; c < tsz; ++c) m[r][c] /= s;
        }
    }
    Alphabet from{gname, static_cast<int>(rows)};
    return Conditioned{CondDist(from, axes_[t_idx], std::move(m)), zero_rows};
}

JointDist JointDist::reordered(const std::vector<std::string>& order) const {
    if (order.size() != axes_.size())
        throw DimensionError("reordered: order must list every axis exactly once");
    std::vector<int> perm;
    perm.reserve(order.size());
    for (const auto& n : order) perm.push_back(axis_index(n));

    JointDist out;
    for (int k : perm) out.axes_.push_back(axes_[k]);
    out.p_.assign(p_.size(), 0.0);
    out.init_strides();
    std::vector<int> idx(axes_.size());
    for (size_t f = 0; f < p_.size(); ++f) {
        flat_to_multi(f, idx.data());
        size_t of = 0;
        for (size_t i = 0; i < perm.size(); ++i)
            of += static_cast<size_t>(idx[perm[i]]) * out.strides_[i];
        out.p_[of] = p_[f];
    }
    return out;
}

double JointDist::total_mass() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

uint64_t simplex_grid_size(int dim, double step) {
    if (dim < 1) throw DomainError("simplex_grid: dim must be >= 1");
    if (!(step > 0.0 && step <= 1.0)) throw DomainError("simplex_grid: step must be in (0,1]");
    const int64_t units = std::llround(1.0 / step);
    // C(units + dim - 1, dim - 1)
    uint64_t c = 1;
    for (int64_t i = 1; i <= dim - 1; ++i) {
        c = c * static_cast<uint64_t>(units + i);
        c /= static_cast<uint64_t>(i);
    }
    return c;
}

std::vector<FiniteDist> simplex_grid(int dim, double step) {
    if (dim < 1) throw DomainError("simplex_grid: dim must be >= 1");
    if (!(step > 0.0 && step <= 1.0)) throw DomainError("simplex_grid: step must be in (0,1]");
    const int units = static_cast<int>(std::llround(1.0 / step));
    Alphabet ab{"grid", dim};

    std::vector<FiniteDist> out;
    std::vector<int> counts(dim, 0);
    // lexicographic: first coordinate from `units` down would be reverse lex on
    // values; the spec example lists [1,0], [0.5,0.5], [0,1], i.e. descending
    // first coordinate, which is lexicographic descending order on the tuples.
    // Enumerate recursively, largest leading entry first.
    std::vector<double> vals(dim);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == dim - 1) {
            counts[pos] = left;
            for (int i = 0; i < dim; ++i) vals[i] = static_cast<double>(counts[i]) / units;
            // guard against drift: renormalize exactly
            double s = 0.0;
            for (double v : vals) s += v;
            for (double& v : vals) v /= s;
            out.emplace_back(ab, vals);
            return;
        }
        for (int c = left; c >= 0; --c) {
            counts[pos] = c;
            self(self, pos + 1, left - c);
        }
    };
    rec(rec, 0, units);
    return out;
}

}  // namespace htdmc
