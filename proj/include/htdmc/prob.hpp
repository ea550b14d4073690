#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htdmc/errors.hpp"

namespace htdmc {

// Absolute tolerance for "sums to one" checks on stored distributions.
inline constexpr double kMassTol = 1e-12;

// Maximum alphabet size accepted anywhere. Grid searches are exponential in
// alphabet sizes, so larger supports are rejected up front.
inline constexpr int kMaxAlphabet = 16;

struct Alphabet {
    std::string name;
    int size = 0;
};

bool operator==(const Alphabet& a, const Alphabet& b);

/// Probability vector on a named finite alphabet.
class FiniteDist {
  public:
    FiniteDist(Alphabet alphabet, std::vector<double> probs);

    const Alphabet& alphabet() const { return alphabet_; }
    int size() const { return alphabet_.size; }
    double operator[](int i) const { return p_[i]; }
    const std::vector<double>& probs() const { return p_; }

  private:
    Alphabet alphabet_;
    std::vector<double> p_;
};

/// Stochastic matrix from one alphabet to another; every row is a valid
/// distribution on `to`.
class CondDist {
  public:
    CondDist(Alphabet from, Alphabet to, std::vector<std::vector<double>> rows);

    const Alphabet& from() const { return from_; }
    const Alphabet& to() const { return to_; }
    double operator()(int row, int col) const { return rows_[static_cast<size_t>(row) * to_.size + col]; }
    FiniteDist row(int r) const;
    const std::vector<double>& flat() const { return rows_; }

    /// True when all rows coincide entrywise within `tol` (zero-capacity test).
    bool rows_identical(double tol = kMassTol) const;

  private:
    Alphabet from_;
    Alphabet to_;
    std::vector<double> rows_;  // from.size x to.size, row-major
};

/// Labeled probability tensor. Axes are identified by name, never by
/// position; the five- and seven-axis joints of the hybrid-coding terms are
/// too error prone otherwise.
class JointDist {
  public:
    JointDist(std::vector<Alphabet> axes, std::vector<double> probs);

    static JointDist from_matrix(const Alphabet& rows, const Alphabet& cols,
                                 const std::vector<std::vector<double>>& m);
    static JointDist from_dist(const FiniteDist& d);

    int dim() const { return static_cast<int>(axes_.size()); }
    size_t cells() const { return p_.size(); }
    const std::vector<Alphabet>& axes() const { return axes_; }
    const std::vector<double>& probs() const { return p_; }
    double operator[](size_t flat) const { return p_[flat]; }

    int axis_index(const std::string& name) const;       // throws DimensionError
    bool has_axis(const std::string& name) const;
    size_t stride(int axis) const { return strides_[axis]; }

    void flat_to_multi(size_t flat, int* out) const;
    size_t multi_to_flat(const int* idx) const;

    /// Sum over all axes not in `keep`; result axes are ordered as in `keep`.
    JointDist marginalize(const std::vector<std::string>& keep) const;

    /// Attach a new axis drawn from `cond` given the product of `on_axes`
    /// (row index is row-major in the order given). The new axis keeps
    /// cond.to's name and goes last.
    JointDist compose(const CondDist& cond, const std::vector<std::string>& on_axes) const;

    /// Conditional of `target` given `given` (product alphabet, row-major in
    /// the order given). Rows with zero conditioning mass are filled uniform.
    struct Conditioned {
        CondDist dist;
        int zero_mass_rows = 0;  // flagged, never fatal
    };
    Conditioned condition(const std::string& target, const std::vector<std::string>& given) const;

    /// Same distribution with axes permuted into `order` (must list all axes).
    JointDist reordered(const std::vector<std::string>& order) const;

    double total_mass() const;

  private:
    JointDist() = default;
    void init_strides();

    std::vector<Alphabet> axes_;
    std::vector<size_t> strides_;
    std::vector<double> p_;
};

/// All lattice distributions on `dim` letters with entries that are integer
/// multiples of `step`, in lexicographic order. C(1/step + dim - 1, dim - 1)
/// points when 1/step is integral.
std::vector<FiniteDist> simplex_grid(int dim, double step);

/// Point count of simplex_grid without materializing it.
uint64_t simplex_grid_size(int dim, double step);

}  // namespace htdmc
