#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htdmc/info.hpp"
#include "htdmc/prob.hpp"

// Minimize D(P || Q) over joints with pinned marginals and an optional
// conditional-entropy floor. Marginal sets are affine and the entropy
// superlevel set is convex (conditional entropy is concave in the joint), so
// the program is convex and the reported minimum is global.

namespace htdmc::proj {

struct MarginalConstraint {
    std::vector<std::string> axes;
    JointDist target;
};

struct EntropyFloorConstraint {
    std::string target;
    std::vector<std::string> given;
    double floor_nats = 0.0;
};

struct ProjectionResult {
    double value_nats = 0.0;  // +inf when infeasible inside supp(Q)
    JointDist argmin;
    long iterations = 0;
    bool feasible = true;
    bool converged = true;
    double max_constraint_violation = 0.0;
};

struct SolveOptions {
    double tv_tol = 1e-11;      // stop when the joint moves less than this per sweep
    long max_sweeps = 100000;
    double feas_tol = 1e-7;     // marginal violation above this flags infeasibility
};

/// Compiled projector for one tensor shape + constraint layout; reusable
/// across many (Q, targets) pairs, which is what the exponent grid searches
/// need. Axis identity is positional here; the name-aware wrappers below
/// compile to this.
class KlProjector {
  public:
    struct FloorSpec {
        int target_axis = -1;
        std::vector<int> given_axes;
    };
    struct Spec {
        std::vector<int> shape;
        std::vector<std::vector<int>> constraint_axes;  // marginal constraints
        std::optional<FloorSpec> floor;
    };

    explicit KlProjector(Spec spec);

    struct Result {
        double value = 0.0;
        std::vector<double> argmin;
        long iterations = 0;
        bool feasible = true;
        bool converged = true;
        double max_violation = 0.0;
    };

    /// `targets[c]` is the pinned marginal for constraint c, row-major over
    /// constraint_axes[c] in the order given. `floor_nats` is ignored when the
    /// spec carries no floor.
    Result solve(const std::vector<double>& q, const std::vector<std::vector<double>>& targets,
                 double floor_nats = 0.0, const SolveOptions& opts = {}) const;

    size_t cells() const { return cells_; }
    int groups(int c) const { return group_count_[c]; }

  private:
    struct GroupMap {
        std::vector<int> of_cell;  // cell -> group
        int count = 0;
    };
    GroupMap build_group_map(const std::vector<int>& axes) const;

    double cond_entropy_of(const std::vector<double>& p) const;
    void ipf(std::vector<double>& p, const std::vector<std::vector<double>>& targets,
             const SolveOptions& opts, long& sweeps, bool& converged) const;
    double max_violation(const std::vector<double>& p,
                         const std::vector<std::vector<double>>& targets) const;

    std::vector<int> shape_;
    size_t cells_ = 1;
    std::vector<GroupMap> cons_;
    std::vector<int> group_count_;
    std::optional<FloorSpec> floor_spec_;
    GroupMap floor_given_;     // groups of the conditioning axes
    GroupMap floor_joint_;     // groups of conditioning + target axes
};

/// Global minimum of D(P || Q) subject to the given constraints.
/// Inconsistent or support-infeasible constraints yield value +inf and
/// feasible = false rather than an error.
ProjectionResult min_kl(const JointDist& q, const std::vector<MarginalConstraint>& marginals,
                        const std::vector<EntropyFloorConstraint>& floors = {},
                        const SolveOptions& opts = {});

/// Independent oracle: exhaustive multi-resolution lattice scan over the
/// affine slice cut out by the marginal constraints (parametrized by Gaussian
/// elimination), down to resolution `step` in cell space. Every evaluated
/// point is exactly feasible, so the result upper-bounds the true minimum.
/// Guarded to tiny tensors (<= 12 cells).
double min_kl_bruteforce(const JointDist& q, const std::vector<MarginalConstraint>& marginals,
                         const std::vector<EntropyFloorConstraint>& floors, double step);

enum class TKind { T1, T2, T3, T1p, T2p };

struct TAxes {
    std::string u = "U", v = "V", w = "W", s = "S", y = "Y";
};

/// Assemble the marginal/floor constraint lists of the named T set from
/// P_joint and project Q_joint onto it. T1/T2/T3 act on (U,V,W) joints,
/// T1p/T2p on (U,V,S,W,Y) joints.
ProjectionResult t_set_projection(TKind kind, const JointDist& p_joint, const JointDist& q_joint,
                                  const TAxes& axes = {}, const SolveOptions& opts = {});

}  // namespace htdmc::proj
