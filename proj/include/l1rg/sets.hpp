#pragma once

// Boxes, halfspace polytopes and a dense simplex LP.

#include <optional>
#include <string>

#include "l1rg/linsys.hpp"

namespace l1rg {

/// Axis-aligned box {z : lower <= z <= upper}.
struct Box {
    Vec lower;
    Vec upper;

    Box() = default;
    Box(Vec lo, Vec up);

    /// Omega(rho): the infinity-norm ball of radius rho in R^n.
    static Box ball(Eigen::Index n, double rho);
    /// Symmetric box with per-axis half-widths.
    static Box symmetric(const Vec& radius);
    /// The degenerate box {0}.
    static Box origin(Eigen::Index n) { return ball(n, 0.0); }

    Eigen::Index dim() const { return lower.size(); }
    bool empty() const;
    bool contains(const Vec& z, double tol = 0.0) const;
    /// Strict interior membership.
    bool interior_contains(const Vec& z) const;
    /// max |z_i| over the box, per axis.
    Vec max_abs() const;
    Vec center() const { return 0.5 * (lower + upper); }
    Vec radius() const { return 0.5 * (upper - lower); }
};

/// Pontryagin difference X - E for boxes.
Box pontryagin_diff_box(const Box& X, const Box& E);
/// Minkowski sum of boxes.
Box minkowski_sum_box(const Box& X, const Box& E);
Box intersect(const Box& a, const Box& b);

/// {z : normals z <= offsets}.
struct Polytope {
    Mat normals;
    Vec offsets;

    Polytope() = default;
    explicit Polytope(Eigen::Index dim) : normals(0, dim), offsets(0) {}
    Polytope(Mat A, Vec b);

    static Polytope from_box(const Box& box);

    Eigen::Index dim() const { return normals.cols(); }
    Eigen::Index rows() const { return normals.rows(); }
    void add_row(const Vec& a, double b);
    bool contains(const Vec& z, double tol = 1e-9) const;
    /// One row per line: normal coefficients followed by the offset.
    std::string to_text() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vec argmax;
};

inline constexpr double kLpTol = 1e-9;

/// max c^T z over P (intersected with bounds, if given). Dense two-phase
/// simplex with Bland's rule; free variables are split into positive parts.
LpResult lp_max(const Vec& objective, const Polytope& P, const std::optional<Box>& bounds = std::nullopt);

/// True iff max a^T z over P is at most b + 1e-9. An empty P makes every row redundant.
bool is_redundant(const Vec& normal, double offset, const Polytope& P,
                  const std::optional<Box>& bounds = std::nullopt);

}  // namespace l1rg
