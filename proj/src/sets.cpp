#include "l1rg/sets.hpp"

#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace l1rg {

Box::Box(Vec lo, Vec up) : lower(std::move(lo)), upper(std::move(up)) {
    if (lower.size() != upper.size()) {
        throw DimensionError("Box: lower and upper sizes differ");
    }
}

Box Box::ball(Eigen::Index n, double rho) {
    if (rho < 0) {
        throw ParameterError("Box::ball: negative radius");
    }
    return {Vec::Constant(n, -rho), Vec::Constant(n, rho)};
}

Box Box::symmetric(const Vec& radius) { return {-radius, radius}; }

bool Box::empty() const { return (lower.array() > upper.array()).any(); }

bool Box::contains(const Vec& z, double tol) const {
    if (z.size() != dim()) {
        throw DimensionError("Box::contains: dimension mismatch");
    }
    return (z.array() >= lower.array() - tol).all() && (z.array() <= upper.array() + tol).all();
}

bool Box::interior_contains(const Vec& z) const {
    if (z.size() != dim()) {
        throw DimensionError("Box::interior_contains: dimension mismatch");
    }
    return (z.array() > lower.array()).all() && (z.array() < upper.array()).all();
}

Vec Box::max_abs() const { return lower.cwiseAbs().cwiseMax(upper.cwiseAbs()); }

Box pontryagin_diff_box(const Box& X, const Box& E) {
    if (X.dim() != E.dim()) {
        throw DimensionError("pontryagin_diff_box: dimension mismatch");
    }
    return {X.lower - E.lower, X.upper - E.upper};
}

Box minkowski_sum_box(const Box& X, const Box& E) {
    if (X.dim() != E.dim()) {
        throw DimensionError("minkowski_sum_box: dimension mismatch");
    }
    return {X.lower + E.lower, X.upper + E.upper};
}

Box intersect(const Box& a, const Box& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("intersect: dimension mismatch");
    }
    return {a.lower.cwiseMax(b.lower), a.upper.cwiseMin(b.upper)};
}

Polytope::Polytope(Mat A, Vec b) : normals(std::move(A)), offsets(std::move(b)) {
    if (normals.rows() != offsets.size()) {
        throw DimensionError("Polytope: normals/offsets row mismatch");
    }
    if (!normals.allFinite() || !offsets.allFinite()) {
        throw ParameterError("Polytope: non-finite entries");
    }
}

Polytope Polytope::from_box(const Box& box) {
    const auto n = box.dim();
    Mat A(2 * n, n);
    A << Mat::Identity(n, n), -Mat::Identity(n, n);
    Vec b(2 * n);
    b << box.upper, -box.lower;
    return {A, b};
}

void Polytope::add_row(const Vec& a, double b) {
    if (a.size() != dim()) {
        throw DimensionError("Polytope::add_row: dimension mismatch");
    }
    normals.conservativeResize(normals.rows() + 1, Eigen::NoChange);
    normals.row(normals.rows() - 1) = a.transpose();
    offsets.conservativeResize(offsets.size() + 1);
    offsets(offsets.size() - 1) = b;
}

bool Polytope::contains(const Vec& z, double tol) const {
    if (z.size() != dim()) {
        throw DimensionError("Polytope::contains: dimension mismatch");
    }
    if (rows() == 0) {
        return true;
    }
    return ((normals * z - offsets).array() <= tol).all();
}

std::string Polytope::to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < rows(); ++i) {
        for (Eigen::Index j = 0; j < dim(); ++j) {
            os << normals(i, j) << ' ';
        }
        os << offsets(i) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Simplex
// ---------------------------------------------------------------------------

namespace {

constexpr double kPivotTol = 1e-9;

void pivot(Mat& t, Eigen::Index r, Eigen::Index c) {
    t.row(r) /= t(r, c);
    t(r, c) = 1.0;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        if (i != r && t(i, c) != 0.0) {
            t.row(i) -= t(i, c) * t.row(r);
            t(i, c) = 0.0;
        }
    }
}

// Maximizes with the bottom row holding z_j - c_j. Columns >= allowed never
// enter. Returns false when unbounded.
bool iterate(Mat& t, std::vector<Eigen::Index>& basis, Eigen::Index allowed) {
    const Eigen::Index m = t.rows() - 1;
    const Eigen::Index rhs = t.cols() - 1;
    const long limit = 50000 + 100 * static_cast<long>(t.rows() * t.cols());
    for (long it = 0; it < limit; ++it) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < allowed; ++j) {
            if (t(m, j) < -kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) {
            return true;
        }
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (t(i, enter) > kPivotTol) {
                const double ratio = t(i, rhs) / t(i, enter);
                if (ratio < best - 1e-14 || (ratio <= best + 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) {
            return false;
        }
        pivot(t, leave, enter);
        basis[leave] = enter;
    }
    throw NumericError("lp_max: simplex iteration limit reached");
}

Polytope with_bounds(const Polytope& P, const std::optional<Box>& bounds) {
    Polytope Q = P;
    if (bounds) {
        const Polytope B = Polytope::from_box(*bounds);
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            Q.add_row(B.normals.row(i).transpose(), B.offsets(i));
        }
    }
    return Q;
}

// Primal tableau over the split variables and one slack per row.
LpResult primal_lp(const Vec& objective, const Polytope& Q) {
    const Eigen::Index d = Q.dim();
    const Eigen::Index m = Q.rows();
    const Eigen::Index N = 2 * d;  // z = y+ - y-

    std::vector<Eigen::Index> art_rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (Q.offsets(i) < 0) {
            art_rows.push_back(i);
        }
    }
    const auto na = static_cast<Eigen::Index>(art_rows.size());
    const Eigen::Index cols = N + m + na + 1;
    const Eigen::Index rhs = cols - 1;
    Mat t = Mat::Zero(m + 1, cols);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    Eigen::Index a = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sgn = Q.offsets(i) < 0 ? -1.0 : 1.0;
        t.block(i, 0, 1, d) = sgn * Q.normals.row(i);
        t.block(i, d, 1, d) = -sgn * Q.normals.row(i);
        t(i, N + i) = sgn;
        t(i, rhs) = sgn * Q.offsets(i);
        if (sgn < 0) {
            t(i, N + m + a) = 1.0;
            basis[i] = N + m + a;
            ++a;
        } else {
            basis[i] = N + i;
        }
    }

    LpResult res;
    if (na > 0) {
        // phase 1: maximize -sum(artificials)
        for (Eigen::Index k = 0; k < na; ++k) {
            t(m, N + m + k) = 1.0;
        }
        for (Eigen::Index i : art_rows) {
            t.row(m) -= t.row(i);
        }
        iterate(t, basis, cols - 1);
        if (-t(m, rhs) > kLpTol * std::max(1.0, Q.offsets.cwiseAbs().maxCoeff())) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            if (basis[i] >= N + m) {
                for (Eigen::Index j = 0; j < N + m; ++j) {
                    if (std::abs(t(i, j)) > 1e-9) {
                        pivot(t, i, j);
                        basis[i] = j;
                        break;
                    }
                }
            }
        }
    }

    // phase 2
    t.row(m).setZero();
    t.block(m, 0, 1, d) = -objective.transpose();
    t.block(m, d, 1, d) = objective.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index b = basis[i];
        if (b < N) {
            const double cb = b < d ? objective(b) : -objective(b - d);
            t.row(m) += cb * t.row(i);
        }
    }
    if (!iterate(t, basis, N + m)) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    Vec y = Vec::Zero(N);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[i] < N) {
            y(basis[i]) = t(i, rhs);
        }
    }
    res.status = LpStatus::Optimal;
    res.argmax = y.head(d) - y.tail(d);
    res.value = objective.dot(res.argmax);
    return res;
}

// The dual min b^T y, A^T y = c, y >= 0 has only d rows, which keeps the
// tableau small for the tall polytopes built by the governor.
std::optional<LpResult> dual_lp(const Vec& c, const Polytope& Q) {
    const Eigen::Index d = Q.dim();
    const Eigen::Index m = Q.rows();
    const Eigen::Index cols = m + d + 1;
    const Eigen::Index rhs = cols - 1;
    Mat t = Mat::Zero(d + 1, cols);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        const double sgn = c(i) < 0 ? -1.0 : 1.0;
        t.block(i, 0, 1, m) = sgn * Q.normals.col(i).transpose();
        t(i, m + i) = 1.0;
        t(i, rhs) = sgn * c(i);
        basis[i] = m + i;
        t.row(d) -= t.row(i);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        t(d, m + i) = 0.0;
    }
    iterate(t, basis, m + d);
    if (-t(d, rhs) > kLpTol * std::max(1.0, c.cwiseAbs().maxCoeff())) {
        return std::nullopt;  // dual infeasible: primal empty or unbounded
    }
    for (Eigen::Index i = 0; i < d; ++i) {
        if (basis[i] >= m) {
            for (Eigen::Index j = 0; j < m; ++j) {
                if (std::abs(t(i, j)) > 1e-9) {
                    pivot(t, i, j);
                    basis[i] = j;
                    break;
                }
            }
        }
    }
    // maximize -b^T y
    t.row(d).setZero();
    t.block(d, 0, 1, m) = Q.offsets.transpose();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (basis[i] < m) {
            t.row(d) -= Q.offsets(basis[i]) * t.row(i);
        }
    }
    LpResult res;
    if (!iterate(t, basis, m)) {
        res.status = LpStatus::Infeasible;
        return res;
    }
    res.status = LpStatus::Optimal;
    res.value = -t(d, rhs);
    // the primal optimum is tight on the rows whose dual variables are basic
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (basis[i] < m) {
            active.push_back(basis[i]);
        }
    }
    Mat As(static_cast<Eigen::Index>(active.size()), d);
    Vec bs(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
        As.row(static_cast<Eigen::Index>(k)) = Q.normals.row(active[k]);
        bs(static_cast<Eigen::Index>(k)) = Q.offsets(active[k]);
    }
    res.argmax = As.completeOrthogonalDecomposition().solve(bs);
    return res;
}

}  // namespace

LpResult lp_max(const Vec& objective, const Polytope& P, const std::optional<Box>& bounds) {
    const Eigen::Index d = P.dim();
    if (objective.size() != d || (bounds && bounds->dim() != d)) {
        throw DimensionError("lp_max: dimension mismatch");
    }
    const Polytope Q = with_bounds(P, bounds);
    if (Q.rows() > 0) {
        if (auto r = dual_lp(objective, Q)) {
            return *r;
        }
    }
    return primal_lp(objective, Q);
}

bool is_redundant(const Vec& normal, double offset, const Polytope& P, const std::optional<Box>& bounds) {
    const LpResult r = lp_max(normal, P, bounds);
    switch (r.status) {
        case LpStatus::Infeasible:
            return true;
        case LpStatus::Unbounded:
            return false;
        case LpStatus::Optimal:
            break;
    }
    return r.value <= offset + kLpTol;
}

}  // namespace l1rg
