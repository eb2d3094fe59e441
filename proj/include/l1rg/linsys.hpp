#pragma once

// Linear-system numerics: matrix exponential, zero-order hold, state-space
// realizations and the induced (peak-to-peak) L1 norm.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "l1rg/errors.hpp"

namespace l1rg {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;

/// Strict margin used by the Hurwitz and Schur tests.
inline constexpr double kEigenMargin = 1e-9;

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// e^{A t} by scaling and squaring with a degree-13 Pade approximant.
template <typename Derived>
MatX<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& A,
                                    typename Derived::Scalar t = 1) {
    using Scalar = typename Derived::Scalar;
    if (A.rows() != A.cols()) {
        throw DimensionError("expm: matrix must be square");
    }
    const Eigen::Index n = A.rows();
    if (n == 0) {
        return MatX<Scalar>(0, 0);
    }
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};

    MatX<Scalar> As = A * t;
    const Scalar norm1 = As.cwiseAbs().colwise().sum().maxCoeff();
    int s = 0;
    if (norm1 > Scalar(5.371920351148152)) {
        s = static_cast<int>(std::ceil(std::log2(norm1 / Scalar(5.371920351148152))));
        As /= std::pow(Scalar(2), s);
    }

    const MatX<Scalar> I = MatX<Scalar>::Identity(n, n);
    const MatX<Scalar> A2 = As * As;
    const MatX<Scalar> A4 = A2 * A2;
    const MatX<Scalar> A6 = A4 * A2;

    MatX<Scalar> U = A6 * (Scalar(b[13]) * A6 + Scalar(b[11]) * A4 + Scalar(b[9]) * A2);
    U += Scalar(b[7]) * A6 + Scalar(b[5]) * A4 + Scalar(b[3]) * A2 + Scalar(b[1]) * I;
    U = As * U;
    MatX<Scalar> V = A6 * (Scalar(b[12]) * A6 + Scalar(b[10]) * A4 + Scalar(b[8]) * A2);
    V += Scalar(b[6]) * A6 + Scalar(b[4]) * A4 + Scalar(b[2]) * A2 + Scalar(b[0]) * I;

    MatX<Scalar> E = (V - U).partialPivLu().solve(V + U);
    for (int k = 0; k < s; ++k) {
        E = E * E;
    }
    return E;
}

// ---------------------------------------------------------------------------
// Zero-order hold
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Discretized {
    MatX<Scalar> Ad;
    MatX<Scalar> Bd;
};

/// Exact ZOH model: Ad = e^{A Td}, Bd = int_0^Td e^{A s} ds B, both read off
/// the exponential of the augmented matrix [[A, B], [0, 0]].
template <typename DerivedA, typename DerivedB>
Discretized<typename DerivedA::Scalar> zoh_discretize(const Eigen::MatrixBase<DerivedA>& A,
                                                      const Eigen::MatrixBase<DerivedB>& B,
                                                      typename DerivedA::Scalar Td) {
    using Scalar = typename DerivedA::Scalar;
    if (A.rows() != A.cols() || B.rows() != A.rows()) {
        throw DimensionError("zoh_discretize: A must be square with B.rows() == A.rows()");
    }
    if (!(Td >= 0)) {
        throw ParameterError("zoh_discretize: sampling time must be nonnegative");
    }
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    MatX<Scalar> M = MatX<Scalar>::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = A;
    M.topRightCorner(n, m) = B;
    const MatX<Scalar> E = expm(M, Td);
    return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

/// int_0^T e^{A s} ds, computed without inverting A.
template <typename Derived>
MatX<typename Derived::Scalar> integrated_exponential(const Eigen::MatrixBase<Derived>& A,
                                                      typename Derived::Scalar T) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = A.rows();
    return zoh_discretize(A, MatX<Scalar>::Identity(n, n), T).Bd;
}

// ---------------------------------------------------------------------------
// Stability tests
// ---------------------------------------------------------------------------

template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Eigen::Dynamic, 1> eigenvalues(
    const Eigen::MatrixBase<Derived>& A) {
    using Scalar = typename Derived::Scalar;
    if (A.rows() != A.cols()) {
        throw DimensionError("eigenvalues: matrix must be square");
    }
    Eigen::EigenSolver<MatX<Scalar>> solver(MatX<Scalar>(A), false);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigenvalue solver did not converge");
    }
    return solver.eigenvalues();
}

template <typename Derived>
bool is_hurwitz(const Eigen::MatrixBase<Derived>& A, double margin = kEigenMargin) {
    if (A.rows() == 0) {
        return true;
    }
    const auto ev = eigenvalues(A);
    return ev.real().maxCoeff() < -margin;
}

template <typename Derived>
bool is_schur(const Eigen::MatrixBase<Derived>& A, double margin = kEigenMargin) {
    if (A.rows() == 0) {
        return true;
    }
    const auto ev = eigenvalues(A);
    return ev.cwiseAbs().maxCoeff() < 1.0 - margin;
}

/// Solves A^T P + P A = -Q by vectorization (small n only).
template <typename Scalar>
MatX<Scalar> solve_lyapunov(const MatX<Scalar>& A, const MatX<Scalar>& Q) {
    const Eigen::Index n = A.rows();
    const MatX<Scalar> I = MatX<Scalar>::Identity(n, n);
    MatX<Scalar> K(n * n, n * n);
    // vec(A^T P) = (I kron A^T) vec(P); vec(P A) = (A^T kron I) vec(P)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            K.block(i * n, j * n, n, n) = I(i, j) * A.transpose() + A(j, i) * I;
        }
    }
    const VecX<Scalar> q = Eigen::Map<const VecX<Scalar>>(Q.data(), n * n);
    const VecX<Scalar> p = K.fullPivLu().solve(-q);
    MatX<Scalar> P = Eigen::Map<const MatX<Scalar>>(p.data(), n, n);
    return Scalar(0.5) * (P + P.transpose());
}

// ---------------------------------------------------------------------------
// State-space realizations
// ---------------------------------------------------------------------------

template <typename Scalar>
struct StateSpace {
    MatX<Scalar> A;
    MatX<Scalar> B;
    MatX<Scalar> C;
    MatX<Scalar> D;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return D.cols(); }
    Eigen::Index outputs() const { return D.rows(); }

    void validate() const {
        const auto n = A.rows();
        if (A.cols() != n || B.rows() != n || C.cols() != n || C.rows() != D.rows() ||
            B.cols() != D.cols()) {
            throw DimensionError("StateSpace: inconsistent dimensions");
        }
    }

    static StateSpace static_gain(const MatX<Scalar>& D) {
        return {MatX<Scalar>(0, 0), MatX<Scalar>(0, D.cols()), MatX<Scalar>(D.rows(), 0), D};
    }
};

using StateSpaced = StateSpace<double>;

/// y = second(first(u)).
template <typename Scalar>
StateSpace<Scalar> series(const StateSpace<Scalar>& second, const StateSpace<Scalar>& first) {
    if (second.inputs() != first.outputs()) {
        throw DimensionError("series: output/input size mismatch");
    }
    const auto n1 = first.states();
    const auto n2 = second.states();
    StateSpace<Scalar> s;
    s.A = MatX<Scalar>::Zero(n1 + n2, n1 + n2);
    s.A.topLeftCorner(n1, n1) = first.A;
    s.A.bottomLeftCorner(n2, n1) = second.B * first.C;
    s.A.bottomRightCorner(n2, n2) = second.A;
    s.B.resize(n1 + n2, first.inputs());
    s.B << first.B, second.B * first.D;
    s.C.resize(second.outputs(), n1 + n2);
    s.C << second.D * first.C, second.C;
    s.D = second.D * first.D;
    return s;
}

/// T * H for a constant matrix T.
template <typename Scalar, typename Derived>
StateSpace<Scalar> left_multiply(const Eigen::MatrixBase<Derived>& T, const StateSpace<Scalar>& sys) {
    if (T.cols() != sys.outputs()) {
        throw DimensionError("left_multiply: size mismatch");
    }
    return {sys.A, sys.B, T * sys.C, T * sys.D};
}

// ---------------------------------------------------------------------------
// Induced L1 norm
// ---------------------------------------------------------------------------

template <typename Scalar>
struct L1Norm {
    Scalar total = 0;
    VecX<Scalar> rows;  ///< per output row: sum_j |D_ij| + sum_j int |g_ij|
    Scalar tail = 0;    ///< certified bound on the truncated part (largest row)
    Scalar horizon = 0;
};

struct L1NormOptions {
    double rel_tol = 1e-6;
    double tail_ratio = 1e-9;
    double resolution = 0.02;  ///< quadrature step as a fraction of the fastest live time constant
    int max_refinements = 10;
};

namespace detail {

/// One composite-Simpson pass over |C e^{At} B|. The step at time t resolves
/// every mode that has not yet decayed below e^{-40}; the pass ends when the
/// Lyapunov tail bound is below tail_ratio times the accumulated integral.
template <typename Scalar>
std::pair<VecX<Scalar>, VecX<Scalar>> l1_pass(const StateSpace<Scalar>& sys,
                                              const VecX<std::complex<Scalar>>& ev,
                                              const MatX<Scalar>& P, Scalar mu,
                                              const VecX<Scalar>& cnorm, Scalar resolution,
                                              Scalar tail_ratio, Scalar& horizon) {
    const auto q = sys.outputs();
    const auto p = sys.inputs();
    VecX<Scalar> integral = VecX<Scalar>::Zero(q);
    VecX<Scalar> tail = VecX<Scalar>::Zero(q);

    auto sample = [&](const MatX<Scalar>& X) -> VecX<Scalar> {
        return (sys.C * X).cwiseAbs().rowwise().sum();
    };
    auto tail_bound = [&](const MatX<Scalar>& X) -> VecX<Scalar> {
        Scalar s = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            s += std::sqrt(std::max<Scalar>(0, X.col(j).dot(P * X.col(j))));
        }
        return cnorm * (s / mu);
    };
    auto step_at = [&](Scalar t) {
        Scalar fastest = 0;
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev(k).real() * t > Scalar(-40)) {
                fastest = std::max(fastest, std::abs(ev(k)));
            }
        }
        if (fastest == 0) {
            fastest = std::abs(ev.real().maxCoeff());
        }
        // quantize to powers of two so the propagator is rebuilt rarely
        const Scalar raw = resolution / fastest;
        return std::pow(Scalar(2), std::floor(std::log2(raw)));
    };

    MatX<Scalar> X = sys.B;
    VecX<Scalar> f0 = sample(X);
    Scalar t = 0;
    Scalar h = -1;
    MatX<Scalar> E;
    const Scalar t_limit = Scalar(200) / mu + Scalar(1e4) * step_at(0);
    while (true) {
        const Scalar h_new = step_at(t);
        if (h_new != h) {
            h = h_new;
            E = expm(sys.A, h);
        }
        const MatX<Scalar> X1 = E * X;
        const MatX<Scalar> X2 = E * X1;
        const VecX<Scalar> f1 = sample(X1);
        const VecX<Scalar> f2 = sample(X2);
        integral += (h / 3) * (f0 + 4 * f1 + f2);
        X = X2;
        f0 = f2;
        t += 2 * h;
        tail = tail_bound(X);
        bool done = true;
        for (Eigen::Index i = 0; i < q; ++i) {
            if (tail(i) > tail_ratio * integral(i) && tail(i) > std::numeric_limits<Scalar>::min()) {
                done = false;
                break;
            }
        }
        if (done) {
            break;
        }
        if (t > t_limit) {
            throw NumericError("l1_norm: tail bound did not fall below tolerance by t = " +
                               std::to_string(static_cast<double>(t)));
        }
    }
    horizon = t;
    return {integral, tail};
}

}  // namespace detail

/// Induced L-infinity gain max_i sum_j (|D_ij| + int_0^inf |(C e^{At} B)_ij| dt).
///
/// The returned rows are upper estimates: quadrature value plus the certified
/// tail plus the last refinement difference.
template <typename Scalar>
L1Norm<Scalar> l1_norm(const StateSpace<Scalar>& sys, const L1NormOptions& opt = {}) {
    sys.validate();
    L1Norm<Scalar> out;
    out.rows = sys.D.cwiseAbs().rowwise().sum();
    const auto n = sys.states();
    if (n == 0 || sys.inputs() == 0 || sys.outputs() == 0 || sys.B.isZero(0) || sys.C.isZero(0)) {
        out.total = out.rows.size() ? out.rows.maxCoeff() : Scalar(0);
        return out;
    }
    if (!is_hurwitz(sys.A)) {
        throw StabilityError("l1_norm: A is not Hurwitz");
    }
    const auto ev = eigenvalues(sys.A);
    const MatX<Scalar> P = solve_lyapunov<Scalar>(sys.A, MatX<Scalar>::Identity(n, n));
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> pe(P);
    const Scalar pmax = pe.eigenvalues().maxCoeff();
    if (!(pe.eigenvalues().minCoeff() > 0)) {
        throw NumericError("l1_norm: Lyapunov solution is not positive definite");
    }
    const Scalar mu = Scalar(1) / (2 * pmax);
    const MatX<Scalar> Pinv = P.inverse();
    VecX<Scalar> cnorm(sys.outputs());
    for (Eigen::Index i = 0; i < sys.outputs(); ++i) {
        cnorm(i) = std::sqrt(std::max<Scalar>(0, sys.C.row(i) * Pinv * sys.C.row(i).transpose()));
    }

    Scalar horizon = 0;
    Scalar res = Scalar(opt.resolution);
    auto [coarse, tail] = detail::l1_pass(sys, ev, P, mu, cnorm, res, Scalar(opt.tail_ratio), horizon);
    VecX<Scalar> fine = coarse;
    VecX<Scalar> diff;
    int k = 0;
    for (; k < opt.max_refinements; ++k) {
        res /= 2;
        auto [next, next_tail] =
            detail::l1_pass(sys, ev, P, mu, cnorm, res, Scalar(opt.tail_ratio), horizon);
        diff = (next - fine).cwiseAbs();
        fine = next;
        tail = next_tail;
        // Simpson on a kinked integrand converges at second order; the next
        // halving would change the value by about a third of this difference.
        if (diff.maxCoeff() <= Scalar(opt.rel_tol) * std::max<Scalar>(fine.maxCoeff(), 1e-300)) {
            break;
        }
    }
    if (k == opt.max_refinements) {
        throw NumericError("l1_norm: quadrature did not converge (last change " +
                           std::to_string(static_cast<double>(diff.maxCoeff())) + ")");
    }
    out.rows += fine + tail + diff;
    out.total = out.rows.maxCoeff();
    out.tail = tail.maxCoeff();
    out.horizon = horizon;
    return out;
}

// ---------------------------------------------------------------------------
// Input-matrix helpers
// ---------------------------------------------------------------------------

/// (B^T B)^{-1} B^T for full-column-rank B.
template <typename Derived>
MatX<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& B) {
    using Scalar = typename Derived::Scalar;
    const MatX<Scalar> G = B.transpose() * B;
    Eigen::FullPivLU<MatX<Scalar>> lu(G);
    if (lu.rank() < B.cols()) {
        throw DimensionError("pseudo_inverse: B must have full column rank");
    }
    return lu.solve(B.transpose());
}

/// Orthonormal basis of the complement of range(B), via Gram-Schmidt
/// completion against the standard basis. Result is n x (n - rank B).
template <typename Derived>
MatX<typename Derived::Scalar> orthogonal_complement(const Eigen::MatrixBase<Derived>& B) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = B.rows();
    std::vector<VecX<Scalar>> basis;
    auto push = [&](VecX<Scalar> v) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                v -= q.dot(v) * q;
            }
        }
        const Scalar nv = v.norm();
        if (nv > Scalar(1e-8)) {
            basis.push_back(v / nv);
            return true;
        }
        return false;
    };
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        push(B.col(j));
    }
    const std::size_t rank = basis.size();
    for (Eigen::Index k = 0; k < n && static_cast<Eigen::Index>(basis.size()) < n; ++k) {
        push(VecX<Scalar>::Unit(n, k));
    }
    MatX<Scalar> out(n, n - static_cast<Eigen::Index>(rank));
    for (std::size_t k = rank; k < basis.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k - rank)) = basis[k];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transfer operators of the adaptive loop
// ---------------------------------------------------------------------------

enum class CascadeKind {
    Hxm,                     ///< (sI - Am)^{-1} B
    Hxv,                     ///< (sI - Am)^{-1} Bv
    Filter,                  ///< C(s) = diag(kf / (s + kf))
    Gxm,                     ///< Hxm(s) (I - C(s))
    FilterBdagSIminusAe,     ///< C(s) B^+ (sI - Ae)
    HxmFilterBdagSIminusAe,  ///< Hxm(s) C(s) B^+ (sI - Ae)
    STimesResolvent,         ///< s (sI - Am)^{-1}
};

struct CascadeData {
    Mat Am;
    Mat B;
    Mat Bv;
    Mat Ae;
    Vec kf;
};

StateSpaced first_order_filter(const Vec& kf);
StateSpaced realize_cascade(CascadeKind kind, const CascadeData& data);

}  // namespace l1rg
