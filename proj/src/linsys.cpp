#include "l1rg/linsys.hpp"

namespace l1rg {

StateSpaced first_order_filter(const Vec& kf) {
    if (kf.size() == 0 || !(kf.minCoeff() > 0)) {
        throw ParameterError("filter bandwidths must be positive");
    }
    const auto m = kf.size();
    return {Mat((-kf).asDiagonal()), Mat(kf.asDiagonal()), Mat::Identity(m, m), Mat::Zero(m, m)};
}

namespace {

StateSpaced one_minus_filter(const Vec& kf) {
    const StateSpaced c = first_order_filter(kf);
    const auto m = kf.size();
    return {c.A, c.B, Mat(-c.C), Mat::Identity(m, m)};
}

// C(s) B^+ (sI - Ae). With kf s/(s+kf) = kf - kf^2/(s+kf):
//   z' = -kf z - (kf^2 B^+ + kf B^+ Ae) w,  y = z + kf B^+ w
StateSpaced filter_bdag_s_minus_ae(const CascadeData& d) {
    const Mat Bd = pseudo_inverse(d.B);
    const auto m = d.kf.size();
    const Mat K = d.kf.asDiagonal();
    const Mat K2 = d.kf.cwiseAbs2().asDiagonal();
    return {Mat(-K), Mat(-(K2 * Bd + K * Bd * d.Ae)), Mat::Identity(m, m), Mat(K * Bd)};
}

void check(const CascadeData& d, bool need_ae) {
    const auto n = d.Am.rows();
    if (d.Am.cols() != n || d.B.rows() != n || d.kf.size() != d.B.cols()) {
        throw DimensionError("realize_cascade: inconsistent plant data");
    }
    if (!(d.kf.size() > 0 && d.kf.minCoeff() > 0)) {
        throw ParameterError("realize_cascade: filter bandwidths must be positive");
    }
    if (need_ae) {
        if (d.Ae.rows() != n || d.Ae.cols() != n) {
            throw DimensionError("realize_cascade: Ae must be n x n");
        }
        if (!is_hurwitz(d.Ae)) {
            throw StabilityError("realize_cascade: Ae is not Hurwitz");
        }
    }
}

}  // namespace

StateSpaced realize_cascade(CascadeKind kind, const CascadeData& d) {
    const auto n = d.Am.rows();
    switch (kind) {
        case CascadeKind::Hxm:
            return {d.Am, d.B, Mat::Identity(n, n), Mat::Zero(n, d.B.cols())};
        case CascadeKind::Hxv:
            if (d.Bv.rows() != n) {
                throw DimensionError("realize_cascade: Bv must have n rows");
            }
            return {d.Am, d.Bv, Mat::Identity(n, n), Mat::Zero(n, d.Bv.cols())};
        case CascadeKind::STimesResolvent:
            return {d.Am, Mat::Identity(n, n), d.Am, Mat::Identity(n, n)};
        case CascadeKind::Filter:
            check(d, false);
            return first_order_filter(d.kf);
        case CascadeKind::Gxm: {
            check(d, false);
            const StateSpaced hxm = realize_cascade(CascadeKind::Hxm, d);
            return series(hxm, one_minus_filter(d.kf));
        }
        case CascadeKind::FilterBdagSIminusAe:
            check(d, true);
            return filter_bdag_s_minus_ae(d);
        case CascadeKind::HxmFilterBdagSIminusAe: {
            check(d, true);
            const StateSpaced hxm = realize_cascade(CascadeKind::Hxm, d);
            return series(hxm, filter_bdag_s_minus_ae(d));
        }
    }
    throw ParameterError("realize_cascade: unknown kind");
}

}  // namespace l1rg
