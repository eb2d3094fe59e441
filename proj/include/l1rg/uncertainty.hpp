#pragma once

// Matched uncertainty models f(t, x) with per-channel Lipschitz and bound data.

#include <memory>
#include <vector>

#include "l1rg/sets.hpp"

namespace l1rg {

/// Constants valid on the box `over`:
///   |f_j(t,x) - f_j(tau,z)| <= L |x - z|_inf + l |t - tau|,  |f_j(t,x)| <= b.
struct LipschitzRecord {
    double L = 0.0;
    double l = 0.0;
    double b = 0.0;
    Box over;
};

struct AggregateBounds {
    double L_f = 0.0;
    double l_f = 0.0;
    double b_f = 0.0;
};

AggregateBounds aggregate_bounds(const std::vector<LipschitzRecord>& records);

class UncertaintyModel {
public:
    virtual ~UncertaintyModel() = default;

    virtual Eigen::Index states() const = 0;
    virtual Eigen::Index channels() const = 0;
    virtual Vec evaluate(double t, const Vec& x) const = 0;
    virtual std::vector<LipschitzRecord> channel_meta(const Box& Z) const = 0;

    AggregateBounds bounds(const Box& Z) const { return aggregate_bounds(channel_meta(Z)); }
    /// Per-channel uniform bounds b_j over Z.
    Vec channel_bounds(const Box& Z) const;
};

/// f_j(t, x) = c_j + a_j sin(w_j t + phi_j) + g_j^T x + q_j^T (x .* x)
///
/// Constants are computed over a box Z by interval reasoning, so each term
/// contributes its own worst case.
class TabulatedUncertainty final : public UncertaintyModel {
public:
    struct Channel {
        double c = 0.0;
        double a = 0.0;
        double w = 0.0;
        double phi = 0.0;
        Vec g;
        Vec q;
    };

    TabulatedUncertainty(Eigen::Index n, std::vector<Channel> channels);

    Eigen::Index states() const override { return n_; }
    Eigen::Index channels() const override { return static_cast<Eigen::Index>(ch_.size()); }
    Vec evaluate(double t, const Vec& x) const override;
    std::vector<LipschitzRecord> channel_meta(const Box& Z) const override;

    const std::vector<Channel>& table() const { return ch_; }

private:
    Eigen::Index n_;
    std::vector<Channel> ch_;
};

/// f(t, x) = [-0.8 sin(0.4 pi t) - 0.1 alpha^2, 0.1 - 0.2 alpha], alpha = x(2) in degrees.
std::shared_ptr<const TabulatedUncertainty> f16_uncertainty();

/// f = 0 with n states and m channels.
std::shared_ptr<const TabulatedUncertainty> zero_uncertainty(Eigen::Index n, Eigen::Index m);

}  // namespace l1rg
