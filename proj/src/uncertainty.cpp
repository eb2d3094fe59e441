#include "l1rg/uncertainty.hpp"

#include <numbers>

namespace l1rg {

AggregateBounds aggregate_bounds(const std::vector<LipschitzRecord>& records) {
    AggregateBounds out;
    for (std::size_t j = 0; j < records.size(); ++j) {
        const auto& r = records[j];
        if (j > 0) {
            const auto& o = records[0].over;
            if (r.over.dim() != o.dim() || r.over.lower != o.lower || r.over.upper != o.upper) {
                throw ParameterError("aggregate_bounds: records refer to different boxes");
            }
        }
        out.L_f = std::max(out.L_f, r.L);
        out.l_f = std::max(out.l_f, r.l);
        out.b_f = std::max(out.b_f, r.b);
    }
    return out;
}

Vec UncertaintyModel::channel_bounds(const Box& Z) const {
    const auto recs = channel_meta(Z);
    Vec b(static_cast<Eigen::Index>(recs.size()));
    for (std::size_t j = 0; j < recs.size(); ++j) {
        b(static_cast<Eigen::Index>(j)) = recs[j].b;
    }
    return b;
}

TabulatedUncertainty::TabulatedUncertainty(Eigen::Index n, std::vector<Channel> channels)
    : n_(n), ch_(std::move(channels)) {
    for (auto& c : ch_) {
        if (c.g.size() == 0) {
            c.g = Vec::Zero(n);
        }
        if (c.q.size() == 0) {
            c.q = Vec::Zero(n);
        }
        if (c.g.size() != n || c.q.size() != n) {
            throw DimensionError("TabulatedUncertainty: coefficient vectors must have n entries");
        }
    }
}

Vec TabulatedUncertainty::evaluate(double t, const Vec& x) const {
    if (x.size() != n_) {
        throw DimensionError("uncertainty evaluate: state dimension mismatch");
    }
    Vec f(channels());
    for (std::size_t j = 0; j < ch_.size(); ++j) {
        const auto& c = ch_[j];
        f(static_cast<Eigen::Index>(j)) =
            c.c + c.a * std::sin(c.w * t + c.phi) + c.g.dot(x) + c.q.dot(x.cwiseAbs2());
    }
    return f;
}

std::vector<LipschitzRecord> TabulatedUncertainty::channel_meta(const Box& Z) const {
    if (Z.dim() != n_) {
        throw DimensionError("channel_meta: box dimension mismatch");
    }
    const Vec zmax = Z.max_abs();
    std::vector<LipschitzRecord> out;
    for (const auto& c : ch_) {
        LipschitzRecord r;
        r.over = Z;
        r.L = (c.g.cwiseAbs() + 2.0 * c.q.cwiseAbs().cwiseProduct(zmax)).sum();
        r.l = std::abs(c.a * c.w);
        double b = std::abs(c.c) + std::abs(c.a);
        for (Eigen::Index i = 0; i < n_; ++i) {
            // |g x + q x^2| over the interval: check the endpoints and the vertex
            auto poly = [&](double x) { return std::abs(c.g(i) * x + c.q(i) * x * x); };
            double best = std::max(poly(Z.lower(i)), poly(Z.upper(i)));
            if (c.q(i) != 0.0) {
                const double xv = -c.g(i) / (2.0 * c.q(i));
                if (xv > Z.lower(i) && xv < Z.upper(i)) {
                    best = std::max(best, poly(xv));
                }
            }
            b += best;
        }
        r.b = b;
        out.push_back(r);
    }
    return out;
}

std::shared_ptr<const TabulatedUncertainty> f16_uncertainty() {
    TabulatedUncertainty::Channel c1;
    c1.a = -0.8;
    c1.w = 0.4 * std::numbers::pi;
    c1.g = Vec::Zero(3);
    c1.q = Vec::Zero(3);
    c1.q(2) = -0.1;
    TabulatedUncertainty::Channel c2;
    c2.c = 0.1;
    c2.g = Vec::Zero(3);
    c2.g(2) = -0.2;
    c2.q = Vec::Zero(3);
    return std::make_shared<const TabulatedUncertainty>(3, std::vector{c1, c2});
}

std::shared_ptr<const TabulatedUncertainty> zero_uncertainty(Eigen::Index n, Eigen::Index m) {
    return std::make_shared<const TabulatedUncertainty>(
        n, std::vector<TabulatedUncertainty::Channel>(static_cast<std::size_t>(m)));
}

}  // namespace l1rg
