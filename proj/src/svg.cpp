#include "l1rg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace l1rg {

namespace {

constexpr std::size_t kMaxBuckets = 1500;

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Min/max decimation so peaks survive thinning.
std::vector<std::pair<double, double>> thin(const Series& s) {
    std::vector<std::pair<double, double>> pts;
    const std::size_t N = std::min(s.t.size(), s.y.size());
    if (N <= 2 * kMaxBuckets) {
        for (std::size_t k = 0; k < N; ++k) {
            pts.emplace_back(s.t[k], s.y[k]);
        }
        return pts;
    }
    const std::size_t per = (N + kMaxBuckets - 1) / kMaxBuckets;
    for (std::size_t b = 0; b < N; b += per) {
        const std::size_t e = std::min(N, b + per);
        std::size_t lo = b, hi = b;
        for (std::size_t k = b; k < e; ++k) {
            if (s.y[k] < s.y[lo]) lo = k;
            if (s.y[k] > s.y[hi]) hi = k;
        }
        pts.emplace_back(s.t[std::min(lo, hi)], s.y[std::min(lo, hi)]);
        if (lo != hi) {
            pts.emplace_back(s.t[std::max(lo, hi)], s.y[std::max(lo, hi)]);
        }
    }
    return pts;
}

}  // namespace

std::string render_svg(const std::string& title, const std::vector<Panel>& panels, int width, int panel_height) {
    const double left = 70, right = 170, top = 30, gap = 40;
    const double pw = width - left - right;
    const double ph = panel_height - gap;
    const int height = static_cast<int>(top + panels.size() * panel_height + 20);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& pn = panels[p];
        const double y0 = top + p * panel_height + 15;
        double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
        double ymin = tmin, ymax = -tmin;
        for (const auto& s : pn.series) {
            for (std::size_t k = 0; k < std::min(s.t.size(), s.y.size()); ++k) {
                tmin = std::min(tmin, s.t[k]);
                tmax = std::max(tmax, s.t[k]);
                ymin = std::min(ymin, s.y[k]);
                ymax = std::max(ymax, s.y[k]);
            }
        }
        for (double h : pn.hlines) {
            ymin = std::min(ymin, h);
            ymax = std::max(ymax, h);
        }
        if (!std::isfinite(tmin)) {
            tmin = 0, tmax = 1, ymin = -1, ymax = 1;
        }
        if (tmax <= tmin) tmax = tmin + 1;
        if (ymax - ymin < 1e-12) {
            ymin -= 1e-6 + std::abs(ymin) * 0.1;
            ymax += 1e-6 + std::abs(ymax) * 0.1;
        }
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
        auto X = [&](double t) { return left + (t - tmin) / (tmax - tmin) * pw; };
        auto Y = [&](double y) { return y0 + (ymax - y) / (ymax - ymin) * ph; };

        os << "<g>\n<rect x=\"" << num(left) << "\" y=\"" << num(y0) << "\" width=\"" << num(pw) << "\" height=\""
           << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
        os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(y0 - 3) << "\" text-anchor=\"middle\">"
           << escape(pn.title) << "</text>\n";
        os << "<text x=\"14\" y=\"" << num(y0 + ph / 2) << "\" transform=\"rotate(-90 14 " << num(y0 + ph / 2)
           << ")\" text-anchor=\"middle\">" << escape(pn.ylabel) << "</text>\n";
        for (int k = 0; k <= 4; ++k) {
            const double yv = ymin + (ymax - ymin) * k / 4;
            const double tv = tmin + (tmax - tmin) * k / 4;
            os << "<text x=\"" << num(left - 4) << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">"
               << tick_label(yv) << "</text>\n";
            os << "<text x=\"" << num(X(tv)) << "\" y=\"" << num(y0 + ph + 13) << "\" text-anchor=\"middle\">"
               << tick_label(tv) << "</text>\n";
        }
        for (double h : pn.hlines) {
            os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(Y(h)) << "\" y2=\""
               << num(Y(h)) << "\" stroke=\"#2ca02c\" stroke-dasharray=\"6 3 2 3\"/>\n";
        }
        for (std::size_t s = 0; s < pn.series.size(); ++s) {
            const Series& sr = pn.series[s];
            os << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.2\""
               << (sr.dashed ? " stroke-dasharray=\"5 3\"" : "") << " points=\"";
            for (const auto& [t, y] : thin(sr)) {
                os << num(X(t)) << ',' << num(Y(y)) << ' ';
            }
            os << "\"/>\n";
            const double ly = y0 + 12 + 14 * static_cast<double>(s);
            os << "<line x1=\"" << num(left + pw + 10) << "\" x2=\"" << num(left + pw + 30) << "\" y1=\"" << num(ly - 4)
               << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << sr.color << "\""
               << (sr.dashed ? " stroke-dasharray=\"5 3\"" : "") << "/>\n";
            os << "<text x=\"" << num(left + pw + 34) << "\" y=\"" << num(ly) << "\">" << escape(sr.label)
               << "</text>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

namespace {

template <class Get>
Series series(const std::string& label, const SimTrace& tr, Get get, const std::string& color, bool dashed = false) {
    Series s;
    s.label = label;
    s.color = color;
    s.dashed = dashed;
    s.t = tr.t;
    s.y.reserve(tr.rows());
    for (std::size_t k = 0; k < tr.rows(); ++k) {
        s.y.push_back(get(k));
    }
    return s;
}

const char* kBlue = "#1f77b4";
const char* kRed = "#d62728";
const char* kGrey = "#555555";

}  // namespace

std::vector<std::pair<std::string, std::string>> standard_figures(const L1RGController& ctrl, const SimTrace& a,
                                                                  const SimTrace& b) {
    const Plant& P = ctrl.spec.plant;
    const auto n = P.n();
    const auto m = P.m();
    std::vector<std::pair<std::string, std::string>> out;

    std::vector<Panel> track;
    for (Eigen::Index j = 0; j < P.C.rows(); ++j) {
        const std::string y = "y" + std::to_string(j + 1);
        Panel pn{y + " tracking", y, {}, {}};
        pn.series.push_back(series("L1-RG", a, [&](std::size_t k) { return P.C.row(j).dot(a.x[k]); }, kBlue));
        pn.series.push_back(series("plain RG", b, [&](std::size_t k) { return P.C.row(j).dot(b.x[k]); }, kRed));
        if (j < m) {
            pn.series.push_back(series("r", a, [&](std::size_t k) { return a.r[k](j); }, kGrey, true));
        }
        track.push_back(std::move(pn));
    }
    out.emplace_back("tracking.svg", render_svg("Tracking", track));

    // constrained variables: states with a finite-looking box and every input
    std::vector<Panel> cons;
    const Box& X = ctrl.spec.X;
    const Box& U = ctrl.spec.U;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (X.max_abs()(i) >= 1e3) {
            continue;
        }
        const std::string x = "x" + std::to_string(i + 1);
        Panel pn{x, x, {}, {X.lower(i), X.upper(i)}};
        pn.series.push_back(series("L1-RG", a, [&](std::size_t k) { return a.x[k](i); }, kBlue));
        pn.series.push_back(series("plain RG", b, [&](std::size_t k) { return b.x[k](i); }, kRed));
        cons.push_back(std::move(pn));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::string u = "u" + std::to_string(j + 1);
        Panel pn{u, u, {}, {U.lower(j), U.upper(j)}};
        pn.series.push_back(series("L1-RG", a, [&](std::size_t k) { return a.u[k](j); }, kBlue));
        pn.series.push_back(series("plain RG", b, [&](std::size_t k) { return b.u[k](j); }, kRed));
        cons.push_back(std::move(pn));
    }
    out.emplace_back("constrained.svg", render_svg("Constrained variables", cons));

    std::vector<Panel> unc;
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::string s = std::to_string(j + 1);
        Panel pn{"channel " + s, "f" + s, {}, {}};
        pn.series.push_back(series("f" + s, a, [&](std::size_t k) { return a.f[k](j); }, kGrey));
        pn.series.push_back(series("sigma1_" + s, a, [&](std::size_t k) { return a.sigma1[k](j); }, kBlue, true));
        unc.push_back(std::move(pn));
    }
    out.emplace_back("uncertainty.svg", render_svg("Uncertainty and its estimate", unc));

    std::vector<Panel> ad;
    for (Eigen::Index j = 0; j < m; ++j) {
        const std::string s = std::to_string(j + 1);
        const double bound = j < ctrl.bounds.rho_ua_j.size() ? ctrl.bounds.rho_ua_j(j) : 0.0;
        Panel pn{"ua" + s, "ua" + s, {}, {-bound, bound}};
        pn.series.push_back(series("ua" + s, a, [&](std::size_t k) { return a.ua[k](j); }, kBlue));
        ad.push_back(std::move(pn));
    }
    out.emplace_back("adaptive.svg", render_svg("Adaptive inputs and bounds", ad));

    std::vector<Panel> err;
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string s = std::to_string(i + 1);
        const double bound = i < ctrl.bounds.tilde_rho_i.size() ? ctrl.bounds.tilde_rho_i(i) : 0.0;
        Panel pn{"x" + s + " - xn" + s, "error", {}, {-bound, bound}};
        pn.series.push_back(series("x" + s + " - xn" + s, a, [&](std::size_t k) { return a.x[k](i) - a.xn[k](i); },
                                   kBlue));
        err.push_back(std::move(pn));
    }
    out.emplace_back("state_error.svg", render_svg("State error and bounds", err));
    return out;
}

}  // namespace l1rg
