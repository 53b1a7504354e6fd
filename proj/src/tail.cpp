#include "nlh/tail.hpp"

#include <cmath>
#include <numbers>

#include "nlh/error.hpp"
#include "nlh/gauss.hpp"

namespace nlh {

double square_tail_coefficient(int dim, double s, double a) {
    require(a > 0.0, "tail radius must be positive");
    if (dim == 1) return 2.0 * std::pow(a, -2.0 * s) / (2.0 * s);
    std::vector<double> th, w;
    append_composite(0.0, std::numbers::pi / 4.0, 4, 16, th, w);
    double ang = 0.0;
    for (std::size_t k = 0; k < th.size(); ++k) ang += w[k] * std::pow(std::cos(th[k]), 2.0 * s);
    return 8.0 * ang * std::pow(a, -2.0 * s) / (2.0 * s);
}

double TailRule::total() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
}

TailRule build_tail_rule(int dim, double s, double a, bool even, TailResolution res) {
    require(a > 0.0, "tail radius must be positive");
    require(res.angular_panels >= 1 && res.radial_panels >= 1 && res.order >= 1, "bad tail resolution");
    TailRule rule;
    rule.even = even;

    std::vector<double> ts, tw;
    append_composite(0.0, 1.0, res.radial_panels, res.order, ts, tw);

    // (direction, angular weight, ρ(θ)) triples.
    std::vector<Point> dirs;
    std::vector<double> dw;
    std::vector<double> rho;
    if (dim == 1) {
        dirs.push_back({1.0, 0.0});
        dw.push_back(even ? 2.0 : 1.0);
        rho.push_back(1.0);
        if (!even) {
            dirs.push_back({-1.0, 0.0});
            dw.push_back(1.0);
            rho.push_back(1.0);
        }
    } else {
        const int octants = even ? 4 : 8;
        std::vector<double> th, w;
        for (int o = 0; o < octants; ++o) {
            append_composite(o * std::numbers::pi / 4.0, (o + 1) * std::numbers::pi / 4.0,
                             res.angular_panels, res.order, th, w);
        }
        for (std::size_t k = 0; k < th.size(); ++k) {
            const double c = std::cos(th[k]), sn = std::sin(th[k]);
            dirs.push_back({c, sn});
            dw.push_back(even ? 2.0 * w[k] : w[k]);
            rho.push_back(1.0 / std::fmax(std::fabs(c), std::fabs(sn)));
        }
    }

    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double r0 = a * rho[d];
        const double scale = std::pow(r0, -2.0 * s) / (2.0 * s) * dw[d];
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const double r = r0 * std::pow(ts[k], -1.0 / (2.0 * s));
            rule.points.push_back(r * dirs[d]);
            rule.weights.push_back(scale * tw[k]);
        }
    }
    return rule;
}

}  // namespace nlh
