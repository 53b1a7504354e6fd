#include "nlh/gauss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "nlh/error.hpp"

namespace nlh {

namespace {

GaussRule compute_rule(int n) {
    GaussRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    require(n >= 1 && n <= 64, "gauss_legendre: order must be in [1, 64]");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, n == 1 ? GaussRule{{0.0}, {2.0}} : compute_rule(n)).first;
    }
    return it->second;
}

void append_composite(double a, double b, int panels, int n,
                      std::vector<double>& xs, std::vector<double>& ws) {
    const GaussRule& g = gauss_legendre(n);
    const double len = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * len;
        for (int k = 0; k < n; ++k) {
            xs.push_back(lo + 0.5 * len * (g.nodes[k] + 1.0));
            ws.push_back(0.5 * len * g.weights[k]);
        }
    }
}

}  // namespace nlh
