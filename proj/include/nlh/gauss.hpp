#pragma once

#include <vector>

namespace nlh {

// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussRule& gauss_legendre(int n);

// Composite rule on [a, b] with `panels` equal panels of order n, appended to (xs, ws).
void append_composite(double a, double b, int panels, int n,
                      std::vector<double>& xs, std::vector<double>& ws);

}  // namespace nlh
