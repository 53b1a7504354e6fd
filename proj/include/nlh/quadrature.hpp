#pragma once

#include <vector>

#include "nlh/grid.hpp"
#include "nlh/tail.hpp"

namespace nlh {

// One representative of each ± pair of lattice offsets inside the window.
struct Offset {
    int di;
    int dj;
    double w;  // ∫ over the offset's cell of |y|^{-n-2s}
};

// Lattice offsets y = h·j, 0 < |j|_inf ≤ J, with the cell weight of each, and the analytic
// remainder outside the square window |y|_inf > (J + 1/2) h.
class QuadratureTable {
public:
    QuadratureTable(int dim, double spacing, double s, double tail_radius);

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    double s() const { return s_; }
    int window() const { return J_; }
    // Half-width (J + 1/2) h of the square covered by lattice cells.
    double window_radius() const { return (J_ + 0.5) * h_; }

    const std::vector<Offset>& pairs() const { return pairs_; }
    // Full (2J+1)^n weight array indexed by offset; the centre entry is 0.
    const std::vector<double>& dense() const { return dense_; }
    double weight(int di, int dj = 0) const;

    // ∫_{|y|_inf > window_radius} |y|^{-n-2s} dy.
    double tail_coefficient() const { return tail_; }
    // Sum of all lattice weights (both signs of every pair).
    double lattice_total() const { return lattice_total_; }
    // Polar rule over the tail region, halved by evenness.
    const TailRule& tail_rule() const { return rule_; }

    // ∫_{origin cell} |y|^2 / 2 · |y|^{-n-2s} dy: the size of the local consistency error per unit
    // second derivative, and the tolerance used when comparing two discretizations.
    double consistency_tolerance() const { return consistency_; }

private:
    int dim_;
    double h_;
    double s_;
    int J_;
    std::vector<Offset> pairs_;
    std::vector<double> dense_;
    double tail_ = 0.0;
    double lattice_total_ = 0.0;
    double consistency_ = 0.0;
    TailRule rule_;
};

QuadratureTable build_quadrature(const Grid& grid, double s, double tail_radius);
// Default tail radius R_box + 1.
QuadratureTable build_quadrature(const Grid& grid, double s);

// Unit-spacing cell weight ∫_{cell (i,j)} |y|^{-n-2s} dy (h = 1); multiply by h^{-2s}.
double unit_cell_weight(int dim, double s, int i, int j);

}  // namespace nlh
