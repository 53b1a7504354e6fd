#include "nlh/parallel.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nlh {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

double deterministic_dot(std::span<const double> a, std::span<const double> b, Execution exec) {
    const std::size_t n = a.size();
    const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(blocks, 0.0);
    for_each_index(blocks, exec, [&](std::size_t k) {
        const std::size_t lo = k * kReduceBlock;
        const std::size_t hi = std::min(n, lo + kReduceBlock);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[k] = s;
    });
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

double max_abs(std::span<const double> a, Execution) {
    double m = 0.0;
    for (double v : a) m = std::fmax(m, std::fabs(v));
    return m;
}

}  // namespace nlh
