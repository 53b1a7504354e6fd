#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlh {

enum class Execution { Serial, Parallel };

int max_threads();
void set_threads(int n);

// Block size for reductions. Partials are formed per fixed block and summed
// in block order, so results do not depend on the thread count.
inline constexpr std::size_t kReduceBlock = 1024;

template <class F>
void for_each_index(std::size_t n, Execution exec, F&& f) {
    if (exec == Execution::Serial) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const long long m = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
}

double deterministic_dot(std::span<const double> a, std::span<const double> b, Execution exec);
double max_abs(std::span<const double> a, Execution exec);

}  // namespace nlh
