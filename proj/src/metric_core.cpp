#include "gradflow/metric_core.hpp"

#include <cmath>

namespace gradflow {

double e_lambda(double lambda, double t)
{
    if (!(t >= 0.0)) throw DomainError("e_lambda: t must be nonnegative");
    const double x = lambda * t;
    if (std::abs(x) < 1e-8) return t * (1.0 + x / 2.0 + x * x / 6.0);
    return std::expm1(x) / lambda;
}

TimeGrid::TimeGrid(double tau, int n_steps) : tau_(tau), n_steps_(n_steps)
{
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("time grid: tau must be positive");
    if (n_steps < 0) throw InputError("time grid: n_steps must be nonnegative");
}

int cell_index(const TimeGrid& grid, double t)
{
    if (t <= 0.0 || grid.n_steps() == 0) return 0;
    const double x = t / grid.tau();
    const double nearest = std::round(x);
    int n = (std::abs(x - nearest) <= 1e-9 * std::max(1.0, nearest)) ? static_cast<int>(nearest)
                                                                       : static_cast<int>(std::ceil(x));
    return std::clamp(n, 1, grid.n_steps());
}

}  // namespace gradflow
