#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/errors.hpp"

namespace gradflow {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

template <class S>
concept MetricSpace = requires(const S& space, const typename S::Point& x) {
    typename S::Point;
    { space.distance(x, x) } -> std::convertible_to<double>;
};

// A metric space that can also produce constant-speed geodesics (and hence affine blends).
template <class S>
concept GeodesicSpace = MetricSpace<S> && requires(const S& space, const typename S::Point& x, double s) {
    { space.geodesic(x, x, s) } -> std::convertible_to<typename S::Point>;
};

template <class P>
struct Functional {
    std::string name;
    std::function<double(const P&)> value;  // +infinity outside the domain
    double lambda = 0.0;
    std::function<double(const P&)> slope;  // empty when no closed form is known
    std::function<bool(const P&)> domain;   // empty: finite value <=> in domain

    bool has_exact_slope() const { return static_cast<bool>(slope); }

    bool contains(const P& x) const
    {
        if (domain) return domain(x);
        return std::isfinite(value(x));
    }
};

// E_lambda(t) = integral_0^t exp(lambda r) dr
double e_lambda(double lambda, double t);

class TimeGrid {
public:
    TimeGrid(double tau, int n_steps);

    double tau() const { return tau_; }
    int n_steps() const { return n_steps_; }
    double t(int n) const { return n * tau_; }
    double end() const { return t(n_steps_); }

private:
    double tau_;
    int n_steps_;
};

enum class Interpolation { piecewise_constant, piecewise_linear };

template <class P>
struct DiscreteTrajectory {
    TimeGrid grid;
    std::vector<P> points;
    Interpolation mode = Interpolation::piecewise_constant;
};

template <class P>
class SampledCurve {
public:
    SampledCurve(std::vector<double> times, std::vector<P> points)
        : times_(std::move(times)), points_(std::move(points))
    {
        if (times_.size() != points_.size()) throw InputError("sampled curve: times and points differ in length");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i] > times_[i - 1])) throw InputError("sampled curve: times must be strictly increasing");
    }

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    const std::vector<P>& points() const { return points_; }
    double time(std::size_t i) const { return times_[i]; }
    const P& point(std::size_t i) const { return points_[i]; }

    // Index of the sample at time t, matched to 1e-9 relative.
    std::optional<std::size_t> find(double t) const
    {
        auto it = std::lower_bound(times_.begin(), times_.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
        if (it == times_.end() || std::abs(*it - t) > 1e-9 * std::max(1.0, std::abs(t))) return std::nullopt;
        return static_cast<std::size_t>(it - times_.begin());
    }

private:
    std::vector<double> times_;
    std::vector<P> points_;
};

// Index n of the right-closed cell (t^{n-1}, t^n] containing t; 0 for t = 0.
// Nodes are snapped within 1e-9 relative.
int cell_index(const TimeGrid& grid, double t);

template <MetricSpace S>
typename S::Point interpolate(const S& space, const DiscreteTrajectory<typename S::Point>& traj, double t)
{
    const TimeGrid& grid = traj.grid;
    if (traj.points.size() != static_cast<std::size_t>(grid.n_steps()) + 1)
        throw InputError("trajectory: expected n_steps + 1 points");
    if (!(t >= 0.0) || t > grid.end() * (1.0 + 1e-12) + 1e-300) throw RangeError("interpolate: t outside [0, T]");
    const int n = cell_index(grid, t);
    const bool at_node = std::abs(t / grid.tau() - n) <= 1e-9 * std::max(1.0, static_cast<double>(n));
    if (traj.mode == Interpolation::piecewise_constant || n == 0 || at_node) return traj.points[n];
    if constexpr (GeodesicSpace<S>) {
        const double weight = std::clamp((t - grid.t(n - 1)) / grid.tau(), 0.0, 1.0);
        if (weight == 1.0) return traj.points[n];
        return space.geodesic(traj.points[n - 1], traj.points[n], weight);
    } else {
        (void)space;
        throw UnsupportedError("interpolate: piecewise linear mode needs a carrier with geodesics");
    }
}

template <class P>
SampledCurve<P> sample_nodes(const DiscreteTrajectory<P>& traj)
{
    std::vector<double> times;
    times.reserve(traj.points.size());
    for (std::size_t n = 0; n < traj.points.size(); ++n) times.push_back(traj.grid.t(static_cast<int>(n)));
    return SampledCurve<P>(std::move(times), traj.points);
}

template <MetricSpace S>
std::vector<double> estimate_metric_derivative(const SampledCurve<typename S::Point>& curve, const S& space)
{
    const std::size_t n = curve.size();
    if (n < 2) throw InputError("metric derivative: need at least 2 samples");
    std::vector<double> speed(n);
    speed[0] = space.distance(curve.point(0), curve.point(1)) / (curve.time(1) - curve.time(0));
    speed[n - 1] = space.distance(curve.point(n - 2), curve.point(n - 1)) / (curve.time(n - 1) - curve.time(n - 2));
    for (std::size_t i = 1; i + 1 < n; ++i)
        speed[i] = space.distance(curve.point(i - 1), curve.point(i + 1)) / (curve.time(i + 1) - curve.time(i - 1));
    return speed;
}

struct SlopeEstimate {
    double value = 0.0;
    double radius = 0.0;  // smallest probe radius attaining the value
};

template <class P>
using NeighborhoodSampler = std::function<std::vector<P>(const P& center, double radius)>;

// Finite-radius surrogate of the limsup slope: max over probes of (phi(v) - phi(w))^+ / d(v, w).
template <MetricSpace S>
SlopeEstimate estimate_slope(const S& space, const Functional<typename S::Point>& f, const typename S::Point& v,
                             const std::vector<double>& probe_radii,
                             const NeighborhoodSampler<typename S::Point>& sampler)
{
    for (std::size_t i = 0; i < probe_radii.size(); ++i) {
        if (!(probe_radii[i] > 0.0)) throw InputError("slope: probe radii must be positive");
        if (i > 0 && !(probe_radii[i] < probe_radii[i - 1])) throw InputError("slope: probe radii must decrease");
    }
    if (!f.contains(v)) return {kInfinity, 0.0};
    const double center = f.value(v);
    SlopeEstimate best{0.0, probe_radii.empty() ? 0.0 : probe_radii.back()};
    bool found = false;
    for (double r : probe_radii) {
        for (const auto& w : sampler(v, r)) {
            const double d = space.distance(v, w);
            const double fw = f.value(w);
            if (!(d > 0.0) || !std::isfinite(fw)) continue;
            const double ratio = std::max(center - fw, 0.0) / d;
            if (!found || ratio > best.value * (1.0 + 1e-12)) {
                best = {ratio, r};
                found = true;
            } else if (ratio >= best.value * (1.0 - 1e-12)) {
                best.radius = r;
            }
        }
    }
    return best;
}

// Largest violation of the metric axioms on one triple, relative to the distances involved.
template <MetricSpace S>
double metric_axiom_violation(const S& space, const typename S::Point& x, const typename S::Point& y,
                              const typename S::Point& z)
{
    const double xy = space.distance(x, y), yx = space.distance(y, x);
    const double xz = space.distance(x, z), yz = space.distance(y, z);
    const double scale = std::max({1.0, xy, xz, yz});
    double worst = std::abs(space.distance(x, x)) / scale;
    worst = std::max(worst, std::abs(xy - yx) / scale);
    worst = std::max(worst, (xz - xy - yz) / scale);
    if (xy < 0.0) worst = std::max(worst, -xy / scale);
    return worst;
}

// phi(x) + kappa/2 d(x, o)^2 - phi_o; negative values violate the lower bound.
template <MetricSpace S>
double quadratic_lower_bound_margin(const S& space, const Functional<typename S::Point>& f, double kappa,
                                    double phi_o, const typename S::Point& o, const typename S::Point& x)
{
    const double d = space.distance(x, o);
    return f.value(x) + 0.5 * kappa * d * d - phi_o;
}

}  // namespace gradflow
