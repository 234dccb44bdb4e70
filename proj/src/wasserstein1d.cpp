#include "gradflow/wasserstein1d.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "gradflow/detail/numeric.hpp"

namespace gradflow {

using detail::CompensatedSum;

QuantileMeasure::QuantileMeasure(std::vector<double> q) : q_(std::move(q))
{
    if (q_.size() < 2) throw InputError("quantile measure: need M >= 2");
    for (std::size_t i = 0; i < q_.size(); ++i) {
        if (!std::isfinite(q_[i])) throw InputError("quantile measure: non-finite value");
        if (i > 0 && q_[i] < q_[i - 1]) throw InputError("quantile measure: values must be nondecreasing");
    }
}

namespace {

void require_same_size(const QuantileMeasure& a, const QuantileMeasure& b, const char* what)
{
    if (a.size() != b.size()) throw InputError(std::string(what) + ": quantile grids differ in size");
}

void require_unit_interval(double s, const char* what)
{
    if (!(s >= 0.0 && s <= 1.0)) throw RangeError(std::string(what) + ": s outside [0, 1]");
}

const ScalarFunction& require(const ScalarFunction& fn, const char* what)
{
    if (!fn.f) throw InputError(std::string("energy spec: missing ") + what);
    return fn;
}

double checked(double value, const char* what)
{
    if (!std::isfinite(value)) throw NumericalError(std::string(what) + ": non-finite value");
    return value;
}

}  // namespace

double w2(const QuantileMeasure& a, const QuantileMeasure& b)
{
    require_same_size(a, b, "w2");
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a[i] - b[i]));
    if (scale == 0.0) return 0.0;
    CompensatedSum sum;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double r = (a[i] - b[i]) / scale;
        sum.add(r * r);
    }
    return scale * std::sqrt(sum.value() / static_cast<double>(a.size()));
}

QuantileMeasure geodesic(const QuantileMeasure& a, const QuantileMeasure& b, double s)
{
    require_same_size(a, b, "geodesic");
    require_unit_interval(s, "geodesic");
    std::vector<double> q(a.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = (1.0 - s) * a[i] + s * b[i];
    for (std::size_t i = 1; i < q.size(); ++i) q[i] = std::max(q[i], q[i - 1]);
    return QuantileMeasure(std::move(q));
}

QuantileMeasure generalized_geodesic(const QuantileMeasure& base, const QuantileMeasure& m2, const QuantileMeasure& m3,
                                     double s)
{
    require_same_size(base, m2, "generalized geodesic");
    require_same_size(base, m3, "generalized geodesic");
    require_unit_interval(s, "generalized geodesic");
    return geodesic(m2, m3, s);
}

ScalarFunction entropy_density()
{
    return {"entropy",
            [](double s) { return s > 0.0 ? s * std::log(s) : 0.0; },
            [](double s) { return std::log(s) + 1.0; },
            [](double s) { return 1.0 / s; }};
}

ScalarFunction power_density(double m)
{
    if (!(m > 1.0)) throw InputError("power density: exponent must exceed 1");
    return {"power",
            [m](double s) { return std::pow(s, m) / (m - 1.0); },
            [m](double s) { return m / (m - 1.0) * std::pow(s, m - 1.0); },
            [m](double s) { return m * std::pow(s, m - 2.0); }};
}

ScalarFunction quadratic_potential(double stiffness, double center)
{
    return {"quadratic",
            [=](double x) { return 0.5 * stiffness * (x - center) * (x - center); },
            [=](double x) { return stiffness * (x - center); },
            [=](double) { return stiffness; }};
}

ScalarFunction linear_potential(double slope)
{
    return {"linear", [=](double x) { return slope * x; }, [=](double) { return slope; }, [](double) { return 0.0; }};
}

ScalarFunction double_well_potential()
{
    return {"double_well",
            [](double x) { return 0.25 * (x * x - 1.0) * (x * x - 1.0); },
            [](double x) { return x * (x * x - 1.0); },
            [](double x) { return 3.0 * x * x - 1.0; }};
}

ScalarFunction quadratic_kernel(double coefficient)
{
    return {"quadratic_kernel",
            [=](double x) { return coefficient * x * x; },
            [=](double x) { return 2.0 * coefficient * x; },
            [=](double) { return 2.0 * coefficient; }};
}

ScalarFunction constant_kernel(double value)
{
    return {"constant_kernel", [=](double) { return value; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

ScalarFunction mollified_potential(const ScalarFunction& v, double h)
{
    if (!(h > 0.0)) throw InputError("mollified potential: h must be positive");
    if (!v.f || !v.df || !v.d2f) throw InputError("mollified potential: V needs two derivatives");
    using Rule = boost::math::quadrature::gauss<double, 20>;
    auto average = [h](const std::function<double(double)>& g) {
        return [g, h](double x) {
            return h * Rule::integrate([&](double y) { return g(x - y); }, 0.0, 1.0 / h);
        };
    };
    return {v.name + "_mollified", average(v.f), average(v.df), average(v.d2f)};
}

std::string EnergySpec::describe() const
{
    std::ostringstream out;
    bool first = true;
    auto term = [&](double w, const ScalarFunction& fn, const char* kind) {
        if (!(w > 0.0)) return;
        if (!first) out << " + ";
        out << detail::format_double(w) << "*" << kind << "[" << fn.name << "]";
        first = false;
    };
    term(internal_weight, internal, "U");
    term(potential_weight, potential, "V");
    term(interaction_weight, interaction, "W");
    if (first) out << "0";
    return out.str();
}

void validate(const EnergySpec& spec)
{
    for (double w : {spec.internal_weight, spec.potential_weight, spec.interaction_weight})
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("energy spec: weights must be finite and nonnegative");
    auto complete = [](const ScalarFunction& fn) { return fn.f && fn.df && fn.d2f; };
    if (spec.has_internal()) {
        const auto& u = spec.internal;
        if (!complete(u)) throw InputError("energy spec: U needs value, derivative and second derivative");
        if (std::abs(u.f(0.0)) > 1e-12) throw InputError("energy spec: U(0) must vanish");
        for (double e = -6.0; e <= 6.0; e += 0.25) {
            const double r = std::pow(10.0, e);
            const double scale = 1e-10 * std::max(1.0, std::abs(u.f(r)) / r);
            if (u.d2f(r) < -scale) throw InputError("energy spec: U must be convex");
            // s U(1/s) is convex and non-increasing iff L_U >= 0 and U'' >= 0
            if (r * u.df(r) - u.f(r) < -scale * r) throw InputError("energy spec: s U(1/s) must be non-increasing");
        }
    }
    if (spec.has_potential()) {
        const auto& v = spec.potential;
        if (!complete(v)) throw InputError("energy spec: V needs value, derivative and second derivative");
        for (double x = -20.0; x <= 20.0; x += 0.125)
            if (v.d2f(x) < spec.potential_lambda - 1e-10 * std::max(1.0, std::abs(spec.potential_lambda)))
                throw InputError("energy spec: V'' falls below lambda_V");
    }
    if (spec.has_interaction()) {
        const auto& w = spec.interaction;
        if (!complete(w)) throw InputError("energy spec: W needs value, derivative and second derivative");
        if (spec.interaction_lambda > 0.0) throw InputError("energy spec: lambda_W must be <= 0");
        for (double x = 0.0; x <= 20.0; x += 0.125) {
            if (std::abs(w.f(x) - w.f(-x)) > 1e-12 * std::max(1.0, std::abs(w.f(x))))
                throw InputError("energy spec: W must be even");
            if (w.d2f(x) < spec.interaction_lambda - 1e-10) throw InputError("energy spec: W'' falls below lambda_W");
        }
    }
}

namespace {

double potential_raw(const ScalarFunction& v, const std::vector<double>& q)
{
    CompensatedSum sum;
    for (double x : q) sum.add(checked(v.f(x), "potential energy"));
    return sum.value() / static_cast<double>(q.size());
}

double interaction_raw(const ScalarFunction& w, const std::vector<double>& q)
{
    const std::size_t m = q.size();
    CompensatedSum sum;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) sum.add(checked(w.f(q[i] - q[j]), "interaction energy"));
    return sum.value() / (2.0 * static_cast<double>(m) * static_cast<double>(m));
}

double internal_raw(const ScalarFunction& u, const std::vector<double>& q)
{
    const std::size_t m = q.size();
    const double dw = 1.0 / static_cast<double>(m);
    const double kappa = static_cast<double>(m) / static_cast<double>(m - 1);
    CompensatedSum sum;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double delta = q[i + 1] - q[i];
        if (!(delta > 0.0)) return kInfinity;
        sum.add(delta * u.f(dw / delta));
    }
    return kappa * sum.value();
}

void require_grid(const std::vector<double>& q)
{
    if (q.size() < 2) throw InputError("energy: need M >= 2");
}

}  // namespace

double potential_energy(const EnergySpec& spec, const QuantileMeasure& m)
{
    return potential_raw(require(spec.potential, "V"), m.values());
}

double interaction_energy(const EnergySpec& spec, const QuantileMeasure& m)
{
    return interaction_raw(require(spec.interaction, "W"), m.values());
}

double internal_energy(const EnergySpec& spec, const QuantileMeasure& m)
{
    return internal_raw(require(spec.internal, "U"), m.values());
}

double energy(const EnergySpec& spec, const std::vector<double>& q)
{
    require_grid(q);
    double total = 0.0;
    if (spec.has_internal()) {
        const double u = internal_raw(require(spec.internal, "U"), q);
        if (!std::isfinite(u)) return kInfinity;
        total += spec.internal_weight * u;
    }
    if (spec.has_potential()) total += spec.potential_weight * potential_raw(require(spec.potential, "V"), q);
    if (spec.has_interaction())
        total += spec.interaction_weight * interaction_raw(require(spec.interaction, "W"), q);
    return total;
}

double energy(const EnergySpec& spec, const QuantileMeasure& m) { return energy(spec, m.values()); }

double l_u(const EnergySpec& spec, double r)
{
    if (!(r >= 0.0)) throw DomainError("l_u: r must be nonnegative");
    if (r == 0.0) return 0.0;
    const auto& u = require(spec.internal, "U");
    if (!u.df) throw DomainError("l_u: U' unavailable");
    const double value = r * u.df(r) - u.f(r);
    if (!std::isfinite(value)) throw DomainError("l_u: U' undefined at r");
    return value;
}

std::vector<double> energy_gradient(const EnergySpec& spec, const std::vector<double>& q)
{
    require_grid(q);
    const std::size_t m = q.size();
    const double md = static_cast<double>(m);
    std::vector<double> g(m, 0.0);
    if (spec.has_internal()) {
        const auto& u = spec.internal;
        const double dw = 1.0 / md;
        const double kappa = md / (md - 1.0);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double delta = q[i + 1] - q[i];
            if (!(delta > 0.0)) throw DomainError("energy gradient: collapsed cell");
            const double rho = dw / delta;
            // d/d delta of delta U(dw/delta) is -L_U(rho)
            const double pressure = rho * u.df(rho) - u.f(rho);
            const double h = -spec.internal_weight * kappa * pressure;
            g[i] -= h;
            g[i + 1] += h;
        }
    }
    if (spec.has_potential()) {
        for (std::size_t i = 0; i < m; ++i) g[i] += spec.potential_weight * spec.potential.df(q[i]) / md;
    }
    if (spec.has_interaction()) {
        const double scale = spec.interaction_weight / (md * md);
        for (std::size_t i = 0; i < m; ++i) {
            CompensatedSum sum;
            for (std::size_t j = 0; j < m; ++j)
                if (j != i) sum.add(spec.interaction.df(q[i] - q[j]));
            g[i] += scale * sum.value();
        }
    }
    for (double x : g) checked(x, "energy gradient");
    return g;
}

EnergyHessian energy_hessian(const EnergySpec& spec, const std::vector<double>& q)
{
    require_grid(q);
    const std::size_t m = q.size();
    const double md = static_cast<double>(m);
    EnergyHessian h{std::vector<double>(m, 0.0), std::vector<double>(m - 1, 0.0), {}};
    if (spec.has_internal()) {
        const auto& u = spec.internal;
        const double dw = 1.0 / md;
        const double kappa = md / (md - 1.0);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double delta = q[i + 1] - q[i];
            if (!(delta > 0.0)) throw DomainError("energy hessian: collapsed cell");
            const double rho = dw / delta;
            const double curvature = spec.internal_weight * kappa * rho * rho * rho * u.d2f(rho) / dw;
            h.diagonal[i] += curvature;
            h.diagonal[i + 1] += curvature;
            h.off_diagonal[i] -= curvature;
        }
    }
    if (spec.has_potential()) {
        for (std::size_t i = 0; i < m; ++i) h.diagonal[i] += spec.potential_weight * spec.potential.d2f(q[i]) / md;
    }
    if (spec.has_interaction()) {
        const double scale = spec.interaction_weight / (md * md);
        h.dense.assign(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                const double c = scale * spec.interaction.d2f(q[i] - q[j]);
                h.dense[i * m + j] -= c;
                h.dense[i * m + i] += c;
            }
        }
    }
    return h;
}

double energy_slope(const EnergySpec& spec, const QuantileMeasure& m)
{
    if (!std::isfinite(energy(spec, m))) return kInfinity;
    const auto g = energy_gradient(spec, m.values());
    double scale = 0.0;
    for (double x : g) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    CompensatedSum sum;
    for (double x : g) sum.add((x / scale) * (x / scale));
    return std::sqrt(static_cast<double>(m.size())) * scale * std::sqrt(sum.value());
}

Functional<QuantileMeasure> energy_functional(const EnergySpec& spec)
{
    validate(spec);
    Functional<QuantileMeasure> f;
    f.name = spec.describe();
    f.lambda = spec.lambda();
    f.value = [spec](const QuantileMeasure& m) { return energy(spec, m); };
    f.slope = [spec](const QuantileMeasure& m) { return energy_slope(spec, m); };
    if (spec.has_internal()) {
        f.domain = [](const QuantileMeasure& m) {
            for (std::size_t i = 0; i + 1 < m.size(); ++i)
                if (!(m[i + 1] > m[i])) return false;
            return true;
        };
    } else {
        f.domain = [](const QuantileMeasure&) { return true; };
    }
    return f;
}

Moments moments(const QuantileMeasure& m)
{
    CompensatedSum sum;
    for (double x : m.values()) sum.add(x);
    const double n = static_cast<double>(m.size());
    const double mean = sum.value() / n;
    CompensatedSum sq;
    for (double x : m.values()) sq.add((x - mean) * (x - mean));
    return {mean, sq.value() / n};
}

QuantileMeasure resample(const QuantileMeasure& m, std::size_t new_size)
{
    if (new_size < 2) throw InputError("resample: need M >= 2");
    const std::size_t n = m.size();
    const double nd = static_cast<double>(n);
    std::vector<double> out(new_size);
    for (std::size_t k = 0; k < new_size; ++k) {
        const double w = (static_cast<double>(k) + 0.5) / static_cast<double>(new_size);
        // position in units of the old grid: w = (i + 1/2)/n
        const double x = w * nd - 0.5;
        std::size_t i = x <= 0.0 ? 0 : std::min(static_cast<std::size_t>(x), n - 2);
        const double frac = x - static_cast<double>(i);
        out[k] = m[i] + frac * (m[i + 1] - m[i]);
    }
    for (std::size_t k = 1; k < new_size; ++k) out[k] = std::max(out[k], out[k - 1]);
    return QuantileMeasure(std::move(out));
}

DensityOnGrid::DensityOnGrid(double x_min, double x_max, std::vector<double> rho)
    : x_min_(x_min), x_max_(x_max), rho_(std::move(rho))
{
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
        throw InputError("density: need finite x_min < x_max");
    if (rho_.empty()) throw InputError("density: need at least one cell");
    CompensatedSum mass;
    for (double r : rho_) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("density: values must be finite and nonnegative");
        mass.add(r);
    }
    if (std::abs(mass.value() * dx() - 1.0) > 1e-10) throw InputError("density: not normalized to unit mass");
}

DensityOnGrid DensityOnGrid::normalized(double x_min, double x_max, std::vector<double> rho)
{
    if (!(x_max > x_min) || rho.empty()) throw InputError("density: need x_min < x_max and cells");
    const double dx = (x_max - x_min) / static_cast<double>(rho.size());
    CompensatedSum mass;
    for (double r : rho) mass.add(r);
    const double total = mass.value() * dx;
    if (!(total > 0.0) || !std::isfinite(total)) throw InputError("density: zero or non-finite mass");
    for (double& r : rho) r /= total;
    return DensityOnGrid(x_min, x_max, std::move(rho));
}

DensityOnGrid DensityOnGrid::sample(const std::function<double(double)>& density, double x_min, double x_max,
                                    std::size_t cells)
{
    if (cells == 0) throw InputError("density: need at least one cell");
    std::vector<double> rho(cells);
    const double dx = (x_max - x_min) / static_cast<double>(cells);
    for (std::size_t k = 0; k < cells; ++k) rho[k] = density(x_min + (static_cast<double>(k) + 0.5) * dx);
    return normalized(x_min, x_max, std::move(rho));
}

double l1_distance(const DensityOnGrid& a, const DensityOnGrid& b)
{
    if (a.size() != b.size() || std::abs(a.x_min() - b.x_min()) > 1e-12 * std::max(1.0, std::abs(a.x_min())) ||
        std::abs(a.x_max() - b.x_max()) > 1e-12 * std::max(1.0, std::abs(a.x_max())))
        throw InputError("l1 distance: densities live on different grids");
    CompensatedSum sum;
    for (std::size_t k = 0; k < a.size(); ++k) sum.add(std::abs(a.rho()[k] - b.rho()[k]));
    return sum.value() * a.dx();
}

QuantileMeasure density_to_quantiles(const DensityOnGrid& d, std::size_t m)
{
    if (m < 2) throw InputError("density to quantiles: need M >= 2");
    const std::size_t k = d.size();
    std::vector<double> cdf(k + 1, 0.0);
    CompensatedSum mass;
    for (std::size_t j = 0; j < k; ++j) {
        mass.add(d.rho()[j]);
        cdf[j + 1] = mass.value();
    }
    const double total = cdf[k];
    for (double& c : cdf) c /= total;
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double w = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        // first edge with F >= w
        const auto it = std::lower_bound(cdf.begin() + 1, cdf.end(), w);
        const std::size_t j = static_cast<std::size_t>(std::min(it, cdf.end() - 1) - cdf.begin()) - 1;
        const double frac = std::clamp((w - cdf[j]) / (cdf[j + 1] - cdf[j]), 0.0, 1.0);
        q[i] = d.x_min() + (static_cast<double>(j) + frac) * d.dx();
    }
    for (std::size_t i = 1; i < m; ++i) q[i] = std::max(q[i], q[i - 1]);
    return QuantileMeasure(std::move(q));
}

namespace {

struct PiecewiseCdf {
    std::vector<double> x, f;

    explicit PiecewiseCdf(const QuantileMeasure& m)
    {
        const std::size_t n = m.size();
        const double tail = 0.25 * ((m[1] - m[0]) + (m[n - 1] - m[n - 2]));
        x.reserve(n + 2);
        f.reserve(n + 2);
        x.push_back(m[0] - tail);
        f.push_back(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            x.push_back(m[i]);
            f.push_back(m.level(i));
        }
        x.push_back(m[n - 1] + tail);
        f.push_back(1.0);
    }

    double operator()(double at) const
    {
        if (at < x.front()) return 0.0;
        if (at >= x.back()) return 1.0;
        const auto it = std::upper_bound(x.begin(), x.end(), at);
        const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
        return f[j] + (f[j + 1] - f[j]) * (at - x[j]) / (x[j + 1] - x[j]);
    }
};

}  // namespace

DensityOnGrid quantiles_to_density(const QuantileMeasure& m, std::size_t cells, double x_min, double x_max)
{
    if (cells == 0) throw InputError("quantiles to density: need at least one cell");
    if (!(x_max > x_min)) throw InputError("quantiles to density: need x_min < x_max");
    const PiecewiseCdf cdf(m);
    if (cdf.x.back() <= x_min || cdf.x.front() >= x_max)
        throw InputError("quantiles to density: measure lies outside the support");
    const double dx = (x_max - x_min) / static_cast<double>(cells);
    std::vector<double> rho(cells);
    // mass beyond the support is lumped into the boundary cells
    double previous = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        const double current = k + 1 == cells ? 1.0 : cdf(x_min + static_cast<double>(k + 1) * dx);
        rho[k] = (current - previous) / dx;
        previous = current;
    }
    return DensityOnGrid::normalized(x_min, x_max, std::move(rho));
}

DensityOnGrid quantiles_to_density(const QuantileMeasure& m, std::size_t cells)
{
    const PiecewiseCdf cdf(m);
    if (!(cdf.x.back() > cdf.x.front())) throw InputError("quantiles to density: measure is a point mass");
    return quantiles_to_density(m, cells, cdf.x.front(), cdf.x.back());
}

QuantileMeasure uniform_quantiles(double a, double b, std::size_t m)
{
    if (!(b >= a)) throw InputError("uniform quantiles: need a <= b");
    if (m < 2) throw InputError("uniform quantiles: need M >= 2");
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    return QuantileMeasure(std::move(q));
}

QuantileMeasure gaussian_quantiles(double mean, double variance, std::size_t m)
{
    if (!(variance > 0.0)) throw InputError("gaussian quantiles: variance must be positive");
    if (m < 2) throw InputError("gaussian quantiles: need M >= 2");
    const boost::math::normal_distribution<double> dist(mean, std::sqrt(variance));
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i)
        q[i] = boost::math::quantile(dist, (static_cast<double>(i) + 0.5) / static_cast<double>(m));
    for (std::size_t i = 0; i < m / 2; ++i) {
        const double dev = 0.5 * ((q[m - 1 - i] - mean) - (q[i] - mean));
        q[i] = mean - dev;
        q[m - 1 - i] = mean + dev;
    }
    return QuantileMeasure(std::move(q));
}

Barenblatt::Barenblatt(double m) : m_(m)
{
    if (!(m > 1.0)) throw InputError("barenblatt: exponent must exceed 1");
    alpha_ = 1.0 / (m + 1.0);
    k_ = (m - 1.0) / (2.0 * m * (m + 1.0));
    gamma_ = 1.0 / (m - 1.0);
    // unit mass: C^{gamma + 1/2} = sqrt(k) / (2^{2 gamma + 1} B(gamma + 1, gamma + 1))
    const double rhs = std::sqrt(k_) / (std::pow(2.0, 2.0 * gamma_ + 1.0) * boost::math::beta(gamma_ + 1.0, gamma_ + 1.0));
    c_ = std::pow(rhs, 1.0 / (gamma_ + 0.5));
}

double Barenblatt::half_width(double t) const
{
    if (!(t > 0.0)) throw DomainError("barenblatt: t must be positive");
    return std::sqrt(c_ / k_) * std::pow(t, alpha_);
}

double Barenblatt::density(double x, double t) const
{
    if (!(t > 0.0)) throw DomainError("barenblatt: t must be positive");
    const double base = c_ - k_ * x * x * std::pow(t, -2.0 * alpha_);
    return base > 0.0 ? std::pow(t, -alpha_) * std::pow(base, gamma_) : 0.0;
}

QuantileMeasure Barenblatt::quantiles(double t, std::size_t m) const
{
    if (m < 2) throw InputError("barenblatt quantiles: need M >= 2");
    const double a = half_width(t);
    std::vector<double> q(m);
    for (std::size_t i = 0; i < (m + 1) / 2; ++i) {
        const double w = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double y = 2.0 * boost::math::ibeta_inv(gamma_ + 1.0, gamma_ + 1.0, w) - 1.0;
        q[i] = a * y;
        q[m - 1 - i] = -a * y;
    }
    if (m % 2 == 1) q[m / 2] = 0.0;
    return QuantileMeasure(std::move(q));
}

DensityOnGrid Barenblatt::on_grid(double t, std::size_t cells, double x_min, double x_max) const
{
    const double a = half_width(t);
    auto cdf = [&](double x) {
        if (x <= -a) return 0.0;
        if (x >= a) return 1.0;
        return boost::math::ibeta(gamma_ + 1.0, gamma_ + 1.0, 0.5 * (1.0 + x / a));
    };
    const double dx = (x_max - x_min) / static_cast<double>(cells);
    std::vector<double> rho(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        const double lo = x_min + static_cast<double>(k) * dx;
        rho[k] = (cdf(lo + dx) - cdf(lo)) / dx;
    }
    return DensityOnGrid::normalized(x_min, x_max, std::move(rho));
}

namespace {

std::vector<std::pair<double, double>> read_two_column_csv(std::istream& in, const std::string& header)
{
    std::string line;
    if (!std::getline(in, line)) throw InputError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw InputError("csv: expected header '" + header + "'");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError("csv: expected two columns");
        const auto a = detail::parse_double(std::string_view(line).substr(0, comma));
        const auto b = detail::parse_double(std::string_view(line).substr(comma + 1));
        if (!a || !b) throw InputError("csv: malformed number in '" + line + "'");
        rows.emplace_back(*a, *b);
    }
    return rows;
}

}  // namespace

void write_density_csv(std::ostream& out, const DensityOnGrid& d)
{
    out << "x,rho\n";
    for (std::size_t k = 0; k < d.size(); ++k)
        out << detail::format_double(d.center(k)) << ',' << detail::format_double(d.rho()[k]) << '\n';
}

DensityOnGrid read_density_csv(std::istream& in)
{
    const auto rows = read_two_column_csv(in, "x,rho");
    if (rows.size() < 2) throw InputError("density csv: need at least two rows");
    const double dx = (rows.back().first - rows.front().first) / static_cast<double>(rows.size() - 1);
    std::vector<double> rho;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const double expected = rows.front().first + static_cast<double>(k) * dx;
        if (std::abs(rows[k].first - expected) > 1e-9 * std::max(std::abs(dx), 1e-300) * static_cast<double>(rows.size()))
            throw InputError("density csv: cell centers must be uniformly spaced");
        rho.push_back(rows[k].second);
    }
    return DensityOnGrid(rows.front().first - 0.5 * dx, rows.back().first + 0.5 * dx, std::move(rho));
}

void write_quantiles_csv(std::ostream& out, const QuantileMeasure& m)
{
    out << "w,q\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        out << detail::format_double(m.level(i)) << ',' << detail::format_double(m[i]) << '\n';
}

QuantileMeasure read_quantiles_csv(std::istream& in)
{
    const auto rows = read_two_column_csv(in, "w,q");
    std::vector<double> q;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double expected = (static_cast<double>(i) + 0.5) / static_cast<double>(rows.size());
        if (std::abs(rows[i].first - expected) > 1e-12) throw InputError("quantile csv: levels must be (i + 1/2)/M");
        q.push_back(rows[i].second);
    }
    return QuantileMeasure(std::move(q));
}

}  // namespace gradflow
