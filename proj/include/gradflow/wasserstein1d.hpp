#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gradflow/metric_core.hpp"

namespace gradflow {

// Quantile values q_i at the midpoints w_i = (i + 1/2)/M of a uniform grid of (0, 1).
class QuantileMeasure {
public:
    explicit QuantileMeasure(std::vector<double> q);

    std::size_t size() const { return q_.size(); }
    const std::vector<double>& values() const { return q_; }
    double operator[](std::size_t i) const { return q_[i]; }
    double level(std::size_t i) const { return (static_cast<double>(i) + 0.5) / static_cast<double>(q_.size()); }
    bool operator==(const QuantileMeasure&) const = default;

private:
    std::vector<double> q_;
};

double w2(const QuantileMeasure& a, const QuantileMeasure& b);
QuantileMeasure geodesic(const QuantileMeasure& a, const QuantileMeasure& b, double s);
// Equals geodesic(m2, m3, s) for every base.
QuantileMeasure generalized_geodesic(const QuantileMeasure& base, const QuantileMeasure& m2, const QuantileMeasure& m3,
                                     double s);

struct WassersteinSpace {
    using Point = QuantileMeasure;
    double distance(const Point& a, const Point& b) const { return w2(a, b); }
    Point geodesic(const Point& a, const Point& b, double s) const { return gradflow::geodesic(a, b, s); }
};

struct ScalarFunction {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
};

// Internal densities U (superlinear, U(0) = 0).
ScalarFunction entropy_density();           // s log s
ScalarFunction power_density(double m);     // s^m / (m - 1), m > 1
// Potentials and kernels.
ScalarFunction quadratic_potential(double stiffness, double center = 0.0);  // stiffness/2 (x - center)^2
ScalarFunction linear_potential(double slope);
ScalarFunction double_well_potential();     // (x^2 - 1)^2 / 4
ScalarFunction quadratic_kernel(double coefficient);  // coefficient * x^2
ScalarFunction constant_kernel(double value);
// V_h(x) = h * integral_0^{1/h} V(x - y) dy; keeps the modulus of V.
ScalarFunction mollified_potential(const ScalarFunction& v, double h);

// internal_weight * U + potential_weight * V + interaction_weight * W
struct EnergySpec {
    double internal_weight = 0.0;
    ScalarFunction internal;
    double potential_weight = 0.0;
    ScalarFunction potential;
    double potential_lambda = 0.0;
    double interaction_weight = 0.0;
    ScalarFunction interaction;
    double interaction_lambda = 0.0;

    double lambda() const { return potential_weight * potential_lambda + interaction_weight * interaction_lambda; }
    bool has_internal() const { return internal_weight > 0.0; }
    bool has_potential() const { return potential_weight > 0.0; }
    bool has_interaction() const { return interaction_weight > 0.0; }
    std::string describe() const;
};

// Checks weights, U(0) = 0, convexity of U and of s U(1/s) (plus monotonicity) on a log grid,
// evenness of W and lambda_W <= 0. Throws InputError.
void validate(const EnergySpec& spec);

double potential_energy(const EnergySpec& spec, const QuantileMeasure& m);
double interaction_energy(const EnergySpec& spec, const QuantileMeasure& m);
// Average of U(rho_i)/rho_i over the M-1 cells, rho_i = (1/M)/(q_{i+1} - q_i); +infinity on a collapsed cell.
double internal_energy(const EnergySpec& spec, const QuantileMeasure& m);
double energy(const EnergySpec& spec, const QuantileMeasure& m);
double l_u(const EnergySpec& spec, double r);

// Raw-vector versions used inside the proximal solver (no monotonicity requirement).
double energy(const EnergySpec& spec, const std::vector<double>& q);
std::vector<double> energy_gradient(const EnergySpec& spec, const std::vector<double>& q);

// Hessian in quantile coordinates: tridiagonal part plus an optional dense interaction part.
struct EnergyHessian {
    std::vector<double> diagonal;
    std::vector<double> off_diagonal;  // (i, i+1)
    std::vector<double> dense;         // row-major M x M, empty without interaction
};
EnergyHessian energy_hessian(const EnergySpec& spec, const std::vector<double>& q);

// Exact slope of the discrete energy in the W2 metric, sqrt(M) * |grad_q E|.
double energy_slope(const EnergySpec& spec, const QuantileMeasure& m);

Functional<QuantileMeasure> energy_functional(const EnergySpec& spec);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};
Moments moments(const QuantileMeasure& m);

// Piecewise-linear resampling of the quantile function onto a new midpoint grid.
QuantileMeasure resample(const QuantileMeasure& m, std::size_t new_size);

class DensityOnGrid {
public:
    DensityOnGrid(double x_min, double x_max, std::vector<double> rho);
    // Rescales rho to unit mass first.
    static DensityOnGrid normalized(double x_min, double x_max, std::vector<double> rho);
    static DensityOnGrid sample(const std::function<double(double)>& density, double x_min, double x_max,
                                std::size_t cells);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t size() const { return rho_.size(); }
    double dx() const { return (x_max_ - x_min_) / static_cast<double>(rho_.size()); }
    double center(std::size_t k) const { return x_min_ + (static_cast<double>(k) + 0.5) * dx(); }
    const std::vector<double>& rho() const { return rho_; }

private:
    double x_min_, x_max_;
    std::vector<double> rho_;
};

double l1_distance(const DensityOnGrid& a, const DensityOnGrid& b);

QuantileMeasure density_to_quantiles(const DensityOnGrid& d, std::size_t m);
// Density of the piecewise-linear CDF through (q_i, w_i), with half-cell tails of equal width at both ends.
DensityOnGrid quantiles_to_density(const QuantileMeasure& m, std::size_t cells, double x_min, double x_max);
DensityOnGrid quantiles_to_density(const QuantileMeasure& m, std::size_t cells);

QuantileMeasure uniform_quantiles(double a, double b, std::size_t m);
QuantileMeasure gaussian_quantiles(double mean, double variance, std::size_t m);

// Source-type solution of rho_t = (rho^m)_xx with unit mass.
class Barenblatt {
public:
    explicit Barenblatt(double m);

    double exponent() const { return m_; }
    double alpha() const { return alpha_; }
    double k() const { return k_; }
    double constant() const { return c_; }
    double half_width(double t) const;
    double density(double x, double t) const;
    QuantileMeasure quantiles(double t, std::size_t m) const;
    DensityOnGrid on_grid(double t, std::size_t cells, double x_min, double x_max) const;

private:
    double m_, alpha_, k_, gamma_, c_;
};

void write_density_csv(std::ostream& out, const DensityOnGrid& d);
DensityOnGrid read_density_csv(std::istream& in);
void write_quantiles_csv(std::ostream& out, const QuantileMeasure& m);
QuantileMeasure read_quantiles_csv(std::istream& in);

}  // namespace gradflow
