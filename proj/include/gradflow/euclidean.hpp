#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gradflow/metric_core.hpp"

namespace gradflow {

struct EuclideanPoint {
    std::vector<double> coords;

    EuclideanPoint() = default;
    explicit EuclideanPoint(std::vector<double> c) : coords(std::move(c)) {}
    EuclideanPoint(std::initializer_list<double> c) : coords(c) {}

    std::size_t dim() const { return coords.size(); }
    double operator[](std::size_t i) const { return coords[i]; }
    double& operator[](std::size_t i) { return coords[i]; }
    bool operator==(const EuclideanPoint&) const = default;
};

Eigen::VectorXd to_eigen(const EuclideanPoint& x);
EuclideanPoint from_eigen(const Eigen::VectorXd& v);

double dist(const EuclideanPoint& x, const EuclideanPoint& y);

class EuclideanSpace {
public:
    using Point = EuclideanPoint;

    explicit EuclideanSpace(std::size_t dim);

    std::size_t dim() const { return dim_; }
    double distance(const Point& x, const Point& y) const;
    Point geodesic(const Point& x, const Point& y, double s) const;

private:
    void check(const Point& x) const;
    std::size_t dim_;
};

struct SymmetricEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
};

// Cyclic Jacobi rotations; deterministic for a given input.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-14, int max_sweeps = 100);

// phi(x) = 1/2 <Ax, x> + <b, x> + c
class QuadraticFunctional {
public:
    QuadraticFunctional(Eigen::MatrixXd a, Eigen::VectorXd b, double c = 0.0);

    std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
    const Eigen::MatrixXd& a() const { return a_; }
    const Eigen::VectorXd& b() const { return b_; }
    double c() const { return c_; }
    const SymmetricEigen& eigen() const { return eigen_; }
    double lambda() const { return eigen_.values(0); }

    double value(const EuclideanPoint& x) const;
    Eigen::VectorXd gradient(const EuclideanPoint& x) const;

private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    double c_;
    SymmetricEigen eigen_;
};

struct EuclideanFunctional {
    Functional<EuclideanPoint> descriptor;
    std::function<Eigen::VectorXd(const EuclideanPoint&)> gradient;
    std::function<Eigen::MatrixXd(const EuclideanPoint&)> hessian;
};

EuclideanFunctional quadratic_functional(const QuadraticFunctional& q);
EuclideanFunctional linear_functional(const Eigen::VectorXd& b, double c = 0.0);
// sum_i (x_i^2 - 1)^2 / 4, modulus -1
EuclideanFunctional double_well(std::size_t dim);
// sqrt(|x|^2 + eps^2) - eps, modulus 0
EuclideanFunctional smoothed_abs(std::size_t dim, double eps);

struct CatalogEntry {
    std::string name;
    std::string modulus;
    std::string description;
};
std::vector<CatalogEntry> euclidean_catalog();

EuclideanPoint exact_flow_quadratic(const QuadraticFunctional& q, const EuclideanPoint& u0, double t);
SampledCurve<EuclideanPoint> exact_flow_curve(const QuadraticFunctional& q, const EuclideanPoint& u0,
                                               const std::vector<double>& times);

// Classical RK4 for u' = -grad phi(u); t is split into ceil(t/h) equal steps.
EuclideanPoint ode_oracle(const EuclideanFunctional& f, const EuclideanPoint& u0, double t, double h);

// Solves (I + tau A) U = v - tau b.
EuclideanPoint resolvent_quadratic(const QuadraticFunctional& q, double tau, const EuclideanPoint& v);

// Probes v +- r e_k plus a fixed set of random unit directions drawn from `seed`.
NeighborhoodSampler<EuclideanPoint> euclidean_probe_sampler(std::size_t dim, std::size_t random_directions,
                                                            std::uint64_t seed);

}  // namespace gradflow
