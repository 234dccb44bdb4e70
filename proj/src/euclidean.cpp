#include "gradflow/euclidean.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

namespace gradflow {

Eigen::VectorXd to_eigen(const EuclideanPoint& x)
{
    return Eigen::Map<const Eigen::VectorXd>(x.coords.data(), static_cast<Eigen::Index>(x.coords.size()));
}

EuclideanPoint from_eigen(const Eigen::VectorXd& v)
{
    return EuclideanPoint(std::vector<double>(v.data(), v.data() + v.size()));
}

double dist(const EuclideanPoint& x, const EuclideanPoint& y)
{
    if (x.dim() != y.dim()) throw InputError("dist: dimension mismatch");
    double scale = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) scale = std::max(scale, std::abs(x[i] - y[i]));
    if (scale == 0.0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        const double r = (x[i] - y[i]) / scale;
        sum += r * r;
    }
    return scale * std::sqrt(sum);
}

EuclideanSpace::EuclideanSpace(std::size_t dim) : dim_(dim)
{
    if (dim == 0) throw InputError("euclidean space: dimension must be positive");
}

void EuclideanSpace::check(const Point& x) const
{
    if (x.dim() != dim_) throw InputError("euclidean space: point has wrong dimension");
}

double EuclideanSpace::distance(const Point& x, const Point& y) const
{
    check(x);
    check(y);
    return dist(x, y);
}

EuclideanPoint EuclideanSpace::geodesic(const Point& x, const Point& y, double s) const
{
    check(x);
    check(y);
    if (!(s >= 0.0 && s <= 1.0)) throw RangeError("geodesic: s outside [0, 1]");
    EuclideanPoint out{std::vector<double>(dim_)};
    for (std::size_t i = 0; i < dim_; ++i) out[i] = (1.0 - s) * x[i] + s * y[i];
    return out;
}

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps)
{
    const Eigen::Index n = input.rows();
    if (input.cols() != n) throw InputError("jacobi: matrix must be square");
    Eigen::MatrixXd a = input;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double frob = std::max(a.norm(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= tol * frob) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) < a(j, j); });
    SymmetricEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

QuadraticFunctional::QuadraticFunctional(Eigen::MatrixXd a, Eigen::VectorXd b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c)
{
    if (a_.rows() != a_.cols() || a_.rows() != b_.size() || b_.size() == 0)
        throw InputError("quadratic functional: A must be square and match b");
    if (!a_.allFinite() || !b_.allFinite() || !std::isfinite(c_))
        throw InputError("quadratic functional: non-finite coefficients");
    const double scale = std::max(1.0, a_.cwiseAbs().maxCoeff());
    if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InputError("quadratic functional: A must be symmetric");
    eigen_ = jacobi_eigen(0.5 * (a_ + a_.transpose()));
}

double QuadraticFunctional::value(const EuclideanPoint& x) const
{
    const Eigen::VectorXd v = to_eigen(x);
    return 0.5 * v.dot(a_ * v) + b_.dot(v) + c_;
}

Eigen::VectorXd QuadraticFunctional::gradient(const EuclideanPoint& x) const { return a_ * to_eigen(x) + b_; }

namespace {

void require_dim(const EuclideanPoint& x, std::size_t dim)
{
    if (x.dim() != dim) throw InputError("functional: point has wrong dimension");
}

}  // namespace

EuclideanFunctional quadratic_functional(const QuadraticFunctional& q)
{
    auto shared = std::make_shared<QuadraticFunctional>(q);
    EuclideanFunctional f;
    f.descriptor.name = "quadratic";
    f.descriptor.lambda = q.lambda();
    f.descriptor.value = [shared](const EuclideanPoint& x) {
        require_dim(x, shared->dim());
        return shared->value(x);
    };
    f.descriptor.slope = [shared](const EuclideanPoint& x) { return shared->gradient(x).norm(); };
    f.gradient = [shared](const EuclideanPoint& x) {
        require_dim(x, shared->dim());
        return shared->gradient(x);
    };
    f.hessian = [shared](const EuclideanPoint&) { return shared->a(); };
    return f;
}

EuclideanFunctional linear_functional(const Eigen::VectorXd& b, double c)
{
    const std::size_t dim = static_cast<std::size_t>(b.size());
    EuclideanFunctional f;
    f.descriptor.name = "linear";
    f.descriptor.lambda = 0.0;
    f.descriptor.value = [b, c, dim](const EuclideanPoint& x) {
        require_dim(x, dim);
        return b.dot(to_eigen(x)) + c;
    };
    f.descriptor.slope = [b](const EuclideanPoint&) { return b.norm(); };
    f.gradient = [b](const EuclideanPoint&) { return b; };
    f.hessian = [dim](const EuclideanPoint&) {
        return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)).eval();
    };
    return f;
}

EuclideanFunctional double_well(std::size_t dim)
{
    EuclideanFunctional f;
    f.descriptor.name = "double_well";
    f.descriptor.lambda = -1.0;
    f.descriptor.value = [dim](const EuclideanPoint& x) {
        require_dim(x, dim);
        double sum = 0.0;
        for (double xi : x.coords) sum += 0.25 * (xi * xi - 1.0) * (xi * xi - 1.0);
        return sum;
    };
    f.gradient = [dim](const EuclideanPoint& x) {
        require_dim(x, dim);
        Eigen::VectorXd g(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) g(static_cast<Eigen::Index>(i)) = x[i] * (x[i] * x[i] - 1.0);
        return g;
    };
    f.descriptor.slope = [grad = f.gradient](const EuclideanPoint& x) { return grad(x).norm(); };
    f.hessian = [dim](const EuclideanPoint& x) {
        Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) d(static_cast<Eigen::Index>(i)) = 3.0 * x[i] * x[i] - 1.0;
        return Eigen::MatrixXd(d.asDiagonal());
    };
    return f;
}

EuclideanFunctional smoothed_abs(std::size_t dim, double eps)
{
    if (!(eps > 0.0)) throw InputError("smoothed_abs: eps must be positive");
    EuclideanFunctional f;
    f.descriptor.name = "smoothed_abs";
    f.descriptor.lambda = 0.0;
    f.descriptor.value = [dim, eps](const EuclideanPoint& x) {
        require_dim(x, dim);
        const double n = to_eigen(x).norm();
        return std::hypot(n, eps) - eps;
    };
    f.gradient = [dim, eps](const EuclideanPoint& x) {
        require_dim(x, dim);
        const Eigen::VectorXd v = to_eigen(x);
        return Eigen::VectorXd(v / std::hypot(v.norm(), eps));
    };
    f.descriptor.slope = [eps](const EuclideanPoint& x) {
        const double n = to_eigen(x).norm();
        return n / std::hypot(n, eps);
    };
    f.hessian = [eps](const EuclideanPoint& x) {
        const Eigen::VectorXd v = to_eigen(x);
        const double r = std::hypot(v.norm(), eps);
        const Eigen::Index n = v.size();
        return Eigen::MatrixXd((Eigen::MatrixXd::Identity(n, n) * r * r - v * v.transpose()) / (r * r * r));
    };
    return f;
}

std::vector<CatalogEntry> euclidean_catalog()
{
    return {
        {"quadratic", "lambda_min(A)", "1/2<Ax,x> + <b,x> + c; exact flow and resolvent in closed form"},
        {"linear", "0", "<b,x> + c; constant drift"},
        {"double_well", "-1", "sum (x_i^2 - 1)^2 / 4; equilibria at +-1"},
        {"smoothed_abs", "0", "sqrt(|x|^2 + eps^2) - eps"},
    };
}

EuclideanPoint exact_flow_quadratic(const QuadraticFunctional& q, const EuclideanPoint& u0, double t)
{
    if (u0.dim() != q.dim()) throw InputError("exact flow: dimension mismatch");
    if (!(t >= 0.0)) throw DomainError("exact flow: t must be nonnegative");
    const auto& eig = q.eigen();
    const Eigen::VectorXd y0 = eig.vectors.transpose() * to_eigen(u0);
    const Eigen::VectorXd c = eig.vectors.transpose() * q.b();
    Eigen::VectorXd y(y0.size());
    // y_k' = -mu_k y_k - c_k, so y_k(t) = exp(-mu_k t) y_k(0) - c_k E_{-mu_k}(t)
    for (Eigen::Index k = 0; k < y0.size(); ++k) {
        const double mu = eig.values(k);
        y(k) = std::exp(-mu * t) * y0(k) - c(k) * e_lambda(-mu, t);
    }
    return from_eigen(eig.vectors * y);
}

SampledCurve<EuclideanPoint> exact_flow_curve(const QuadraticFunctional& q, const EuclideanPoint& u0,
                                               const std::vector<double>& times)
{
    std::vector<EuclideanPoint> points;
    points.reserve(times.size());
    for (double t : times) points.push_back(exact_flow_quadratic(q, u0, t));
    return SampledCurve<EuclideanPoint>(times, std::move(points));
}

EuclideanPoint ode_oracle(const EuclideanFunctional& f, const EuclideanPoint& u0, double t, double h)
{
    if (!f.gradient) throw InputError("ode oracle: gradient oracle required");
    if (!(t >= 0.0)) throw DomainError("ode oracle: t must be nonnegative");
    if (t == 0.0) return u0;
    if (!(h > 0.0) || h > t) throw InputError("ode oracle: need 0 < h <= t");
    const long steps = static_cast<long>(std::ceil(t / h - 1e-12));
    const double dt = t / static_cast<double>(steps);
    auto field = [&](const Eigen::VectorXd& u) {
        Eigen::VectorXd g = f.gradient(from_eigen(u));
        if (!g.allFinite()) throw NumericalError("ode oracle: non-finite gradient");
        return Eigen::VectorXd(-g);
    };
    Eigen::VectorXd u = to_eigen(u0);
    for (long n = 0; n < steps; ++n) {
        const Eigen::VectorXd k1 = field(u);
        const Eigen::VectorXd k2 = field(u + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = field(u + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = field(u + dt * k3);
        u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return from_eigen(u);
}

EuclideanPoint resolvent_quadratic(const QuadraticFunctional& q, double tau, const EuclideanPoint& v)
{
    if (v.dim() != q.dim()) throw InputError("resolvent: dimension mismatch");
    if (!(tau > 0.0)) throw InputError("resolvent: tau must be positive");
    const auto& eig = q.eigen();
    if (!(1.0 + tau * eig.values(0) > 1e-14))
        throw PreconditionError("resolvent: I + tau A is singular; need 1/tau > -lambda");
    const Eigen::VectorXd rhs = eig.vectors.transpose() * (to_eigen(v) - tau * q.b());
    Eigen::VectorXd y(rhs.size());
    for (Eigen::Index k = 0; k < rhs.size(); ++k) y(k) = rhs(k) / (1.0 + tau * eig.values(k));
    return from_eigen(eig.vectors * y);
}

NeighborhoodSampler<EuclideanPoint> euclidean_probe_sampler(std::size_t dim, std::size_t random_directions,
                                                            std::uint64_t seed)
{
    std::vector<Eigen::VectorXd> directions;
    for (std::size_t k = 0; k < dim; ++k) directions.push_back(Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim),
                                                                                      static_cast<Eigen::Index>(k)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < random_directions; ++k) {
        Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
        directions.push_back(d.normalized());
    }
    return [directions](const EuclideanPoint& center, double radius) {
        std::vector<EuclideanPoint> probes;
        const Eigen::VectorXd c = to_eigen(center);
        for (const auto& d : directions) {
            probes.push_back(from_eigen(c + radius * d));
            probes.push_back(from_eigen(c - radius * d));
        }
        return probes;
    };
}

}  // namespace gradflow
