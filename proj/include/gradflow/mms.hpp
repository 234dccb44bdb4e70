#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gradflow/euclidean.hpp"
#include "gradflow/metric_core.hpp"
#include "gradflow/wasserstein1d.hpp"

namespace gradflow {

struct RelaxedSchemeParams {
    double eta = 0.0;  // 0 requests exact minimization
    int inner_max_iter = 100;
    double inner_tol_abs = 1e-10;
};

// Throws PreconditionError unless 1 + tau*lambda > 0 (eta = 0) or eta - lambda < 1/(2 tau) (eta > 0).
void check_feasibility(double tau, double lambda, double eta);

// Residual bound for accepting an inexact step at distance d from the anchor.
inline double acceptance_tolerance(const RelaxedSchemeParams& params, double distance_to_anchor)
{
    return std::max(params.inner_tol_abs, 0.5 * params.eta * distance_to_anchor);
}

struct StepCertificate {
    double residual = 0.0;   // first-order residual of the proximal objective
    double tolerance = 0.0;  // bound the residual was held to
    bool energy_decrease_ok = false;
    double eta_used = 0.0;
    int inner_iters = 0;
    double step_distance = 0.0;
    double energy = 0.0;  // phi at the accepted point
};

class SchemeError : public Error {
public:
    SchemeError(const std::string& what, StepCertificate certificate)
        : Error(what), certificate_(certificate) {}
    const StepCertificate& certificate() const { return certificate_; }

private:
    StepCertificate certificate_;
};

// Phi(tau, V; U) = d(U, V)^2 / (2 tau) + phi(U)
template <MetricSpace S>
struct ProximalObjective {
    using Point = typename S::Point;

    const S* space;
    double tau;
    Point anchor;
    const Functional<Point>* f;

    double value(const Point& u) const
    {
        const double fu = f->value(u);
        if (!std::isfinite(fu)) return kInfinity;
        const double d = space->distance(u, anchor);
        return d * d / (2.0 * tau) + fu;
    }
};

template <class P>
struct InnerResult {
    P point;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

template <MetricSpace S>
using InnerSolver = std::function<InnerResult<typename S::Point>(
    const ProximalObjective<S>&, const typename S::Point& start, const RelaxedSchemeParams&)>;

template <class P>
struct StepResult {
    P point;
    StepCertificate certificate;
};

template <MetricSpace S>
StepResult<typename S::Point> mms_step(const ProximalObjective<S>& obj, const RelaxedSchemeParams& params,
                                       const InnerSolver<S>& inner)
{
    if (!(params.eta >= 0.0)) throw InputError("scheme: eta must be nonnegative");
    check_feasibility(obj.tau, obj.f->lambda, params.eta);
    const double anchor_energy = obj.f->value(obj.anchor);
    if (!obj.f->contains(obj.anchor) || !std::isfinite(anchor_energy))
        throw PreconditionError("scheme: anchor outside the domain of phi");

    auto result = inner(obj, obj.anchor, params);
    StepCertificate cert;
    cert.residual = result.residual;
    cert.eta_used = params.eta;
    cert.inner_iters = result.iterations;
    cert.step_distance = obj.space->distance(result.point, obj.anchor);
    cert.tolerance = acceptance_tolerance(params, cert.step_distance);
    cert.energy = obj.f->value(result.point);
    const double objective = obj.value(result.point);
    cert.energy_decrease_ok = objective <= anchor_energy + 1e-12 * (1.0 + std::abs(anchor_energy));
    if (!result.converged || !(cert.residual <= cert.tolerance)) {
        throw SchemeError("scheme: inner solver did not reach the acceptance residual" +
                              (result.message.empty() ? std::string() : " (" + result.message + ")"),
                          cert);
    }
    if (!cert.energy_decrease_ok) throw SchemeError("scheme: proximal energy exceeds phi(anchor); step rejected", cert);
    return {std::move(result.point), cert};
}

template <class P>
struct RunResult {
    DiscreteTrajectory<P> trajectory;
    std::vector<StepCertificate> certificates;
};

template <class P>
class RunAborted : public SchemeError {
public:
    RunAborted(const SchemeError& cause, RunResult<P> partial, int failed_step)
        : SchemeError(cause.what(), cause.certificate()), partial_(std::move(partial)), failed_step_(failed_step) {}
    const RunResult<P>& partial() const { return partial_; }
    int failed_step() const { return failed_step_; }

private:
    RunResult<P> partial_;
    int failed_step_;
};

template <MetricSpace S>
RunResult<typename S::Point> mms_run(const S& space, const Functional<typename S::Point>& f,
                                     const typename S::Point& u0, const TimeGrid& grid,
                                     const RelaxedSchemeParams& params, const InnerSolver<S>& inner)
{
    using Point = typename S::Point;
    check_feasibility(grid.tau(), f.lambda, params.eta);
    if (!f.contains(u0)) throw PreconditionError("scheme: initial datum outside the domain of phi");
    RunResult<Point> out{DiscreteTrajectory<Point>{grid, {u0}, Interpolation::piecewise_constant}, {}};
    out.trajectory.points.reserve(static_cast<std::size_t>(grid.n_steps()) + 1);
    for (int n = 1; n <= grid.n_steps(); ++n) {
        ProximalObjective<S> obj{&space, grid.tau(), out.trajectory.points.back(), &f};
        try {
            auto step = mms_step(obj, params, inner);
            out.trajectory.points.push_back(std::move(step.point));
            out.certificates.push_back(step.certificate);
        } catch (const SchemeError& e) {
            RunResult<Point> partial{DiscreteTrajectory<Point>{TimeGrid(grid.tau(), n - 1), out.trajectory.points,
                                                               Interpolation::piecewise_constant},
                                     out.certificates};
            throw RunAborted<Point>(e, std::move(partial), n);
        }
    }
    return out;
}

// Proximal iteration until the exact slope drops below `slope_tol`; runs at least to t = 20/lambda with tau = 1/lambda.
template <MetricSpace S>
typename S::Point approximate_minimizer(const S& space, const Functional<typename S::Point>& f,
                                        const typename S::Point& u0, const InnerSolver<S>& inner,
                                        double slope_tol = 1e-8, int max_steps = 2000)
{
    if (!(f.lambda > 0.0)) throw PreconditionError("minimizer: requires lambda > 0");
    if (!f.has_exact_slope()) throw InputError("minimizer: slope oracle required for the certificate");
    const double tau = 1.0 / f.lambda;
    RelaxedSchemeParams params;
    params.inner_tol_abs = slope_tol * 1e-3;
    auto u = u0;
    for (int n = 1; n <= max_steps; ++n) {
        ProximalObjective<S> obj{&space, tau, u, &f};
        u = mms_step(obj, params, inner).point;
        if (n >= 20 && f.slope(u) <= slope_tol) return u;
    }
    throw NumericalError("minimizer: slope certificate not reached");
}

// Damped Newton on the proximal objective using the functional's gradient and Hessian.
InnerSolver<EuclideanSpace> euclidean_newton_solver(const EuclideanFunctional& f);

// Damped Newton in quantile coordinates with Armijo backtracking; barrier energies reject collapsed cells,
// barrier-free energies are projected back to the monotone cone by pool-adjacent-violators.
InnerSolver<WassersteinSpace> jko_inner_solver(const EnergySpec& spec);

// Least-squares projection onto nondecreasing vectors (equal weights).
std::vector<double> isotonic_projection(const std::vector<double>& values);

// Solves a symmetric positive definite tridiagonal system; returns false on a non-positive pivot.
bool solve_tridiagonal(const std::vector<double>& diagonal, const std::vector<double>& off_diagonal,
                       std::vector<double>& rhs_in_solution_out);

}  // namespace gradflow
