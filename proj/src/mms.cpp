#include "gradflow/mms.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gradflow/detail/numeric.hpp"

namespace gradflow {

void check_feasibility(double tau, double lambda, double eta)
{
    if (!(tau > 0.0)) throw PreconditionError("scheme: tau must be positive");
    if (eta == 0.0) {
        if (!(1.0 + tau * lambda > 0.0)) {
            std::ostringstream msg;
            msg << "scheme infeasible: need 1 + tau*lambda > 0 (tau = " << detail::format_double(tau)
                << ", lambda = " << detail::format_double(lambda) << ")";
            throw PreconditionError(msg.str());
        }
    } else if (!(eta - lambda < 1.0 / (2.0 * tau))) {
        std::ostringstream msg;
        msg << "scheme infeasible: need eta - lambda < 1/(2 tau) (tau = " << detail::format_double(tau)
            << ", lambda = " << detail::format_double(lambda) << ", eta = " << detail::format_double(eta) << ")";
        throw PreconditionError(msg.str());
    }
}

std::vector<double> isotonic_projection(const std::vector<double>& values)
{
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block last = blocks.back();
            blocks.pop_back();
            blocks.back().sum += last.sum;
            blocks.back().count += last.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

bool solve_tridiagonal(const std::vector<double>& diagonal, const std::vector<double>& off_diagonal,
                       std::vector<double>& x)
{
    const std::size_t n = diagonal.size();
    std::vector<double> c(n, 0.0);
    double pivot = diagonal[0];
    if (!(pivot > 0.0)) return false;
    x[0] /= pivot;
    for (std::size_t i = 1; i < n; ++i) {
        c[i - 1] = off_diagonal[i - 1] / pivot;
        pivot = diagonal[i] - off_diagonal[i - 1] * c[i - 1];
        if (!(pivot > 0.0)) return false;
        x[i] = (x[i] - off_diagonal[i - 1] * x[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return true;
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

double roundoff_allowance(double step, double value)
{
    return step == 1.0 ? 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value)) : 0.0;
}

}  // namespace

InnerSolver<EuclideanSpace> euclidean_newton_solver(const EuclideanFunctional& f)
{
    if (!f.gradient || !f.hessian) throw InputError("newton solver: gradient and hessian oracles required");
    return [f](const ProximalObjective<EuclideanSpace>& obj, const EuclideanPoint& start,
               const RelaxedSchemeParams& params) {
        const double tau = obj.tau;
        const Eigen::VectorXd anchor = to_eigen(obj.anchor);
        Eigen::VectorXd u = to_eigen(start);
        const Eigen::Index n = u.size();
        auto objective = [&](const Eigen::VectorXd& x) { return obj.value(from_eigen(x)); };
        InnerResult<EuclideanPoint> result{start, 0.0, 0, false, {}};
        double value = objective(u);
        for (int it = 0;; ++it) {
            const Eigen::VectorXd grad = (u - anchor) / tau + f.gradient(from_eigen(u));
            result.residual = grad.norm();
            result.iterations = it;
            if (result.residual <= acceptance_tolerance(params, (u - anchor).norm())) {
                result.converged = true;
                break;
            }
            if (it >= params.inner_max_iter) {
                result.message = "iteration limit";
                break;
            }
            const Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(n, n) / tau + f.hessian(from_eigen(u));
            Eigen::VectorXd dir;
            Eigen::LLT<Eigen::MatrixXd> llt(hess);
            if (llt.info() == Eigen::Success) dir = -llt.solve(grad);
            if (dir.size() != n || !dir.allFinite() || dir.dot(grad) >= 0.0) dir = -tau * grad;
            const double slope = grad.dot(dir);
            double step = 1.0;
            bool accepted = false;
            for (int k = 0; k < kMaxBacktracks; ++k, step *= 0.5) {
                const Eigen::VectorXd trial = u + step * dir;
                const double trial_value = objective(trial);
                if (std::isfinite(trial_value) &&
                    trial_value <= value + kArmijo * step * slope + roundoff_allowance(step, value)) {
                    u = trial;
                    value = trial_value;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                result.message = "line search failed";
                break;
            }
        }
        result.point = from_eigen(u);
        return result;
    };
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    detail::CompensatedSum sum;
    for (std::size_t i = 0; i < a.size(); ++i) sum.add((a[i] - b[i]) * (a[i] - b[i]));
    return sum.value();
}

bool is_sorted_strict(const std::vector<double>& q)
{
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1])) return false;
    return true;
}

}  // namespace

InnerSolver<WassersteinSpace> jko_inner_solver(const EnergySpec& spec)
{
    validate(spec);
    return [spec](const ProximalObjective<WassersteinSpace>& obj, const QuantileMeasure& start,
                  const RelaxedSchemeParams& params) {
        const std::vector<double>& anchor = obj.anchor.values();
        const std::size_t m = anchor.size();
        if (start.size() != m) throw InputError("jko solver: start and anchor differ in size");
        const double md = static_cast<double>(m);
        const double tau = obj.tau;
        const bool barrier = spec.has_internal();
        if (barrier && !is_sorted_strict(start.values()))
            throw PreconditionError("jko solver: start must be strictly increasing with an internal energy");

        auto objective = [&](const std::vector<double>& q) {
            const double e = energy(spec, q);
            if (!std::isfinite(e)) return kInfinity;
            return squared_distance(q, anchor) / (2.0 * tau * md) + e;
        };

        std::vector<double> q = start.values();
        double value = objective(q);
        InnerResult<QuantileMeasure> result{start, 0.0, 0, false, {}};
        for (int it = 0;; ++it) {
            std::vector<double> grad = energy_gradient(spec, q);
            detail::CompensatedSum norm;
            for (std::size_t i = 0; i < m; ++i) {
                grad[i] += (q[i] - anchor[i]) / (tau * md);
                norm.add(grad[i] * grad[i]);
            }
            // gradient norm in the 1/M-weighted metric
            result.residual = std::sqrt(md * norm.value());
            result.iterations = it;
            const double dist = std::sqrt(squared_distance(q, anchor) / md);
            if (result.residual <= acceptance_tolerance(params, dist)) {
                result.converged = true;
                break;
            }
            if (it >= params.inner_max_iter) {
                result.message = "iteration limit";
                break;
            }

            EnergyHessian hess = energy_hessian(spec, q);
            for (double& d : hess.diagonal) d += 1.0 / (tau * md);
            std::vector<double> dir(m);
            bool solved = false;
            if (hess.dense.empty()) {
                dir = grad;
                solved = solve_tridiagonal(hess.diagonal, hess.off_diagonal, dir);
            } else {
                Eigen::MatrixXd h = Eigen::Map<Eigen::MatrixXd>(hess.dense.data(), static_cast<Eigen::Index>(m),
                                                                static_cast<Eigen::Index>(m));
                for (std::size_t i = 0; i < m; ++i) {
                    const auto ii = static_cast<Eigen::Index>(i);
                    h(ii, ii) += hess.diagonal[i];
                    if (i + 1 < m) {
                        h(ii, ii + 1) += hess.off_diagonal[i];
                        h(ii + 1, ii) += hess.off_diagonal[i];
                    }
                }
                Eigen::LLT<Eigen::MatrixXd> llt(h);
                if (llt.info() == Eigen::Success) {
                    const Eigen::VectorXd sol =
                        llt.solve(Eigen::Map<const Eigen::VectorXd>(grad.data(), static_cast<Eigen::Index>(m)));
                    dir.assign(sol.data(), sol.data() + m);
                    solved = true;
                }
            }
            double slope = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                dir[i] = -dir[i];
                slope += dir[i] * grad[i];
            }
            if (!solved || !(slope < 0.0)) {
                slope = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    dir[i] = -tau * md * grad[i];
                    slope += dir[i] * grad[i];
                }
            }

            double step = 1.0;
            bool accepted = false;
            std::vector<double> trial(m);
            for (int k = 0; k < kMaxBacktracks; ++k, step *= 0.5) {
                for (std::size_t i = 0; i < m; ++i) trial[i] = q[i] + step * dir[i];
                double predicted = step * slope;
                if (barrier) {
                    if (!is_sorted_strict(trial)) continue;
                } else if (!std::is_sorted(trial.begin(), trial.end())) {
                    trial = isotonic_projection(trial);
                    predicted = 0.0;
                    for (std::size_t i = 0; i < m; ++i) predicted += grad[i] * (trial[i] - q[i]);
                    predicted = std::min(predicted, 0.0);
                }
                const double trial_value = objective(trial);
                if (std::isfinite(trial_value) &&
                    trial_value <= value + kArmijo * predicted + roundoff_allowance(step, value)) {
                    q.swap(trial);
                    value = trial_value;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                result.message = "line search failed";
                break;
            }
        }
        result.point = QuantileMeasure(q);
        return result;
    };
}

}  // namespace gradflow
