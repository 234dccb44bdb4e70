// Acceptance gate: one PASS/FAIL line per criterion. Arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradflow/evi.hpp"
#include "gradflow/mms.hpp"
#include "oracles/oracles.hpp"

using namespace gradflow;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

class Detail {
public:
    template <class... T>
    Detail& add(const char* fmt, T... values)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, fmt, values...);
        if (!text_.empty()) text_ += "; ";
        text_ += buf;
        return *this;
    }
    const std::string& str() const { return text_; }

private:
    std::string text_;
};

QuadraticFunctional diag12() { return QuadraticFunctional(Eigen::Vector2d(1.0, 2.0).asDiagonal().toDenseMatrix(), Eigen::Vector2d::Zero()); }

QuadraticFunctional isotropic(std::size_t dim)
{
    return QuadraticFunctional(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
                               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)));
}

EnergySpec entropy_only()
{
    EnergySpec s;
    s.internal_weight = 1.0;
    s.internal = entropy_density();
    return s;
}

EnergySpec fokker_planck_spec()
{
    EnergySpec s = entropy_only();
    s.potential_weight = 1.0;
    s.potential = quadratic_potential(1.0);
    s.potential_lambda = 1.0;
    return s;
}

EnergySpec porous_spec()
{
    EnergySpec s;
    s.internal_weight = 1.0;
    s.internal = power_density(2.0);
    return s;
}

EnergySpec mollified_spec(double h)
{
    EnergySpec s = entropy_only();
    s.potential_weight = 1.0;
    s.potential = mollified_potential(quadratic_potential(1.0), h);
    s.potential_lambda = 1.0;
    return s;
}

struct EuclideanRun {
    std::string label;
    QuadraticFunctional q;
    DiscreteTrajectory<EuclideanPoint> trajectory;
};

struct WassersteinRun {
    std::string label;
    EnergySpec spec;
    DiscreteTrajectory<QuantileMeasure> trajectory;
};

// Every trajectory produced by the gate, keyed by label; the energy criterion walks all of them.
std::map<std::string, std::shared_ptr<EuclideanRun>> euclidean_runs;
std::map<std::string, std::shared_ptr<WassersteinRun>> wasserstein_runs;

int steps_for(double horizon, double tau) { return static_cast<int>(std::lround(horizon / tau)); }

const EuclideanRun& quadratic_run(double tau)
{
    const std::string label = "quadratic diag(1,2) tau=" + detail::format_double(tau);
    auto& slot = euclidean_runs[label];
    if (!slot) {
        const auto q = diag12();
        const auto f = quadratic_functional(q);
        auto run = mms_run(EuclideanSpace(2), f.descriptor, {1.0, 1.0}, TimeGrid(tau, steps_for(1.0, tau)), {},
                           euclidean_newton_solver(f));
        run.trajectory.mode = Interpolation::piecewise_linear;
        slot = std::make_shared<EuclideanRun>(EuclideanRun{label, q, run.trajectory});
    }
    return *slot;
}

const WassersteinRun& jko_run(const std::string& label, const EnergySpec& spec, const QuantileMeasure& u0, double tau,
                              double horizon)
{
    auto& slot = wasserstein_runs[label];
    if (!slot) {
        auto run = mms_run(WassersteinSpace{}, energy_functional(spec), u0, TimeGrid(tau, steps_for(horizon, tau)), {},
                           jko_inner_solver(spec));
        run.trajectory.mode = Interpolation::piecewise_linear;
        slot = std::make_shared<WassersteinRun>(WassersteinRun{label, spec, run.trajectory});
    }
    return *slot;
}

const WassersteinRun& fokker_planck_run(double mean, double variance, double tau)
{
    std::ostringstream label;
    label << "fokker-planck N(" << mean << "," << variance << ") tau=" << tau;
    return jko_run(label.str(), fokker_planck_spec(), gaussian_quantiles(mean, variance, 400), tau, 2.0);
}

const WassersteinRun& heat_run()
{
    return jko_run("heat N(0,1) tau=1e-3", entropy_only(), gaussian_quantiles(0.0, 1.0, 400), 1e-3, 0.5);
}

const WassersteinRun& porous_run()
{
    return jko_run("porous m=2 t0=1 tau=1e-3", porous_spec(), Barenblatt(2.0).quantiles(1.0, 400), 1e-3, 1.0);
}

QuantileMeasure random_measure(std::mt19937_64& rng, std::size_t size, double mean_range, double sd_lo, double sd_hi)
{
    std::uniform_real_distribution<double> mean(-mean_range, mean_range), sd(sd_lo, sd_hi);
    std::normal_distribution<double> normal(mean(rng), sd(rng));
    std::vector<double> q(size);
    for (double& x : q) x = normal(rng);
    std::sort(q.begin(), q.end());
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1])) q[i] = std::nextafter(q[i - 1], kInfinity);
    return QuantileMeasure(std::move(q));
}

EuclideanPoint random_point(std::mt19937_64& rng, std::size_t dim, double scale)
{
    std::normal_distribution<double> normal(0.0, scale);
    EuclideanPoint p(std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) p[i] = normal(rng);
    return p;
}

double sup_error_to_exact(const EuclideanRun& run, int samples_per_cell)
{
    const EuclideanSpace space(2);
    const auto& grid = run.trajectory.grid;
    const int samples = grid.n_steps() * samples_per_cell;
    double sup = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double t = grid.end() * k / samples;
        const EuclideanPoint exact{std::exp(-t), std::exp(-2.0 * t)};
        sup = std::max(sup, dist(interpolate(space, run.trajectory, t), exact));
    }
    return sup;
}

Outcome implicit_euler_bound()
{
    Outcome out;
    Detail d;
    const double slope0 = std::sqrt(5.0);
    for (double tau : {0.1, 0.05, 0.01}) {
        const double err = sup_error_to_exact(quadratic_run(tau), 50);
        const double bound = tau * slope0 / std::sqrt(2.0);
        out.passed = out.passed && err <= bound;
        d.add("tau=%g err=%.4g bound=%.4g", tau, err, bound);
    }
    out.detail = d.str();
    return out;
}

Outcome first_order_rate()
{
    std::vector<double> logs_tau, logs_err;
    Detail d;
    for (double tau : {0.1, 0.05, 0.025, 0.0125}) {
        const double err = sup_error_to_exact(quadratic_run(tau), 50);
        logs_tau.push_back(std::log(tau));
        logs_err.push_back(std::log(err));
        d.add("tau=%g err=%.4g", tau, err);
    }
    const double slope = fit_slope(logs_tau, logs_err);
    d.add("fitted slope %.4f in [0.85, 1.15]", slope);
    return {slope >= 0.85 && slope <= 1.15, d.str()};
}

Outcome contraction()
{
    Detail d;
    const auto q = isotropic(2);
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.05 * i);
    const auto c1 = exact_flow_curve(q, {1.0, -2.0}, times);
    const auto c2 = exact_flow_curve(q, {-0.5, 3.0}, times);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = i + 1; j < times.size(); ++j) {
            const double ratio = std::exp(times[j] - times[i]) * dist(c1.point(j), c2.point(j)) / dist(c1.point(i), c2.point(i));
            worst = std::max(worst, std::abs(ratio - 1.0));
        }
    const bool exact_ok = worst <= 1e-10 && contraction_check(EuclideanSpace(2), c1, c2, 1.0, 1e-10).all_passed();
    d.add("exact OU |ratio - 1| max %.3g (<= 1e-10)", worst);

    const double tau = 1e-2;
    const auto& a = fokker_planck_run(2.0, 0.25, tau);
    const auto& b = fokker_planck_run(-1.0, 1.0, tau);
    const auto report = contraction_check(WassersteinSpace{}, sample_nodes(a.trajectory), sample_nodes(b.trajectory), 1.0,
                                          5.0 * tau, CheckKind::discrete);
    const auto& rec = report.at("contraction");
    d.add("JKO W2 ratio violation %.4g (<= 5 tau = %.3g, %ld pairs)", rec.max_violation, 5.0 * tau, rec.evaluations);
    return {exact_ok && rec.passed, d.str()};
}

Outcome fokker_planck_moments()
{
    Detail d;
    bool ok = true;
    const auto& run = fokker_planck_run(2.0, 0.25, 1e-2);
    const auto initial = oracle::sample_grid([](double x) { return oracle::gaussian_pdf(x, 2.0, 0.25); }, -8.0, 8.0, 1600);
    double t_prev = 0.0;
    oracle::GridDensity fv = initial;
    for (double t : {0.5, 1.0, 2.0}) {
        fv = oracle::fokker_planck(fv, t - t_prev);
        t_prev = t;
        const double mean_exact = 2.0 * std::exp(-t);
        const double var_exact = 1.0 + (0.25 - 1.0) * std::exp(-2.0 * t);
        const Moments mo = moments(run.trajectory.points[static_cast<std::size_t>(steps_for(t, 1e-2))]);
        const double mean_err = std::abs(mo.mean - mean_exact), var_err = std::abs(mo.variance - var_exact);
        const double oracle_mean_err = std::abs(fv.mean() - mean_exact), oracle_var_err = std::abs(fv.variance() - var_exact);
        ok = ok && mean_err <= 0.02 && var_err <= 0.03 && oracle_mean_err <= 2e-3 && oracle_var_err <= 2e-3 &&
             std::abs(mo.mean - fv.mean()) <= 0.02 && std::abs(mo.variance - fv.variance()) <= 0.03;
        d.add("t=%g |dmean|=%.2e |dvar|=%.2e (oracle %.1e/%.1e)", t, mean_err, var_err, oracle_mean_err, oracle_var_err);
    }
    return {ok, d.str()};
}

Outcome heat_variance()
{
    const auto& run = heat_run();
    std::vector<double> t, var;
    for (std::size_t n = 0; n < run.trajectory.points.size(); ++n) {
        t.push_back(run.trajectory.grid.t(static_cast<int>(n)));
        var.push_back(moments(run.trajectory.points[n]).variance);
    }
    const double slope = fit_slope(t, var);

    auto fv = oracle::sample_grid([](double x) { return oracle::gaussian_pdf(x, 0.0, 1.0); }, -10.0, 10.0, 2000);
    std::vector<double> ot, ovar{fv.variance()};
    ot.push_back(0.0);
    for (int k = 1; k <= 5; ++k) {
        fv = oracle::heat(fv, 0.1);
        ot.push_back(0.1 * k);
        ovar.push_back(fv.variance());
    }
    const double oracle_slope = fit_slope(ot, ovar);
    Detail d;
    d.add("JKO variance slope %.4f in [1.9, 2.1]", slope).add("finite-volume oracle slope %.4f", oracle_slope);
    return {slope >= 1.9 && slope <= 2.1 && std::abs(oracle_slope - 2.0) <= 0.01, d.str()};
}

Outcome porous_self_similarity()
{
    const Barenblatt profile(2.0);
    const auto& run = porous_run();
    const double edge = 1.25 * profile.half_width(2.0);
    const std::size_t cells = 200;
    const auto jko = quantiles_to_density(run.trajectory.points.back(), cells, -edge, edge);
    const auto exact = profile.on_grid(2.0, cells, -edge, edge);
    const double err = l1_distance(jko, exact);

    const double box = 4.0;
    auto fv = oracle::sample_grid([&](double x) { return profile.density(x, 1.0); }, -box, box, 800);
    fv = oracle::porous_medium(fv, 1.0, 2.0);
    const auto fv_exact = oracle::sample_grid([&](double x) { return profile.density(x, 2.0); }, -box, box, 800);
    const double oracle_err = oracle::l1(fv, fv_exact);
    Detail d;
    d.add("L1(JKO, Barenblatt t=2) = %.4f (<= 0.03)", err).add("L1(finite volumes, Barenblatt) = %.4f", oracle_err);
    return {err <= 0.03 && oracle_err <= 0.01, d.str()};
}

// EVI' residual at one (s, t) pair and one test point.
double evi_residual(const SampledCurve<QuantileMeasure>& curve, const Functional<QuantileMeasure>& f, double lambda,
                    double s, double t, const QuantileMeasure& v)
{
    EviCheckConfig<QuantileMeasure> cfg;
    cfg.lambda = lambda;
    cfg.test_points = {v};
    cfg.time_pairs = {{s, t}};
    cfg.tolerance = kInfinity;
    return evi_prime_residual(WassersteinSpace{}, curve, f, cfg).at("evi_prime").max_violation;
}

SampledCurve<QuantileMeasure> at_times(const DiscreteTrajectory<QuantileMeasure>& traj, const std::vector<double>& times)
{
    std::vector<QuantileMeasure> pts;
    for (double t : times) pts.push_back(traj.points[static_cast<std::size_t>(steps_for(t, traj.grid.tau()))]);
    return SampledCurve<QuantileMeasure>(times, std::move(pts));
}

Outcome evi_suite()
{
    Detail d;
    bool ok = true;

    // exact quadratic flows at slack 1e-8, and the lambda + 1 control
    const auto q = diag12();
    const auto fq = quadratic_functional(q);
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.05 * i);
    const auto curve = exact_flow_curve(q, {1.0, 1.0}, times);
    std::mt19937_64 rng(11);
    EviCheckConfig<EuclideanPoint> ecfg;
    ecfg.lambda = q.lambda();
    for (int k = 0; k < 8; ++k) ecfg.test_points.push_back(random_point(rng, 2, 2.0));
    ecfg.time_pairs = all_time_pairs(times);
    ecfg.tolerance = 1e-8;
    const auto exact_rep = evi_prime_residual(EuclideanSpace(2), curve, fq.descriptor, ecfg);
    ecfg.lambda += 1.0;
    const auto exact_wrong = evi_prime_residual(EuclideanSpace(2), curve, fq.descriptor, ecfg);
    ok = ok && exact_rep.all_passed() && !exact_wrong.all_passed();
    d.add("exact: max %.2e (<= 1e-8), lambda+1 max %.3g", exact_rep.at("evi_prime").max_violation,
          exact_wrong.at("evi_prime").max_violation);

    // JKO Fokker-Planck: residuals on common pairs converge at first order; C from successive differences
    const auto f = energy_functional(fokker_planck_spec());
    std::vector<double> common;
    for (int i = 0; i <= 10; ++i) common.push_back(0.2 * i);
    const std::vector<QuantileMeasure> tests{gaussian_quantiles(-2.0, 2.25, 400), gaussian_quantiles(-1.0, 1.5, 400),
                                             gaussian_quantiles(-3.0, 1.0, 400)};
    const std::vector<double> taus{0.02, 0.01, 0.005};
    std::vector<std::vector<double>> residual(taus.size());
    std::vector<double> worst(taus.size(), -kInfinity);
    for (std::size_t l = 0; l < taus.size(); ++l) {
        const auto sub = at_times(fokker_planck_run(2.0, 0.25, taus[l]).trajectory, common);
        for (std::size_t i = 0; i < common.size(); ++i)
            for (std::size_t j = i + 1; j < common.size(); ++j)
                for (const auto& v : tests) {
                    residual[l].push_back(evi_residual(sub, f, 1.0, common[i], common[j], v));
                    worst[l] = std::max(worst[l], residual[l].back());
                }
    }
    double diff_coarse = 0.0, diff_fine = 0.0, c_measured = 0.0;
    for (std::size_t k = 0; k < residual[0].size(); ++k) {
        diff_coarse = std::max(diff_coarse, std::abs(residual[0][k] - residual[1][k]));
        diff_fine = std::max(diff_fine, std::abs(residual[1][k] - residual[2][k]));
        c_measured = std::max(c_measured, 2.0 * (residual[1][k] - residual[2][k]) / taus[1]);
    }
    const double halving = diff_fine / diff_coarse;
    bool slack_ok = true;
    for (std::size_t l = 0; l < taus.size(); ++l) slack_ok = slack_ok && worst[l] <= c_measured * taus[l];
    ok = ok && slack_ok && halving >= 0.35 && halving <= 0.65;
    d.add("JKO C=%.3f; max residual %.3g/%.3g/%.3g vs C*tau %.3g/%.3g/%.3g", c_measured, worst[0], worst[1], worst[2],
          c_measured * taus[0], c_measured * taus[1], c_measured * taus[2]);
    d.add("difference ratio under halving %.3f (0.5 +- 30%%)", halving);

    // negative control on the JKO flow
    double wrong = -kInfinity;
    const auto sub = at_times(fokker_planck_run(2.0, 0.25, 0.01).trajectory, common);
    for (std::size_t i = 0; i < common.size(); ++i)
        for (std::size_t j = i + 1; j < common.size(); ++j)
            for (const auto& v : tests) wrong = std::max(wrong, evi_residual(sub, f, 2.0, common[i], common[j], v));
    ok = ok && wrong > c_measured * 0.01;
    d.add("JKO lambda+1 max %.3g", wrong);
    return {ok, d.str()};
}

Outcome regularization_and_decay()
{
    Detail d;
    bool ok = true;

    // exact isotropic OU, lambda = 1, minimizer 0
    const auto q = isotropic(2);
    const auto fq = quadratic_functional(q);
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) times.push_back(0.05 * i);
    const auto curve = exact_flow_curve(q, {1.5, -0.5}, times);
    std::mt19937_64 rng(5);
    EviCheckConfig<EuclideanPoint> ecfg;
    ecfg.lambda = 1.0;
    for (int k = 0; k < 6; ++k) ecfg.test_points.push_back(random_point(rng, 2, 2.0));
    ecfg.tolerance = 1e-8;
    const Minimizer<EuclideanPoint> origin{{0.0, 0.0}, 0.0};
    auto exact_rep = regularization_check(EuclideanSpace(2), curve, fq.descriptor, ecfg);
    exact_rep.merge(asymptotic_check(EuclideanSpace(2), curve, fq.descriptor, ecfg, origin));
    std::vector<double> dist_exact, gap_exact;
    for (const auto& p : curve.points()) {
        dist_exact.push_back(dist(p, origin.point));
        gap_exact.push_back(fq.descriptor.value(p));
    }
    const double rate_d = -fit_log_slope(times, dist_exact), rate_e = -fit_log_slope(times, gap_exact);
    ok = ok && exact_rep.all_passed() && std::abs(rate_d - 1.0) <= 0.05 && std::abs(rate_e - 2.0) <= 0.1;
    d.add("exact OU: %zu checks pass=%d, rates %.4f/%.4f", exact_rep.checks().size(), exact_rep.all_passed(), rate_d, rate_e);

    // JKO Fokker-Planck with the discrete minimizer
    const double tau = 1e-2;
    const auto& run = fokker_planck_run(2.0, 0.25, tau);
    const auto spec = fokker_planck_spec();
    const auto f = energy_functional(spec);
    const auto star = approximate_minimizer(WassersteinSpace{}, f, run.trajectory.points.front(), jko_inner_solver(spec));
    const Minimizer<QuantileMeasure> minimizer{star, f.value(star)};
    const auto jcurve = sample_nodes(run.trajectory);
    std::vector<double> sub_times;
    for (int i = 0; i <= 40; ++i) sub_times.push_back(0.05 * i);
    const auto sub = at_times(run.trajectory, sub_times);
    EviCheckConfig<QuantileMeasure> wcfg;
    wcfg.lambda = 1.0;
    wcfg.test_points = {gaussian_quantiles(0.0, 1.0, 400), gaussian_quantiles(1.0, 0.5, 400), gaussian_quantiles(-1.0, 2.0, 400)};
    wcfg.tolerance = tau;
    wcfg.kind = CheckKind::discrete;
    auto jko_rep = regularization_check(WassersteinSpace{}, sub, f, wcfg);
    jko_rep.merge(asymptotic_check(WassersteinSpace{}, sub, f, wcfg, minimizer));
    std::vector<double> t, dist_jko, gap_jko;
    for (std::size_t n = 0; n < jcurve.size(); ++n) {
        t.push_back(jcurve.time(n));
        dist_jko.push_back(w2(jcurve.point(n), star));
        gap_jko.push_back(f.value(jcurve.point(n)) - minimizer.value);
    }
    const double jrate_d = -fit_log_slope(t, dist_jko), jrate_e = -fit_log_slope(t, gap_jko);
    ok = ok && jko_rep.all_passed() && std::abs(jrate_d - 1.0) <= 0.05 && std::abs(jrate_e - 2.0) <= 0.1;
    d.add("JKO: %zu checks pass=%d, rates %.4f/%.4f (targets 1 and 2 within 5%%)", jko_rep.checks().size(),
          jko_rep.all_passed(), jrate_d, jrate_e);
    for (const auto& rec : jko_rep.checks())
        if (!rec.passed) d.add("failed %s %.3g", rec.name.c_str(), rec.max_violation);
    return {ok, d.str()};
}

Outcome geodesic_convexity()
{
    Detail d;
    bool ok = true;
    const int trials = 200;
    const std::size_t size = 50;
    PairSampler<QuantileMeasure> spread = [&](std::mt19937_64& rng) {
        auto a = random_measure(rng, size, 2.0, 0.3, 2.0);
        auto b = random_measure(rng, size, 2.0, 0.3, 2.0);
        return std::make_pair(a, b);
    };
    PairSampler<QuantileMeasure> central = [&](std::mt19937_64& rng) {
        auto a = random_measure(rng, size, 0.5, 0.05, 0.4);
        auto b = random_measure(rng, size, 0.5, 0.05, 0.4);
        return std::make_pair(a, b);
    };

    struct Case {
        const char* name;
        EnergySpec spec;
    };
    std::vector<Case> cases;
    {
        EnergySpec s;
        s.potential_weight = 1.0;
        s.potential = quadratic_potential(1.5, 0.3);
        s.potential_lambda = 1.5;
        cases.push_back({"potential", s});
    }
    {
        EnergySpec s;
        s.interaction_weight = 1.0;
        s.interaction = quadratic_kernel(-0.25);
        s.interaction_lambda = -0.5;
        cases.push_back({"interaction", s});
    }
    cases.push_back({"entropy", entropy_only()});
    cases.push_back({"power m=2", porous_spec()});
    std::uint64_t seed = 100;
    for (const auto& c : cases) {
        const auto rep = geodesic_convexity_probe(WassersteinSpace{}, energy_functional(c.spec), c.spec.lambda(), spread,
                                                  trials, seed++, 1e-9);
        ok = ok && rep.all_passed();
        d.add("%s max %.2e", c.name, rep.at("geodesic_convexity").max_violation);
    }

    EnergySpec well;
    well.potential_weight = 1.0;
    well.potential = double_well_potential();
    well.potential_lambda = -1.0;
    const auto w_rep =
        geodesic_convexity_probe(WassersteinSpace{}, energy_functional(well), 0.0, central, trials, seed++, 1e-9);
    const auto e_well = double_well(2);
    PairSampler<EuclideanPoint> near_origin = [](std::mt19937_64& rng) {
        return std::make_pair(random_point(rng, 2, 0.5), random_point(rng, 2, 0.5));
    };
    const auto e_rep = geodesic_convexity_probe(EuclideanSpace(2), e_well.descriptor, 0.0, near_origin, trials, seed++, 1e-9);
    const auto e_ok = geodesic_convexity_probe(EuclideanSpace(2), e_well.descriptor, -1.0, near_origin, trials, seed++, 1e-9);
    ok = ok && !w_rep.all_passed() && !e_rep.all_passed() && e_ok.all_passed();
    d.add("double-well at lambda=0 fails: W %.3g, R^2 %.3g", w_rep.at("geodesic_convexity").max_violation,
          e_rep.at("geodesic_convexity").max_violation);
    return {ok, d.str()};
}

Outcome curvature()
{
    Detail d;
    const int trials = 200;
    TripleSampler<EuclideanPoint> euclid = [](std::mt19937_64& rng) {
        return std::make_tuple(random_point(rng, 3, 1.0), random_point(rng, 3, 1.0), random_point(rng, 3, 1.0));
    };
    const auto e = curvature_probes(EuclideanSpace(3), euclid, trials, 21, 1.0, 1e-12);
    TripleSampler<QuantileMeasure> measures = [](std::mt19937_64& rng) {
        return std::make_tuple(random_measure(rng, 50, 2.0, 0.3, 2.0), random_measure(rng, 50, 2.0, 0.3, 2.0),
                               random_measure(rng, 50, 2.0, 0.3, 2.0));
    };
    const auto w = curvature_probes(WassersteinSpace{}, measures, trials, 22, 1.0, 1e-9);
    const bool ok = e.at("hilbert_equality_gap").passed && w.at("positive_curvature").passed &&
                    w.at("k_semiconcavity").passed && w.at("hilbert_equality_gap").passed;
    d.add("R^3 equality gap %.2e (<= 1e-12)", e.at("hilbert_equality_gap").max_violation);
    d.add("W2 PC %.2e, 1-SC %.2e, gap %.2e (<= 1e-9)", w.at("positive_curvature").max_violation,
          w.at("k_semiconcavity").max_violation, w.at("hilbert_equality_gap").max_violation);
    return {ok, d.str()};
}

constexpr double kGammaTau = 5e-3;
constexpr std::size_t kGammaSize = 200;

Outcome gamma_stability()
{
    const QuantileMeasure u0 = gaussian_quantiles(1.0, 0.5, kGammaSize);
    std::map<std::string, EnergySpec> specs;
    auto named = [&](const EnergySpec& spec, const std::string& name) {
        specs[name] = spec;
        auto f = energy_functional(spec);
        f.name = name;
        return f;
    };
    std::vector<QuantileMeasure> bound_samples;
    for (double mean : {-2.0, 0.0, 1.0, 3.0})
        for (double var : {0.05, 1.0, 4.0}) bound_samples.push_back(gaussian_quantiles(mean, var, kGammaSize));
    const GammaFamily<QuantileMeasure> fam{
        .indices = {4.0, 8.0, 16.0},
        .member = [&](double h) { return named(mollified_spec(h), "h=" + detail::format_double(h)); },
        .limit = named(fokker_planck_spec(), "limit"),
        .initial = [&](double) { return u0; },
        .initial_limit = u0,
        .kappa_o = 0.0,
        .phi_o = -0.5 * std::log(2.0 * std::numbers::pi) - 0.1,
        .o = u0,
        .lower_bound_samples = bound_samples,
    };

    FlowRunner<QuantileMeasure> runner = [&](const Functional<QuantileMeasure>& f, const QuantileMeasure& start) {
        const auto& run = jko_run("gamma " + f.name, specs.at(f.name), start, kGammaTau, 1.0);
        return run.trajectory;
    };
    const double floor = kGammaTau + 1.0 / static_cast<double>(kGammaSize);
    const auto result = gamma_stability_harness(WassersteinSpace{}, fam, runner, {1.0}, floor);
    std::vector<double> dist;
    for (const auto& row : result.table) dist.push_back(row.distance);
    bool ok = result.report.all_passed() && dist.size() == 3;
    Detail d;
    if (dist.size() == 3) {
        ok = ok && dist[0] - dist[1] > floor && dist[1] - dist[2] > floor && dist[2] > floor;
        d.add("d(t=1) for h=4/8/16: %.4f/%.4f/%.4f, noise floor %.3f", dist[0], dist[1], dist[2], floor);
    }
    for (const auto& rec : result.report.checks()) d.add("%s %s", rec.name.c_str(), rec.passed ? "ok" : "FAILED");
    return {ok, d.str()};
}

Outcome energy_dissipation()
{
    // make sure every trajectory the other criteria use exists
    for (double tau : {0.1, 0.05, 0.025, 0.0125, 0.01}) quadratic_run(tau);
    for (double tau : {0.02, 0.01, 0.005}) fokker_planck_run(2.0, 0.25, tau);
    fokker_planck_run(-1.0, 1.0, 1e-2);
    heat_run();
    porous_run();
    if (wasserstein_runs.count("gamma limit") == 0) gamma_stability();

    bool ok = true;
    std::size_t count = 0;
    double worst_ineq = -kInfinity, worst_identity = 0.0;
    std::string worst_label;
    auto record = [&](const VerificationReport& rep, const std::string& label) {
        ++count;
        const auto& ineq = rep.at("edi_inequality");
        const auto& identity = rep.at("energy_identity");
        ok = ok && ineq.passed && identity.passed;
        worst_ineq = std::max(worst_ineq, ineq.max_violation);
        const double share = identity.tolerance > 0.0 ? identity.max_violation / identity.tolerance : 0.0;
        if (share > worst_identity) {
            worst_identity = share;
            worst_label = label;
        }
    };
    for (const auto& [label, run] : euclidean_runs)
        record(energy_identity_check(EuclideanSpace(2), run->trajectory, quadratic_functional(run->q).descriptor, 1e-9),
               label);
    for (const auto& [label, run] : wasserstein_runs)
        record(energy_identity_check(WassersteinSpace{}, run->trajectory, energy_functional(run->spec), 1e-9), label);
    Detail d;
    d.add("%zu trajectories; EDI' worst (dissipation - drop) %.3g (<= 1e-9)", count, worst_ineq);
    d.add("identity residual at most %.3f of 3 tau (phi0 - phiN), worst: %s", worst_identity, worst_label.c_str());
    return {ok, d.str()};
}

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "implicit Euler error bound", 1.0, implicit_euler_bound},
    {2, "first-order rate", 1.0, first_order_rate},
    {3, "contraction", 30.0, contraction},
    {4, "Fokker-Planck moments", 60.0, fokker_planck_moments},
    {5, "heat variance law", 60.0, heat_variance},
    {6, "porous medium self-similarity", 120.0, porous_self_similarity},
    {7, "EVI' suite", 60.0, evi_suite},
    {8, "regularization and decay", 60.0, regularization_and_decay},
    {9, "geodesic convexity probes", 60.0, geodesic_convexity},
    {10, "curvature probes", 60.0, curvature},
    {11, "Gamma-stability", 60.0, gamma_stability},
    {12, "energy dissipation", 120.0, energy_dissipation},
};

}  // namespace

int main(int argc, char** argv)
{
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : kCriteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool passed = outcome.passed && seconds < c.budget_seconds;
        if (!passed) ++failures;
        std::printf("AC%-2d %s  %-30s %7.3fs (budget %gs)  %s\n", c.id, passed ? "PASS" : "FAIL", c.title, seconds,
                    c.budget_seconds, outcome.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
