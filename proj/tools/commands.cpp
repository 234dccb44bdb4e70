#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "config.hpp"
#include "gradflow/evi.hpp"

namespace gradflow::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using detail::format_double;

constexpr int kExitPass = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

const std::vector<std::string> kCheckNames = {"evi_prime",       "contraction", "regularization", "asymptotic",
                                              "energy_identity", "convexity",   "curvature"};

struct EuclideanCarrier {
    using Space = EuclideanSpace;
    using Point = EuclideanPoint;

    Space space;
    Functional<Point> f;
    InnerSolver<Space> inner;
    Point u0;
    std::optional<QuadraticFunctional> quadratic;

    static const std::vector<double>& coords(const Point& p) { return p.coords; }
    static Point point(std::vector<double> c) { return EuclideanPoint(std::move(c)); }
};

struct WassersteinCarrier {
    using Space = WassersteinSpace;
    using Point = QuantileMeasure;

    Space space;
    EnergySpec spec;
    Functional<Point> f;
    InnerSolver<Space> inner;
    Point u0;

    static const std::vector<double>& coords(const Point& p) { return p.values(); }
    static Point point(std::vector<double> c) { return QuantileMeasure(std::move(c)); }
};

EuclideanCarrier euclidean_carrier(const RunConfig& cfg)
{
    auto p = euclidean_problem(cfg);
    return {EuclideanSpace(p.initial.dim()), p.functional.descriptor, euclidean_newton_solver(p.functional),
            p.initial, p.quadratic};
}

WassersteinCarrier wasserstein_carrier(const RunConfig& cfg, std::size_t grid_size)
{
    auto p = wasserstein_problem(cfg, grid_size);
    return {WassersteinSpace{}, p.spec, energy_functional(p.spec), jko_inner_solver(p.spec), p.initial};
}

template <class P>
struct Simulation {
    DiscreteTrajectory<P> trajectory;
    std::vector<StepCertificate> certificates;
    std::string failure;
    int failed_step = 0;
};

template <class C>
Simulation<typename C::Point> simulate(const C& c, const RunConfig& cfg, double tau, int steps, bool exact)
{
    using P = typename C::Point;
    const TimeGrid grid(tau, steps);
    if constexpr (std::is_same_v<C, EuclideanCarrier>) {
        if (exact) {
            Simulation<P> sim{{grid, {c.u0}, Interpolation::piecewise_linear}, {}, {}, 0};
            for (int n = 1; n <= steps; ++n) {
                P next = exact_flow_quadratic(*c.quadratic, c.u0, grid.t(n));
                StepCertificate cert;
                cert.energy_decrease_ok = true;
                cert.step_distance = dist(next, sim.trajectory.points.back());
                cert.energy = c.f.value(next);
                sim.certificates.push_back(cert);
                sim.trajectory.points.push_back(std::move(next));
            }
            return sim;
        }
    }
    try {
        auto result = mms_run(c.space, c.f, c.u0, grid, cfg.params, c.inner);
        result.trajectory.mode = Interpolation::piecewise_linear;
        return {std::move(result.trajectory), std::move(result.certificates), {}, 0};
    } catch (const RunAborted<P>& e) {
        Simulation<P> sim{e.partial().trajectory, e.partial().certificates, e.what(), e.failed_step()};
        sim.trajectory.mode = Interpolation::piecewise_linear;
        return sim;
    }
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream file(path, std::ios::binary);
    file << text;
    if (!file) throw InputError("cannot write " + path.string());
}

std::string coordinate_header(std::size_t width)
{
    std::string header = "n,t";
    for (std::size_t i = 0; i < width; ++i) header += ",c" + std::to_string(i);
    return header;
}

template <class C>
void write_trajectory(const fs::path& dir, const C& c, const Simulation<typename C::Point>& sim)
{
    const auto& traj = sim.trajectory;
    std::ostringstream table, points;
    table << "n,t,phi,dist_step,grad_residual\n";
    points << coordinate_header(C::coords(traj.points.front()).size()) << '\n';
    for (std::size_t n = 0; n < traj.points.size(); ++n) {
        const double t = traj.grid.t(static_cast<int>(n));
        const double step = n == 0 ? 0.0 : sim.certificates[n - 1].step_distance;
        const double residual = n == 0 ? 0.0 : sim.certificates[n - 1].residual;
        table << n << ',' << format_double(t) << ',' << format_double(c.f.value(traj.points[n])) << ','
              << format_double(step) << ',' << format_double(residual) << '\n';
        points << n << ',' << format_double(t);
        for (double x : C::coords(traj.points[n])) points << ',' << format_double(x);
        points << '\n';
    }
    write_file(dir / "trajectory.csv", table.str());
    write_file(dir / "points.csv", points.str());
}

json certificate_json(const StepCertificate& cert, std::size_t n)
{
    return {{"n", n},
            {"residual", cert.residual},
            {"tolerance", cert.tolerance},
            {"energy_decrease_ok", cert.energy_decrease_ok},
            {"eta_used", cert.eta_used},
            {"inner_iters", cert.inner_iters},
            {"step_distance", cert.step_distance},
            {"energy", cert.energy}};
}

template <class C>
int run_with(const C& c, const RunConfig& cfg, const fs::path& dir, std::ostream& out, std::ostream& err)
{
    const auto sim = simulate(c, cfg, cfg.tau, cfg.steps, cfg.scheme == "exact");
    write_trajectory(dir, c, sim);
    std::vector<std::string> artifacts{"trajectory.csv", "points.csv"};

    if constexpr (std::is_same_v<C, WassersteinCarrier>) {
        for (double t : cfg.snapshots) {
            const int n = cell_index(sim.trajectory.grid, t);
            if (n >= static_cast<int>(sim.trajectory.points.size())) continue;
            std::ostringstream csv;
            write_density_csv(csv, quantiles_to_density(sim.trajectory.points[static_cast<std::size_t>(n)],
                                                        cfg.snapshot_cells));
            const std::string name = "density_t" + format_double(t) + ".csv";
            write_file(dir / name, csv.str());
            artifacts.push_back(name);
        }
    }

    json manifest;
    manifest["config"] = cfg.resolved;
    manifest["carrier"] = cfg.carrier;
    manifest["scheme"] = cfg.scheme;
    manifest["tau"] = cfg.tau;
    manifest["T"] = cfg.horizon;
    manifest["steps"] = cfg.steps;
    manifest["eta"] = cfg.params.eta;
    manifest["seed"] = cfg.seed;
    manifest["lambda"] = c.f.lambda;
    manifest["energy"] = c.f.name;
    manifest["steps_completed"] = sim.certificates.size();
    json certs = json::array();
    for (std::size_t n = 0; n < sim.certificates.size(); ++n) certs.push_back(certificate_json(sim.certificates[n], n + 1));
    manifest["certificates"] = certs;
    manifest["status"] = sim.failure.empty() ? "completed" : "aborted";
    if (!sim.failure.empty()) {
        manifest["failed_step"] = sim.failed_step;
        manifest["message"] = sim.failure;
    }
    artifacts.push_back("manifest.json");
    manifest["artifacts"] = artifacts;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    const double phi_end = c.f.value(sim.trajectory.points.back());
    if (!sim.failure.empty()) {
        err << "error: solver failed at step " << sim.failed_step << ": " << sim.failure << '\n';
        return kExitSolver;
    }
    out << "run: " << cfg.steps << " steps of tau " << format_double(cfg.tau) << ", phi " << format_double(c.f.value(c.u0))
        << " -> " << format_double(phi_end) << '\n';
    return kExitPass;
}

int command_run(const RunConfig& cfg, const fs::path& dir, std::ostream& out, std::ostream& err)
{
    fs::create_directories(dir);
    if (cfg.euclidean()) return run_with(euclidean_carrier(cfg), cfg, dir, out, err);
    return run_with(wasserstein_carrier(cfg, cfg.grid_size), cfg, dir, out, err);
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

template <class C>
std::vector<typename C::Point> read_points(const fs::path& path, double tau, std::size_t width)
{
    std::ifstream in(path);
    if (!in) throw InputError("missing artifact " + path.string());
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != coordinate_header(width)) throw InputError(path.string() + ": header does not match the configuration");
    std::vector<typename C::Point> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != width + 2) throw InputError(path.string() + ": wrong number of columns");
        std::vector<double> values;
        for (const auto& cell : cells) {
            const auto v = detail::parse_double(cell);
            if (!v) throw InputError(path.string() + ": unparsable value '" + cell + "'");
            values.push_back(*v);
        }
        const double n = static_cast<double>(points.size());
        if (values[0] != n || std::abs(values[1] - n * tau) > 1e-9 * std::max(1.0, n * tau))
            throw InputError(path.string() + ": row times do not match tau");
        points.push_back(C::point(std::vector<double>(values.begin() + 2, values.end())));
    }
    if (points.empty()) throw InputError(path.string() + ": no rows");
    return points;
}

CheckRecord skipped_record(const std::string& name, const std::string& note, CheckKind kind)
{
    ViolationTracker tracker(name, 0.0, kind);
    tracker.skip(note);
    return tracker.finish();
}

template <class P>
SampledCurve<P> thin(const SampledCurve<P>& curve, std::size_t max_samples)
{
    const std::size_t stride = std::max<std::size_t>(1, (curve.size() + max_samples - 2) / (max_samples - 1));
    std::vector<double> times;
    std::vector<P> points;
    for (std::size_t i = 0; i < curve.size(); i += stride) {
        times.push_back(curve.time(i));
        points.push_back(curve.point(i));
    }
    if (times.back() != curve.times().back()) {
        times.push_back(curve.times().back());
        points.push_back(curve.points().back());
    }
    return SampledCurve<P>(std::move(times), std::move(points));
}

double spread(const EuclideanPoint& u0)
{
    double m = 0.0;
    for (double x : u0.coords) m = std::max(m, std::abs(x));
    return 1.0 + m;
}

EuclideanPoint random_near(const EuclideanPoint& center, double scale, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, scale);
    EuclideanPoint p = center;
    for (double& x : p.coords) x += normal(rng);
    return p;
}

QuantileMeasure random_measure(const QuantileMeasure& reference, std::mt19937_64& rng)
{
    const Moments mo = moments(reference);
    const double sd = std::sqrt(std::max(mo.variance, 1e-12));
    std::uniform_real_distribution<double> shift(-2.0, 2.0), scale(0.5, 2.0);
    std::normal_distribution<double> normal(mo.mean + shift(rng) * sd, scale(rng) * sd);
    std::vector<double> q(reference.size());
    for (double& x : q) x = normal(rng);
    std::sort(q.begin(), q.end());
    for (std::size_t i = 1; i < q.size(); ++i)
        if (!(q[i] > q[i - 1])) q[i] = std::nextafter(q[i - 1], kInfinity);
    return QuantileMeasure(std::move(q));
}

std::vector<EuclideanPoint> test_points(const EuclideanCarrier& c, int count, std::mt19937_64& rng)
{
    std::vector<EuclideanPoint> out;
    for (int k = 0; k < count; ++k) out.push_back(random_near(c.u0, spread(c.u0), rng));
    return out;
}

std::vector<QuantileMeasure> test_points(const WassersteinCarrier& c, int count, std::mt19937_64& rng)
{
    const Moments mo = moments(c.u0);
    const double sd = std::sqrt(std::max(mo.variance, 1e-12));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<QuantileMeasure> out;
    for (int k = 0; k < count; ++k) {
        const double mean = mo.mean + sd * normal(rng);
        const double variance = sd * sd * std::exp(0.5 * normal(rng));
        out.push_back(gaussian_quantiles(mean, variance, c.u0.size()));
    }
    return out;
}

PairSampler<EuclideanPoint> pair_sampler(const EuclideanCarrier& c)
{
    return [u0 = c.u0](std::mt19937_64& rng) {
        auto a = random_near(u0, spread(u0), rng);
        auto b = random_near(u0, spread(u0), rng);
        return std::make_pair(a, b);
    };
}

PairSampler<QuantileMeasure> pair_sampler(const WassersteinCarrier& c)
{
    return [u0 = c.u0](std::mt19937_64& rng) {
        auto a = random_measure(u0, rng);
        auto b = random_measure(u0, rng);
        return std::make_pair(a, b);
    };
}

TripleSampler<EuclideanPoint> triple_sampler(const EuclideanCarrier& c)
{
    return [u0 = c.u0](std::mt19937_64& rng) {
        auto a = random_near(u0, spread(u0), rng);
        auto b = random_near(u0, spread(u0), rng);
        auto w = random_near(u0, spread(u0), rng);
        return std::make_tuple(a, b, w);
    };
}

TripleSampler<QuantileMeasure> triple_sampler(const WassersteinCarrier& c)
{
    return [u0 = c.u0](std::mt19937_64& rng) {
        auto a = random_measure(u0, rng);
        auto b = random_measure(u0, rng);
        auto w = random_measure(u0, rng);
        return std::make_tuple(a, b, w);
    };
}

std::optional<Minimizer<EuclideanPoint>> minimizer(const EuclideanCarrier& c)
{
    if (!c.quadratic || c.f.lambda < 0.0) return std::nullopt;
    const Eigen::VectorXd x = c.quadratic->a().completeOrthogonalDecomposition().solve(-c.quadratic->b());
    if ((c.quadratic->a() * x + c.quadratic->b()).norm() > 1e-10 * (1.0 + c.quadratic->b().norm())) return std::nullopt;
    const EuclideanPoint p = from_eigen(x);
    return Minimizer<EuclideanPoint>{p, c.f.value(p)};
}

std::optional<Minimizer<QuantileMeasure>> minimizer(const WassersteinCarrier& c)
{
    if (!(c.f.lambda > 0.0)) return std::nullopt;
    const QuantileMeasure p = approximate_minimizer(c.space, c.f, c.u0, c.inner);
    return Minimizer<QuantileMeasure>{p, c.f.value(p)};
}

// Slack for a discrete trajectory, scaled with the step size.
constexpr double kDiscreteSlackPerTau = 1.0;
constexpr double kAnalyticTolerance = 1e-8;
constexpr double kProbeTolerance = 1e-9;
constexpr std::size_t kMaxSamples = 60;

template <class C>
VerificationReport verify_with(const C& c, const RunConfig& cfg, const std::vector<typename C::Point>& points,
                               const std::set<std::string>& checks)
{
    using P = typename C::Point;
    const bool exact = cfg.scheme == "exact";
    const CheckKind kind = exact ? CheckKind::analytic : CheckKind::discrete;
    const double tol = cfg.verify.tolerance ? *cfg.verify.tolerance
                                            : (exact ? kAnalyticTolerance : kDiscreteSlackPerTau * cfg.tau);
    const double lambda = c.f.lambda;
    const DiscreteTrajectory<P> traj{TimeGrid(cfg.tau, static_cast<int>(points.size()) - 1), points,
                                     Interpolation::piecewise_linear};
    const SampledCurve<P> curve = sample_nodes(traj);
    const bool moving = curve.size() >= 2;
    std::mt19937_64 rng(cfg.seed);

    EviCheckConfig<P> evi;
    evi.lambda = lambda;
    evi.test_points = test_points(c, cfg.verify.test_points, rng);
    evi.tolerance = tol;
    evi.kind = kind;

    VerificationReport report;
    auto enabled = [&](const std::string& name) { return checks.count(name) > 0; };
    if (enabled("evi_prime")) {
        if (moving) {
            const auto sub = thin(curve, kMaxSamples);
            evi.time_pairs = all_time_pairs(sub.times());
            report.merge(evi_prime_residual(c.space, sub, c.f, evi));
        } else {
            report.add(skipped_record("evi_prime", "single sample", kind));
        }
    }
    if (enabled("contraction")) {
        if (moving) {
            const auto [head, tail] = shifted_pair(curve, 1);
            report.merge(contraction_check(c.space, head, tail, lambda, exact ? 1e-10 : tol, kind));
        } else {
            report.add(skipped_record("contraction", "single sample", kind));
        }
    }
    if (enabled("regularization")) report.merge(regularization_check(c.space, thin(curve, kMaxSamples), c.f, evi));
    if (enabled("asymptotic"))
        report.merge(asymptotic_check(c.space, thin(curve, kMaxSamples), c.f, evi, minimizer(c)));
    if (enabled("energy_identity")) {
        if (c.f.has_exact_slope()) {
            report.merge(energy_identity_check(c.space, traj, c.f, tol, 3.0, kind));
        } else {
            report.add(skipped_record("edi_inequality", "slope unavailable", kind));
        }
    }
    if (enabled("convexity"))
        report.merge(geodesic_convexity_probe(c.space, c.f, lambda, pair_sampler(c), cfg.verify.trials,
                                              cfg.seed + 1, kProbeTolerance));
    if (enabled("curvature"))
        report.merge(curvature_probes(c.space, triple_sampler(c), cfg.verify.trials, cfg.seed + 2,
                                      cfg.verify.curvature_constant, kProbeTolerance));
    return report;
}

std::set<std::string> selected_checks(const RunConfig& cfg, const std::string& flag)
{
    std::vector<std::string> names = cfg.verify.checks;
    if (!flag.empty()) {
        names.clear();
        std::stringstream ss(flag);
        std::string name;
        while (std::getline(ss, name, ','))
            if (!name.empty()) names.push_back(name);
    }
    if (names.empty()) names = kCheckNames;
    for (const auto& name : names)
        if (std::find(kCheckNames.begin(), kCheckNames.end(), name) == kCheckNames.end())
            throw ConfigError("unknown check '" + name + "'");
    return {names.begin(), names.end()};
}

int command_verify(const RunConfig& cfg, const fs::path& dir, const std::string& checks_flag, std::ostream& out)
{
    const auto checks = selected_checks(cfg, checks_flag);
    VerificationReport report;
    if (cfg.euclidean()) {
        const auto c = euclidean_carrier(cfg);
        report = verify_with(c, cfg, read_points<EuclideanCarrier>(dir / "points.csv", cfg.tau, c.u0.dim()), checks);
    } else {
        const auto c = wasserstein_carrier(cfg, cfg.grid_size);
        report = verify_with(c, cfg, read_points<WassersteinCarrier>(dir / "points.csv", cfg.tau, cfg.grid_size), checks);
    }
    write_file(dir / "report.json", report.to_json() + "\n");
    write_file(dir / "report.csv", report.to_csv());
    for (const auto& rec : report.checks()) {
        out << (!rec.applicable ? "SKIP" : rec.passed ? "PASS" : "FAIL") << "  " << rec.name;
        if (rec.applicable)
            out << "  max_violation=" << format_double(rec.max_violation) << "  tolerance=" << format_double(rec.tolerance);
        if (!rec.note.empty()) out << "  (" << rec.note << ")";
        out << '\n';
    }
    out << "verify: " << report.passed_count() << " passed, " << report.failed_count() << " failed, "
        << report.skipped_count() << " skipped\n";
    return report.all_passed() ? kExitPass : kExitVerifyFailed;
}

struct SweepRow {
    double level = 0.0;
    double error = 0.0;
};

double fitted_log_slope(const std::vector<double>& x, const std::vector<double>& err)
{
    std::vector<double> lx, le;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(err[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        lx.push_back(std::log(x[i]));
        le.push_back(std::log(err[i]));
    }
    return fit_slope(lx, le);
}

std::string level_name(const char* prefix, double value) { return std::string(prefix) + format_double(value); }

template <class C, class MakeCarrier>
std::vector<Simulation<typename C::Point>> run_levels(const RunConfig& cfg, const std::vector<double>& taus,
                                                      const std::vector<std::size_t>& sizes, MakeCarrier make,
                                                      const fs::path& dir)
{
    const std::size_t count = std::max(taus.size(), sizes.size());
    std::vector<std::future<Simulation<typename C::Point>>> jobs;
    for (std::size_t k = 0; k < count; ++k) {
        jobs.push_back(std::async(std::launch::async, [&, k] {
            const double tau = taus.empty() ? cfg.tau : taus[k];
            const std::size_t size = sizes.empty() ? cfg.grid_size : sizes[k];
            const C c = make(size);
            const int steps = static_cast<int>(std::round(cfg.horizon / tau));
            auto sim = simulate(c, cfg, tau, steps, false);
            const fs::path sub = dir / (taus.empty() ? level_name("M_", static_cast<double>(size)) : level_name("tau_", tau));
            fs::create_directories(sub);
            write_trajectory(sub, c, sim);
            return sim;
        }));
    }
    std::vector<Simulation<typename C::Point>> out;
    for (auto& job : jobs) out.push_back(job.get());
    return out;
}

template <class C>
std::vector<SweepRow> tau_sweep_errors(const C& c, const RunConfig& cfg, const std::vector<double>& taus,
                                       const std::vector<Simulation<typename C::Point>>& sims, bool exact_reference)
{
    using P = typename C::Point;
    const double finest = taus.back();
    const int samples = static_cast<int>(std::round(4.0 * cfg.horizon / finest));
    std::vector<SweepRow> rows;
    const std::size_t levels = exact_reference ? taus.size() : taus.size() - 1;
    for (std::size_t k = 0; k < levels; ++k) {
        double sup = 0.0;
        for (int i = 0; i <= samples; ++i) {
            const double t = samples == 0 ? 0.0 : cfg.horizon * i / samples;
            const P u = interpolate(c.space, sims[k].trajectory, t);
            P ref = c.u0;
            if constexpr (std::is_same_v<C, EuclideanCarrier>) {
                if (exact_reference) ref = exact_flow_quadratic(*c.quadratic, c.u0, t);
            }
            if (!exact_reference) ref = interpolate(c.space, sims.back().trajectory, t);
            sup = std::max(sup, c.space.distance(u, ref));
        }
        rows.push_back({taus[k], sup});
    }
    return rows;
}

int command_sweep(const RunConfig& cfg, const fs::path& dir, std::ostream& out, std::ostream& err)
{
    const bool by_size = !cfg.sweep.sizes.empty();
    if (cfg.sweep.taus.empty() && !by_size) throw InputError("sweep: configure 'sweep.taus' or 'sweep.Ms'");
    const double lambda = config_lambda(cfg);

    std::string reference = cfg.sweep.reference;
    const bool quadratic = cfg.euclidean() && euclidean_problem(cfg).quadratic.has_value();
    if (reference == "auto") reference = (quadratic && !by_size) ? "exact" : "finest";
    if (reference == "exact" && (!quadratic || by_size))
        throw ConfigError("sweep: exact reference needs the quadratic functional and a tau sweep");
    const bool exact_reference = reference == "exact";

    std::vector<double> taus = cfg.sweep.taus;
    std::vector<std::size_t> sizes = cfg.sweep.sizes;
    std::sort(taus.rbegin(), taus.rend());
    std::sort(sizes.begin(), sizes.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    const std::size_t levels = by_size ? sizes.size() : taus.size();
    if (levels - (exact_reference ? 0 : 1) < 2 || levels < 2)
        throw InputError("sweep: need at least two sweep points besides the reference");
    for (double tau : taus) {
        const double steps = std::round(cfg.horizon / tau);
        if (std::abs(steps * tau - cfg.horizon) > 1e-9 * std::max(1.0, cfg.horizon))
            throw ConfigError("sweep: T must be an integer multiple of every tau");
        check_feasibility(tau, lambda, cfg.params.eta);
    }

    const fs::path sweep_dir = dir / "sweep";
    fs::create_directories(sweep_dir);
    std::vector<SweepRow> rows;
    std::string failure;
    auto first_failure = [&](const auto& sims) {
        for (std::size_t k = 0; k < sims.size(); ++k)
            if (!sims[k].failure.empty()) return std::string("level ") + std::to_string(k) + ": " + sims[k].failure;
        return std::string();
    };

    if (cfg.euclidean()) {
        const auto sims = run_levels<EuclideanCarrier>(cfg, taus, {}, [&](std::size_t) { return euclidean_carrier(cfg); },
                                                       sweep_dir);
        failure = first_failure(sims);
        if (failure.empty()) rows = tau_sweep_errors(euclidean_carrier(cfg), cfg, taus, sims, exact_reference);
    } else {
        auto make = [&](std::size_t size) { return wasserstein_carrier(cfg, size); };
        const auto sims = run_levels<WassersteinCarrier>(cfg, by_size ? std::vector<double>{} : taus, sizes, make, sweep_dir);
        failure = first_failure(sims);
        if (failure.empty() && !by_size) {
            rows = tau_sweep_errors(make(cfg.grid_size), cfg, taus, sims, false);
        } else if (failure.empty()) {
            const auto& ref = sims.back().trajectory.points;
            for (std::size_t k = 0; k + 1 < sims.size(); ++k) {
                double sup = 0.0;
                for (std::size_t n = 0; n < ref.size(); ++n)
                    sup = std::max(sup, w2(resample(sims[k].trajectory.points[n], ref[n].size()), ref[n]));
                rows.push_back({static_cast<double>(sizes[k]), sup});
            }
        }
    }
    if (!failure.empty()) {
        err << "error: sweep solver failure at " << failure << '\n';
        return kExitSolver;
    }

    std::vector<double> x, e;
    for (const auto& r : rows) {
        x.push_back(by_size ? 1.0 / r.level : r.level);
        e.push_back(r.error);
    }
    const double slope = fitted_log_slope(x, e);
    std::ostringstream csv;
    csv << (by_size ? "M" : "tau") << ",sup_error,ratio,fitted_slope\n";
    for (const auto& r : rows) {
        const double ratio = by_size ? r.error * r.level : r.error / r.level;
        csv << format_double(r.level) << ',' << format_double(r.error) << ',' << format_double(ratio) << ','
            << format_double(slope) << '\n';
    }
    write_file(dir / "sweep.csv", csv.str());
    out << csv.str();
    out << "sweep: reference " << reference << ", fitted slope " << format_double(slope) << '\n';
    return kExitPass;
}

void command_list(std::ostream& out)
{
    out << "carrier,name,modulus,description\n";
    for (const auto& e : euclidean_catalog())
        out << "euclidean," << e.name << ',' << e.modulus << ",\"" << e.description << "\"\n";
    out << "wasserstein1d,internal:entropy,0,\"s log s\"\n"
        << "wasserstein1d,internal:power,0,\"s^m/(m-1), m > 1\"\n"
        << "wasserstein1d,potential:quadratic,stiffness,\"stiffness/2 (x - center)^2\"\n"
        << "wasserstein1d,potential:linear,0,\"slope * x\"\n"
        << "wasserstein1d,potential:double_well,-1,\"(x^2 - 1)^2/4\"\n"
        << "wasserstein1d,interaction:quadratic,\"min(0, 2 coefficient)\",\"coefficient * x^2\"\n"
        << "wasserstein1d,interaction:constant,0,\"constant kernel\"\n";
}

}  // namespace

namespace {

template <class C>
TrajectoryTable tabulate(const C& c, const RunConfig& cfg)
{
    const auto sim = simulate(c, cfg, cfg.tau, cfg.steps, cfg.scheme == "exact");
    TrajectoryTable table;
    table.lambda = c.f.lambda;
    table.failure = sim.failure;
    for (std::size_t n = 0; n < sim.trajectory.points.size(); ++n) {
        table.times.push_back(sim.trajectory.grid.t(static_cast<int>(n)));
        table.points.push_back(C::coords(sim.trajectory.points[n]));
        table.energy.push_back(c.f.value(sim.trajectory.points[n]));
    }
    return table;
}

}  // namespace

TrajectoryTable simulate_config(const std::string& config_json, std::optional<std::uint64_t> seed)
{
    json doc;
    try {
        doc = json::parse(config_json);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    const RunConfig cfg = parse_config(doc, fs::current_path(), seed);
    if (cfg.euclidean()) return tabulate(euclidean_carrier(cfg), cfg);
    return tabulate(wasserstein_carrier(cfg, cfg.grid_size), cfg);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Minimizing movements and EVI verification for lambda-convex gradient flows"};
    app.name("gradflow");
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = "out";
    std::string checks;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration")->required();
        sub->add_option("--out", out_dir, "artifact directory");
        sub->add_option("--seed", seed, "overrides the configured seed");
    };
    CLI::App* run = app.add_subcommand("run", "run the scheme and write trajectory artifacts");
    CLI::App* verify = app.add_subcommand("verify", "check a written trajectory against the EVI estimates");
    CLI::App* sweep = app.add_subcommand("sweep", "convergence table over step sizes or grid sizes");
    CLI::App* list = app.add_subcommand("list-catalog", "list the available functionals");
    for (CLI::App* sub : {run, verify, sweep}) common(sub);
    verify->add_option("--checks", checks, "comma-separated subset of checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitInput;
    }

    try {
        if (list->parsed()) {
            command_list(out);
            return kExitPass;
        }
        CLI::App* active = app.get_subcommands().front();
        std::optional<std::uint64_t> seed_override;
        if (active->count("--seed") > 0) seed_override = seed;
        const RunConfig cfg = load_config(config_path, seed_override);
        if (run->parsed()) return command_run(cfg, out_dir, out, err);
        if (verify->parsed()) return command_verify(cfg, out_dir, checks, out);
        return command_sweep(cfg, out_dir, out, err);
    } catch (const SchemeError& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

}  // namespace gradflow::cli
