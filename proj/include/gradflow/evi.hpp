#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gradflow/detail/numeric.hpp"
#include "gradflow/metric_core.hpp"

namespace gradflow {

enum class CheckKind { analytic, discrete };

struct Witness {
    double s = std::numeric_limits<double>::quiet_NaN();
    double t = std::numeric_limits<double>::quiet_NaN();
    long index = -1;  // test point, trial or member index
    std::string label;
};

struct CheckRecord {
    std::string name;
    double max_violation = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    bool applicable = true;
    CheckKind kind = CheckKind::analytic;
    Witness witness;
    long evaluations = 0;
    std::string note;
};

class VerificationReport {
public:
    void add(CheckRecord record);
    void merge(const VerificationReport& other);

    const std::vector<CheckRecord>& checks() const { return checks_; }
    const CheckRecord* find(const std::string& name) const;
    const CheckRecord& at(const std::string& name) const;

    std::size_t passed_count() const;
    std::size_t failed_count() const;
    std::size_t skipped_count() const;
    bool all_passed() const { return failed_count() == 0; }

    std::string to_json() const;
    std::string to_csv() const;  // check,max_violation,tolerance,passed

private:
    std::vector<CheckRecord> checks_;
};

// Running maximum of residuals; ties keep the lexicographically smallest witness.
class ViolationTracker {
public:
    ViolationTracker(std::string name, double tolerance, CheckKind kind);

    void observe(double residual, const Witness& witness);
    void skip(const std::string& reason);
    CheckRecord finish() const;

private:
    CheckRecord record_;
    bool seen_ = false;
    bool skipped_ = false;
};

template <class P>
struct EviCheckConfig {
    double lambda = 0.0;
    std::vector<P> test_points;
    std::vector<std::pair<double, double>> time_pairs;
    double tolerance = 1e-8;
    CheckKind kind = CheckKind::analytic;
};

// All (t_i, t_j) with i < j, using every `stride`-th sample.
std::vector<std::pair<double, double>> all_time_pairs(const std::vector<double>& times, std::size_t stride = 1);

namespace detail {

template <class P>
std::size_t require_sample(const SampledCurve<P>& curve, double t)
{
    const auto idx = curve.find(t);
    if (!idx) throw InputError("verifier: curve has no sample at the requested time");
    return *idx;
}

template <class P>
void require_test_points(const Functional<P>& f, const std::vector<P>& points)
{
    for (const auto& v : points)
        if (!f.contains(v)) throw InputError("verifier: test point outside the domain of phi");
}

}  // namespace detail

template <MetricSpace S>
VerificationReport evi_prime_residual(const S& space, const SampledCurve<typename S::Point>& curve,
                                      const Functional<typename S::Point>& f,
                                      const EviCheckConfig<typename S::Point>& cfg)
{
    detail::require_test_points(f, cfg.test_points);
    ViolationTracker tracker("evi_prime", cfg.tolerance, cfg.kind);
    std::vector<double> energy(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) energy[i] = f.value(curve.point(i));
    std::vector<double> test_energy;
    for (const auto& v : cfg.test_points) test_energy.push_back(f.value(v));

    // squared distances from samples to test points, filled on demand
    std::vector<std::vector<double>> d2(curve.size());
    auto sq = [&](std::size_t i, std::size_t k) {
        if (d2[i].empty()) {
            d2[i].resize(cfg.test_points.size());
            for (std::size_t j = 0; j < cfg.test_points.size(); ++j) {
                const double d = space.distance(curve.point(i), cfg.test_points[j]);
                d2[i][j] = d * d;
            }
        }
        return d2[i][k];
    };
    for (const auto& [s, t] : cfg.time_pairs) {
        if (!(s < t)) throw InputError("evi prime: time pairs need s < t");
        const std::size_t is = detail::require_sample(curve, s);
        const std::size_t it = detail::require_sample(curve, t);
        if (!std::isfinite(energy[it])) {
            tracker.skip("phi(u_t) is infinite at a sample");
            break;
        }
        const double dt = curve.time(it) - curve.time(is);
        const double growth = std::exp(cfg.lambda * dt);
        const double weight = e_lambda(cfg.lambda, dt);
        for (std::size_t k = 0; k < cfg.test_points.size(); ++k) {
            const double residual =
                0.5 * growth * sq(it, k) - 0.5 * sq(is, k) - weight * (test_energy[k] - energy[it]);
            tracker.observe(residual, {s, t, static_cast<long>(k), {}});
        }
    }
    VerificationReport report;
    report.add(tracker.finish());
    return report;
}

template <MetricSpace S>
VerificationReport contraction_check(const S& space, const SampledCurve<typename S::Point>& c1,
                                     const SampledCurve<typename S::Point>& c2, double lambda, double tolerance,
                                     CheckKind kind = CheckKind::analytic)
{
    if (c1.size() != c2.size()) throw InputError("contraction: curves need common sample times");
    for (std::size_t i = 0; i < c1.size(); ++i)
        if (std::abs(c1.time(i) - c2.time(i)) > 1e-9 * std::max(1.0, std::abs(c1.time(i))))
            throw InputError("contraction: curves need common sample times");
    std::vector<double> d(c1.size());
    for (std::size_t i = 0; i < c1.size(); ++i) d[i] = space.distance(c1.point(i), c2.point(i));
    ViolationTracker tracker("contraction", tolerance, kind);
    long skipped = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d[i] > 0.0)) {
            skipped += static_cast<long>(d.size() - i - 1);
            continue;
        }
        for (std::size_t j = i + 1; j < d.size(); ++j) {
            const double ratio = d[j] * std::exp(lambda * (c1.time(j) - c1.time(i))) / d[i];
            tracker.observe(ratio - 1.0, {c1.time(i), c1.time(j), -1, {}});
        }
    }
    CheckRecord record = tracker.finish();
    if (skipped > 0) record.note = std::to_string(skipped) + " zero-distance pairs skipped";
    VerificationReport report;
    report.add(record);
    return report;
}

// (u_t, u_{t + shift}) as two curves on common times.
template <class P>
std::pair<SampledCurve<P>, SampledCurve<P>> shifted_pair(const SampledCurve<P>& curve, std::size_t shift)
{
    if (shift == 0 || shift >= curve.size()) throw InputError("shifted pair: shift out of range");
    std::vector<double> times(curve.times().begin(), curve.times().end() - static_cast<long>(shift));
    std::vector<P> head(curve.points().begin(), curve.points().end() - static_cast<long>(shift));
    std::vector<P> tail(curve.points().begin() + static_cast<long>(shift), curve.points().end());
    return {SampledCurve<P>(times, std::move(head)), SampledCurve<P>(times, std::move(tail))};
}

// Regularization clauses measured from the first sample as initial datum.
template <MetricSpace S>
VerificationReport regularization_check(const S& space, const SampledCurve<typename S::Point>& curve,
                                        const Functional<typename S::Point>& f,
                                        const EviCheckConfig<typename S::Point>& cfg)
{
    detail::require_test_points(f, cfg.test_points);
    const double lambda = cfg.lambda;
    ViolationTracker energy_clause("regularization_energy", cfg.tolerance, cfg.kind);
    ViolationTracker apriori_clause("regularization_a_priori", cfg.tolerance, cfg.kind);
    ViolationTracker slope_clause("regularization_slope", cfg.tolerance, cfg.kind);
    ViolationTracker short_time_clause("regularization_short_time", cfg.tolerance, cfg.kind);
    const bool slope = f.has_exact_slope();
    if (!slope) {
        apriori_clause.skip("slope unavailable");
        slope_clause.skip("slope unavailable");
        short_time_clause.skip("slope unavailable");
    }
    const auto& u0 = curve.point(0);
    const double phi0 = f.value(u0);
    const double slope0 = slope ? f.slope(u0) : kInfinity;
    if (slope && (lambda > 0.0 || !std::isfinite(slope0)))
        short_time_clause.skip(lambda > 0.0 ? "requires lambda <= 0" : "initial datum outside the slope domain");
    std::vector<double> test_energy, test_slope, d2_initial;
    for (const auto& v : cfg.test_points) {
        test_energy.push_back(f.value(v));
        test_slope.push_back(slope ? f.slope(v) : kInfinity);
        const double d = space.distance(u0, v);
        d2_initial.push_back(d * d);
    }
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double t = curve.time(i) - curve.time(0);
        const auto& ut = curve.point(i);
        const double phit = f.value(ut);
        if (!std::isfinite(phit)) continue;
        const double weight = e_lambda(lambda, t);
        const double growth = std::exp(lambda * t);
        const double slope_t = slope ? f.slope(ut) : 0.0;
        for (std::size_t k = 0; k < cfg.test_points.size(); ++k) {
            const Witness w{0.0, curve.time(i), static_cast<long>(k), {}};
            const double d = space.distance(ut, cfg.test_points[k]);
            energy_clause.observe(phit - test_energy[k] - d2_initial[k] / (2.0 * weight), w);
            if (!slope) continue;
            apriori_clause.observe(0.5 * growth * d * d + weight * (phit - test_energy[k]) +
                                       0.5 * weight * weight * slope_t * slope_t - 0.5 * d2_initial[k],
                                   w);
            if (-lambda * t < std::log(2.0) && std::isfinite(test_slope[k]))
                slope_clause.observe(slope_t * slope_t - test_slope[k] * test_slope[k] / (2.0 * growth - 1.0) -
                                         d2_initial[k] / (weight * weight),
                                     w);
            if (lambda <= 0.0 && std::isfinite(slope0))
                short_time_clause.observe(0.5 * std::exp(2.0 * lambda * t) * d * d - 0.5 * d2_initial[k] -
                                              e_lambda(2.0 * lambda, t) * (test_energy[k] - phi0) -
                                              0.5 * t * t * slope0 * slope0,
                                          w);
        }
    }
    VerificationReport report;
    report.add(energy_clause.finish());
    report.add(apriori_clause.finish());
    report.add(slope_clause.finish());
    report.add(short_time_clause.finish());
    return report;
}

template <class P>
struct Minimizer {
    P point;
    double value;
};

// Long-time clauses; lambda > 0 uses exponential decay, lambda = 0 the algebraic rates.
template <MetricSpace S>
VerificationReport asymptotic_check(const S& space, const SampledCurve<typename S::Point>& curve,
                                    const Functional<typename S::Point>& f,
                                    const EviCheckConfig<typename S::Point>& cfg,
                                    const std::optional<Minimizer<typename S::Point>>& minimizer)
{
    const double lambda = cfg.lambda;
    const bool slope = f.has_exact_slope();
    auto make = [&](const char* name) { return ViolationTracker(name, cfg.tolerance, cfg.kind); };
    VerificationReport report;
    if (lambda > 0.0) {
        ViolationTracker sandwich_lower = make("asymptotic_distance_energy");
        ViolationTracker sandwich_upper = make("asymptotic_energy_slope");
        ViolationTracker distance_decay = make("asymptotic_distance_decay");
        ViolationTracker energy_decay = make("asymptotic_energy_decay");
        ViolationTracker energy_distance = make("asymptotic_energy_distance");
        ViolationTracker slope_decay = make("asymptotic_slope_decay");
        ViolationTracker slope_distance = make("asymptotic_slope_distance");
        std::vector<ViolationTracker*> all{&sandwich_lower, &sandwich_upper, &distance_decay, &energy_decay,
                                           &energy_distance, &slope_decay, &slope_distance};
        if (!minimizer) {
            for (auto* t : all) t->skip("minimizer unavailable");
        } else {
            if (!slope) {
                sandwich_upper.skip("slope unavailable");
                slope_decay.skip("slope unavailable");
                slope_distance.skip("slope unavailable");
            }
            const std::size_t n = curve.size();
            std::vector<double> d2(n), gap(n), sl(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = space.distance(curve.point(i), minimizer->point);
                d2[i] = d * d;
                gap[i] = f.value(curve.point(i)) - minimizer->value;
                sl[i] = slope ? f.slope(curve.point(i)) : 0.0;
            }
            for (std::size_t j = 0; j < n; ++j) {
                const Witness at{curve.time(j), curve.time(j), -1, {}};
                sandwich_lower.observe(0.5 * lambda * d2[j] - gap[j], at);
                if (slope) sandwich_upper.observe(gap[j] - sl[j] * sl[j] / (2.0 * lambda), at);
                for (std::size_t i = 0; i < j; ++i) {
                    const double dt = curve.time(j) - curve.time(i);
                    const Witness w{curve.time(i), curve.time(j), -1, {}};
                    const double weight = e_lambda(lambda, dt);
                    distance_decay.observe(d2[j] - d2[i] * std::exp(-lambda * dt), w);
                    energy_decay.observe(gap[j] - gap[i] * std::exp(-2.0 * lambda * dt), w);
                    energy_distance.observe(gap[j] - d2[i] / (2.0 * weight), w);
                    if (!slope) continue;
                    slope_decay.observe(sl[j] - sl[i] * std::exp(-lambda * dt), w);
                    slope_distance.observe(sl[j] - std::sqrt(d2[i]) / weight, w);
                }
            }
        }
        for (auto* t : all) report.add(t->finish());
    } else {
        ViolationTracker slope_rate = make("asymptotic_slope_rate");
        ViolationTracker energy_rate = make("asymptotic_energy_rate");
        ViolationTracker monotone = make("asymptotic_distance_monotone");
        std::vector<ViolationTracker*> all{&slope_rate, &energy_rate, &monotone};
        if (lambda < 0.0) {
            for (auto* t : all) t->skip("no asymptotic estimate for lambda < 0");
        } else if (!minimizer) {
            for (auto* t : all) t->skip("minimizer unavailable");
        } else {
            if (!slope) slope_rate.skip("slope unavailable");
            const std::size_t n = curve.size();
            const double d0 = space.distance(curve.point(0), minimizer->point);
            std::vector<double> d2(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = space.distance(curve.point(i), minimizer->point);
                d2[i] = d * d;
            }
            for (std::size_t j = 1; j < n; ++j) {
                const double t = curve.time(j) - curve.time(0);
                const Witness at{curve.time(0), curve.time(j), -1, {}};
                if (slope) slope_rate.observe(f.slope(curve.point(j)) - d0 / t, at);
                energy_rate.observe(f.value(curve.point(j)) - minimizer->value - d0 * d0 / (2.0 * t), at);
                for (std::size_t i = 0; i < j; ++i)
                    monotone.observe(d2[j] - d2[i], {curve.time(i), curve.time(j), -1, {}});
            }
        }
        for (auto* t : all) report.add(t->finish());
    }
    return report;
}

// Discrete energy bookkeeping: D_n = sum_k d^2(U^k, U^{k-1})/(2 tau) + tau/2 |d phi|^2(U^k).
template <MetricSpace S>
VerificationReport energy_identity_check(const S& space, const DiscreteTrajectory<typename S::Point>& traj,
                                         const Functional<typename S::Point>& f, double inequality_tolerance,
                                         double identity_factor = 3.0, CheckKind kind = CheckKind::discrete)
{
    if (!f.has_exact_slope()) throw InputError("energy identity: slope oracle required");
    const double tau = traj.grid.tau();
    const double phi0 = f.value(traj.points.front());
    ViolationTracker inequality("edi_inequality", inequality_tolerance, kind);
    std::vector<double> residual;
    double dissipation = 0.0;
    for (std::size_t n = 1; n < traj.points.size(); ++n) {
        const double d = space.distance(traj.points[n], traj.points[n - 1]);
        const double s = f.slope(traj.points[n]);
        dissipation += d * d / (2.0 * tau) + 0.5 * tau * s * s;
        const double drop = phi0 - f.value(traj.points[n]);
        inequality.observe(dissipation - drop, {0.0, traj.grid.t(static_cast<int>(n)), static_cast<long>(n), {}});
        residual.push_back(drop - dissipation);
    }
    const double total_drop = traj.points.size() > 1 ? phi0 - f.value(traj.points.back()) : 0.0;
    ViolationTracker identity("energy_identity", identity_factor * tau * std::max(total_drop, 0.0), kind);
    if (f.lambda < 0.0) {
        identity.skip("identity bound stated for convex carriers");
    } else {
        for (std::size_t n = 0; n < residual.size(); ++n)
            identity.observe(std::abs(residual[n]),
                             {0.0, traj.grid.t(static_cast<int>(n + 1)), static_cast<long>(n + 1), {}});
    }
    VerificationReport report;
    CheckRecord rec = inequality.finish();
    rec.note = "signed residual drop - dissipation at T: " +
               detail::format_double(residual.empty() ? 0.0 : residual.back());
    report.add(rec);
    report.add(identity.finish());
    return report;
}

template <class P>
using PairSampler = std::function<std::pair<P, P>(std::mt19937_64&)>;
template <class P>
using TripleSampler = std::function<std::tuple<P, P, P>(std::mt19937_64&)>;

inline std::vector<double> default_s_grid() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

template <GeodesicSpace S>
VerificationReport geodesic_convexity_probe(const S& space, const Functional<typename S::Point>& f, double lambda,
                                            const PairSampler<typename S::Point>& sampler, int trials,
                                            std::uint64_t seed, double tolerance,
                                            const std::vector<double>& s_grid = default_s_grid())
{
    std::mt19937_64 rng(seed);
    ViolationTracker tracker("geodesic_convexity", tolerance, CheckKind::analytic);
    constexpr int kRetries = 100;
    for (int trial = 0; trial < trials; ++trial) {
        std::optional<std::pair<typename S::Point, typename S::Point>> ends;
        for (int r = 0; r < kRetries && !ends; ++r) {
            auto candidate = sampler(rng);
            if (f.contains(candidate.first) && f.contains(candidate.second)) ends = std::move(candidate);
        }
        if (!ends) throw InputError("convexity probe: sampler keeps producing points outside the domain");
        const auto& [a, b] = *ends;
        const double fa = f.value(a), fb = f.value(b);
        const double d = space.distance(a, b);
        for (double s : s_grid) {
            const double fs = f.value(space.geodesic(a, b, s));
            const double bound = (1.0 - s) * fa + s * fb - 0.5 * lambda * s * (1.0 - s) * d * d;
            tracker.observe(fs - bound, {s, std::numeric_limits<double>::quiet_NaN(), trial, {}});
        }
    }
    VerificationReport report;
    report.add(tracker.finish());
    return report;
}

template <GeodesicSpace S>
VerificationReport curvature_probes(const S& space, const TripleSampler<typename S::Point>& sampler, int trials,
                                    std::uint64_t seed, double semiconcavity_constant, double tolerance,
                                    const std::vector<double>& s_grid = default_s_grid())
{
    std::mt19937_64 rng(seed);
    ViolationTracker ksc("k_semiconcavity", tolerance, CheckKind::analytic);
    ViolationTracker pc("positive_curvature", tolerance, CheckKind::analytic);
    ViolationTracker conv("one_convexity", tolerance, CheckKind::analytic);
    ViolationTracker gap("hilbert_equality_gap", tolerance, CheckKind::analytic);
    for (int trial = 0; trial < trials; ++trial) {
        const auto [v0, v1, w] = sampler(rng);
        const double d01 = space.distance(v0, v1), d0w = space.distance(v0, w), d1w = space.distance(v1, w);
        for (double s : s_grid) {
            const double dsw = space.distance(space.geodesic(v0, v1, s), w);
            const double lhs = dsw * dsw;
            const double chord = (1.0 - s) * d0w * d0w + s * d1w * d1w;
            const double bend = s * (1.0 - s) * d01 * d01;
            const Witness wit{s, std::numeric_limits<double>::quiet_NaN(), trial, {}};
            ksc.observe(chord - semiconcavity_constant * bend - lhs, wit);
            pc.observe(chord - bend - lhs, wit);
            conv.observe(lhs - (chord - bend), wit);
            gap.observe(std::abs(lhs - (chord - bend)), wit);
        }
    }
    VerificationReport report;
    CheckRecord rec = ksc.finish();
    rec.note = "K = " + detail::format_double(semiconcavity_constant);
    report.add(rec);
    report.add(pc.finish());
    report.add(conv.finish());
    report.add(gap.finish());
    return report;
}

template <class P>
struct GammaFamily {
    std::vector<double> indices;  // increasing
    std::function<Functional<P>(double)> member;
    Functional<P> limit;
    std::function<P(double)> initial;  // recovery sequence u0^h
    P initial_limit;
    double kappa_o = 0.0;
    double phi_o = 0.0;
    P o;
    std::vector<P> lower_bound_samples;
};

template <class P>
using FlowRunner = std::function<DiscreteTrajectory<P>(const Functional<P>&, const P&)>;

struct GammaRow {
    double h = 0.0;
    double t = 0.0;
    double distance = 0.0;
    double energy_gap = 0.0;
};

struct GammaStabilityResult {
    VerificationReport report;
    std::vector<GammaRow> table;
    double noise_floor = 0.0;
};

template <MetricSpace S>
GammaStabilityResult gamma_stability_harness(const S& space, const GammaFamily<typename S::Point>& fam,
                                             const FlowRunner<typename S::Point>& runner,
                                             const std::vector<double>& sample_times, double noise_floor)
{
    using P = typename S::Point;
    GammaStabilityResult out;
    out.noise_floor = noise_floor;

    ViolationTracker bound("gamma_lower_bound", 1e-12, CheckKind::analytic);
    for (std::size_t k = 0; k < fam.indices.size(); ++k) {
        const auto member = fam.member(fam.indices[k]);
        for (const auto& x : fam.lower_bound_samples)
            bound.observe(-quadratic_lower_bound_margin(space, member, fam.kappa_o, fam.phi_o, fam.o, x),
                          {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                           static_cast<long>(k), {}});
    }
    out.report.add(bound.finish());

    ViolationTracker failures("gamma_member_flows", 0.0, CheckKind::discrete);
    std::optional<DiscreteTrajectory<P>> limit_flow;
    try {
        limit_flow = runner(fam.limit, fam.initial_limit);
        failures.observe(0.0, {});
    } catch (const Error& e) {
        failures.observe(1.0, {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                               -1, std::string("limit: ") + e.what()});
    }
    std::vector<std::vector<double>> dist(fam.indices.size());
    if (limit_flow) {
        for (std::size_t k = 0; k < fam.indices.size(); ++k) {
            const double h = fam.indices[k];
            const auto member = fam.member(h);
            try {
                const auto flow = runner(member, fam.initial(h));
                for (double t : sample_times) {
                    const P a = interpolate(space, flow, t);
                    const P b = interpolate(space, *limit_flow, t);
                    const double d = space.distance(a, b);
                    out.table.push_back({h, t, d, std::abs(member.value(a) - fam.limit.value(b))});
                    dist[k].push_back(d);
                }
                failures.observe(0.0, {});
            } catch (const Error& e) {
                failures.observe(1.0, {std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN(), static_cast<long>(k), e.what()});
            }
        }
    }
    out.report.add(failures.finish());

    ViolationTracker monotone("gamma_distance_monotone", noise_floor, CheckKind::discrete);
    for (std::size_t k = 0; k + 1 < dist.size(); ++k) {
        if (dist[k].empty() || dist[k + 1].empty()) continue;
        for (std::size_t j = 0; j < sample_times.size(); ++j)
            monotone.observe(dist[k + 1][j] - dist[k][j],
                             {fam.indices[k], sample_times[j], static_cast<long>(k + 1), {}});
    }
    out.report.add(monotone.finish());
    return out;
}

// Least-squares slope of log(values) against times; non-positive values are rejected.
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& values);
// Least-squares slope of values against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gradflow
