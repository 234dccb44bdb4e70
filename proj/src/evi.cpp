#include "gradflow/evi.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>
#include <tuple>

namespace gradflow {

namespace {

double order_key(double x) { return std::isnan(x) ? kInfinity : x; }

bool witness_less(const Witness& a, const Witness& b)
{
    return std::make_tuple(order_key(a.s), order_key(a.t), a.index, a.label) <
           std::make_tuple(order_key(b.s), order_key(b.t), b.index, b.label);
}

const char* kind_name(CheckKind kind) { return kind == CheckKind::analytic ? "analytic" : "discrete"; }

nlohmann::json number_or_null(double x)
{
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return nullptr;
    return x > 0 ? "inf" : "-inf";
}

}  // namespace

ViolationTracker::ViolationTracker(std::string name, double tolerance, CheckKind kind)
{
    record_.name = std::move(name);
    record_.tolerance = tolerance;
    record_.kind = kind;
}

void ViolationTracker::observe(double residual, const Witness& witness)
{
    if (std::isnan(residual)) residual = kInfinity;
    ++record_.evaluations;
    if (!seen_ || residual > record_.max_violation ||
        (residual == record_.max_violation && witness_less(witness, record_.witness))) {
        record_.max_violation = residual;
        record_.witness = witness;
        seen_ = true;
    }
}

void ViolationTracker::skip(const std::string& reason)
{
    skipped_ = true;
    record_.note = reason;
}

CheckRecord ViolationTracker::finish() const
{
    CheckRecord out = record_;
    if (skipped_) {
        out.applicable = false;
        out.passed = true;
        out.max_violation = 0.0;
        out.witness = {};
        return out;
    }
    if (!seen_) {
        out.max_violation = 0.0;
        if (out.note.empty()) out.note = "no evaluations";
    }
    out.passed = out.max_violation <= out.tolerance;
    return out;
}

void VerificationReport::add(CheckRecord record) { checks_.push_back(std::move(record)); }

void VerificationReport::merge(const VerificationReport& other)
{
    checks_.insert(checks_.end(), other.checks_.begin(), other.checks_.end());
}

const CheckRecord* VerificationReport::find(const std::string& name) const
{
    for (const auto& c : checks_)
        if (c.name == name) return &c;
    return nullptr;
}

const CheckRecord& VerificationReport::at(const std::string& name) const
{
    const auto* c = find(name);
    if (!c) throw InputError("report: no check named " + name);
    return *c;
}

std::size_t VerificationReport::passed_count() const
{
    return static_cast<std::size_t>(
        std::count_if(checks_.begin(), checks_.end(), [](const auto& c) { return c.applicable && c.passed; }));
}

std::size_t VerificationReport::failed_count() const
{
    return static_cast<std::size_t>(
        std::count_if(checks_.begin(), checks_.end(), [](const auto& c) { return c.applicable && !c.passed; }));
}

std::size_t VerificationReport::skipped_count() const
{
    return static_cast<std::size_t>(
        std::count_if(checks_.begin(), checks_.end(), [](const auto& c) { return !c.applicable; }));
}

std::string VerificationReport::to_json() const
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : checks_) {
        nlohmann::json witness = {{"s", number_or_null(c.witness.s)},
                                  {"t", number_or_null(c.witness.t)},
                                  {"index", c.witness.index}};
        if (!c.witness.label.empty()) witness["label"] = c.witness.label;
        checks.push_back({{"name", c.name},
                          {"max_violation", number_or_null(c.max_violation)},
                          {"tolerance", number_or_null(c.tolerance)},
                          {"passed", c.passed},
                          {"applicable", c.applicable},
                          {"kind", kind_name(c.kind)},
                          {"evaluations", c.evaluations},
                          {"worst_witness", witness},
                          {"note", c.note}});
    }
    nlohmann::json doc = {{"summary",
                           {{"passed", passed_count()}, {"failed", failed_count()}, {"skipped", skipped_count()}}},
                          {"checks", checks}};
    return doc.dump(2) + "\n";
}

std::string VerificationReport::to_csv() const
{
    std::ostringstream out;
    out << "check,max_violation,tolerance,passed\n";
    for (const auto& c : checks_) {
        if (!c.applicable) continue;
        out << c.name << ',' << detail::format_double(c.max_violation) << ',' << detail::format_double(c.tolerance)
            << ',' << (c.passed ? "true" : "false") << '\n';
    }
    return out.str();
}

std::vector<std::pair<double, double>> all_time_pairs(const std::vector<double>& times, std::size_t stride)
{
    if (stride == 0) throw InputError("time pairs: stride must be positive");
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < times.size(); i += stride)
        for (std::size_t j = i + stride; j < times.size(); j += stride) pairs.emplace_back(times[i], times[j]);
    return pairs;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw InputError("fit: need at least two matching points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0)) throw InputError("fit: abscissae must not all coincide");
    return sxy / sxx;
}

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& values)
{
    std::vector<double> logs;
    for (double v : values) {
        if (!(v > 0.0)) throw InputError("fit: values must be positive");
        logs.push_back(std::log(v));
    }
    return fit_slope(x, logs);
}

}  // namespace gradflow
