#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gradflow::cli {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects whatever was not consumed.
class Fields {
public:
    Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where))
    {
        if (!obj_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& message) const
    {
        throw ConfigError("config: " + where_ + ": " + message);
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key)
    {
        const json* v = find(key);
        if (!v) fail("missing key '" + key + "'");
        return *v;
    }

    double number(const std::string& key) { return as_number(require(key), key); }
    double number(const std::string& key, double fallback)
    {
        const json* v = find(key);
        return v ? as_number(*v, key) : fallback;
    }

    long integer(const std::string& key, long fallback)
    {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) fail("'" + key + "' must be an integer");
        return v->get<long>();
    }

    std::string string(const std::string& key) { return as_string(require(key), key); }
    std::string string(const std::string& key, const std::string& fallback)
    {
        const json* v = find(key);
        return v ? as_string(*v, key) : fallback;
    }

    std::vector<double> numbers(const std::string& key)
    {
        const json* v = find(key);
        if (!v) return {};
        if (!v->is_array()) fail("'" + key + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& x : *v) out.push_back(as_number(x, key));
        return out;
    }

    void done() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }

    const std::string& where() const { return where_; }

private:
    double as_number(const json& v, const std::string& key) const
    {
        if (!v.is_number()) fail("'" + key + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail("'" + key + "' must be finite");
        return x;
    }
    std::string as_string(const json& v, const std::string& key) const
    {
        if (!v.is_string()) fail("'" + key + "' must be a string");
        return v.get<std::string>();
    }

    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

Eigen::VectorXd to_vector(const json& v, Fields& owner, const std::string& key)
{
    if (!v.is_array() || v.empty()) owner.fail("'" + key + "' must be a nonempty array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) owner.fail("'" + key + "' must contain numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Eigen::MatrixXd to_matrix(const json& v, Fields& owner, const std::string& key)
{
    if (!v.is_array() || v.empty()) owner.fail("'" + key + "' must be a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(v.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd row = to_vector(v[static_cast<std::size_t>(i)], owner, key);
        if (row.size() != n) owner.fail("'" + key + "' must be square");
        out.row(i) = row.transpose();
    }
    return out;
}

struct Potential {
    ScalarFunction fn;
    double lambda = 0.0;
};

Potential parse_potential(Fields& f)
{
    const std::string type = f.string("type");
    Potential p;
    if (type == "quadratic") {
        const double stiffness = f.number("stiffness", 1.0);
        p = {quadratic_potential(stiffness, f.number("center", 0.0)), stiffness};
    } else if (type == "linear") {
        p = {linear_potential(f.number("slope")), 0.0};
    } else if (type == "double_well") {
        p = {double_well_potential(), -1.0};
    } else {
        f.fail("unknown potential type '" + type + "'");
    }
    if (const json* h = f.find("mollify_h")) {
        if (!h->is_number() || !(h->get<double>() > 0.0)) f.fail("'mollify_h' must be a positive number");
        p.fn = mollified_potential(p.fn, h->get<double>());
    }
    return p;
}

EnergySpec parse_energy(const json& doc)
{
    Fields f(doc, "functional");
    EnergySpec spec;
    if (const json* v = f.find("internal")) {
        Fields g(*v, "functional.internal");
        const std::string type = g.string("type");
        if (type == "entropy") {
            spec.internal = entropy_density();
        } else if (type == "power") {
            spec.internal = power_density(g.number("m"));
        } else {
            g.fail("unknown internal energy type '" + type + "'");
        }
        spec.internal_weight = g.number("weight", 1.0);
        g.done();
    }
    if (const json* v = f.find("potential")) {
        Fields g(*v, "functional.potential");
        const Potential p = parse_potential(g);
        spec.potential = p.fn;
        spec.potential_lambda = p.lambda;
        spec.potential_weight = g.number("weight", 1.0);
        g.done();
    }
    if (const json* v = f.find("interaction")) {
        Fields g(*v, "functional.interaction");
        const std::string type = g.string("type");
        if (type == "quadratic") {
            const double c = g.number("coefficient");
            spec.interaction = quadratic_kernel(c);
            spec.interaction_lambda = std::min(0.0, 2.0 * c);
        } else if (type == "constant") {
            spec.interaction = constant_kernel(g.number("value"));
        } else {
            g.fail("unknown interaction kernel '" + type + "'");
        }
        spec.interaction_weight = g.number("weight", 1.0);
        g.done();
    }
    f.done();
    validate(spec);
    return spec;
}

QuantileMeasure parse_measure(const json& doc, std::size_t m, const std::filesystem::path& base_dir)
{
    Fields f(doc, "initial");
    const std::string type = f.string("type");
    std::optional<QuantileMeasure> out;
    if (type == "gaussian") {
        const double mean = f.number("mean", 0.0), variance = f.number("variance", 1.0);
        if (!(variance > 0.0)) f.fail("'variance' must be positive");
        out = gaussian_quantiles(mean, variance, m);
    } else if (type == "uniform") {
        const double a = f.number("a"), b = f.number("b");
        if (!(b > a)) f.fail("need a < b");
        out = uniform_quantiles(a, b, m);
    } else if (type == "barenblatt") {
        const double t0 = f.number("t0", 1.0);
        if (!(t0 > 0.0)) f.fail("'t0' must be positive");
        out = Barenblatt(f.number("m", 2.0)).quantiles(t0, m);
    } else if (type == "density_csv") {
        std::filesystem::path path = f.string("path");
        if (path.is_relative()) path = base_dir / path;
        std::ifstream in(path);
        if (!in) f.fail("cannot read " + path.string());
        out = density_to_quantiles(read_density_csv(in), m);
    } else {
        f.fail("unknown initial datum type '" + type + "'");
    }
    f.done();
    return *out;
}

}  // namespace

EuclideanProblem euclidean_problem(const RunConfig& cfg)
{
    EuclideanProblem p;
    Fields f(cfg.functional_doc, "functional");
    const std::string name = f.string("name");
    std::size_t dim = 0;
    if (name == "quadratic") {
        const Eigen::MatrixXd a = to_matrix(f.require("A"), f, "A");
        const json* b = f.find("b");
        const Eigen::VectorXd bv = b ? to_vector(*b, f, "b") : Eigen::VectorXd::Zero(a.rows());
        if (bv.size() != a.rows()) f.fail("'b' must match the size of A");
        p.quadratic.emplace(a, bv, f.number("c", 0.0));
        p.functional = quadratic_functional(*p.quadratic);
        dim = static_cast<std::size_t>(a.rows());
    } else if (name == "linear") {
        const Eigen::VectorXd b = to_vector(f.require("b"), f, "b");
        p.functional = linear_functional(b, f.number("c", 0.0));
        dim = static_cast<std::size_t>(b.size());
    } else if (name == "double_well") {
        dim = static_cast<std::size_t>(f.integer("dim", 1));
        p.functional = double_well(dim);
    } else if (name == "smoothed_abs") {
        dim = static_cast<std::size_t>(f.integer("dim", 1));
        p.functional = smoothed_abs(dim, f.number("eps", 1e-2));
    } else {
        f.fail("unknown euclidean functional '" + name + "'");
    }
    f.done();

    Fields g(cfg.initial_doc, "initial");
    if (g.string("type") != "vector") g.fail("euclidean initial datum must have type 'vector'");
    const Eigen::VectorXd u0 = to_vector(g.require("coords"), g, "coords");
    g.done();
    if (static_cast<std::size_t>(u0.size()) != dim) throw ConfigError("config: initial: dimension mismatch");
    p.initial = from_eigen(u0);
    return p;
}

WassersteinProblem wasserstein_problem(const RunConfig& cfg, std::size_t grid_size)
{
    return {parse_energy(cfg.functional_doc), parse_measure(cfg.initial_doc, grid_size, cfg.base_dir)};
}

double config_lambda(const RunConfig& cfg)
{
    if (cfg.euclidean()) return euclidean_problem(cfg).functional.descriptor.lambda;
    return parse_energy(cfg.functional_doc).lambda();
}

std::string energy_description(const RunConfig& cfg)
{
    if (cfg.euclidean()) return euclidean_problem(cfg).functional.descriptor.name;
    return parse_energy(cfg.functional_doc).describe();
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override)
{
    Fields f(doc, "top level");
    if (f.string("schema") != kSchema) f.fail(std::string("schema must be '") + kSchema + "'");
    RunConfig cfg;
    cfg.base_dir = base_dir;
    cfg.resolved = doc;
    cfg.carrier = f.string("carrier");
    if (cfg.carrier != "euclidean" && cfg.carrier != "wasserstein1d")
        f.fail("carrier must be 'euclidean' or 'wasserstein1d'");
    cfg.functional_doc = f.require("functional");
    cfg.initial_doc = f.require("initial");
    cfg.scheme = f.string("scheme", "mms");
    if (cfg.scheme != "mms" && cfg.scheme != "exact") f.fail("scheme must be 'mms' or 'exact'");

    cfg.tau = f.number("tau");
    cfg.horizon = f.number("T");
    if (!(cfg.tau > 0.0)) f.fail("'tau' must be positive");
    if (!(cfg.horizon >= 0.0)) f.fail("'T' must be nonnegative");
    const double steps = std::round(cfg.horizon / cfg.tau);
    if (std::abs(steps * cfg.tau - cfg.horizon) > 1e-9 * std::max(1.0, cfg.horizon))
        f.fail("'T' must be an integer multiple of 'tau'");
    if (steps > 1e8) f.fail("too many steps");
    cfg.steps = static_cast<int>(steps);

    cfg.params.eta = f.number("eta", 0.0);
    if (!(cfg.params.eta >= 0.0)) f.fail("'eta' must be nonnegative");
    const long seed = f.integer("seed", 0);
    if (seed < 0) f.fail("'seed' must be nonnegative");
    cfg.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(seed);

    if (const json* v = f.find("inner")) {
        Fields g(*v, "inner");
        cfg.params.inner_max_iter = static_cast<int>(g.integer("max_iter", cfg.params.inner_max_iter));
        cfg.params.inner_tol_abs = g.number("tol", cfg.params.inner_tol_abs);
        if (cfg.params.inner_max_iter < 1 || !(cfg.params.inner_tol_abs > 0.0))
            g.fail("need max_iter >= 1 and tol > 0");
        g.done();
    }

    const long m = f.integer("M", cfg.euclidean() ? 0 : 200);
    if (!cfg.euclidean()) {
        if (m < 2) f.fail("'M' must be at least 2");
        cfg.grid_size = static_cast<std::size_t>(m);
    } else if (f.find("M")) {
        f.fail("'M' applies to wasserstein1d only");
    }

    if (const json* v = f.find("output")) {
        Fields g(*v, "output");
        cfg.snapshots = g.numbers("snapshots");
        cfg.snapshot_cells = static_cast<std::size_t>(g.integer("snapshot_cells", 200));
        if (cfg.snapshot_cells < 1) g.fail("'snapshot_cells' must be positive");
        for (double t : cfg.snapshots)
            if (!(t >= 0.0) || t > cfg.horizon * (1.0 + 1e-12)) g.fail("snapshot times must lie in [0, T]");
        if (!cfg.snapshots.empty() && cfg.euclidean()) g.fail("density snapshots need the wasserstein1d carrier");
        g.done();
    }

    if (const json* v = f.find("verify")) {
        Fields g(*v, "verify");
        if (const json* tol = g.find("tolerance")) {
            if (!tol->is_number() || !(tol->get<double>() >= 0.0)) g.fail("'tolerance' must be nonnegative");
            cfg.verify.tolerance = tol->get<double>();
        }
        cfg.verify.test_points = static_cast<int>(g.integer("test_points", cfg.verify.test_points));
        cfg.verify.trials = static_cast<int>(g.integer("trials", cfg.verify.trials));
        cfg.verify.curvature_constant = g.number("curvature_constant", cfg.verify.curvature_constant);
        if (const json* c = g.find("checks")) {
            if (!c->is_array()) g.fail("'checks' must be an array of names");
            for (const auto& name : *c) {
                if (!name.is_string()) g.fail("'checks' must be an array of names");
                cfg.verify.checks.push_back(name.get<std::string>());
            }
        }
        if (cfg.verify.test_points < 1 || cfg.verify.trials < 1) g.fail("need test_points >= 1 and trials >= 1");
        g.done();
    }

    if (const json* v = f.find("sweep")) {
        Fields g(*v, "sweep");
        cfg.sweep.taus = g.numbers("taus");
        for (double x : g.numbers("Ms")) {
            if (!(x >= 2.0) || x != std::floor(x)) g.fail("'Ms' must hold integers >= 2");
            cfg.sweep.sizes.push_back(static_cast<std::size_t>(x));
        }
        cfg.sweep.reference = g.string("reference", "auto");
        if (cfg.sweep.reference != "auto" && cfg.sweep.reference != "exact" && cfg.sweep.reference != "finest")
            g.fail("'reference' must be auto, exact or finest");
        if (!cfg.sweep.taus.empty() && !cfg.sweep.sizes.empty()) g.fail("give either 'taus' or 'Ms', not both");
        for (double t : cfg.sweep.taus)
            if (!(t > 0.0)) g.fail("sweep step sizes must be positive");
        if (!cfg.sweep.sizes.empty() && cfg.euclidean()) g.fail("'Ms' needs the wasserstein1d carrier");
        g.done();
    }
    f.done();

    double lambda = 0.0;
    if (cfg.euclidean()) {
        const auto problem = euclidean_problem(cfg);
        lambda = problem.functional.descriptor.lambda;
        if (cfg.scheme == "exact" && !problem.quadratic)
            throw ConfigError("config: scheme 'exact' is available for the quadratic functional only");
    } else {
        const auto problem = wasserstein_problem(cfg, cfg.grid_size);
        lambda = problem.spec.lambda();
        if (cfg.scheme == "exact") throw ConfigError("config: scheme 'exact' is available for the quadratic functional only");
    }
    if (cfg.scheme == "mms") check_feasibility(cfg.tau, lambda, cfg.params.eta);

    cfg.resolved["scheme"] = cfg.scheme;
    cfg.resolved["eta"] = cfg.params.eta;
    cfg.resolved["seed"] = cfg.seed;
    cfg.resolved["inner"] = {{"max_iter", cfg.params.inner_max_iter}, {"tol", cfg.params.inner_tol_abs}};
    if (!cfg.euclidean()) cfg.resolved["M"] = cfg.grid_size;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path(), seed_override);
}

}  // namespace gradflow::cli
