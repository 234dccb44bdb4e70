#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "gradflow/euclidean.hpp"
#include "gradflow/mms.hpp"
#include "gradflow/wasserstein1d.hpp"

namespace py = pybind11;
using namespace gradflow;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a)
{
    if (a.ndim() != 1) throw py::value_error("expected a one-dimensional array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(const std::vector<double>& v)
{
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

QuadraticFunctional quadratic(const Array& a, const Array& b, double c)
{
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw py::value_error("A must be a square matrix");
    const Eigen::Index n = a.shape(0);
    Eigen::MatrixXd am(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) am(i, j) = a.at(i, j);
    const auto bv = to_vector(b);
    return QuadraticFunctional(am, Eigen::Map<const Eigen::VectorXd>(bv.data(), static_cast<Eigen::Index>(bv.size())), c);
}

py::dict simulate(const std::string& config_json, std::optional<std::uint64_t> seed)
{
    const auto table = cli::simulate_config(config_json, seed);
    const std::size_t rows = table.points.size();
    const std::size_t cols = rows ? table.points.front().size() : 0;
    Array points({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
    auto view = points.mutable_unchecked<2>();
    for (std::size_t n = 0; n < rows; ++n)
        for (std::size_t i = 0; i < cols; ++i)
            view(static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(i)) = table.points[n][i];
    py::dict out;
    out["times"] = to_array(table.times);
    out["points"] = points;
    out["energy"] = to_array(table.energy);
    out["lambda"] = table.lambda;
    out["failure"] = table.failure.empty() ? py::object(py::none()) : py::str(table.failure);
    return out;
}

}  // namespace

PYBIND11_MODULE(_gradflow, m)
{
    m.doc() = "Minimizing movements and EVI checks for lambda-convex gradient flows";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<SchemeError>(m, "SchemeError", PyExc_RuntimeError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    m.def("e_lambda", &e_lambda, py::arg("lam"), py::arg("t"));
    m.def("check_feasibility", &check_feasibility, py::arg("tau"), py::arg("lam"), py::arg("eta") = 0.0);

    m.def(
        "w2", [](const Array& a, const Array& b) { return w2(QuantileMeasure(to_vector(a)), QuantileMeasure(to_vector(b))); },
        py::arg("quantiles_a"), py::arg("quantiles_b"));
    m.def(
        "gaussian_quantiles",
        [](double mean, double variance, std::size_t size) { return to_array(gaussian_quantiles(mean, variance, size).values()); },
        py::arg("mean"), py::arg("variance"), py::arg("size"));
    m.def(
        "barenblatt_quantiles",
        [](double exponent, double t, std::size_t size) { return to_array(Barenblatt(exponent).quantiles(t, size).values()); },
        py::arg("m"), py::arg("t"), py::arg("size"));
    m.def(
        "moments",
        [](const Array& q) {
            const Moments mo = moments(QuantileMeasure(to_vector(q)));
            return py::make_tuple(mo.mean, mo.variance);
        },
        py::arg("quantiles"));
    m.def(
        "isotonic_projection", [](const Array& v) { return to_array(isotonic_projection(to_vector(v))); },
        py::arg("values"));

    m.def(
        "exact_quadratic_flow",
        [](const Array& a, const Array& b, const Array& u0, double t) {
            return to_array(exact_flow_quadratic(quadratic(a, b, 0.0), EuclideanPoint(to_vector(u0)), t).coords);
        },
        py::arg("A"), py::arg("b"), py::arg("u0"), py::arg("t"));
    m.def(
        "quadratic_resolvent",
        [](const Array& a, const Array& b, double tau, const Array& v) {
            return to_array(resolvent_quadratic(quadratic(a, b, 0.0), tau, EuclideanPoint(to_vector(v))).coords);
        },
        py::arg("A"), py::arg("b"), py::arg("tau"), py::arg("v"));

    m.def("simulate", &simulate, py::arg("config_json"), py::arg("seed") = py::none(),
          "Run a configuration (JSON text, same schema as the command line) and return its nodes.");
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"gradflow"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
