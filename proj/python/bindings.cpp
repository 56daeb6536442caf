#include "mfard/diagnostics.hpp"
#include "mfard/errors.hpp"
#include "mfard/mf_solver.hpp"
#include "mfard/nngp.hpp"
#include "mfard/sgld.hpp"
#include "mfard/sweep.hpp"
#include "mfard/theory.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mfard;

namespace {

Dataset make_dataset(const Matrix& X, const Vector& y, const std::vector<int>& support) {
    if (X.rows() != y.size()) throw InputDomainError("X and y have different numbers of rows");
    Dataset ds{X, y, TaskSpec::parity(static_cast<int>(X.cols()), support)};
    return ds;
}

Hyperparams hyper(int N, double gamma, double sigma_w, double sigma_a, double kappa) {
    Hyperparams h{N, gamma, sigma_w, sigma_a, kappa};
    h.validate();
    return h;
}

OnsetInputs onset(double C, int N, double gamma, double sigma_a, double kappa, double m_S = 0.0) {
    return OnsetInputs{C, N, gamma, sigma_a, kappa, m_S};
}

py::tuple constants_tuple(const TheoryConstants& t) { return py::make_tuple(t.C, t.D, t.R); }

py::dict record_dict(const SweepRecord& r) {
    py::dict d;
    d["model"] = to_string(r.key.model);
    d["P"] = r.key.P;
    d["kappa"] = r.key.kappa;
    d["seed"] = r.key.seed;
    d["m_S"] = r.m_S;
    d["test_mse"] = r.test_mse;
    d["train_mse"] = r.train_mse;
    d["steps_run"] = r.steps_run;
    d["status"] = to_string(r.status);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the mfard C++ core.";

    static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
    static py::exception<ResourceError> resource_error(m, "ResourceError", PyExc_MemoryError);
    static py::exception<NumericalDivergence> divergence(m, "NumericalDivergence", PyExc_ArithmeticError);
    static py::exception<IllConditionedError> ill(m, "IllConditionedError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            config_error(e.what());
        } catch (const ResourceError& e) {
            resource_error(e.what());
        } catch (const NumericalDivergence& e) {
            divergence(e.what());
        } catch (const IllConditionedError& e) {
            ill(e.what());
        } catch (const InputDomainError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const TimeoutError& e) {
            PyErr_SetString(PyExc_TimeoutError, e.what());
        }
    });

    // data
    m.def("walsh_column", [](const std::vector<int>& S, const Matrix& X) { return walsh_column(S, X); },
          py::arg("S"), py::arg("X"));
    m.def("hermite_he", &hermite_he, py::arg("p"), py::arg("z"));
    m.def(
        "gen_dataset",
        [](const std::string& kind, int d, std::vector<int> support, Eigen::Index P, std::uint64_t seed, int degree) {
            const TaskSpec spec = kind == "parity" ? TaskSpec::parity(d, std::move(support))
                                  : kind == "single_index"
                                      ? TaskSpec::single_index(d, std::move(support), degree)
                                      : throw ConfigError("kind must be 'parity' or 'single_index'");
            Dataset ds = gen_dataset(spec, P, seed);
            return py::make_tuple(std::move(ds.X), std::move(ds.y));
        },
        py::arg("kind"), py::arg("d"), py::arg("support"), py::arg("P"), py::arg("seed"), py::arg("degree") = 1,
        "Returns (X, y).");

    // theory
    m.def("parity_constants", [](int k) { return constants_tuple(parity_constants(k)); }, py::arg("k"));
    m.def("brute_constants", [](int k) { return constants_tuple(brute_constants(k)); }, py::arg("k"));
    m.def(
        "kappa_c",
        [](double C, int N, double gamma, double sigma_a, int k) {
            return kappa_c(onset(C, N, gamma, sigma_a, 1.0), parity_constants(k));
        },
        py::arg("C"), py::arg("N"), py::arg("gamma"), py::arg("sigma_a"), py::arg("k"),
        "Critical noise kappa_c^2.");
    m.def(
        "a_star",
        [](double C, int N, double gamma, double sigma_a, double kappa, int k, double m_S) {
            return a_star(onset(C, N, gamma, sigma_a, kappa, m_S), parity_constants(k));
        },
        py::arg("C"), py::arg("N"), py::arg("gamma"), py::arg("sigma_a"), py::arg("kappa"), py::arg("k"),
        py::arg("m_S") = 0.0);
    m.def(
        "solve_scalar_fp",
        [](double C, int N, double gamma, double sigma_a, double kappa, int k) {
            return solve_scalar_fp(onset(C, N, gamma, sigma_a, kappa), parity_constants(k));
        },
        py::arg("C"), py::arg("N"), py::arg("gamma"), py::arg("sigma_a"), py::arg("kappa"), py::arg("k"));
    m.def(
        "small_noise_fp", [](int N, int k) { return small_noise_fp(onset(1.0, N, 0.5, 1.0, 1.0), parity_constants(k)); },
        py::arg("N"), py::arg("k"));
    m.def(
        "scaling_table",
        [](const std::string& mode, const std::vector<int>& ds, int k, int N, double gamma, double sigma_w,
           double sigma_a, double rho_on) {
            if (mode != "MF" && mode != "ARD") throw ConfigError("mode must be 'MF' or 'ARD'");
            const auto rows = scaling_table(mode == "MF" ? ScalingMode::MF : ScalingMode::ARD, ds, k,
                                            ScalingParams{N, gamma, sigma_w, sigma_a, rho_on});
            std::vector<std::pair<int, double>> out;
            for (const auto& r : rows) out.emplace_back(r.d, r.kappa_c_sq);
            return out;
        },
        py::arg("mode"), py::arg("d"), py::arg("k"), py::arg("N"), py::arg("gamma") = 0.5, py::arg("sigma_w") = 1.0,
        py::arg("sigma_a") = 1.0, py::arg("rho_on") = 1.0, "List of (d, kappa_c^2).");

    // models
    m.def(
        "train_sgld",
        [](const Matrix& X, const Vector& y, const std::vector<int>& support, int N, double gamma, double sigma_w,
           double sigma_a, double kappa, std::int64_t steps, double lr_start, double lr_end, std::int64_t decay,
           std::uint64_t seed) {
            SgldConfig c;
            c.hyper = hyper(N, gamma, sigma_w, sigma_a, kappa);
            c.steps = steps;
            c.schedule = LrSchedule{lr_start, lr_end, decay, 2};
            c.log_stride = std::max<std::int64_t>(1, steps / 100);
            const Dataset ds = make_dataset(X, y, support);
            SgldResult r;
            {
                py::gil_scoped_release release;
                r = train_sgld(c, ds, seed);
            }
            py::dict d;
            d["W"] = r.params.W;
            d["a"] = r.params.a;
            d["steps_run"] = r.steps_run;
            std::vector<std::pair<std::int64_t, double>> trace;
            for (const auto& t : r.trace) trace.emplace_back(t.step, t.train_mse);
            d["trace"] = trace;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("support"), py::arg("N"), py::arg("gamma") = 0.5,
        py::arg("sigma_w") = 1.0, py::arg("sigma_a") = 1.0, py::arg("kappa") = 5e-3, py::arg("steps") = 10000,
        py::arg("lr_start") = 5e-3, py::arg("lr_end") = 5e-4, py::arg("decay_steps") = 5000, py::arg("seed") = 0);
    m.def(
        "mf_solve",
        [](const Matrix& X, const Vector& y, const std::vector<int>& support, int N, int B, double gamma,
           double sigma_w, double sigma_a, double kappa, bool ard, std::int64_t outer_steps, std::uint64_t seed) {
            MfConfig c;
            c.hyper = hyper(N, gamma, sigma_w, sigma_a, kappa);
            c.B = B;
            c.outer_steps = outer_steps;
            c.K_decay_steps = std::max<std::int64_t>(1, outer_steps * 3 / 10);
            c.schedule = LrSchedule{5e-3, 5e-4, std::max<std::int64_t>(1, outer_steps / 4), 2};
            c.ard.enabled = ard;
            c.log_stride = std::max<std::int64_t>(1, outer_steps / 20);
            const Dataset ds = make_dataset(X, y, support);
            MfResult r;
            {
                py::gil_scoped_release release;
                r = mf_outer_solve(c, ds, seed);
            }
            py::dict d;
            d["W"] = r.state.W;
            d["a"] = r.state.a;
            d["rho"] = r.state.rho;
            d["s_f"] = r.state.s_f;
            d["inner_steps_run"] = r.inner_steps_run;
            return d;
        },
        py::arg("X"), py::arg("y"), py::arg("support"), py::arg("N"), py::arg("B"), py::arg("gamma") = 0.5,
        py::arg("sigma_w") = 1.0, py::arg("sigma_a") = 1.0, py::arg("kappa") = 5e-3, py::arg("ard") = true,
        py::arg("outer_steps") = 1000, py::arg("seed") = 0);
    m.def(
        "mc_kernel",
        [](const Matrix& X, double sigma_w, double sigma_a, int M, std::uint64_t seed, std::optional<Vector> rho) {
            return mc_kernel(X, KernelPrior{sigma_w, sigma_a, std::move(rho)}, M, seed);
        },
        py::arg("X"), py::arg("sigma_w") = 1.0, py::arg("sigma_a") = 1.0, py::arg("M") = 8192, py::arg("seed") = 0,
        py::arg("rho") = py::none());
    m.def("krr_predict", &krr_predict, py::arg("K"), py::arg("K_cross"), py::arg("y"), py::arg("tau"));
    m.def(
        "nngp_run",
        [](const Matrix& Xt, const Vector& yt, const Matrix& Xe, const Vector& ye, const std::vector<int>& support,
           double sigma_w, double sigma_a, double kappa, int M, std::uint64_t seed) {
            const NngpResult r = nngp_run(make_dataset(Xt, yt, support), make_dataset(Xe, ye, support),
                                          hyper(1, 0.5, sigma_w, sigma_a, kappa), std::nullopt, M, seed);
            py::dict d;
            d["predictions"] = r.predictions;
            d["m_S"] = r.m_S;
            d["test_mse"] = r.test_mse;
            d["train_mse"] = r.train_mse;
            return d;
        },
        py::arg("X_train"), py::arg("y_train"), py::arg("X_eval"), py::arg("y_eval"), py::arg("support"),
        py::arg("sigma_w") = 1.0, py::arg("sigma_a") = 1.0, py::arg("kappa") = 5e-3, py::arg("M") = 8192,
        py::arg("seed") = 0);

    // diagnostics
    m.def(
        "test_error",
        [](const Vector& f, const Matrix& X, const Vector& y, const std::vector<int>& support) {
            const TestError e = test_error(f, make_dataset(X, y, support), support);
            py::dict d;
            d["mse"] = e.mse;
            d["f_bar_sq"] = e.f_bar_sq;
            d["m_S"] = e.m_S;
            d["g"] = e.g;
            d["decomposed"] = e.decomposed;
            return d;
        },
        py::arg("f"), py::arg("X"), py::arg("y"), py::arg("support"));

    // sweeps
    m.def("preset_names", &preset_names);
    m.def(
        "load_config",
        [](const std::string& text) {
            const SweepConfig c = parse_config(text);
            py::dict d;
            d["d"] = c.task.d;
            d["support"] = c.task.support;
            std::vector<std::string> models;
            for (auto k : c.models) models.emplace_back(to_string(k));
            d["models"] = models;
            d["P_grid"] = c.P_grid;
            d["kappa_grid"] = c.kappa_grid;
            d["seeds"] = c.seeds;
            d["N"] = c.network.N;
            d["output"] = c.output.string();
            return d;
        },
        py::arg("text"), "Parses and validates YAML config text; returns a summary dict.");
    m.def(
        "run_cell",
        [](const std::string& text, const std::string& model, std::int64_t P, double kappa, int seed) {
            const SweepConfig c = parse_config(text);
            const auto mk = parse_model(model);
            if (!mk) throw ConfigError("unknown model '" + model + "'");
            CellResult r;
            {
                py::gil_scoped_release release;
                r = run_cell(c, CellKey{*mk, P, kappa, seed});
            }
            py::dict d = record_dict(r.record);
            if (r.rho) d["rho"] = *r.rho;
            return d;
        },
        py::arg("config"), py::arg("model"), py::arg("P"), py::arg("kappa"), py::arg("seed") = 0);
    m.def(
        "run_sweep",
        [](const std::string& text, std::optional<std::string> output, std::optional<int> workers) {
            SweepConfig c = parse_config(text);
            if (output) c.output = *output;
            if (workers) c.workers = *workers;
            SweepSummary s;
            {
                py::gil_scoped_release release;
                s = run_sweep(c);
            }
            py::dict d;
            d["cells"] = s.cells;
            d["skipped"] = s.skipped;
            d["ok"] = s.ok;
            d["failed"] = s.failed;
            return d;
        },
        py::arg("config"), py::arg("output") = py::none(), py::arg("workers") = py::none());
    m.def("canonical_csv", [](const std::string& text) { return canonical_csv(text); }, py::arg("text"));
}
