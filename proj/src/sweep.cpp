#include "mfard/sweep.hpp"

#include "mfard/diagnostics.hpp"
#include "mfard/errors.hpp"
#include "mfard/theory.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace mfard {

const char* to_string(CellStatus s) {
    switch (s) {
        case CellStatus::Ok: return "ok";
        case CellStatus::Diverged: return "diverged";
        case CellStatus::Timeout: return "timeout";
    }
    return "?";
}

std::uint64_t train_data_seed(const SweepConfig& c, std::int64_t P, int seed) {
    return derive_seed(c.master_seed, "train-data", {static_cast<std::uint64_t>(P), static_cast<std::uint64_t>(seed)});
}

std::uint64_t eval_data_seed(const SweepConfig& c, int seed) {
    return derive_seed(c.master_seed, "eval-data", {static_cast<std::uint64_t>(seed)});
}

std::uint64_t cell_seed(const SweepConfig& c, const CellKey& k) {
    return derive_seed(c.master_seed, to_string(k.model),
                       {static_cast<std::uint64_t>(k.P), std::bit_cast<std::uint64_t>(k.kappa),
                        static_cast<std::uint64_t>(k.seed)});
}

TaskSpec task_for_seed(const SweepConfig& c, int seed) {
    if (!c.random_support) return c.task;
    // Partial Fisher-Yates on {0..d-1} driven by the per-seed stream.
    Rng rng(derive_seed(c.master_seed, "support", {static_cast<std::uint64_t>(seed)}));
    std::vector<int> idx(static_cast<std::size_t>(c.task.d));
    std::iota(idx.begin(), idx.end(), 0);
    const int k = c.task.k();
    for (int i = 0; i < k; ++i) {
        const auto span = static_cast<std::uint64_t>(c.task.d - i);
        const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.next_u64() % span);
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    TaskSpec t = c.task;
    t.support.assign(idx.begin(), idx.begin() + k);
    std::sort(t.support.begin(), t.support.end());
    return t;
}

std::vector<CellKey> expand_grid(const SweepConfig& c) {
    std::vector<CellKey> keys;
    for (ModelKind m : c.models)
        for (auto P : c.P_grid)
            for (double kappa : c.kappa_grid)
                for (int s = 0; s < c.seeds; ++s) keys.push_back({m, P, kappa, s});
    return keys;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Hyperparams cell_hyper(const SweepConfig& c, double kappa, int N) {
    Hyperparams h = c.network;
    h.kappa = kappa;
    h.N = N;
    return h;
}

MfConfig mf_config(const SweepConfig& c, const CellKey& key) {
    MfConfig m;
    m.hyper = cell_hyper(c, key.kappa, c.network.N);
    m.B = c.mf.B;
    m.outer_steps = c.mf.outer_steps;
    m.K0 = c.mf.K0;
    m.K_min = c.mf.K_min;
    m.K_decay_steps = c.mf.K_decay_steps;
    m.schedule = LrSchedule{c.mf.learning_rate_start, c.mf.learning_rate, c.mf.lr_decay_steps, 2};
    m.ard.enabled = key.model == ModelKind::MF_ARD;
    m.ard.alpha0 = c.ard.alpha0;
    m.ard.beta0 = c.ard.beta0;
    m.ard.lambda = c.ard.lambda;
    m.ard.rho_min = c.ard.rho_min;
    m.ard.rho_max = c.ard.rho_max;
    m.with_bias = c.sgld.bias;
    m.sigma_b = c.sgld.sigma_b;
    m.log_stride = c.mf.log_stride;
    m.wall_budget_seconds = c.time_budget_seconds;
    return m;
}

SgldConfig sgld_config(const SweepConfig& c, const CellKey& key) {
    SgldConfig s;
    s.hyper = cell_hyper(c, key.kappa, c.network.N);
    s.steps = c.sgld.steps;
    s.schedule = LrSchedule{c.sgld.learning_rate_start, c.sgld.learning_rate, c.sgld.lr_decay_steps, 2};
    s.log_stride = c.sgld.log_stride;
    s.with_bias = c.sgld.bias;
    s.sigma_b = c.sgld.sigma_b;
    s.wall_budget_seconds = c.time_budget_seconds;
    return s;
}

void fill_metrics(SweepRecord& r, const Vector& f_eval, const Dataset& eval, double train_mse) {
    r.m_S = teacher_overlap(f_eval, eval);
    r.test_mse = 0.5 * (f_eval - eval.y).squaredNorm() / static_cast<double>(eval.P());
    r.train_mse = train_mse;
}

void mark_failed(SweepRecord& r, CellStatus status, std::int64_t step) {
    r.status = status;
    r.m_S = r.test_mse = r.train_mse = kNaN;
    r.steps_run = step;
}

}  // namespace

CellResult run_cell(const SweepConfig& c, const CellKey& key) {
    const auto t0 = std::chrono::steady_clock::now();
    CellResult out;
    SweepRecord& rec = out.record;
    rec.key = key;
    const TaskSpec task = task_for_seed(c, key.seed);

    if (key.model == ModelKind::THEORY) {
        OnsetInputs in;
        in.C = static_cast<double>(task.d) * task.k() / (c.network.sigma_w * c.network.sigma_w);
        in.N = c.network.N;
        in.gamma = c.network.gamma;
        in.sigma_a = c.network.sigma_a;
        in.kappa = key.kappa;
        const double m = solve_scalar_fp(in, parity_constants(task.k()));
        rec.m_S = m;
        rec.test_mse = 0.5 * (1.0 - m) * (1.0 - m);
        rec.train_mse = kNaN;
        rec.steps_run = 0;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

    const Dataset train = gen_dataset(task, key.P, train_data_seed(c, key.P, key.seed));
    const Dataset eval = gen_dataset(task, c.P_eval, eval_data_seed(c, key.seed));
    const std::uint64_t seed = cell_seed(c, key);

    try {
        switch (key.model) {
            case ModelKind::SGLD: {
                const SgldConfig cfg = sgld_config(c, key);
                const SgldResult res = train_sgld(cfg, train, seed);
                fill_metrics(rec, forward(res.params, eval.X), eval, train_mse(res.params, compress_rows(train)));
                rec.steps_run = res.steps_run;
                out.W = res.params.W;
                out.a = res.params.a;
                break;
            }
            case ModelKind::MF:
            case ModelKind::MF_ARD: {
                const MfConfig cfg = mf_config(c, key);
                const MfResult res = mf_outer_solve(cfg, train, seed, &eval);
                const Vector r = mf_residual(res.state, compress_rows(train));
                const WeightedDesign design = compress_rows(train);
                fill_metrics(rec, mf_predict(res.state, eval.X), eval,
                             design.count.dot(r.cwiseAbs2()) / static_cast<double>(design.P));
                rec.steps_run = res.outer_steps_run;
                out.rho = res.state.rho;
                out.W = res.state.W;
                out.a = res.state.a;
                for (const auto& tp : res.trace) out.m_S_trace.push_back(tp.m_S);
                break;
            }
            case ModelKind::NNGP: {
                const NngpResult res = nngp_run(train, eval, cell_hyper(c, key.kappa, c.network.N), std::nullopt,
                                                c.nngp.M, seed, c.nngp.ridge);
                rec.m_S = res.m_S;
                rec.test_mse = res.test_mse;
                rec.train_mse = res.train_mse;
                rec.steps_run = 0;
                break;
            }
            case ModelKind::THEORY: break;
        }
    } catch (const SgldTimeout& e) {
        mark_failed(rec, CellStatus::Timeout, e.step());
    } catch (const MfTimeout& e) {
        mark_failed(rec, CellStatus::Timeout, e.step());
    } catch (const NumericalDivergence& e) {
        mark_failed(rec, CellStatus::Diverged, e.step());
    } catch (const IllConditionedError&) {
        mark_failed(rec, CellStatus::Diverged, 0);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---- CSV -------------------------------------------------------------------

std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell_id(const CellKey& k) {
    return std::string(to_string(k.model)) + "," + std::to_string(k.P) + "," + format_real(k.kappa) + "," +
           std::to_string(k.seed);
}

std::string csv_row(const SweepRecord& r) {
    return "1," + cell_id(r.key) + "," + format_real(r.m_S) + "," + format_real(r.test_mse) + "," +
           format_real(r.train_mse) + "," + std::to_string(r.steps_run) + "," + format_real(r.wall_seconds) + "," +
           to_string(r.status);
}

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Complete (LF-terminated) data lines of a CSV text.
std::vector<std::string> complete_rows(std::string_view text) {
    std::vector<std::string> rows;
    std::size_t start = 0;
    while (true) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) break;
        std::string_view line = text.substr(start, nl - start);
        start = nl + 1;
        if (line.empty() || line == kCsvHeader) continue;
        rows.emplace_back(line);
    }
    return rows;
}

}  // namespace

std::string canonical_csv(std::string_view text) {
    struct Row {
        std::string model;
        std::int64_t P;
        double kappa;
        int seed;
        std::vector<std::string> fields;
    };
    std::vector<Row> rows;
    for (const auto& line : complete_rows(text)) {
        auto f = split(line, ',');
        if (f.size() != 11) throw InputDomainError("canonical_csv: malformed row '" + line + "'");
        f[9] = "0";
        rows.push_back({f[1], std::stoll(f[2]), std::stod(f[3]), std::stoi(f[4]), std::move(f)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.model, a.P, a.kappa, a.seed) < std::tie(b.model, b.P, b.kappa, b.seed);
    });
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.fields.size(); ++i) {
            if (i) out += ',';
            out += r.fields[i];
        }
        out += '\n';
    }
    return out;
}

namespace {

// Reads the existing output, drops a trailing partial row and returns the
// set of completed cell ids.
std::set<std::string> prepare_output(const std::filesystem::path& path) {
    std::set<std::string> done;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("sweep: cannot create " + path.string());
        out << kCsvHeader << '\n';
        if (!out.flush()) throw Error("sweep: cannot write " + path.string());
        return done;
    }
    std::string text;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("sweep: cannot read " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    if (text.rfind(std::string(kCsvHeader), 0) != 0)
        throw Error("sweep: " + path.string() + " does not start with the schema=1 header");
    const std::size_t last_nl = text.rfind('\n');
    if (last_nl + 1 != text.size()) {
        std::filesystem::resize_file(path, last_nl + 1, ec);
        if (ec) throw Error("sweep: cannot truncate partial row in " + path.string());
        text.resize(last_nl + 1);
    }
    for (const auto& line : complete_rows(text)) {
        const auto f = split(line, ',');
        if (f.size() != 11) throw Error("sweep: malformed row in " + path.string() + ": " + line);
        done.insert(f[1] + "," + f[2] + "," + f[3] + "," + f[4]);
    }
    return done;
}

class RowAppender {
public:
    explicit RowAppender(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::app), path_(path) {
        if (!out_) throw Error("sweep: cannot open " + path.string() + " for appending");
    }
    void append(const std::string& row) {
        std::lock_guard lock(mu_);
        const std::string line = row + '\n';
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.flush();
        if (!out_) throw Error("sweep: write failed on " + path_.string());
    }

private:
    std::mutex mu_;
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace

SweepSummary run_sweep(const SweepConfig& config) {
    config.validate();
    SweepSummary summary;
    const std::vector<CellKey> grid = expand_grid(config);
    summary.cells = grid.size();
    const std::set<std::string> done = prepare_output(config.output);
    std::vector<CellKey> pending;
    for (const auto& k : grid) {
        if (done.count(cell_id(k))) ++summary.skipped;
        else pending.push_back(k);
    }

    RowAppender appender(config.output);
    std::atomic<std::size_t> next{0}, ok{0}, failed{0};
    std::mutex err_mu;
    std::exception_ptr io_error;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            {
                std::lock_guard lock(err_mu);
                if (io_error) return;
            }
            try {
                const CellResult res = run_cell(config, pending[i]);
                appender.append(csv_row(res.record));
                (res.record.status == CellStatus::Ok ? ok : failed).fetch_add(1);
            } catch (const ConfigError&) {
                std::lock_guard lock(err_mu);
                if (!io_error) io_error = std::current_exception();
            } catch (const Error&) {
                // I/O failures abort the sweep; rows already written stay valid.
                std::lock_guard lock(err_mu);
                if (!io_error) io_error = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(config.workers, static_cast<int>(pending.size())));
    std::vector<std::thread> threads;
    for (int t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (io_error) std::rethrow_exception(io_error);
    summary.ok = ok;
    summary.failed = failed;
    return summary;
}

}  // namespace mfard
