#include "mfard/sweep.hpp"

#include "mfard/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mfard {

const char* to_string(ModelKind m) {
    switch (m) {
        case ModelKind::SGLD: return "SGLD";
        case ModelKind::MF: return "MF";
        case ModelKind::MF_ARD: return "MF_ARD";
        case ModelKind::NNGP: return "NNGP";
        case ModelKind::THEORY: return "THEORY";
    }
    return "?";
}

std::optional<ModelKind> parse_model(std::string_view name) {
    for (ModelKind m : {ModelKind::SGLD, ModelKind::MF, ModelKind::MF_ARD, ModelKind::NNGP, ModelKind::THEORY})
        if (name == to_string(m)) return m;
    return std::nullopt;
}

void SweepConfig::validate() const {
    try {
        task.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("task: ") + e.what());
    }
    if (models.empty()) throw ConfigError("models: must list at least one model");
    if (P_grid.empty()) throw ConfigError("P_grid: must be nonempty");
    for (auto P : P_grid)
        if (P < 1) throw ConfigError("P_grid: entries must be >= 1");
    if (kappa_grid.empty()) throw ConfigError("kappa_grid: must be nonempty");
    for (double k : kappa_grid)
        if (!(k > 0)) throw ConfigError("kappa_grid: entries must be > 0");
    if (seeds < 1) throw ConfigError("seeds: must be >= 1");
    if (network.N < 1) throw ConfigError("network.N: must be >= 1");
    if (!(network.gamma >= 0.5 && network.gamma <= 1.0)) throw ConfigError("network.gamma: must lie in [0.5, 1]");
    if (!(network.sigma_w > 0)) throw ConfigError("network.sigma_w: must be > 0");
    if (!(network.sigma_a > 0)) throw ConfigError("network.sigma_a: must be > 0");
    if (sgld.steps < 0) throw ConfigError("sgld.steps: must be >= 0");
    if (!(sgld.learning_rate > 0)) throw ConfigError("sgld.learning_rate: must be > 0");
    if (sgld.learning_rate_start < sgld.learning_rate)
        throw ConfigError("sgld.learning_rate_start: must be >= sgld.learning_rate");
    if (sgld.lr_decay_steps < 1) throw ConfigError("sgld.lr_decay_steps: must be >= 1");
    if (sgld.log_stride < 1) throw ConfigError("sgld.log_stride: must be >= 1");
    if (sgld.bias && !(sgld.sigma_b > 0)) throw ConfigError("sgld.sigma_b: must be > 0");
    if (mf.B < 1) throw ConfigError("mf.B: must be >= 1");
    if (mf.outer_steps < 0) throw ConfigError("mf.outer_steps: must be >= 0");
    if (mf.K_min < 1) throw ConfigError("mf.K_min: must be >= 1");
    if (mf.K0 < mf.K_min) throw ConfigError("mf.K0: must be >= mf.K_min");
    if (mf.K_decay_steps < 1) throw ConfigError("mf.K_decay_steps: must be >= 1");
    if (!(mf.learning_rate > 0)) throw ConfigError("mf.learning_rate: must be > 0");
    if (mf.learning_rate_start < mf.learning_rate)
        throw ConfigError("mf.learning_rate_start: must be >= mf.learning_rate");
    if (mf.lr_decay_steps < 1) throw ConfigError("mf.lr_decay_steps: must be >= 1");
    if (mf.log_stride < 1) throw ConfigError("mf.log_stride: must be >= 1");
    if (!(ard.alpha0 > 0)) throw ConfigError("ard.alpha0: must be > 0");
    if (ard.beta0 && !(*ard.beta0 > 0)) throw ConfigError("ard.beta0: must be > 0");
    if (!(ard.lambda > 0 && ard.lambda <= 1)) throw ConfigError("ard.lambda: must lie in (0, 1]");
    if (!(ard.rho_min > 0)) throw ConfigError("ard.rho_min: must be > 0");
    if (!(ard.rho_max >= ard.rho_min)) throw ConfigError("ard.rho_max: must be >= ard.rho_min");
    if (nngp.M < 1) throw ConfigError("nngp.M: must be >= 1");
    if (P_eval < 1) throw ConfigError("eval.P_eval: must be >= 1");
    if (time_budget_seconds < 0) throw ConfigError("time_budget_seconds: must be >= 0");
    if (workers < 1) throw ConfigError("workers: must be >= 1");
    if (output.empty()) throw ConfigError("output: must be a path");
    const bool theory = std::find(models.begin(), models.end(), ModelKind::THEORY) != models.end();
    if (theory && task.kind != TaskKind::Parity) throw ConfigError("models: THEORY applies to parity tasks only");
}

// ---- presets -------------------------------------------------------------

namespace {

SweepConfig desk_base() {
    SweepConfig c;
    c.task = TaskSpec::parity(10, {0, 1});
    c.network = Hyperparams{128, 0.5, 1.0, 1.0, 1.0};
    c.models = {ModelKind::SGLD, ModelKind::MF, ModelKind::MF_ARD, ModelKind::NNGP};
    c.P_grid = {50, 200, 800, 3200};
    c.kappa_grid = {5e-3};
    c.seeds = 3;
    c.sgld = SgldSettings{};
    c.mf = MfSettings{};
    c.ard = ArdSettings{};
    c.nngp = NngpSettings{};
    c.time_budget_seconds = 20 * 60;
    return c;
}

SweepConfig paper_parity() {
    SweepConfig c;
    c.task = TaskSpec::parity(35, {0, 1, 2, 3});
    c.network = Hyperparams{512, 0.5, 1.0, 1.0, 1.0};
    c.models = {ModelKind::SGLD, ModelKind::MF, ModelKind::MF_ARD};
    c.P_grid = {10, 100, 500, 750, 1000, 2133, 3666, 5000, 7500, 10000};
    c.kappa_grid = {5e-4, 1e-3, 5e-3, 7.5e-3, 1e-2, 5e-2, 1e-1};
    c.seeds = 3;
    c.sgld = SgldSettings{7'500'000, 5e-3, 5e-4, 2'000'000, 50'000, false, 1.0};
    c.mf = MfSettings{512, 7'500'000, 12, 2, 600'000, 5e-3, 5e-4, 2'000'000, 50'000};
    c.ard = ArdSettings{4.0, 4.0 / 35.0, 0.5, 2.2250738585072014e-308, 1e18};
    return c;
}

SweepConfig paper_hermite() {
    SweepConfig c;
    c.task = TaskSpec::single_index(18, {0, 1}, 4);
    c.random_support = true;
    c.network = Hyperparams{1024, 0.5, 0.5, 1.0, 1.0};
    c.models = {ModelKind::SGLD, ModelKind::MF_ARD};
    c.P_grid = {50, 100, 1000, 5000, 10000, 25000, 50000, 75000};
    c.kappa_grid = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    c.seeds = 4;
    c.sgld = SgldSettings{4'000'000, 2e-3, 5e-4, 2'000'000, 50'000, true, 1.0};
    c.mf = MfSettings{1024, 4'000'000, 12, 2, 600'000, 2e-3, 5e-4, 2'500'000, 50'000};
    c.ard = ArdSettings{0.1, 0.1 / 18.0, 0.5, 2.2250738585072014e-308, 1e18};
    return c;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"fig4-parity", "fig5-hermite", "desk-fig1", "desk-fig4", "desk-fig5"};
}

SweepConfig preset_config(std::string_view name) {
    SweepConfig c;
    if (name == "fig4-parity") {
        c = paper_parity();
    } else if (name == "fig5-hermite") {
        c = paper_hermite();
    } else if (name == "desk-fig1") {
        c = desk_base();
    } else if (name == "desk-fig4") {
        c = desk_base();
        c.models = {ModelKind::SGLD, ModelKind::MF, ModelKind::MF_ARD, ModelKind::NNGP};
        c.kappa_grid = {1e-3, 5e-3, 1e-2, 5e-2, 1e-1};
        c.seeds = 1;
    } else if (name == "desk-fig5") {
        c = desk_base();
        c.task = TaskSpec::single_index(8, {0, 1}, 4);
        c.random_support = true;
        c.network.sigma_w = 0.5;
        c.models = {ModelKind::SGLD, ModelKind::MF_ARD};
        c.P_grid = {50, 500, 2000};
        c.kappa_grid = {1e-3, 1e-2, 1e-1};
        c.seeds = 2;
        c.sgld.bias = true;
        c.sgld.learning_rate_start = 2e-3;
        c.mf.learning_rate_start = 2e-3;
        c.ard.alpha0 = 0.1;
        c.P_eval = 5000;
    } else {
        throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
    }
    c.preset = std::string(name);
    return c;
}

// ---- YAML parsing ----------------------------------------------------------

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string where(const YAML::Node& n) {
    const YAML::Mark m = n.Mark();
    if (m.is_null()) return "";
    return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

[[noreturn]] void fail(const std::string& field, const std::string& msg, const YAML::Node& n) {
    throw ConfigError(field + ": " + msg + where(n));
}

// Rejects keys outside `known`, suggesting the closest known key.
void check_keys(const YAML::Node& map, const std::string& prefix, const std::vector<std::string>& known) {
    if (!map.IsMap()) fail(prefix.empty() ? "config" : prefix, "expected a table", map);
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (std::find(known.begin(), known.end(), key) != known.end()) continue;
        std::string best;
        std::size_t best_d = 4;
        for (const auto& k : known) {
            const std::size_t dist = edit_distance(key, k);
            if (dist < best_d) {
                best_d = dist;
                best = k;
            }
        }
        std::string msg = "unknown key '" + key + "'";
        if (!best.empty()) msg += "; did you mean '" + best + "'?";
        throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": " + msg + where(kv.first));
    }
}

template <class T>
T scalar(const YAML::Node& n, const std::string& field) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(field, "invalid value", n);
    }
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) fail(field, "expected a list", n);
    std::vector<T> out;
    for (const auto& e : n) out.push_back(scalar<T>(e, field));
    return out;
}

template <class T>
void maybe(const YAML::Node& parent, const char* key, const std::string& prefix, T& target) {
    if (const YAML::Node n = parent[key]) target = scalar<T>(n, prefix + key);
}

void apply_task(const YAML::Node& n, SweepConfig& c) {
    check_keys(n, "task", {"kind", "d", "support", "hermite_degree", "random_support", "k"});
    if (const YAML::Node kind = n["kind"]) {
        const auto s = scalar<std::string>(kind, "task.kind");
        if (s == "parity") c.task.kind = TaskKind::Parity;
        else if (s == "single_index") c.task.kind = TaskKind::SingleIndex;
        else fail("task.kind", "expected 'parity' or 'single_index'", kind);
    }
    maybe(n, "d", "task.", c.task.d);
    if (const YAML::Node s = n["support"]) c.task.support = list<int>(s, "task.support");
    if (const YAML::Node k = n["k"]) {
        // Shorthand for support = {0, ..., k-1}.
        const int kk = scalar<int>(k, "task.k");
        if (kk < 1) fail("task.k", "must be >= 1", k);
        c.task.support.resize(static_cast<std::size_t>(kk));
        for (int j = 0; j < kk; ++j) c.task.support[static_cast<std::size_t>(j)] = j;
    }
    maybe(n, "hermite_degree", "task.", c.task.hermite_degree);
    maybe(n, "random_support", "task.", c.random_support);
}

void apply(const YAML::Node& root, SweepConfig& c) {
    check_keys(root, "", {"preset", "task", "models", "P_grid", "kappa_grid", "seeds", "master_seed", "network",
                          "sgld", "mf", "ard", "nngp", "eval", "time_budget_seconds", "output", "workers"});
    if (const YAML::Node t = root["task"]) apply_task(t, c);
    if (const YAML::Node m = root["models"]) {
        c.models.clear();
        for (const auto& name : list<std::string>(m, "models")) {
            const auto kind = parse_model(name);
            if (!kind) fail("models", "unknown model '" + name + "' (SGLD, MF, MF_ARD, NNGP, THEORY)", m);
            c.models.push_back(*kind);
        }
    }
    if (const YAML::Node n = root["P_grid"]) c.P_grid = list<std::int64_t>(n, "P_grid");
    if (const YAML::Node n = root["kappa_grid"]) c.kappa_grid = list<double>(n, "kappa_grid");
    maybe(root, "seeds", "", c.seeds);
    maybe(root, "master_seed", "", c.master_seed);
    maybe(root, "time_budget_seconds", "", c.time_budget_seconds);
    maybe(root, "workers", "", c.workers);
    if (const YAML::Node n = root["output"]) c.output = scalar<std::string>(n, "output");
    if (const YAML::Node n = root["network"]) {
        check_keys(n, "network", {"N", "gamma", "sigma_w", "sigma_a"});
        maybe(n, "N", "network.", c.network.N);
        maybe(n, "gamma", "network.", c.network.gamma);
        maybe(n, "sigma_w", "network.", c.network.sigma_w);
        maybe(n, "sigma_a", "network.", c.network.sigma_a);
    }
    if (const YAML::Node n = root["sgld"]) {
        check_keys(n, "sgld", {"steps", "learning_rate_start", "learning_rate", "lr_decay_steps", "log_stride",
                               "bias", "sigma_b"});
        maybe(n, "steps", "sgld.", c.sgld.steps);
        maybe(n, "learning_rate_start", "sgld.", c.sgld.learning_rate_start);
        maybe(n, "learning_rate", "sgld.", c.sgld.learning_rate);
        maybe(n, "lr_decay_steps", "sgld.", c.sgld.lr_decay_steps);
        maybe(n, "log_stride", "sgld.", c.sgld.log_stride);
        maybe(n, "bias", "sgld.", c.sgld.bias);
        maybe(n, "sigma_b", "sgld.", c.sgld.sigma_b);
    }
    if (const YAML::Node n = root["mf"]) {
        check_keys(n, "mf", {"B", "outer_steps", "K0", "K_min", "K_decay_steps", "learning_rate_start",
                             "learning_rate", "lr_decay_steps", "log_stride"});
        maybe(n, "B", "mf.", c.mf.B);
        maybe(n, "outer_steps", "mf.", c.mf.outer_steps);
        maybe(n, "K0", "mf.", c.mf.K0);
        maybe(n, "K_min", "mf.", c.mf.K_min);
        maybe(n, "K_decay_steps", "mf.", c.mf.K_decay_steps);
        maybe(n, "learning_rate_start", "mf.", c.mf.learning_rate_start);
        maybe(n, "learning_rate", "mf.", c.mf.learning_rate);
        maybe(n, "lr_decay_steps", "mf.", c.mf.lr_decay_steps);
        maybe(n, "log_stride", "mf.", c.mf.log_stride);
    }
    if (const YAML::Node n = root["ard"]) {
        check_keys(n, "ard", {"alpha0", "beta0", "lambda", "rho_min", "rho_max"});
        maybe(n, "alpha0", "ard.", c.ard.alpha0);
        if (const YAML::Node b = n["beta0"]) c.ard.beta0 = scalar<double>(b, "ard.beta0");
        maybe(n, "lambda", "ard.", c.ard.lambda);
        maybe(n, "rho_min", "ard.", c.ard.rho_min);
        maybe(n, "rho_max", "ard.", c.ard.rho_max);
    }
    if (const YAML::Node n = root["nngp"]) {
        check_keys(n, "nngp", {"M", "ridge"});
        maybe(n, "M", "nngp.", c.nngp.M);
        if (const YAML::Node r = n["ridge"]) {
            const auto s = scalar<std::string>(r, "nngp.ridge");
            if (s == "kappa2_over_sigma_a2") c.nngp.ridge = RidgeConvention::KappaSqOverSigmaASq;
            else if (s == "kappa2_over_2sigma_a2") c.nngp.ridge = RidgeConvention::KappaSqOverTwoSigmaASq;
            else fail("nngp.ridge", "expected 'kappa2_over_sigma_a2' or 'kappa2_over_2sigma_a2'", r);
        }
    }
    if (const YAML::Node n = root["eval"]) {
        check_keys(n, "eval", {"P_eval"});
        maybe(n, "P_eval", "eval.", c.P_eval);
    }
}

}  // namespace

SweepConfig parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                          std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    SweepConfig c;
    if (root.IsNull()) throw ConfigError("config: empty document");
    if (!root.IsMap()) fail("config", "top level must be a table", root);
    if (const YAML::Node p = root["preset"]) c = preset_config(scalar<std::string>(p, "preset"));
    apply(root, c);
    c.validate();
    return c;
}

SweepConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mfard
