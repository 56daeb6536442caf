// mfard: sweeps, config validation and the critical-noise scaling table.
//
// Exit codes: 0 all cells ok, 2 some cells failed, 1 configuration or I/O error.

#include "mfard/errors.hpp"
#include "mfard/sweep.hpp"
#include "mfard/theory.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

struct SharedFlags {
    std::optional<int> workers;
    std::optional<std::uint64_t> master_seed;
    std::string preset;
    std::string out;
};

mfard::SweepConfig resolve_config(const std::string& path, const SharedFlags& f) {
    mfard::SweepConfig c;
    if (!path.empty()) c = mfard::load_config(path);
    else if (!f.preset.empty()) c = mfard::preset_config(f.preset);
    else throw mfard::ConfigError("sweep: give a config file or --preset");
    if (!path.empty() && !f.preset.empty() && c.preset != f.preset)
        throw mfard::ConfigError("preset: --preset conflicts with the config file's preset");
    if (f.workers) c.workers = *f.workers;
    if (f.master_seed) c.master_seed = *f.master_seed;
    if (!f.out.empty()) c.output = f.out;
    c.validate();
    return c;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field / ARD / NNGP numerics for sparse parity and single-index tasks"};
    app.require_subcommand(1);

    SharedFlags flags;
    std::string config_path;

    auto* sweep = app.add_subcommand("sweep", "Run (or resume) a model x P x kappa x seed sweep");
    sweep->add_option("config", config_path, "YAML sweep config");
    sweep->add_option("--workers", flags.workers, "Worker threads");
    sweep->add_option("--master-seed", flags.master_seed, "Master RNG seed");
    sweep->add_option("--preset", flags.preset, "Built-in preset (used when no config is given)");
    sweep->add_option("--out", flags.out, "Output CSV path");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config without running it");
    validate->add_option("config", config_path, "YAML sweep config");
    validate->add_option("--preset", flags.preset, "Validate a built-in preset");

    std::string mode = "MF", d_list = "64,128,256";
    int k = 2;
    mfard::ScalingParams sp;
    auto* table = app.add_subcommand("theory-table", "Print kappa_c^2 versus d as CSV");
    table->add_option("--mode", mode, "MF or ARD")->check(CLI::IsMember({"MF", "ARD"}));
    table->add_option("--d", d_list, "Comma-separated input dimensions");
    table->add_option("--k", k, "Parity order");
    table->add_option("--N", sp.N, "Hidden width");
    table->add_option("--gamma", sp.gamma, "Output scaling exponent");
    table->add_option("--sigma-w", sp.sigma_w, "Weight prior scale");
    table->add_option("--sigma-a", sp.sigma_a, "Amplitude prior scale");
    table->add_option("--rho-on", sp.rho_on, "On-support ARD precision (ARD mode)");

    std::string csv_in, csv_out;
    auto* canon = app.add_subcommand("canonicalize", "Sort a results CSV by cell key and zero wall_seconds");
    canon->add_option("csv", csv_in, "Input CSV")->required();
    canon->add_option("--out", csv_out, "Output path (default: stdout)");

    auto* presets = app.add_subcommand("presets", "List built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*sweep) {
            const mfard::SweepConfig c = resolve_config(config_path, flags);
            const mfard::SweepSummary s = mfard::run_sweep(c);
            std::cerr << "cells=" << s.cells << " skipped=" << s.skipped << " ok=" << s.ok << " failed=" << s.failed
                      << " -> " << c.output.string() << "\n";
            return s.failed == 0 ? 0 : 2;
        }
        if (*validate) {
            const mfard::SweepConfig c = resolve_config(config_path, flags);
            std::cout << "ok: " << mfard::expand_grid(c).size() << " cells -> " << c.output.string() << "\n";
            return 0;
        }
        if (*table) {
            const auto m = mode == "MF" ? mfard::ScalingMode::MF : mfard::ScalingMode::ARD;
            std::cout << "mode,d,k,kappa_c_sq\n";
            for (const auto& r : mfard::scaling_table(m, parse_int_list(d_list), k, sp))
                std::cout << mfard::to_string(r.mode) << ',' << r.d << ',' << r.k << ','
                          << mfard::format_real(r.kappa_c_sq) << '\n';
            return 0;
        }
        if (*canon) {
            std::ifstream in(csv_in, std::ios::binary);
            if (!in) throw mfard::Error("canonicalize: cannot read " + csv_in);
            std::ostringstream ss;
            ss << in.rdbuf();
            const std::string text = mfard::canonical_csv(ss.str());
            if (csv_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(csv_out, std::ios::binary);
                out << text;
                if (!out) throw mfard::Error("canonicalize: cannot write " + csv_out);
            }
            return 0;
        }
        if (*presets) {
            for (const auto& p : mfard::preset_names()) std::cout << p << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
