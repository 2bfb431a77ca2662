// lonrec: simulate linear optical networks, synthesize probe-state data,
// reconstruct unitary descriptions and benchmark the reconstruction methods.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lonrec/lonrec.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitFormat = 4;

using lonrec::Error;

std::uint64_t env_seed_or(std::uint64_t fallback) {
    if (const char* env = std::getenv("LONREC_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw Error("LONREC_SEED is not an unsigned integer");
        }
    }
    return fallback;
}

nlohmann::json load_config(const std::string& path, const std::set<std::string>& allowed) {
    if (path.empty()) return nlohmann::json::object();
    nlohmann::json cfg = lonrec::io::parse_json(lonrec::io::read_file(path), path);
    if (!cfg.is_object()) throw lonrec::FormatError("config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        (void)value;
        if (!allowed.count(key)) throw Error("unknown config key: " + key);
    }
    return cfg;
}

template <typename T>
T merged(const CLI::Option* opt, const T& flag_value, const nlohmann::json& cfg,
         const std::string& key, const T& fallback) {
    if (opt && opt->count() > 0) return flag_value;
    if (cfg.contains(key)) return cfg.at(key).get<T>();
    return fallback;
}

std::vector<lonrec::Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<lonrec::Method> methods;
    for (const auto& n : names) methods.push_back(lonrec::method_from_string(n));
    return methods;
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory: " + dir);
}

// ---------------------------------------------------------------------------

int cmd_generate(int m, double sigma, std::uint64_t seed, double loss_eps, const std::string& out,
                 const std::string& selection) {
    using namespace lonrec;
    if (m < 2 || m > kMaxModes)
        throw Error("generate: --m must lie in [2, " + std::to_string(kMaxModes) + "]");
    if (sigma < 0) throw Error("generate: --sigma must be non-negative");
    const Selection sel = selection == "reduced" ? Selection::reduced : Selection::full;
    ensure_directory(out);

    Rng haar_rng(derive_seed(seed, {0x67656eULL, static_cast<std::uint64_t>(m)}));
    const Unitary h = haar_unitary(m, haar_rng);

    PrimaryData clean;
    if (loss_eps > 0.0) {
        ReckParameters core = decompose_reck(h);
        Rng loss_rng(derive_seed(seed, {0x6c6f7373ULL, static_cast<std::uint64_t>(m)}));
        const RealVec beta =
            sample_loss_params(loss_eps, static_cast<int>(beta_slots(m).size()), loss_rng);
        LossyNetwork net{m, std::move(core), RealVec::Ones(m), RealVec::Ones(m), beta};
        io::save_lossy_network(out + "/network.json", net);
        clean = sense_primary_data(compose_lossy_accessible(net.core, net.beta), sel);
    } else {
        io::save_matrix(out + "/network.json", h.mat());
        clean = sense_primary_data(h.mat(), sel);
    }
    clean.seed = seed;
    io::save_primary_data(out + "/primary_clean.json", clean);

    Rng noise_rng(derive_seed(seed, {0x6e6f69ULL}));
    const PrimaryData noisy = perturb(clean, NoiseModel{sigma, seed}, noise_rng);
    io::save_primary_data(out + "/primary_perturbed.json", noisy);

    std::cout << "wrote " << out << "/network.json, primary_clean.json, primary_perturbed.json\n";
    return kExitOk;
}

int cmd_reconstruct(const std::string& data_path, const std::string& method_name,
                    const std::string& set_name, const std::string& start_path,
                    const std::string& out_path) {
    using namespace lonrec;
    const Method method = method_from_string(method_name);
    const PrimaryData data = io::load_primary_data(data_path);

    auto brisbane_start = [&] {
        return reconstruct_brisbane(data.tau, data.theta);
    };

    ReconstructionResult result = [&]() -> ReconstructionResult {
        switch (method) {
            case Method::brisbane:
                return brisbane_start();
            case Method::bristol: {
                for (const auto& key : bristol_visibility_budget(data.m))
                    if (data.vis.find(key[0], key[1], key[2], key[3]) < 0)
                        throw DataBudgetError(
                            "bristol needs the visibility record (" + std::to_string(key[0] + 1) +
                            "," + std::to_string(key[1] + 1) + ")x(" + std::to_string(key[2] + 1) +
                            "," + std::to_string(key[3] + 1) + ")");
                const RealMat rates = data.tau.tau.array().square();
                return reconstruct_bristol(rates, data.vis);
            }
            case Method::vienna:
            case Method::vienna_reduced: {
                const bool want_reduced = set_name == "reduced" || method == Method::vienna_reduced;
                VisibilitySet reduced;
                const VisibilitySet* vis = &data.vis;
                if (want_reduced) {
                    if (data.vis.selection == Selection::reduced) {
                        vis = &data.vis;
                    } else {
                        reduced = reduced_subset(data.vis);
                        vis = &reduced;
                    }
                } else if (data.vis.selection != Selection::full) {
                    throw DataBudgetError("vienna with --set full needs a full visibility set");
                }
                const ReckParameters start =
                    start_path.empty() ? decompose_reck(brisbane_start().u_hat)
                                       : io::load_reck(start_path);
                OptimizerSettings settings;
                return reconstruct_vienna(*vis, start, settings, data.sigma);
            }
        }
        throw Error("unreachable");
    }();

    io::save_result(out_path, result);
    std::cout << "wrote " << out_path << " (method " << to_string(result.method) << ", "
              << result.diagnostics.records_used << " records)\n";
    return kExitOk;
}

lonrec::ExperimentGrid desk_grid() {
    lonrec::ExperimentGrid grid;
    grid.ms = {8};
    grid.sigmas = {0.01, 0.025, 0.05, 0.075, 0.1};
    grid.methods = {lonrec::Method::brisbane, lonrec::Method::bristol, lonrec::Method::vienna,
                    lonrec::Method::vienna_reduced};
    grid.haar_draws = 20;
    grid.bristol_haar_draws = 20;
    grid.iterations = 20;
    grid.master_seed = 20250801;
    return grid;
}

lonrec::ExperimentGrid paper_grid() {
    lonrec::ExperimentGrid grid;
    for (int m = 4; m <= 14; ++m) grid.ms.push_back(m);
    for (int s = 1; s <= 20; ++s) grid.sigmas.push_back(0.005 * s);
    grid.methods = {lonrec::Method::brisbane, lonrec::Method::bristol, lonrec::Method::vienna,
                    lonrec::Method::vienna_reduced};
    grid.haar_draws = 120;
    grid.bristol_haar_draws = 1000;
    grid.iterations = 120;
    grid.master_seed = 20250801;
    return grid;
}

int cmd_sweep(const std::string& preset, std::vector<int> ms, std::vector<double> sigmas,
              std::vector<std::string> method_names, int haar_draws, int bristol_draws,
              int iterations, std::optional<std::uint64_t> seed, int workers,
              const std::string& out, bool timings, std::vector<double> loss_eps, int networks) {
    using namespace lonrec;
    ensure_directory(out);

    if (!loss_eps.empty()) {
        LossyGrid grid;
        grid.eps_values = loss_eps;
        grid.networks = networks > 0 ? networks : 50;
        grid.iterations = iterations > 0 ? iterations : 100;
        grid.sigma = sigmas.empty() ? 0.01 : sigmas.front();
        grid.master_seed = seed ? *seed : env_seed_or(20250801);
        grid.timings = timings;
        if (!ms.empty()) grid.m = ms.front();
        const LossySweepResult result = lossy_sweep(grid, workers);
        for (const auto& f : result.failures) std::cerr << "warning: " << f << "\n";
        io::write_file(out + "/lossy_trials.csv", io::lossy_trials_csv(result.trials));
        io::write_file(out + "/lossy_summary.csv", io::lossy_summaries_csv(result.summaries));
        std::cout << "wrote " << out << "/lossy_trials.csv (" << result.trials.size()
                  << " rows), lossy_summary.csv (" << result.summaries.size() << " rows)\n";
        return kExitOk;
    }

    ExperimentGrid grid;
    if (preset == "desk") {
        grid = desk_grid();
    } else if (preset == "paper") {
        grid = paper_grid();
    } else if (!preset.empty()) {
        throw Error("unknown preset: " + preset + " (expected 'desk' or 'paper')");
    }
    if (!ms.empty()) grid.ms = ms;
    if (!sigmas.empty()) grid.sigmas = sigmas;
    if (!method_names.empty()) grid.methods = parse_methods(method_names);
    if (grid.methods.empty())
        grid.methods = {Method::brisbane, Method::bristol, Method::vienna, Method::vienna_reduced};
    if (haar_draws > 0) grid.haar_draws = haar_draws;
    if (bristol_draws > 0) grid.bristol_haar_draws = bristol_draws;
    if (iterations > 0) grid.iterations = iterations;
    if (seed) grid.master_seed = *seed;
    else if (preset.empty()) grid.master_seed = env_seed_or(grid.master_seed);
    grid.timings = timings;
    if (grid.ms.empty() || grid.sigmas.empty())
        throw Error("sweep: give --preset or both --m-list and --sigma-list");

    const SweepResult result = sweep(grid, workers);
    for (const auto& f : result.failures) std::cerr << "warning: " << f << "\n";
    io::write_file(out + "/trials.csv", io::trials_csv(result.trials));
    io::write_file(out + "/summary.csv", io::summaries_csv(result.summaries));
    std::cout << "wrote " << out << "/trials.csv (" << result.trials.size() << " rows), summary.csv ("
              << result.summaries.size() << " rows)\n";
    return kExitOk;
}

int cmd_fit(const std::string& trials_path, const std::string& family_name,
            const std::string& out_path) {
    using namespace lonrec;
    const auto trials = io::trials_from_csv(io::read_file(trials_path));
    if (trials.empty()) throw FormatError("fit: no trial rows in " + trials_path);
    const FitFamily family = fit_family_from_string(family_name);

    // group in first-appearance order so refitting a sweep keeps its layout
    std::vector<CellSummary> summaries;
    std::vector<std::tuple<int, double, Method>> seen;
    for (const auto& t : trials) {
        const std::tuple<int, double, Method> key{t.m, t.sigma, t.method};
        bool found = false;
        for (const auto& s : seen) found = found || s == key;
        if (found) continue;
        seen.push_back(key);
        std::vector<double> fs;
        for (const auto& u : trials)
            if (u.m == t.m && u.sigma == t.sigma && u.method == t.method) fs.push_back(u.fidelity);
        CellSummary cs;
        cs.m = t.m;
        cs.sigma = t.sigma;
        cs.method = t.method;
        if (family == FitFamily::weibull) {
            cs.fit = summarize_fidelities(fs);
        } else {
            std::vector<double> xs;
            for (double f : fs) xs.push_back(std::max(1.0 - f, 1e-15));
            cs.fit = fit_positive_samples(xs, FitFamily::burr12);
            const double mode_x = cs.fit.mode;
            cs.fit.mode = 1.0 - mode_x;
            std::swap(cs.fit.err_left, cs.fit.err_right);
        }
        summaries.push_back(std::move(cs));
    }
    io::write_file(out_path, io::summaries_csv(summaries));
    std::cout << "wrote " << out_path << " (" << summaries.size() << " rows)\n";
    return kExitOk;
}

int cmd_plot(const std::string& summary_path, const std::string& out_path) {
    using namespace lonrec;
    const auto summaries = io::summaries_from_csv(io::read_file(summary_path));
    if (summaries.empty()) throw FormatError("plot: no summary rows in " + summary_path);
    io::write_file(out_path, svg::render_summary_plot(summaries));
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear optical network reconstruction toolkit"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "sample a network and write its primary data");
    int gen_m = 0;
    double gen_sigma = 0.025, gen_loss_eps = 0.0;
    std::uint64_t gen_seed = 0;
    std::string gen_out = ".", gen_sel = "full", gen_config;
    auto* gen_m_opt = gen->add_option("--m", gen_m, "mode count");
    auto* gen_sigma_opt = gen->add_option("--sigma", gen_sigma, "noise level, e.g. 0.025");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "master seed");
    auto* gen_eps_opt = gen->add_option("--loss-eps", gen_loss_eps, "in-circuit loss interval bound");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--set", gen_sel, "visibility selection: full|reduced")
        ->check(CLI::IsMember({"full", "reduced"}));
    gen->add_option("--config", gen_config, "JSON config file");

    // reconstruct -------------------------------------------------------------
    auto* rec = app.add_subcommand("reconstruct", "reconstruct a network from primary data");
    std::string rec_data, rec_method = "brisbane", rec_set = "full", rec_start,
                rec_out = "result.json";
    rec->add_option("--data", rec_data, "primary data JSON")->required();
    rec->add_option("--method", rec_method, "brisbane|bristol|vienna|vienna-reduced");
    rec->add_option("--set", rec_set, "visibility selection for vienna: full|reduced")
        ->check(CLI::IsMember({"full", "reduced"}));
    rec->add_option("--start", rec_start, "starting mesh parameters JSON (vienna)");
    rec->add_option("--out", rec_out, "result JSON path");

    // sweep --------------------------------------------------------------------
    auto* swp = app.add_subcommand("sweep", "run a Monte Carlo benchmark grid");
    std::string swp_preset, swp_out = ".";
    std::vector<int> swp_ms;
    std::vector<double> swp_sigmas, swp_loss_eps;
    std::vector<std::string> swp_methods;
    int swp_J = 0, swp_Jb = 0, swp_I = 0, swp_workers = 1, swp_networks = 0;
    std::uint64_t swp_seed_val = 0;
    bool swp_timings = false;
    swp->add_option("--preset", swp_preset, "desk|paper");
    swp->add_option("--m-list", swp_ms, "mode counts");
    swp->add_option("--sigma-list", swp_sigmas, "noise levels");
    swp->add_option("--methods", swp_methods, "methods to benchmark");
    swp->add_option("--J", swp_J, "Haar draws per cell");
    swp->add_option("--J-bristol", swp_Jb, "Haar draws for bristol cells");
    swp->add_option("--I", swp_I, "Monte Carlo iterations per draw");
    auto* swp_seed_opt = swp->add_option("--seed", swp_seed_val, "master seed");
    swp->add_option("--workers", swp_workers, "worker thread count");
    swp->add_option("--out", swp_out, "output directory");
    swp->add_flag("--timings", swp_timings, "record wall-clock runtimes (breaks byte determinism)");
    swp->add_option("--loss-eps", swp_loss_eps, "lossy experiment: eps interval bounds");
    swp->add_option("--networks", swp_networks, "lossy experiment: networks per eps");
    std::string swp_config;
    swp->add_option("--config", swp_config, "JSON config file");

    // fit ------------------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "refit distribution summaries from a trials CSV");
    std::string fit_trials, fit_family = "weibull", fit_out = "summary.csv";
    fit->add_option("--trials", fit_trials, "trials CSV from sweep")->required();
    fit->add_option("--family", fit_family, "weibull|burr12")
        ->check(CLI::IsMember({"weibull", "burr12"}));
    fit->add_option("--out", fit_out, "summary CSV path");

    // plot -------------------------------------------------------------------------
    auto* plt = app.add_subcommand("plot", "render an SVG comparison plot from a summary CSV");
    std::string plt_summary, plt_out = "plot.svg";
    plt->add_option("--summary", plt_summary, "summary CSV")->required();
    plt->add_option("--out", plt_out, "SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            const auto cfg = load_config(
                gen_config, {"m", "sigma", "seed", "loss_eps", "out", "set"});
            const int m = merged(gen_m_opt, gen_m, cfg, "m", 0);
            const double sigma = merged(gen_sigma_opt, gen_sigma, cfg, "sigma", 0.025);
            const double eps = merged(gen_eps_opt, gen_loss_eps, cfg, "loss_eps", 0.0);
            std::uint64_t seed = merged(gen_seed_opt, gen_seed, cfg, "seed",
                                        static_cast<std::uint64_t>(0));
            if (gen_seed_opt->count() == 0 && !cfg.contains("seed")) seed = env_seed_or(1);
            if (cfg.contains("out") && gen_out == ".") gen_out = cfg.at("out").get<std::string>();
            if (cfg.contains("set")) gen_sel = cfg.at("set").get<std::string>();
            return cmd_generate(m, sigma, seed, eps, gen_out, gen_sel);
        }
        if (rec->parsed())
            return cmd_reconstruct(rec_data, rec_method, rec_set, rec_start, rec_out);
        if (swp->parsed()) {
            const auto cfg = load_config(
                swp_config, {"preset", "m_list", "sigma_list", "methods", "J", "J_bristol", "I",
                             "seed", "workers", "out", "timings", "loss_eps", "networks"});
            if (swp_preset.empty() && cfg.contains("preset"))
                swp_preset = cfg.at("preset").get<std::string>();
            if (swp_ms.empty() && cfg.contains("m_list"))
                swp_ms = cfg.at("m_list").get<std::vector<int>>();
            if (swp_sigmas.empty() && cfg.contains("sigma_list"))
                swp_sigmas = cfg.at("sigma_list").get<std::vector<double>>();
            if (swp_methods.empty() && cfg.contains("methods"))
                swp_methods = cfg.at("methods").get<std::vector<std::string>>();
            if (swp_J == 0 && cfg.contains("J")) swp_J = cfg.at("J").get<int>();
            if (swp_Jb == 0 && cfg.contains("J_bristol")) swp_Jb = cfg.at("J_bristol").get<int>();
            if (swp_I == 0 && cfg.contains("I")) swp_I = cfg.at("I").get<int>();
            if (swp_loss_eps.empty() && cfg.contains("loss_eps"))
                swp_loss_eps = cfg.at("loss_eps").get<std::vector<double>>();
            if (swp_networks == 0 && cfg.contains("networks"))
                swp_networks = cfg.at("networks").get<int>();
            if (cfg.contains("workers") && swp_workers == 1)
                swp_workers = cfg.at("workers").get<int>();
            if (cfg.contains("out") && swp_out == ".") swp_out = cfg.at("out").get<std::string>();
            if (cfg.contains("timings")) swp_timings = swp_timings || cfg.at("timings").get<bool>();
            std::optional<std::uint64_t> seed;
            if (swp_seed_opt->count() > 0) seed = swp_seed_val;
            else if (cfg.contains("seed")) seed = cfg.at("seed").get<std::uint64_t>();
            return cmd_sweep(swp_preset, swp_ms, swp_sigmas, swp_methods, swp_J, swp_Jb, swp_I,
                             seed, swp_workers, swp_out, swp_timings, swp_loss_eps, swp_networks);
        }
        if (fit->parsed()) return cmd_fit(fit_trials, fit_family, fit_out);
        if (plt->parsed()) return cmd_plot(plt_summary, plt_out);
    } catch (const lonrec::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const lonrec::DataBudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const lonrec::InsufficientModesError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInsufficientData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
