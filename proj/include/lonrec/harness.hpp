#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lonrec/fit.hpp"
#include "lonrec/loss.hpp"
#include "lonrec/net.hpp"
#include "lonrec/probes.hpp"
#include "lonrec/recon.hpp"

namespace lonrec {

// seed derivation tags; the per-cell streams are pure functions of
// (master, m, j, sigma index, method, iteration), so worker scheduling can
// never change a single draw
inline constexpr std::uint64_t kTagHaar = 0x48414152ULL;
inline constexpr std::uint64_t kTagCell = 0x43454C4CULL;
inline constexpr std::uint64_t kTagIter = 0x49544552ULL;
inline constexpr std::uint64_t kTagLossNet = 0x4C4E4554ULL;
inline constexpr std::uint64_t kTagLossIter = 0x4C495452ULL;

// ---------------------------------------------------------------------------
// Unitary averaging
// ---------------------------------------------------------------------------

struct AveragedUnitary {
    Unitary mean;
    RealMat entry_std;
};

/// Gauge-fix every sample, take the entrywise complex mean of the canonical
/// forms, and polar-project the mean back onto the unitary group. Without the
/// gauge alignment the samples' arbitrary phase conventions would cancel each
/// other in the mean.
inline AveragedUnitary average_unitaries(const std::vector<Unitary>& samples) {
    if (samples.empty())
        throw Error("average_unitaries: no samples");
    const int m = samples.front().dim();
    for (const auto& s : samples)
        if (s.dim() != m) throw InvalidDimensionError("average_unitaries: dimension mismatch");

    std::vector<Mat> canon;
    canon.reserve(samples.size());
    Mat mean = Mat::Zero(m, m);
    for (const auto& s : samples) {
        canon.push_back(gauge_fix(s, GaugePolicy::lenient).canonical.mat());
        mean += canon.back();
    }
    mean /= static_cast<double>(samples.size());

    RealMat entry_std = RealMat::Zero(m, m);
    for (const Mat& c : canon)
        entry_std += (c - mean).cwiseAbs2();
    entry_std = (entry_std / static_cast<double>(samples.size())).cwiseSqrt();

    return AveragedUnitary{closest_unitary(mean), std::move(entry_std)};
}

// ---------------------------------------------------------------------------
// One Monte Carlo cell
// ---------------------------------------------------------------------------

struct TrialRecord {
    int m = 0;
    int j = 0;
    double sigma = 0.0;
    Method method = Method::brisbane;
    double fidelity = 0.0;
    double residual = 0.0;
    int skipped = 0;
    double runtime_ms = 0.0;
    double mean_entry_std = 0.0;
};

/// The records with the first photon pinned to input port 1.
inline VisibilitySet reduced_subset(const VisibilitySet& full) {
    if (full.m < 3)
        throw InsufficientModesError("reduced_subset: needs m >= 3");
    VisibilitySet r;
    r.m = full.m;
    r.selection = Selection::reduced;
    for (const auto& rec : full.records)
        if (rec.k == 0) r.records.push_back(rec);
    return r;
}

/// I independent noise draws, I reconstructions, one averaged description,
/// one fidelity. Vienna starts from a Brisbane extraction on the same draw's
/// amplitude and phase data; Bristol's fidelity is conjugation-maximized
/// because its cosine-only phase data cannot fix the global sign.
inline TrialRecord run_cell(const Unitary& h, Method method, double sigma, int iterations,
                            std::uint64_t seed, const OptimizerSettings& settings = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const PrimaryData clean = sense_primary_data(h.mat(), Selection::full);
    const NoiseModel noise{sigma, seed};

    std::vector<Unitary> samples;
    samples.reserve(static_cast<std::size_t>(iterations));
    double residual_sum = 0.0;
    int residual_count = 0;
    int skipped = 0;

    for (int it = 0; it < iterations; ++it) {
        Rng rng(derive_seed(seed, {kTagIter, static_cast<std::uint64_t>(it)}));
        try {
            const PrimaryData data = perturb(clean, noise, rng);
            switch (method) {
                case Method::brisbane: {
                    samples.push_back(reconstruct_brisbane(data.tau, data.theta).u_hat);
                    break;
                }
                case Method::bristol: {
                    const RealMat rates = data.tau.tau.array().square();
                    samples.push_back(reconstruct_bristol(rates, data.vis).u_hat);
                    break;
                }
                case Method::vienna:
                case Method::vienna_reduced: {
                    const auto start_fit = reconstruct_brisbane(data.tau, data.theta);
                    const ReckParameters start = decompose_reck(start_fit.u_hat);
                    VisibilitySet reduced;
                    const VisibilitySet* vis = &data.vis;
                    if (method == Method::vienna_reduced) {
                        reduced = reduced_subset(data.vis);
                        vis = &reduced;
                    }
                    auto res = reconstruct_vienna(*vis, start, settings, sigma);
                    residual_sum += *res.residual;
                    ++residual_count;
                    samples.push_back(std::move(res.u_hat));
                    break;
                }
            }
        } catch (const Error&) {
            ++skipped;
        }
    }

    if (samples.size() * 5 < static_cast<std::size_t>(iterations) * 4)
        throw Error("run_cell: more than 20% of the reconstructions failed");

    const AveragedUnitary avg = average_unitaries(samples);
    double f = fidelity(h, avg.mean);
    if (method == Method::bristol)
        f = std::max(f, fidelity(h, avg.mean.conjugated()));

    TrialRecord rec;
    rec.m = h.dim();
    rec.sigma = sigma;
    rec.method = method;
    rec.fidelity = f;
    rec.residual = residual_count > 0 ? residual_sum / residual_count : 0.0;
    rec.skipped = skipped;
    rec.mean_entry_std = avg.entry_std.mean();
    rec.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------
// Grid sweep
// ---------------------------------------------------------------------------

struct ExperimentGrid {
    std::vector<int> ms;
    std::vector<double> sigmas;
    std::vector<Method> methods;
    int haar_draws = 120;          ///< J, Haar samples per cell
    int bristol_haar_draws = 0;    ///< Bristol override (paper runs use 1000); 0 = same as J
    int iterations = 120;          ///< I, Monte Carlo draws per sample
    std::uint64_t master_seed = 0;
    OptimizerSettings optimizer;
    bool timings = false; ///< keep measured runtimes in the records (breaks byte determinism)

    int draws_for(Method m) const {
        return (m == Method::bristol && bristol_haar_draws > 0) ? bristol_haar_draws : haar_draws;
    }

    void validate() const {
        if (ms.empty() || sigmas.empty() || methods.empty())
            throw Error("ExperimentGrid: empty dimension");
        for (int m : ms)
            if (m < 2 || m > kMaxModes) throw InvalidDimensionError("ExperimentGrid: bad m");
        for (double s : sigmas)
            if (s < 0.0) throw Error("ExperimentGrid: sigma must be non-negative");
        if (haar_draws < 1 || iterations < 1 || bristol_haar_draws < 0)
            throw Error("ExperimentGrid: counts must be at least 1");
        optimizer.validate();
    }
};

struct CellSummary {
    int m = 0;
    double sigma = 0.0;
    Method method = Method::brisbane;
    FitSummary fit;
};

struct SweepResult {
    std::vector<TrialRecord> trials;
    std::vector<CellSummary> summaries;
    std::vector<std::string> failures;
};

/// Weibull summary of one cell's fidelities. When the fit is degenerate (a
/// monotone density with no interior mode, which an outlier-ridden 20-sample
/// cell can produce) or the cell is too small to fit, an order-statistic
/// summary around the median stands in; a best-sample "mode" would wreck
/// every trend comparison.
inline FitSummary summarize_fidelities(const std::vector<double>& fs) {
    if (fs.size() >= 20) {
        try {
            FitSummary fit = fit_weibull(fs);
            if (!fit.degenerate) return fit;
        } catch (const FitError&) {
            // fall through to the order-statistic summary
        }
    }
    std::vector<double> sorted(fs);
    std::sort(sorted.begin(), sorted.end());
    FitSummary s;
    s.family = FitFamily::weibull;
    s.degenerate = true;
    s.n = static_cast<int>(fs.size());
    s.mode = sorted[sorted.size() / 2];
    s.err_left = s.mode - sorted.front();
    s.err_right = sorted.back() - s.mode;
    return s;
}

namespace detail {

/// Runs `count` jobs on `workers` threads. Output slots are pre-assigned, so
/// the result is identical for any worker count.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto body = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(workers, count);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Executes every (m, sigma, method, j) cell of the grid and summarizes each
/// (m, sigma, method) group with a Weibull fit over its J fidelities.
inline SweepResult sweep(const ExperimentGrid& grid, int workers = 1) {
    grid.validate();

    struct Job {
        int m;
        int sigma_idx;
        int method_idx;
        int j;
    };
    std::vector<Job> jobs;
    for (int m : grid.ms)
        for (std::size_t si = 0; si < grid.sigmas.size(); ++si)
            for (std::size_t mi = 0; mi < grid.methods.size(); ++mi)
                for (int j = 0; j < grid.draws_for(grid.methods[mi]); ++j)
                    jobs.push_back({m, static_cast<int>(si), static_cast<int>(mi), j});

    std::vector<TrialRecord> records(jobs.size());
    std::vector<char> ok(jobs.size(), 0);
    std::vector<std::string> failures;
    std::mutex failure_mutex;

    detail::parallel_for(static_cast<int>(jobs.size()), workers, [&](int idx) {
        const Job& job = jobs[static_cast<std::size_t>(idx)];
        const Method method = grid.methods[static_cast<std::size_t>(job.method_idx)];
        const double sigma = grid.sigmas[static_cast<std::size_t>(job.sigma_idx)];
        try {
            Rng haar_rng(derive_seed(grid.master_seed,
                                     {kTagHaar, static_cast<std::uint64_t>(job.m),
                                      static_cast<std::uint64_t>(job.j)}));
            const Unitary h = haar_unitary(job.m, haar_rng);
            const std::uint64_t cell_seed = derive_seed(
                grid.master_seed,
                {kTagCell, static_cast<std::uint64_t>(job.m), static_cast<std::uint64_t>(job.j),
                 static_cast<std::uint64_t>(job.sigma_idx), static_cast<std::uint64_t>(job.method_idx)});
            TrialRecord rec = run_cell(h, method, sigma, grid.iterations, cell_seed, grid.optimizer);
            rec.j = job.j;
            if (!grid.timings) rec.runtime_ms = 0.0;
            records[static_cast<std::size_t>(idx)] = rec;
            ok[static_cast<std::size_t>(idx)] = 1;
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failures.push_back("cell m=" + std::to_string(job.m) + " sigma=" + std::to_string(sigma) +
                               " method=" + to_string(method) + " j=" + std::to_string(job.j) + ": " +
                               e.what());
        }
    });

    SweepResult out;
    out.failures = std::move(failures);
    out.trials.reserve(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (ok[i]) out.trials.push_back(records[i]);

    // group in enumeration order; trials of one group are contiguous
    std::size_t pos = 0;
    for (int m : grid.ms)
        for (double sigma : grid.sigmas)
            for (Method method : grid.methods) {
                std::vector<double> fs;
                while (pos < out.trials.size() && out.trials[pos].m == m &&
                       out.trials[pos].sigma == sigma && out.trials[pos].method == method) {
                    fs.push_back(out.trials[pos].fidelity);
                    ++pos;
                }
                if (fs.empty()) continue;
                CellSummary cs;
                cs.m = m;
                cs.sigma = sigma;
                cs.method = method;
                cs.fit = summarize_fidelities(fs);
                out.summaries.push_back(std::move(cs));
            }
    return out;
}

// ---------------------------------------------------------------------------
// Lossy experiment (in-circuit loss, quality scores)
// ---------------------------------------------------------------------------

struct LossyGrid {
    int m = 4;
    std::vector<double> eps_values;
    int networks = 50;   ///< sampled lossy networks per eps
    int iterations = 100; ///< Monte Carlo draws per network
    double sigma = 0.01;
    std::uint64_t master_seed = 0;
    OptimizerSettings optimizer;
    std::vector<Method> methods = {Method::brisbane, Method::bristol, Method::vienna};
    bool use_phase_data = false;
    TauStarConvention tau_convention = TauStarConvention::column_l2;
    bool timings = false;

    void validate() const {
        if (m < 3 || m > kMaxModes) throw InvalidDimensionError("LossyGrid: bad m");
        if (eps_values.empty()) throw Error("LossyGrid: no eps values");
        for (double e : eps_values)
            if (!(e >= 0.0 && e < M_PI / 2)) throw Error("LossyGrid: eps out of range");
        if (networks < 1 || iterations < 1) throw Error("LossyGrid: counts must be at least 1");
        optimizer.validate();
    }
};

struct LossyTrialRecord {
    double eps = 0.0;
    int n = 0;
    Method method = Method::brisbane;
    double q_t = 0.0;
    double q_vis = 0.0;
    /// fidelity of the (m+l)-mode description; NaN for methods without one
    double fidelity_embedded = std::numeric_limits<double>::quiet_NaN();
};

struct LossySummary {
    double eps = 0.0;
    Method method = Method::brisbane;
    std::string measure; ///< "q_t", "q_vis" or "fidelity"
    FitSummary fit;
};

struct LossySweepResult {
    std::vector<LossyTrialRecord> trials;
    std::vector<LossySummary> summaries;
    std::vector<std::string> failures;
};

/// One sampled lossy network: reconstruct with every method, average over the
/// Monte Carlo draws, and score the averaged descriptions against the clean
/// lossy data.
///
/// The eps cells share their random numbers: network n uses the same mesh,
/// the same uniform quantiles for the beta draws (so each coupler's
/// transmittivity decreases pathwise as eps grows) and the same noise
/// streams at every eps. Marginally each cell still samples beta uniformly
/// from [cos(eps), 1]; the pairing only removes sample-to-sample offsets
/// from the eps comparison, which would otherwise drown the loss trend at
/// the 50-network scale.
inline std::vector<LossyTrialRecord> run_lossy_network(const LossyGrid& grid, int eps_idx, int n) {
    const double eps = grid.eps_values[static_cast<std::size_t>(eps_idx)];
    Rng net_rng(derive_seed(grid.master_seed, {kTagLossNet, static_cast<std::uint64_t>(n)}));
    const Unitary h = haar_unitary(grid.m, net_rng);
    const ReckParameters core = decompose_reck(h);
    const int n_couplers = static_cast<int>(beta_slots(grid.m).size());
    RealVec beta(n_couplers);
    for (int b = 0; b < n_couplers; ++b)
        beta(b) = 1.0 - net_rng.uniform() * (1.0 - std::cos(eps));

    const Mat truth_accessible = compose_lossy_accessible(core, beta);
    const Unitary truth_embedded{compose_lossy_core(core, beta)};
    const PrimaryData clean = sense_primary_data(truth_accessible, Selection::full);
    const RealMat true_tau_star = tau_star(clean.tau.tau, grid.tau_convention);
    const NoiseModel noise{grid.sigma, grid.master_seed};

    std::vector<LossyTrialRecord> out;
    for (std::size_t mi = 0; mi < grid.methods.size(); ++mi) {
        const Method method = grid.methods[mi];
        std::vector<Unitary> samples; // 4x4 unitaries or (m+l)-mode descriptions

        for (int it = 0; it < grid.iterations; ++it) {
            Rng rng(derive_seed(grid.master_seed,
                                {kTagLossIter, static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(mi), static_cast<std::uint64_t>(it)}));
            const PrimaryData data = perturb(clean, noise, rng);
            switch (method) {
                case Method::brisbane:
                    samples.push_back(reconstruct_brisbane(data.tau, data.theta).u_hat);
                    break;
                case Method::bristol: {
                    const RealMat rates = data.tau.tau.array().square();
                    samples.push_back(reconstruct_bristol(rates, data.vis).u_hat);
                    break;
                }
                case Method::vienna:
                case Method::vienna_reduced: {
                    const auto start_fit = reconstruct_brisbane(data.tau, data.theta);
                    const ReckParameters start = decompose_reck(start_fit.u_hat);
                    auto res = reconstruct_vienna_lossy(data.vis, start, grid.optimizer, grid.sigma,
                                                        grid.use_phase_data ? &data.theta : nullptr);
                    samples.push_back(std::move(res.embedded));
                    break;
                }
            }
        }

        // the averaged description predicts the data it should explain
        const AveragedUnitary avg = average_unitaries(samples);
        const bool embedded = avg.mean.dim() > grid.m;
        const Mat predicted =
            embedded ? Mat(avg.mean.mat().topLeftCorner(grid.m, grid.m)) : avg.mean.mat();

        LossyTrialRecord rec;
        rec.eps = eps;
        rec.n = n;
        rec.method = method;
        rec.q_vis = q_vis(clean.vis, visibility_set(predicted, Selection::full));
        rec.q_t = q_t(true_tau_star, tau_star(predicted.cwiseAbs(), grid.tau_convention));
        if (embedded) rec.fidelity_embedded = aligned_fidelity(truth_embedded, avg.mean);
        out.push_back(rec);
    }
    return out;
}

inline LossySweepResult lossy_sweep(const LossyGrid& grid, int workers = 1) {
    grid.validate();

    const int n_eps = static_cast<int>(grid.eps_values.size());
    const int jobs = n_eps * grid.networks;
    std::vector<std::vector<LossyTrialRecord>> results(static_cast<std::size_t>(jobs));
    std::vector<std::string> failures;
    std::mutex failure_mutex;

    detail::parallel_for(jobs, workers, [&](int idx) {
        const int eps_idx = idx / grid.networks;
        const int n = idx % grid.networks;
        try {
            results[static_cast<std::size_t>(idx)] = run_lossy_network(grid, eps_idx, n);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            failures.push_back("lossy cell eps_idx=" + std::to_string(eps_idx) + " n=" +
                               std::to_string(n) + ": " + e.what());
        }
    });

    LossySweepResult out;
    out.failures = std::move(failures);
    for (const auto& batch : results)
        out.trials.insert(out.trials.end(), batch.begin(), batch.end());

    auto summarize = [&](double eps, Method method, const std::string& measure,
                         const std::vector<double>& values) {
        if (values.empty()) return;
        LossySummary s;
        s.eps = eps;
        s.method = method;
        s.measure = measure;
        if (values.size() >= 20 && measure != "fidelity") {
            s.fit = fit_positive_samples(values, FitFamily::burr12);
        } else if (values.size() >= 20) {
            std::vector<double> xs;
            xs.reserve(values.size());
            for (double f : values) xs.push_back(std::max(1.0 - f, 1e-15));
            s.fit = fit_positive_samples(xs, FitFamily::burr12);
            const double mode_x = s.fit.mode;
            s.fit.mode = 1.0 - mode_x;
            std::swap(s.fit.err_left, s.fit.err_right);
        } else {
            std::vector<double> sorted(values);
            std::sort(sorted.begin(), sorted.end());
            s.fit.family = FitFamily::burr12;
            s.fit.degenerate = true;
            s.fit.n = static_cast<int>(values.size());
            s.fit.mode = sorted[sorted.size() / 2];
            s.fit.err_left = s.fit.mode - sorted.front();
            s.fit.err_right = sorted.back() - s.fit.mode;
        }
        out.summaries.push_back(std::move(s));
    };

    for (int e = 0; e < n_eps; ++e) {
        const double eps = grid.eps_values[static_cast<std::size_t>(e)];
        for (Method method : grid.methods) {
            std::vector<double> qts, qvs, fids;
            for (const auto& t : out.trials) {
                if (t.eps != eps || t.method != method) continue;
                qts.push_back(t.q_t);
                qvs.push_back(t.q_vis);
                if (std::isfinite(t.fidelity_embedded)) fids.push_back(t.fidelity_embedded);
            }
            summarize(eps, method, "q_t", qts);
            summarize(eps, method, "q_vis", qvs);
            summarize(eps, method, "fidelity", fids);
        }
    }
    return out;
}

} // namespace lonrec
