#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lonrec/net.hpp"
#include "lonrec/optimize.hpp"
#include "lonrec/probes.hpp"

namespace lonrec {

enum class Method { brisbane, bristol, vienna, vienna_reduced };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::brisbane: return "brisbane";
        case Method::bristol: return "bristol";
        case Method::vienna: return "vienna";
        case Method::vienna_reduced: return "vienna-reduced";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "brisbane") return Method::brisbane;
    if (s == "bristol") return Method::bristol;
    if (s == "vienna") return Method::vienna;
    if (s == "vienna-reduced") return Method::vienna_reduced;
    throw FormatError("unknown method: " + s);
}

enum class WeightMode { sigma_weighted, unweighted };

/// Settings of the Vienna optimization; see MinimizeOptions for the meaning
/// of the termination fields.
struct OptimizerSettings {
    double fd_step = 1e-7;
    double grad_tol = 1e-8;
    double step_tol = 1e-12;
    double cost_rel_tol = 1e-12;
    int cost_window = 5;
    int max_iterations = 10000;
    int restarts = 1;
    std::uint64_t restart_seed = 0x10af5eedULL;
    WeightMode weights = WeightMode::sigma_weighted;

    void validate() const {
        if (fd_step <= 0 || grad_tol <= 0 || step_tol <= 0 || cost_rel_tol <= 0)
            throw Error("OptimizerSettings: tolerances must be positive");
        if (max_iterations < 1 || restarts < 1 || cost_window < 1)
            throw Error("OptimizerSettings: counts must be at least 1");
    }

    MinimizeOptions minimize_options() const {
        return MinimizeOptions{fd_step, grad_tol, step_tol, cost_rel_tol, cost_window, max_iterations};
    }
};

struct Diagnostics {
    int iterations = 0;
    bool converged = true;
    int clamped_cosines = 0;
    int skipped_records = 0;
    int records_used = 0;
};

struct ReconstructionResult {
    Method method;
    Unitary u_hat;
    std::optional<Mat> pre_polar;           ///< Brisbane/Bristol: M before the polar step
    std::optional<ReckParameters> params;   ///< Vienna: the optimized mesh
    std::optional<double> residual;         ///< Vienna: final chi-square
    Diagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Brisbane: direct map onto a scattering matrix, then the closest unitary
// ---------------------------------------------------------------------------

inline ReconstructionResult reconstruct_brisbane(const AmplitudeMatrix& tau,
                                                 const PhaseMatrix& theta) {
    if (tau.m != theta.m)
        throw InvalidDimensionError("reconstruct_brisbane: dimension mismatch");
    const int m = tau.m;
    Mat scat(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            scat(j, k) = std::polar(tau.tau(j, k), theta.theta(j, k));
    Unitary u = closest_unitary(scat);
    ReconstructionResult res{Method::brisbane, std::move(u), std::move(scat), {}, {}, {}};
    res.diagnostics.records_used = m * m + (m - 1) * (m - 1);
    return res;
}

/// Per-input loss amplitudes from total-output vs injected power ratios. Only
/// valid when the mode-dependent output loss of the network is zero; with
/// output loss present the estimates are biased.
inline RealVec estimate_input_loss(const RealVec& total_out_power, const RealVec& injected_power) {
    if (total_out_power.size() != injected_power.size())
        throw InvalidDimensionError("estimate_input_loss: size mismatch");
    RealVec alpha(total_out_power.size());
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
        if (!(injected_power(k) > 0.0))
            throw Error("estimate_input_loss: injected power must be positive");
        const double ratio = total_out_power(k) / injected_power(k);
        if (ratio > 1.0 + 1e-6)
            throw UnphysicalGainError("estimate_input_loss: output exceeds input power");
        alpha(k) = std::sqrt(std::min(ratio, 1.0));
    }
    return alpha;
}

// ---------------------------------------------------------------------------
// Bristol: loss-insensitive rate ratios, cosine phases, sequential signs
// ---------------------------------------------------------------------------

namespace detail {

/// cos of the phase combination theta_ik + theta_jl − theta_il − theta_jk
/// implied by one visibility record, given amplitude estimates.
inline double cosine_from_visibility(const VisibilityRecord& r, const RealMat& tau,
                                     int* clamped) {
    const double t1 = tau(r.i, r.k) * tau(r.j, r.l);
    const double t2 = tau(r.i, r.l) * tau(r.j, r.k);
    const double c = t1 * t1 + t2 * t2;
    const double prod = t1 * t2;
    if (prod < 1e-300)
        throw UndefinedVisibilityError("bristol: dark visibility record");
    double cosv = -r.value * c / (2.0 * prod);
    if (cosv > 1.0 || cosv < -1.0) {
        if (clamped) ++*clamped;
        cosv = std::clamp(cosv, -1.0, 1.0);
    }
    return cosv;
}

inline const VisibilityRecord& require_record(const VisibilitySet& vis, int k, int l, int i, int j) {
    const int idx = vis.find(k, l, i, j);
    if (idx < 0)
        throw DataBudgetError("bristol: missing visibility record (" + std::to_string(k + 1) + "," +
                              std::to_string(l + 1) + ")x(" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ")");
    return vis.records[static_cast<std::size_t>(idx)];
}

/// Doubly stochastic scaling of a positive matrix (Sinkhorn iteration).
inline void sinkhorn(RealMat& s, double tol = 1e-13, int max_iter = 100000) {
    const int m = static_cast<int>(s.rows());
    for (int it = 0; it < max_iter; ++it) {
        for (int j = 0; j < m; ++j) s.row(j) /= s.row(j).sum();
        for (int k = 0; k < m; ++k) s.col(k) /= s.col(k).sum();
        double dev = 0.0;
        for (int j = 0; j < m; ++j) dev = std::max(dev, std::abs(s.row(j).sum() - 1.0));
        if (dev < tol) return;
    }
}

} // namespace detail

/// The (k, l, i, j) keys Bristol consumes beyond the count-rate matrix:
/// (m−1)² magnitude records and (m−1)²−1 sign records. 0-based indices.
inline std::vector<std::array<int, 4>> bristol_visibility_budget(int m) {
    std::vector<std::array<int, 4>> keys;
    for (int j = 1; j < m; ++j)
        for (int k = 1; k < m; ++k)
            keys.push_back({0, k, 0, j});
    for (int k = 2; k < m; ++k) keys.push_back({1, k, 0, 1});
    for (int j = 2; j < m; ++j) keys.push_back({0, 1, 1, j});
    for (int j = 2; j < m; ++j)
        for (int k = 2; k < m; ++k)
            keys.push_back({1, k, 1, j});
    return keys;
}

/// Three stages: amplitudes from loss-cancelling count-rate ratios with a
/// doubly stochastic rescaling of tau²; phase magnitudes from visibilities on
/// rows (1,j) x columns (1,k); signs resolved sequentially against theta_22,
/// which is fixed positive. Phase data enters only through cosines, so the
/// result carries an inherent conjugation ambiguity.
inline ReconstructionResult reconstruct_bristol(const RealMat& rates, const VisibilitySet& vis) {
    const int m = static_cast<int>(rates.rows());
    if (rates.rows() != rates.cols() || m < 2)
        throw InvalidDimensionError("reconstruct_bristol: bad rate matrix");
    if (vis.m != m)
        throw InvalidDimensionError("reconstruct_bristol: visibility set dimension mismatch");
    if (!(rates.minCoeff() > 0.0))
        throw Error("reconstruct_bristol: count rates must be strictly positive");

    Diagnostics diag;

    // stage 1: amplitudes. x_jk = sqrt(R_jk R_11 / (R_j1 R_1k)) equals
    // tau_jk tau_11 / (tau_j1 tau_1k); input and output loss cancel. Fixing
    // the first row and column to 1 picks one representative of the row/column
    // scaling freedom, which the doubly stochastic constraint then removes.
    RealMat tau2(m, m);
    for (int j = 0; j < m; ++j) tau2(j, 0) = 1.0;
    for (int k = 1; k < m; ++k) tau2(0, k) = 1.0;
    for (int j = 1; j < m; ++j)
        for (int k = 1; k < m; ++k)
            tau2(j, k) = rates(j, k) * rates(0, 0) / (rates(j, 0) * rates(0, k));
    detail::sinkhorn(tau2);
    const RealMat tau = tau2.cwiseSqrt();

    // stage 2: phase magnitudes from the (1,j)x(1,k) records
    RealMat theta = RealMat::Zero(m, m);
    RealMat theta_abs = RealMat::Zero(m, m);
    for (int j = 1; j < m; ++j)
        for (int k = 1; k < m; ++k) {
            const auto& rec = detail::require_record(vis, 0, k, 0, j);
            theta_abs(j, k) = std::acos(detail::cosine_from_visibility(rec, tau, &diag.clamped_cosines));
        }

    // stage 3: signs. theta_22 is positive by convention; the remaining signs
    // are chosen to best reproduce the observed cosines.
    theta(1, 1) = theta_abs(1, 1);
    auto pick_sign = [&](double magnitude, double rest, double cos_obs) {
        const double cp = std::cos(magnitude + rest);
        const double cm = std::cos(-magnitude + rest);
        // the branches coincide when sin(magnitude) ~ 0 (phase near 0 or pi,
        // cosine within ~1e-6 of 1) or sin(rest) ~ 0; a fixed tie-break keeps
        // runs deterministic
        if (std::abs(cp - cm) < 1e-9) return +1.0;
        return std::abs(cp - cos_obs) <= std::abs(cm - cos_obs) ? +1.0 : -1.0;
    };
    for (int k = 2; k < m; ++k) {
        const auto& rec = detail::require_record(vis, 1, k, 0, 1);
        const double cos_obs = detail::cosine_from_visibility(rec, tau, &diag.clamped_cosines);
        theta(1, k) = pick_sign(theta_abs(1, k), -theta(1, 1), cos_obs) * theta_abs(1, k);
    }
    for (int j = 2; j < m; ++j) {
        const auto& rec = detail::require_record(vis, 0, 1, 1, j);
        const double cos_obs = detail::cosine_from_visibility(rec, tau, &diag.clamped_cosines);
        theta(j, 1) = pick_sign(theta_abs(j, 1), -theta(1, 1), cos_obs) * theta_abs(j, 1);
    }
    for (int j = 2; j < m; ++j)
        for (int k = 2; k < m; ++k) {
            const auto& rec = detail::require_record(vis, 1, k, 1, j);
            const double cos_obs = detail::cosine_from_visibility(rec, tau, &diag.clamped_cosines);
            const double rest = theta(1, 1) - theta(1, k) - theta(j, 1);
            theta(j, k) = pick_sign(theta_abs(j, k), rest, cos_obs) * theta_abs(j, k);
        }

    Mat scat(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            scat(j, k) = std::polar(tau(j, k), theta(j, k));
    Unitary u = closest_unitary(scat);
    diag.records_used = m * m + 2 * (m - 1) * (m - 1) - 1;
    ReconstructionResult res{Method::bristol, std::move(u), std::move(scat), {}, {}, diag};
    return res;
}

// ---------------------------------------------------------------------------
// Vienna: global chi-square optimization of the mesh parameters
// ---------------------------------------------------------------------------

namespace detail {

/// chi-square of a composed model matrix against a visibility set. Dark model
/// records are skipped and counted.
inline double chi_square_of_matrix(const Mat& model, const VisibilitySet& vis, double sigma,
                                   WeightMode mode, int* skipped) {
    const bool weighted = (mode == WeightMode::sigma_weighted) && sigma > 0.0;
    double cost = 0.0;
    for (const auto& r : vis.records) {
        const Complex t1 = model(r.i, r.k) * model(r.j, r.l);
        const Complex t2 = model(r.i, r.l) * model(r.j, r.k);
        const double c = std::norm(t1) + std::norm(t2);
        if (c < 1e-30) {
            if (skipped) ++*skipped;
            continue;
        }
        const double v_model = (c - std::norm(t1 + t2)) / c;
        const double resid = r.value - v_model;
        const double w = weighted ? sigma * sigma * std::max(r.value * r.value, 1e-4) : 1.0;
        cost += resid * resid / w;
    }
    return cost;
}

/// Scaled residual vector of the same chi-square: rho_i = (V~_i − V_model) /
/// sqrt(w_i), dark records contributing zero, so that ‖rho‖² equals
/// chi_square_of_matrix exactly.
inline void visibility_residuals(const Mat& model, const VisibilitySet& vis, double sigma,
                                 WeightMode mode, Eigen::VectorXd& out) {
    const bool weighted = (mode == WeightMode::sigma_weighted) && sigma > 0.0;
    for (std::size_t n = 0; n < vis.records.size(); ++n) {
        const auto& r = vis.records[n];
        const Complex t1 = model(r.i, r.k) * model(r.j, r.l);
        const Complex t2 = model(r.i, r.l) * model(r.j, r.k);
        const double c = std::norm(t1) + std::norm(t2);
        if (c < 1e-30) {
            out(static_cast<Eigen::Index>(n)) = 0.0;
            continue;
        }
        const double v_model = (c - std::norm(t1 + t2)) / c;
        const double w = weighted ? sigma * sigma * std::max(r.value * r.value, 1e-4) : 1.0;
        out(static_cast<Eigen::Index>(n)) = (r.value - v_model) / std::sqrt(w);
    }
}

/// Packs the free Vienna parameters: every lambda through the smooth box map
/// lambda = (pi/2)·sin²(u), plus the non-gauge phases.
///
/// The phases of the first m−1 canonical cells (the entry staircase) each act
/// on an input mode no earlier cell has touched, so they commute out as input
/// diagonal phases: pure gauge. Freezing all of them at zero leaves exactly
/// the C(m−1,2) phases a gauge class needs and keeps the chi-square landscape
/// free of flat directions.
struct ViennaPacking {
    static int gauge_phase_count(const ReckParameters& p) { return p.m - 1; }
    static int size(const ReckParameters& p) {
        const int n = static_cast<int>(p.cells.size());
        return n + (n - gauge_phase_count(p));
    }
    static Eigen::VectorXd pack(const ReckParameters& p) {
        const int n = static_cast<int>(p.cells.size());
        const int g = gauge_phase_count(p);
        Eigen::VectorXd x(size(p));
        for (int s = 0; s < n; ++s) {
            const double frac = std::clamp(p.cells[s].lambda / (M_PI / 2), 0.0, 1.0);
            x(s) = std::asin(std::sqrt(frac));
        }
        for (int s = g; s < n; ++s) x(n + s - g) = p.cells[s].phi;
        return x;
    }
    static void unpack(const Eigen::VectorXd& x, ReckParameters& p) {
        const int n = static_cast<int>(p.cells.size());
        const int g = gauge_phase_count(p);
        for (int s = 0; s < n; ++s) {
            const double si = std::sin(x(s));
            p.cells[s].lambda = (M_PI / 2) * si * si;
        }
        // the optimizer coordinates are unbounded; phases are periodic
        for (int s = g; s < n; ++s) p.cells[s].phi = wrap_phase(x(n + s - g));
    }
    /// Zero the gauge phases: a gauge-equivalent representative of the mesh.
    static void normalize(ReckParameters& p) {
        for (auto& c : p.cells) c.phi = wrap_phase(c.phi);
        for (int s = 0; s < gauge_phase_count(p); ++s) p.cells[static_cast<std::size_t>(s)].phi = 0.0;
        p.phase_gauge_fixed = true;
    }
};

} // namespace detail

/// Noise-weighted sum of squared visibility residuals of the composed mesh.
/// Weights are sigma²·max(V~², 1e-4) in sigma-weighted mode (the relative
/// noise model, floored for near-zero visibilities) and 1 otherwise.
inline double chi_square_cost(const ReckParameters& params, const VisibilitySet& vis, double sigma,
                              WeightMode mode = WeightMode::sigma_weighted,
                              Diagnostics* diagnostics = nullptr) {
    params.validate();
    if (params.m != vis.m)
        throw InvalidDimensionError("chi_square_cost: dimension mismatch");
    Mat model;
    detail::compose_reck_into(params, model);
    int skipped = 0;
    const double cost = detail::chi_square_of_matrix(model, vis, sigma, mode, &skipped);
    if (diagnostics) diagnostics->skipped_records += skipped;
    return cost;
}

/// Minimizes chi_square_cost over the mesh parameters, starting from
/// fabrication targets or a Brisbane start. Deterministic given inputs and
/// settings; optional restarts jitter the start with a fixed seed.
inline ReconstructionResult reconstruct_vienna(const VisibilitySet& vis, const ReckParameters& start,
                                               const OptimizerSettings& settings, double sigma) {
    settings.validate();
    start.validate();
    if (start.m != vis.m)
        throw InvalidDimensionError("reconstruct_vienna: dimension mismatch");

    ReckParameters proto = start;
    detail::ViennaPacking::normalize(proto);

    Mat model(vis.m, vis.m);
    ReckParameters work = proto;
    int skipped_total = 0;
    const int n_residuals = static_cast<int>(vis.records.size());
    auto residual_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        detail::ViennaPacking::unpack(x, work);
        detail::compose_reck_into(work, model);
        detail::visibility_residuals(model, vis, sigma, settings.weights, out);
    };

    MinimizeResult best;
    const Eigen::VectorXd x0 = detail::ViennaPacking::pack(proto);
    int iterations = 0;
    for (int r = 0; r < settings.restarts; ++r) {
        Eigen::VectorXd x = x0;
        if (r > 0) {
            Rng jitter(derive_seed(settings.restart_seed, {static_cast<std::uint64_t>(r)}));
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.3 * jitter.normal();
        }
        MinimizeResult run = minimize_levenberg_marquardt(residual_fn, std::move(x), n_residuals,
                                                          settings.minimize_options());
        iterations += run.iterations;
        if (run.cost < best.cost) best = std::move(run);
    }

    detail::ViennaPacking::unpack(best.x, work);
    for (auto& c : work.cells) c.phi = wrap_phase(c.phi);
    detail::compose_reck_into(work, model);
    detail::chi_square_of_matrix(model, vis, sigma, settings.weights, &skipped_total);

    Diagnostics diag;
    diag.iterations = iterations;
    diag.converged = best.converged;
    diag.skipped_records = skipped_total;
    diag.records_used = static_cast<int>(vis.records.size()) - skipped_total;

    const Method tag = vis.selection == Selection::reduced ? Method::vienna_reduced : Method::vienna;
    ReconstructionResult res{tag, Unitary(std::move(model)), {}, std::move(work), best.cost, diag};
    return res;
}

// ---------------------------------------------------------------------------
// Input/output loss recovery from intensities and a reconstructed unitary
// ---------------------------------------------------------------------------

struct IoLoss {
    RealVec alpha_in;
    RealVec alpha_out;
};

/// Log-linear least squares for I_jk = alpha_out_j² |U_jk|² alpha_in_k²; the
/// one-parameter scale freedom is fixed by max_j alpha_out_j = 1.
inline IoLoss recover_io_loss(const Unitary& u_hat, const RealMat& intensities) {
    const int m = u_hat.dim();
    if (intensities.rows() != m || intensities.cols() != m)
        throw InvalidDimensionError("recover_io_loss: dimension mismatch");

    std::vector<Eigen::Index> rows_j, rows_k;
    std::vector<double> rhs;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
            const double u2 = std::norm(u_hat(j, k));
            if (u2 <= kSingularTol) continue;
            if (!(intensities(j, k) > 0.0))
                throw Error("recover_io_loss: non-positive intensity at a bright entry");
            rows_j.push_back(j);
            rows_k.push_back(k);
            rhs.push_back(0.5 * std::log(intensities(j, k) / u2));
        }

    const Eigen::Index n_eq = static_cast<Eigen::Index>(rhs.size());
    RealMat a = RealMat::Zero(n_eq, 2 * m);
    RealVec b(n_eq);
    for (Eigen::Index e = 0; e < n_eq; ++e) {
        a(e, rows_j[static_cast<std::size_t>(e)]) = 1.0;      // log alpha_out_j
        a(e, m + rows_k[static_cast<std::size_t>(e)]) = 1.0;  // log alpha_in_k
        b(e) = rhs[static_cast<std::size_t>(e)];
    }

    Eigen::JacobiSVD<RealMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    if (svd.rank() < 2 * m - 1)
        throw UnderdeterminedError("recover_io_loss: too few bright entries to fix all loss terms");
    RealVec x = svd.solve(b);

    const double shift = x.head(m).maxCoeff();
    IoLoss loss;
    loss.alpha_out = (x.head(m).array() - shift).exp();
    loss.alpha_in = (x.tail(m).array() + shift).exp();
    return loss;
}

} // namespace lonrec
