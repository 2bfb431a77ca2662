#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lonrec/net.hpp"
#include "lonrec/probes.hpp"
#include "lonrec/recon.hpp"

namespace lonrec {

// ---------------------------------------------------------------------------
// Loss embeddings: virtual beam splitters coupling to dedicated loss modes
// ---------------------------------------------------------------------------

/// Mesh description with mode-dependent loss: input/output transmittivities
/// alpha and one in-circuit coupler of transmittivity beta per internal arm.
/// All transmittivities are amplitudes: power transmission is the square.
struct LossyNetwork {
    int m = 0;
    ReckParameters core;
    RealVec alpha_in;
    RealVec alpha_out;
    RealVec beta;

    long loss_mode_count() const { return 2 * choose2(m) - m; }

    void validate() const {
        core.validate();
        if (core.m != m)
            throw InvalidDimensionError("LossyNetwork: core dimension mismatch");
        if (alpha_in.size() != m || alpha_out.size() != m)
            throw InvalidDimensionError("LossyNetwork: alpha vectors must have m entries");
        if (beta.size() != loss_mode_count())
            throw InvalidDimensionError("LossyNetwork: beta must have 2*C(m,2)-m entries");
        auto in_range = [](const RealVec& v) {
            return (v.array() > 0.0).all() && (v.array() <= 1.0).all();
        };
        if (!in_range(alpha_in) || !in_range(alpha_out) || !in_range(beta))
            throw Error("LossyNetwork: transmittivities must lie in (0, 1]");
    }
};

namespace detail {

/// Real rotation coupling row `mode` to row `loss_row` with transmitted
/// amplitude t (and sqrt(1-t^2) into the loss mode).
inline void apply_loss_coupler(Mat& a, int mode, int loss_row, double t) {
    const double u = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (Eigen::Index col = 0; col < a.cols(); ++col) {
        const Complex x = a(mode, col);
        const Complex y = a(loss_row, col);
        a(mode, col) = t * x - u * y;
        a(loss_row, col) = u * x + t * y;
    }
}

} // namespace detail

/// The in-circuit loss slots in canonical order: for each mesh cell, its two
/// output arms (top first), skipping arms that leave the mesh as final
/// network outputs. Exactly 2*C(m,2)-m slots.
struct BetaSlot {
    int cell = 0; ///< canonical cell index the coupler follows
    int mode = 0; ///< circuit mode of the arm
};

inline std::vector<BetaSlot> beta_slots(int m) {
    const auto rows = canonical_cell_rows(m);
    std::vector<BetaSlot> slots;
    for (std::size_t s = 0; s < rows.size(); ++s) {
        for (int mode : {rows[s], rows[s] + 1}) {
            bool feeds_later_cell = false;
            for (std::size_t t = s + 1; t < rows.size() && !feeds_later_cell; ++t)
                feeds_later_cell = (rows[t] == mode || rows[t] + 1 == mode);
            if (feeds_later_cell)
                slots.push_back({static_cast<int>(s), mode});
        }
    }
    return slots;
}

/// Core of the lossy mesh: (m+l) x (m+l), cells interleaved with their loss
/// couplers. Requires beta in (0, 1]; the result is unitary.
inline Mat compose_lossy_core(const ReckParameters& core, const RealVec& beta) {
    core.validate();
    const auto slots = beta_slots(core.m);
    if (beta.size() != static_cast<Eigen::Index>(slots.size()))
        throw InvalidDimensionError("compose_lossy_core: beta count mismatch");
    const int total = core.m + static_cast<int>(slots.size());

    Mat a = Mat::Identity(total, total);
    std::size_t slot = 0;
    for (std::size_t s = 0; s < core.cells.size(); ++s) {
        const ReckCell& c = core.cells[s];
        detail::apply_cell_rows(a, c.a, c.lambda, c.phi);
        while (slot < slots.size() && slots[slot].cell == static_cast<int>(s)) {
            detail::apply_loss_coupler(a, slots[slot].mode, core.m + static_cast<int>(slot),
                                       beta(static_cast<Eigen::Index>(slot)));
            ++slot;
        }
    }
    return a;
}

/// Accessible m x m block of the lossy mesh. Because each loss mode starts in
/// vacuum and couples exactly once, the accessible block reduces to the mesh
/// with each arm amplitude scaled by its beta; it is well defined for any
/// real beta, which the optimizer exploits.
inline Mat compose_lossy_accessible(const ReckParameters& core, const RealVec& beta) {
    core.validate();
    const auto slots = beta_slots(core.m);
    if (beta.size() != static_cast<Eigen::Index>(slots.size()))
        throw InvalidDimensionError("compose_lossy_accessible: beta count mismatch");

    Mat a = Mat::Identity(core.m, core.m);
    std::size_t slot = 0;
    for (std::size_t s = 0; s < core.cells.size(); ++s) {
        const ReckCell& c = core.cells[s];
        detail::apply_cell_rows(a, c.a, c.lambda, c.phi);
        while (slot < slots.size() && slots[slot].cell == static_cast<int>(s)) {
            a.row(slots[slot].mode) *= beta(static_cast<Eigen::Index>(slot));
            ++slot;
        }
    }
    return a;
}

namespace detail {

inline Mat embed_with_io(const Mat& inner, const RealVec& alpha_in, const RealVec& alpha_out) {
    const int m = static_cast<int>(alpha_in.size());
    const int inner_dim = static_cast<int>(inner.rows());
    const int total = inner_dim + 2 * m;
    Mat a = Mat::Identity(total, total);
    a.topLeftCorner(inner_dim, inner_dim) = inner;
    // input couplers act before the network, output couplers after
    Mat full = Mat::Identity(total, total);
    for (int k = 0; k < m; ++k)
        apply_loss_coupler(full, k, inner_dim + k, alpha_in(k));
    full = a * full;
    for (int k = 0; k < m; ++k)
        apply_loss_coupler(full, k, inner_dim + m + k, alpha_out(k));
    return full;
}

inline void check_alpha(const RealVec& v, int m, const char* what) {
    if (v.size() != m)
        throw InvalidDimensionError(std::string(what) + ": expected m entries");
    if (!((v.array() > 0.0).all() && (v.array() <= 1.0).all()))
        throw Error(std::string(what) + ": transmittivities must lie in (0, 1]");
}

} // namespace detail

/// 3m x 3m embedding with input and output loss only: the accessible block
/// equals diag(alpha_out) U diag(alpha_in).
inline Unitary embed_io_loss(const Unitary& u, const RealVec& alpha_in, const RealVec& alpha_out) {
    const int m = u.dim();
    detail::check_alpha(alpha_in, m, "embed_io_loss alpha_in");
    detail::check_alpha(alpha_out, m, "embed_io_loss alpha_out");
    return Unitary(detail::embed_with_io(u.mat(), alpha_in, alpha_out));
}

/// Full r x r embedding, r = 3m + l: the lossy core expanded by the 2m
/// input/output loss modes.
inline Unitary embed_full_loss(const LossyNetwork& net) {
    net.validate();
    const Mat core = compose_lossy_core(net.core, net.beta);
    return Unitary(detail::embed_with_io(core, net.alpha_in, net.alpha_out));
}

/// I.i.d. transmittivity draws from [cos(eps), 1]; the worst-case power loss
/// per coupler is sin²(eps).
inline RealVec sample_loss_params(double eps, int count, Rng& rng) {
    if (!(eps >= 0.0 && eps < M_PI / 2))
        throw Error("sample_loss_params: eps must lie in [0, pi/2)");
    const double lo = std::cos(eps);
    RealVec v(count);
    for (int i = 0; i < count; ++i) v(i) = rng.uniform(lo, 1.0);
    return v;
}

// ---------------------------------------------------------------------------
// Quality measures
// ---------------------------------------------------------------------------

struct QualityScores {
    double q_t = 0.0;
    double q_vis = 0.0;
};

/// Mean absolute visibility deviation over a full set, normalized by C(m,2)².
inline double q_vis(const VisibilitySet& truth, const VisibilitySet& predicted) {
    if (truth.m != predicted.m || truth.records.size() != predicted.records.size())
        throw InvalidDimensionError("q_vis: sets do not match");
    const std::size_t expected = static_cast<std::size_t>(choose2(truth.m) * choose2(truth.m));
    if (truth.records.size() != expected)
        throw InvalidDimensionError("q_vis: full visibility sets required");
    double sum = 0.0;
    for (std::size_t n = 0; n < truth.records.size(); ++n) {
        const auto& a = truth.records[n];
        const auto& b = predicted.records[n];
        if (a.k != b.k || a.l != b.l || a.i != b.i || a.j != b.j)
            throw Error("q_vis: record keys do not match");
        sum += std::abs(a.value - b.value);
    }
    return sum / static_cast<double>(expected);
}

enum class TauStarConvention {
    column_l2, ///< each input column normalized to unit L2 over outputs
    row_l1,    ///< each output row normalized to unit L1 over inputs
};

/// The tau* normalization used by the Q_t measure.
inline RealMat tau_star(const RealMat& tau, TauStarConvention conv = TauStarConvention::column_l2) {
    RealMat t = tau;
    if (conv == TauStarConvention::column_l2) {
        for (Eigen::Index k = 0; k < t.cols(); ++k) {
            const double n = t.col(k).norm();
            if (n < 1e-300) throw DegenerateColumnError("tau_star: all-zero column");
            t.col(k) /= n;
        }
    } else {
        for (Eigen::Index j = 0; j < t.rows(); ++j) {
            const double n = t.row(j).template lpNorm<1>();
            if (n < 1e-300) throw DegenerateColumnError("tau_star: all-zero row");
            t.row(j) /= n;
        }
    }
    return t;
}

/// Mean absolute deviation between two tau* matrices, normalized by m².
inline double q_t(const RealMat& truth, const RealMat& predicted) {
    if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols() ||
        truth.rows() != truth.cols())
        throw InvalidDimensionError("q_t: dimension mismatch");
    return (truth - predicted).cwiseAbs().sum() / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Vienna over the lossy parametrization
// ---------------------------------------------------------------------------

struct LossyReconstruction {
    /// nearest physical network: beta clamped into (0, 1]
    LossyNetwork net;
    /// the (m+l)-mode unitary description built from `net`
    Unitary embedded;
    /// accessible block of the raw optimizer fit (beta unclamped); this is
    /// the model the chi-square actually converged to and the right matrix
    /// for predicting data
    Mat accessible;
    double residual = 0.0; ///< final chi-square
    Diagnostics diagnostics;
};

/// Vienna with in-circuit loss: minimizes the visibility chi-square where the
/// model visibilities come from the accessible block of the lossy mesh. Mesh
/// angles start from a Brisbane extraction, every beta starts at 1 (zero
/// loss). With use_phase_data, sigma-weighted relative-phase residuals of the
/// accessible block join the objective.
inline LossyReconstruction reconstruct_vienna_lossy(const VisibilitySet& vis,
                                                    const ReckParameters& start_core,
                                                    const OptimizerSettings& settings, double sigma,
                                                    const PhaseMatrix* phase_data = nullptr) {
    settings.validate();
    start_core.validate();
    if (start_core.m != vis.m)
        throw InvalidDimensionError("reconstruct_vienna_lossy: dimension mismatch");
    if (phase_data && phase_data->m != vis.m)
        throw InvalidDimensionError("reconstruct_vienna_lossy: phase data dimension mismatch");

    ReckParameters proto = start_core;
    detail::ViennaPacking::normalize(proto);

    const auto slots = beta_slots(proto.m);
    const int n_mesh = detail::ViennaPacking::size(proto);
    const int n_beta = static_cast<int>(slots.size());

    ReckParameters work = proto;
    RealVec beta_work(n_beta);
    auto unpack = [&](const Eigen::VectorXd& x) {
        detail::ViennaPacking::unpack(x.head(n_mesh), work);
        beta_work = x.tail(n_beta);
    };
    // Visibilities are insensitive to positive diagonal scalings, so the beta
    // values are only determined up to a flat orbit that can stray above 1.
    // A soft feasibility penalty keeps the optimizer on the physical side of
    // that orbit; the exact-fit solutions with beta in (0, 1] are unaffected.
    const double kBetaPenalty = 100.0;
    const int n_phase = phase_data ? (proto.m - 1) * (proto.m - 1) : 0;
    const int n_residuals = static_cast<int>(vis.records.size()) + n_phase + n_beta;
    auto residual_fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        unpack(x);
        const Mat model = compose_lossy_accessible(work, beta_work);
        detail::visibility_residuals(model, vis, sigma, settings.weights, out);
        for (int b = 0; b < n_beta; ++b) {
            const double excess = std::max(0.0, beta_work(b) - 1.0) + std::max(0.0, 0.01 - beta_work(b));
            out(n_residuals - n_beta + b) = kBetaPenalty * excess;
        }
        if (phase_data) {
            const bool weighted = settings.weights == WeightMode::sigma_weighted && sigma > 0.0;
            const double rw = weighted ? sigma : 1.0;
            Eigen::Index pos = static_cast<Eigen::Index>(vis.records.size());
            for (int j = 1; j < proto.m; ++j)
                for (int k = 1; k < proto.m; ++k, ++pos) {
                    const Complex ref = model(j, 0) * model(0, k);
                    const Complex val = model(j, k) * model(0, 0);
                    if (std::abs(ref) < 1e-30 || std::abs(val) < 1e-30) {
                        out(pos) = 0.0;
                        continue;
                    }
                    out(pos) =
                        wrap_phase(std::arg(val) - std::arg(ref) - phase_data->theta(j, k)) / rw;
                }
        }
    };

    Eigen::VectorXd x0(n_mesh + n_beta);
    x0.head(n_mesh) = detail::ViennaPacking::pack(proto);
    x0.tail(n_beta).setOnes();

    MinimizeResult run = minimize_levenberg_marquardt(residual_fn, std::move(x0), n_residuals,
                                                      settings.minimize_options());
    unpack(run.x);

    LossyReconstruction out{
        LossyNetwork{proto.m, work, RealVec::Ones(proto.m), RealVec::Ones(proto.m), beta_work},
        Unitary(Mat::Identity(1, 1)), Mat(), run.cost, {}};
    for (auto& c : out.net.core.cells) c.phi = wrap_phase(c.phi);
    out.accessible = compose_lossy_accessible(out.net.core, beta_work);
    int clamped = 0;
    for (Eigen::Index i = 0; i < out.net.beta.size(); ++i) {
        const double b = out.net.beta(i);
        if (b > 1.0 || b < 0.01) ++clamped;
        out.net.beta(i) = std::clamp(b, 0.01, 1.0);
    }
    out.embedded = Unitary(compose_lossy_core(out.net.core, out.net.beta));
    out.diagnostics.iterations = run.iterations;
    out.diagnostics.converged = run.converged;
    out.diagnostics.clamped_cosines = clamped;
    out.diagnostics.records_used = static_cast<int>(vis.records.size());
    return out;
}

} // namespace lonrec
