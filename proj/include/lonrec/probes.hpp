#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lonrec/net.hpp"
#include "lonrec/rng.hpp"

namespace lonrec {

// ---------------------------------------------------------------------------
// Two-photon interference visibilities
// ---------------------------------------------------------------------------

/// One coincidence measurement: photons into input modes (k, l), detectors on
/// output modes (i, j). Indices are 0-based and ordered (k < l, i < j).
struct VisibilityRecord {
    int k = 0;
    int l = 0;
    int i = 0;
    int j = 0;
    double value = 0.0;
};

enum class Selection { full, reduced, bristol_sufficient };

inline std::string to_string(Selection s) {
    switch (s) {
        case Selection::full: return "full";
        case Selection::reduced: return "reduced";
        case Selection::bristol_sufficient: return "bristol-sufficient";
    }
    return "?";
}

struct VisibilitySet {
    int m = 0;
    Selection selection = Selection::full;
    std::vector<VisibilityRecord> records;

    /// Lookup by (k, l, i, j); -1 when the record is absent.
    int find(int k, int l, int i, int j) const {
        build_index();
        const auto it = index_.find(key(k, l, i, j));
        return it == index_.end() ? -1 : it->second;
    }

private:
    static std::uint32_t key(int k, int l, int i, int j) {
        return (std::uint32_t(k) << 24) | (std::uint32_t(l) << 16) |
               (std::uint32_t(i) << 8) | std::uint32_t(j);
    }
    void build_index() const {
        if (index_.size() == records.size()) return;
        index_.clear();
        index_.reserve(records.size());
        for (std::size_t n = 0; n < records.size(); ++n) {
            const auto& r = records[n];
            index_.emplace(key(r.k, r.l, r.i, r.j), static_cast<int>(n));
        }
    }
    mutable std::unordered_map<std::uint32_t, int> index_;
};

/// Visibility of the two-photon interference for inputs (k, l) and coincidence
/// outputs (i, j). With q = M_ik M_jl + M_il M_jk (the bosonic amplitude) and
/// c = |M_ik M_jl|² + |M_il M_jk|² (the distinguishable rate):
///   V = (c − |q|²) / c.
/// Valid for non-unitary M as well, e.g. lossy accessible submatrices.
inline double two_photon_visibility(const Mat& m, int k, int l, int i, int j) {
    const int dim = static_cast<int>(m.rows());
    if (m.rows() != m.cols())
        throw InvalidDimensionError("two_photon_visibility: matrix must be square");
    if (k < 0 || l < 0 || i < 0 || j < 0 || k >= dim || l >= dim || i >= dim || j >= dim)
        throw InvalidDimensionError("two_photon_visibility: mode index out of range");
    if (k == l || i == j)
        throw InvalidDimensionError("two_photon_visibility: modes must differ");
    const Complex t1 = m(i, k) * m(j, l);
    const Complex t2 = m(i, l) * m(j, k);
    const double c = std::norm(t1) + std::norm(t2);
    if (c < 1e-30)
        throw UndefinedVisibilityError("two_photon_visibility: both two-photon paths are dark");
    const double q2 = std::norm(t1 + t2);
    return (c - q2) / c;
}

/// All collision-free visibilities of a network. `full` runs every ordered
/// input pair against every ordered output pair (C(m,2)² records); `reduced`
/// pins the first photon to input port 1 ((m−1)·C(m,2) records, m ≥ 3).
inline VisibilitySet visibility_set(const Mat& m, Selection selection) {
    const int dim = static_cast<int>(m.rows());
    if (m.rows() != m.cols() || dim < 2 || dim > kMaxModes)
        throw InvalidDimensionError("visibility_set: bad matrix dimension");
    if (selection == Selection::reduced && dim < 3)
        throw InsufficientModesError("visibility_set: reduced selection needs m >= 3");
    if (selection == Selection::bristol_sufficient)
        throw Error("visibility_set: bristol subset is derived from a full set");

    VisibilitySet set;
    set.m = dim;
    set.selection = selection;
    for (int k = 0; k < dim - 1; ++k) {
        if (selection == Selection::reduced && k != 0) break;
        for (int l = k + 1; l < dim; ++l)
            for (int i = 0; i < dim - 1; ++i)
                for (int j = i + 1; j < dim; ++j)
                    set.records.push_back({k, l, i, j, two_photon_visibility(m, k, l, i, j)});
    }
    return set;
}

// ---------------------------------------------------------------------------
// Transition amplitudes and relative phases
// ---------------------------------------------------------------------------

enum class TauNormalization { column_l2, raw };

/// Non-negative amplitude magnitudes tau_jk (j = output, k = input).
struct AmplitudeMatrix {
    int m = 0;
    RealMat tau;
    TauNormalization normalization = TauNormalization::column_l2;
};

inline AmplitudeMatrix transition_amplitudes(const Mat& m,
                                             TauNormalization norm = TauNormalization::column_l2) {
    if (m.rows() != m.cols())
        throw InvalidDimensionError("transition_amplitudes: matrix must be square");
    AmplitudeMatrix a;
    a.m = static_cast<int>(m.rows());
    a.normalization = norm;
    a.tau = m.cwiseAbs();
    if (norm == TauNormalization::column_l2) {
        for (int k = 0; k < a.m; ++k) {
            const double n = a.tau.col(k).norm();
            if (n < 1e-300)
                throw DegenerateColumnError("transition_amplitudes: all-zero column");
            a.tau.col(k) /= n;
        }
    }
    return a;
}

/// Relative phases in the gauge where the first row and column are zero:
///   theta_jk = arg M_jk − arg M_j1 − arg M_1k + arg M_11,
/// wrapped into (−pi, pi]. Invariant under any diagonal scaling of M.
struct PhaseMatrix {
    int m = 0;
    RealMat theta;
};

inline PhaseMatrix relative_phases(const Mat& m) {
    if (m.rows() != m.cols())
        throw InvalidDimensionError("relative_phases: matrix must be square");
    const int dim = static_cast<int>(m.rows());
    auto ref_arg = [&](int r, int c) {
        if (std::abs(m(r, c)) < kGaugeTol)
            throw GaugeDegenerateError("relative_phases: vanishing reference entry", r, c);
        return std::arg(m(r, c));
    };
    PhaseMatrix p;
    p.m = dim;
    p.theta = RealMat::Zero(dim, dim);
    const double base = ref_arg(0, 0);
    for (int j = 1; j < dim; ++j) {
        const double row_ref = ref_arg(j, 0);
        for (int k = 1; k < dim; ++k) {
            const double col_ref = ref_arg(0, k);
            p.theta(j, k) = wrap_phase_data(std::arg(m(j, k)) - row_ref - col_ref + base);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Noise model and primary data sets
// ---------------------------------------------------------------------------

struct NoiseModel {
    double sigma = 0.0;       ///< relative standard deviation (e.g. 0.025)
    std::uint64_t seed = 0;   ///< master seed of the experiment

    void validate() const {
        if (sigma < 0.0) throw Error("NoiseModel: sigma must be non-negative");
    }
};

/// The complete probe-state data of one network: visibilities, amplitudes and
/// coherent-state relative phases, plus the noise bookkeeping.
struct PrimaryData {
    int m = 0;
    VisibilitySet vis;
    AmplitudeMatrix tau;
    PhaseMatrix theta;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Clean primary data synthesized from a (possibly non-unitary) network matrix.
inline PrimaryData sense_primary_data(const Mat& network, Selection selection = Selection::full) {
    PrimaryData d;
    d.m = static_cast<int>(network.rows());
    d.vis = visibility_set(network, selection);
    d.tau = transition_amplitudes(network, TauNormalization::column_l2);
    d.theta = relative_phases(network);
    return d;
}

/// Applies the noise model: visibilities and amplitudes pick up independent
/// multiplicative factors (1 + sigma·N(0,1)); the non-trivial phases are
/// shifted additively by sigma·N(0,1) radians. First-row/column phases stay
/// exactly zero (they are the gauge convention, not measured data). Perturbed
/// amplitudes are not re-normalized and visibilities are not clipped.
///
/// Draw order (fixed for reproducibility): visibility records in set order,
/// then tau row-major, then the non-trivial theta block row-major.
inline PrimaryData perturb(const PrimaryData& clean, const NoiseModel& noise, Rng& rng) {
    noise.validate();
    PrimaryData d = clean;
    d.sigma = noise.sigma;
    d.seed = noise.seed;
    if (noise.sigma == 0.0) return d;

    for (auto& r : d.vis.records)
        r.value *= 1.0 + noise.sigma * rng.normal();
    for (int j = 0; j < d.m; ++j)
        for (int k = 0; k < d.m; ++k)
            d.tau.tau(j, k) *= 1.0 + noise.sigma * rng.normal();
    for (int j = 1; j < d.m; ++j)
        for (int k = 1; k < d.m; ++k)
            d.theta.theta(j, k) += noise.sigma * rng.normal();
    return d;
}

// ---------------------------------------------------------------------------
// Primary data budgets
// ---------------------------------------------------------------------------

enum class BudgetMethod { brisbane, bristol, vienna, vienna_blackbox };
enum class BudgetMode { minimal, maximal };

namespace detail {
inline void check_budget_m(BudgetMethod method, int m) {
    const int lo = (method == BudgetMethod::vienna || method == BudgetMethod::vienna_blackbox) ? 3 : 2;
    if (m < lo || m > kMaxModes)
        throw InvalidDimensionError("data budget: mode count out of range");
}
} // namespace detail

/// Number of primary data points each approach consumes.
inline long dataset_size(BudgetMethod method, int m, BudgetMode mode) {
    detail::check_budget_m(method, m);
    const long mm = m;
    const long c2 = choose2(mm);
    const long amps = mm * mm;
    const long phases = (mm - 1) * (mm - 1);
    switch (method) {
        case BudgetMethod::brisbane:
            return amps + phases;
        case BudgetMethod::bristol:
            return mode == BudgetMode::minimal ? amps + 2 * phases - 1 : amps + c2 * c2;
        case BudgetMethod::vienna:
            return mode == BudgetMode::minimal ? (mm - 1) * c2 : c2 * c2;
        case BudgetMethod::vienna_blackbox:
            return mode == BudgetMode::minimal ? amps + phases + (mm - 1) * c2
                                               : amps + phases + c2 * c2;
    }
    throw Error("dataset_size: unreachable");
}

/// Number of consecutive measurement runs, assuming one detector per output.
inline long measurement_runs(BudgetMethod method, int m, BudgetMode mode) {
    detail::check_budget_m(method, m);
    const long mm = m;
    const long c2 = choose2(mm);
    switch (method) {
        case BudgetMethod::brisbane:
            return 2 * mm - 1;
        case BudgetMethod::bristol:
            return mode == BudgetMode::minimal ? 3 * mm - 3 : mm + c2;
        case BudgetMethod::vienna:
            return mode == BudgetMode::minimal ? mm - 1 : c2;
        case BudgetMethod::vienna_blackbox:
            return mode == BudgetMode::minimal ? 3 * mm - 2 : (2 * mm - 1) + c2;
    }
    throw Error("measurement_runs: unreachable");
}

} // namespace lonrec
