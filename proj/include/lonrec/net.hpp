#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "lonrec/errors.hpp"
#include "lonrec/rng.hpp"

namespace lonrec {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RealMat = Eigen::MatrixXd;
using RealVec = Eigen::VectorXd;

/// Construction-time unitarity tolerance, max norm of U†U − I.
inline constexpr double kUnitaryTol = 1e-10;
/// Reck roundtrip tolerance, per coordinate.
inline constexpr double kRoundtripTol = 1e-8;
/// Singular values below this are treated as rank deficiency.
inline constexpr double kSingularTol = 1e-12;
/// Gauge reference entries below this magnitude carry no usable phase.
inline constexpr double kGaugeTol = 1e-12;
/// Largest supported mode count.
inline constexpr int kMaxModes = 32;

inline bool is_finite(const Mat& m) {
    return m.allFinite();
}

inline double max_abs(const Mat& m) {
    return m.cwiseAbs().maxCoeff();
}

inline double unitarity_defect(const Mat& u) {
    return max_abs(u.adjoint() * u - Mat::Identity(u.rows(), u.cols()));
}

/// Wrap into [-pi, pi). Used for mesh phase shifts.
inline double wrap_phase(double x) {
    const double two_pi = 2.0 * M_PI;
    double y = x - two_pi * std::floor((x + M_PI) / two_pi);
    if (y >= M_PI) y -= two_pi;  // floor rounding at the seam
    if (y < -M_PI) y += two_pi;
    return y;
}

/// Wrap into (-pi, pi]. Used for measured relative phases.
inline double wrap_phase_data(double x) {
    double y = wrap_phase(-x);
    return -y;
}

/// Sum of singular values.
inline double trace_norm(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

inline long choose2(long m) { return m * (m - 1) / 2; }

/// Square complex matrix with a validated unitarity invariant. Every factory
/// in the library returns its unitaries through this type, so the closure
/// invariant (‖U†U − I‖_max ≤ 1e-10) is enforced at construction.
class Unitary {
public:
    explicit Unitary(Mat u, double tol = kUnitaryTol) : u_(std::move(u)) {
        if (u_.rows() < 1 || u_.rows() != u_.cols())
            throw InvalidDimensionError("Unitary: matrix must be square and non-empty");
        if (!is_finite(u_))
            throw NotUnitaryError("Unitary: non-finite entries");
        if (unitarity_defect(u_) > tol)
            throw NotUnitaryError("Unitary: U^dag U deviates from identity beyond tolerance");
    }

    int dim() const { return static_cast<int>(u_.rows()); }
    const Mat& mat() const { return u_; }
    Complex operator()(Eigen::Index r, Eigen::Index c) const { return u_(r, c); }

    Unitary conjugated() const { return Unitary(u_.conjugate()); }

private:
    Mat u_;
};

// ---------------------------------------------------------------------------
// Reck mesh parametrization
// ---------------------------------------------------------------------------

/// One mesh cell acting on adjacent modes (a, a+1): a phase shifter phi on
/// mode a followed by the real rotation
///   R(lambda) = [[cos, -sin], [sin, cos]],
/// i.e. the 2x2 block [[e^{i phi} cos, -sin], [e^{i phi} sin, cos]].
struct ReckCell {
    int a = 0;           ///< top mode of the pair, 0-based
    double lambda = 0.0; ///< splitting angle in [0, pi/2]
    double phi = 0.0;    ///< phase shift in [-pi, pi)
};

/// The canonical cell sequence: the nulling sweep walks column 1 bottom-up,
/// then column 2, and so on; cell s acts on rows (a_s, a_s+1). Light entering
/// the mesh meets cells in exactly this order.
inline std::vector<int> canonical_cell_rows(int m) {
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(choose2(m)));
    for (int c = 0; c < m - 1; ++c)
        for (int r = m - 1; r > c; --r)
            rows.push_back(r - 1);
    return rows;
}

struct ReckParameters {
    int m = 0;
    std::vector<ReckCell> cells;
    /// Set once the first cell's phase has been pinned to zero; that phase is
    /// pure input gauge and carries no free parameter.
    bool phase_gauge_fixed = false;

    std::size_t free_phase_count() const { return cells.empty() ? 0 : cells.size() - 1; }

    void validate() const {
        if (m < 2 || m > kMaxModes)
            throw InvalidDimensionError("ReckParameters: mode count out of range");
        const auto rows = canonical_cell_rows(m);
        if (cells.size() != rows.size())
            throw InvalidDimensionError("ReckParameters: cell count must be C(m,2)");
        for (std::size_t s = 0; s < cells.size(); ++s) {
            const ReckCell& c = cells[s];
            if (c.a != rows[s])
                throw InvalidDimensionError("ReckParameters: cells out of canonical order");
            if (!(c.lambda >= -1e-12 && c.lambda <= M_PI / 2 + 1e-12))
                throw Error("ReckParameters: lambda outside [0, pi/2]");
            if (!(c.phi >= -M_PI - 1e-12 && c.phi < M_PI + 1e-12))
                throw Error("ReckParameters: phi outside [-pi, pi)");
        }
    }
};

namespace detail {

/// In-place left multiplication by the embedded cell: rows (a, a+1) of M.
inline void apply_cell_rows(Mat& m, int a, double lambda, double phi) {
    const double c = std::cos(lambda);
    const double s = std::sin(lambda);
    const Complex p = std::polar(1.0, phi);
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
        const Complex x = m(a, col);
        const Complex y = m(a + 1, col);
        m(a, col) = p * c * x - s * y;
        m(a + 1, col) = p * s * x + c * y;
    }
}

inline void compose_reck_into(const ReckParameters& p, Mat& out) {
    out = Mat::Identity(p.m, p.m);
    for (const ReckCell& cell : p.cells)
        apply_cell_rows(out, cell.a, cell.lambda, cell.phi);
}

} // namespace detail

/// Product of the embedded cells in canonical order (first cell rightmost).
inline Unitary compose_reck(const ReckParameters& p) {
    p.validate();
    Mat u;
    detail::compose_reck_into(p, u);
    return Unitary(std::move(u));
}

/// Triangular nulling. Working on V = U†, each sweep step chooses the unique
/// cell that zeroes the next sub-diagonal entry of V, column by column,
/// bottom-up; the surviving diagonal is discarded as gauge. The recovered
/// cells satisfy U = D† · compose_reck(cells) for a unit-modulus diagonal D,
/// and for parameters with lambda in the open interval the roundtrip
/// decompose(compose(p)) reproduces p coordinate-wise.
inline ReckParameters decompose_reck(const Unitary& u) {
    const int m = u.dim();
    if (m < 2 || m > kMaxModes)
        throw InvalidDimensionError("decompose_reck: mode count out of range");

    ReckParameters p;
    p.m = m;
    p.cells.reserve(static_cast<std::size_t>(choose2(m)));

    Mat v = u.mat().adjoint();
    for (int c = 0; c < m - 1; ++c) {
        for (int r = m - 1; r > c; --r) {
            const Complex x = v(r - 1, c);
            const Complex y = v(r, c);
            const double ax = std::abs(x);
            const double ay = std::abs(y);
            double lambda = 0.0;
            double phi = 0.0;
            if (ay < 1e-14) {
                lambda = 0.0; // already null; phi is arbitrary, use 0
            } else if (ax < 1e-14) {
                lambda = M_PI / 2;
            } else {
                lambda = std::atan2(ay, ax);
                phi = wrap_phase(std::arg(y) - std::arg(x) + M_PI);
            }
            detail::apply_cell_rows(v, r - 1, lambda, phi);
            v(r, c) = Complex(0.0, 0.0);
            p.cells.push_back({r - 1, lambda, phi});
        }
    }
    return p;
}

/// Haar-distributed unitary: complex Ginibre matrix, QR, then each column of
/// Q is multiplied by the phase of the matching R diagonal entry. Plain QR is
/// not Haar; the phase correction makes the R diagonal real positive, which
/// selects the unique, uniformly distributed factor.
inline Unitary haar_unitary(int m, Rng& rng) {
    if (m < 2 || m > kMaxModes)
        throw InvalidDimensionError("haar_unitary: mode count out of range");
    Mat g(m, m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            g(r, c) = rng.complex_normal();
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    const auto rdiag = qr.matrixQR().diagonal();
    for (int j = 0; j < m; ++j) {
        const Complex d = rdiag(j);
        const double ad = std::abs(d);
        q.col(j) *= (ad > 0.0) ? d / ad : Complex(1.0, 0.0);
    }
    return Unitary(std::move(q));
}

/// Unitary polar factor W·V† of the SVD, the closest unitary in Frobenius
/// distance. Rank-deficient inputs have no well-defined polar factor.
inline Unitary closest_unitary(const Mat& m) {
    if (m.rows() < 1 || m.rows() != m.cols())
        throw InvalidDimensionError("closest_unitary: matrix must be square");
    if (!is_finite(m))
        throw Error("closest_unitary: non-finite entries");
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() < kSingularTol)
        throw DegeneratePolarError("closest_unitary: matrix is rank deficient");
    return Unitary(svd.matrixU() * svd.matrixV().adjoint());
}

enum class GaugePolicy {
    strict,  ///< vanishing reference entries are an error
    lenient, ///< vanishing reference entries contribute phase 0
};

/// Gauge-fixed form: original = diag(e^{i dOut}) · canonical · diag(e^{i dIn})
/// with the canonical matrix's first row and column real non-negative.
struct GaugeForm {
    Unitary canonical;
    RealVec d_out;
    RealVec d_in;
};

/// Removes the diagonal phase freedom. dOut_j is the phase of U_{j1}, dIn_k
/// the phase of U_{1k} relative to U_{11}; U_{11}'s own phase lands on the
/// input side so that dIn_1 = 0.
inline GaugeForm gauge_fix(const Unitary& u, GaugePolicy policy = GaugePolicy::strict) {
    const int m = u.dim();
    const Mat& a = u.mat();

    auto ref_arg = [&](int r, int c) -> double {
        const Complex z = a(r, c);
        if (std::abs(z) < kGaugeTol) {
            if (policy == GaugePolicy::strict)
                throw GaugeDegenerateError("gauge_fix: vanishing reference entry", r, c);
            return 0.0;
        }
        return std::arg(z);
    };

    RealVec d_out(m), d_in(m);
    const double base = ref_arg(0, 0);
    for (int j = 0; j < m; ++j) d_out(j) = ref_arg(j, 0);
    d_in(0) = 0.0;
    for (int k = 1; k < m; ++k) d_in(k) = ref_arg(0, k) - base;

    Mat canon(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            canon(j, k) = a(j, k) * std::polar(1.0, -(d_out(j) + d_in(k)));
    // first row/column are real by construction; store them exactly so
    for (int j = 0; j < m; ++j) canon(j, 0) = std::abs(a(j, 0));
    for (int k = 1; k < m; ++k) canon(0, k) = std::abs(a(0, k));

    return GaugeForm{Unitary(std::move(canon)), std::move(d_out), std::move(d_in)};
}

/// Fidelity F = 1 − ‖A − B‖_tr / (2m) between the gauge-fixed forms; the
/// trace norm is the sum of singular values. Gauge fixing first makes F
/// insensitive to diagonal phase freedom (F(H, D1·U·D2) = F(H, U)).
inline double fidelity(const Unitary& h, const Unitary& u) {
    if (h.dim() != u.dim())
        throw InvalidDimensionError("fidelity: dimension mismatch");
    const Mat a = gauge_fix(h, GaugePolicy::lenient).canonical.mat();
    const Mat b = gauge_fix(u, GaugePolicy::lenient).canonical.mat();
    const double f = 1.0 - trace_norm(a - b) / (2.0 * h.dim());
    return std::min(1.0, std::max(0.0, f));
}

/// Fidelity with the diagonal phase freedom optimized out explicitly:
/// 1 − min_{D1,D2} ‖H − D1·U·D2‖_tr / (2m), the minimum found by alternating
/// phase alignment (Frobenius ascent), seeded from the lenient canonical
/// forms. Matrices with structural zeros in the first row or column (loss
/// embeddings) make the canonical referencing of gauge_fix ill-posed; this
/// variant stays meaningful there and agrees with `fidelity` whenever
/// gauge_fix is well-posed.
inline double aligned_fidelity(const Unitary& h, const Unitary& u) {
    if (h.dim() != u.dim())
        throw InvalidDimensionError("aligned_fidelity: dimension mismatch");
    const int m = h.dim();
    const Mat a = gauge_fix(h, GaugePolicy::lenient).canonical.mat();
    const Mat b = gauge_fix(u, GaugePolicy::lenient).canonical.mat();

    // maximize Re sum_jk conj(a) b e^{i(u_j + v_k)} by alternating row/column
    // phase updates
    Eigen::VectorXcd row_phase = Eigen::VectorXcd::Ones(m);
    Eigen::VectorXcd col_phase = Eigen::VectorXcd::Ones(m);
    const Mat overlap = a.conjugate().cwiseProduct(b);
    double prev = -1e300;
    for (int it = 0; it < 200; ++it) {
        for (int j = 0; j < m; ++j) {
            Complex z = 0.0;
            for (int k = 0; k < m; ++k) z += overlap(j, k) * col_phase(k);
            const double az = std::abs(z);
            row_phase(j) = az > 1e-300 ? std::conj(z) / az : Complex(1.0, 0.0);
        }
        double objective = 0.0;
        for (int k = 0; k < m; ++k) {
            Complex z = 0.0;
            for (int j = 0; j < m; ++j) z += overlap(j, k) * row_phase(j);
            const double az = std::abs(z);
            col_phase(k) = az > 1e-300 ? std::conj(z) / az : Complex(1.0, 0.0);
            objective += az;
        }
        if (objective - prev < 1e-13 * std::max(1.0, std::abs(objective))) break;
        prev = objective;
    }
    const Mat aligned = row_phase.asDiagonal() * b * col_phase.asDiagonal();
    const double f = 1.0 - trace_norm(a - aligned) / (2.0 * m);
    return std::min(1.0, std::max(0.0, f));
}

/// Frobenius condition number ‖M⁻¹‖_F · ‖M‖_F, computed from the singular
/// values. Any m×m unitary gives exactly m.
inline double condition_number(const Mat& m) {
    if (m.rows() < 1 || m.rows() != m.cols())
        throw InvalidDimensionError("condition_number: matrix must be square");
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.minCoeff() < kSingularTol)
        throw SingularMatrixError("condition_number: matrix is singular");
    double fwd = 0.0, inv = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        fwd += sv(i) * sv(i);
        inv += 1.0 / (sv(i) * sv(i));
    }
    return std::sqrt(fwd) * std::sqrt(inv);
}

/// Uniformly random mesh parameters; handy for roundtrip properties and
/// optimizer restarts.
inline ReckParameters random_reck_parameters(int m, Rng& rng,
                                             double lambda_lo = 0.0,
                                             double lambda_hi = M_PI / 2) {
    ReckParameters p;
    p.m = m;
    for (int a : canonical_cell_rows(m))
        p.cells.push_back({a, rng.uniform(lambda_lo, lambda_hi), rng.uniform(-M_PI, M_PI)});
    return p;
}

} // namespace lonrec
