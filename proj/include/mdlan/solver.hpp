#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mdlan/codelength.hpp"
#include "mdlan/io.hpp"

namespace mdlan {

enum class ThetaEstimate {
    support_mean,  ///< mean of |E| over nonzeros (default)
    full_mean      ///< mean of |E| over all entries
};

struct SolverConfig {
    double mu1 = 0.0;      ///< initial penalty; 0 selects 1.25 / ‖Y‖₂
    double rho = 1.5;      ///< penalty growth factor, > 1
    double theta1 = 1.0;   ///< initial sparse weight
    double tol = 1e-7;     ///< relative feasibility tolerance
    int max_iter = 500;
    Index r_hat_cap = 0;   ///< cap on candidate atoms; 0 selects min(m, n)
    CodelengthModel model{};
    std::optional<std::pair<Index, Index>> image_shape;  ///< (h, w) with h·w = m
    ThetaEstimate theta_estimate = ThetaEstimate::support_mean;
    std::string trace_path;  ///< per-iteration CSV written here when nonempty
};

enum class SolveStatus { converged, max_iter };

struct IterationRecord {
    int iter = 0;
    double feasibility = 0.0;
    Index rank_est = 0;
    Index nnz_est = 0;
    double theta = 0.0;
    double mu = 0.0;
    double codelength_bits = 0.0;
};

struct DecompositionResult {
    Matrix x;
    Matrix e;
    Index rank_est = 0;
    Index nnz_est = 0;
    int iters = 0;
    SolveStatus status = SolveStatus::converged;
    std::vector<IterationRecord> history;

    bool converged() const { return status == SolveStatus::converged; }
};

/// sign(x)·max(|x| − τ, 0); produces exact zeros.
inline double soft_threshold(double x, double tau) {
    const double mag = std::abs(x) - tau;
    if (mag <= 0.0) return 0.0;
    return x > 0.0 ? mag : -mag;
}

/// Binary shrinkage variant: 1 if x − τ ≥ 0, else 0.
inline int shrink_indicator(double x, double tau) {
    return x - tau >= 0.0 ? 1 : 0;
}

/// Entrywise soft-thresholding: the exact minimizer of τ‖E‖₁ + ½‖E − Z‖²_F.
inline Matrix update_sparse(const Matrix& z, double tau) {
    require_finite(z, "update_sparse");
    if (tau < 0.0) throw std::invalid_argument("update_sparse: tau must be nonnegative");
    return z.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
}

/// Exact minimizer of (1/μ)·Σ v_i s_i + ½‖Σ v_i α_i ψ_i − G‖²_F over
/// v ∈ {0,1}^r for orthogonal atoms: per-atom, select iff α_i²/2 ≥ s_i/μ.
/// Atoms with zero coefficient contribute nothing and are never selected.
inline std::vector<int> select_atoms(const AtomBasis& basis, const Vector& s, double mu) {
    if (s.size() != basis.size())
        throw std::invalid_argument("select_atoms: codelength vector length mismatch");
    if (!(mu > 0.0)) throw std::invalid_argument("select_atoms: mu must be positive");
    std::vector<int> v(static_cast<std::size_t>(basis.size()), 0);
    for (Index i = 0; i < basis.size(); ++i) {
        const double alpha = basis.coeffs[i];
        if (alpha > 0.0 && mu * alpha * alpha / 2.0 >= s[i]) v[static_cast<std::size_t>(i)] = 1;
    }
    return v;
}

namespace detail {

struct AtomSelection {
    std::vector<int> selected;
    Vector codelengths;  ///< exact where evaluated, NaN where pruned
    double selected_bits = 0.0;
    Index rank = 0;
};

/// Selection with lower-bound pruning: every quantized residual entry costs
/// at least bits(0), so an atom with μα²/2 < m·n·bits(0) can never pass the
/// selection rule and its exact codelength is skipped. Produces the same
/// selection as select_atoms on fully evaluated codelengths.
inline AtomSelection select_candidates(const AtomBasis& basis, const PredictorMap& map,
                                       const CodelengthModel& model, double mu) {
    const double entries = static_cast<double>(basis.rows) * static_cast<double>(basis.cols);
    AtomSelection sel;
    sel.selected.assign(static_cast<std::size_t>(basis.size()), 0);
    sel.codelengths = Vector::Constant(basis.size(), std::numeric_limits<double>::quiet_NaN());
    for (Index i = 0; i < basis.size(); ++i) {
        const double alpha = basis.coeffs[i];
        if (!(alpha > 0.0)) continue;
        const double gain = mu * alpha * alpha / 2.0;
        const Vector wu = prediction_residual(map, basis.u.col(i));
        const ResidualCode code = fit_residual_code(wu, basis.v.col(i), alpha, model);
        if (gain < entries * code.bits(0.0)) continue;
        const double s_i = residual_bits(wu, basis.v.col(i), alpha, code);
        sel.codelengths[i] = s_i;
        if (gain >= s_i) {
            sel.selected[static_cast<std::size_t>(i)] = 1;
            sel.selected_bits += s_i;
            ++sel.rank;
        }
    }
    return sel;
}

inline Matrix synthesize_selected(const AtomBasis& basis, const std::vector<int>& selected,
                                  Index rank) {
    if (rank == 0) return Matrix::Zero(basis.rows, basis.cols);
    Matrix us(basis.rows, rank);
    Matrix vs(basis.cols, rank);
    Index k = 0;
    for (Index i = 0; i < basis.size(); ++i) {
        if (!selected[static_cast<std::size_t>(i)]) continue;
        us.col(k) = basis.coeffs[i] * basis.u.col(i);
        vs.col(k) = basis.v.col(i);
        ++k;
    }
    return us * vs.transpose();
}

inline void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("trace: cannot open " + path);
    out << "iter,feasibility,rank_est,nnz_est,theta,mu,codelength_bits\n";
    for (const IterationRecord& r : history) {
        out << r.iter << ',' << format_double(r.feasibility) << ',' << r.rank_est << ','
            << r.nnz_est << ',' << format_double(r.theta) << ',' << format_double(r.mu) << ','
            << format_double(r.codelength_bits) << '\n';
    }
    if (!out) throw std::runtime_error("trace: write failed for " + path);
}

inline double default_mu1(const Matrix& y) {
    const double s1 = spectral_norm(y);
    return s1 > 0.0 ? 1.25 / s1 : 1.25;
}

inline void validate_schedule(double mu1, double rho, double tol, int max_iter) {
    if (mu1 < 0.0 || !std::isfinite(mu1))
        throw std::invalid_argument("solver: mu1 must be nonnegative and finite");
    if (!(rho > 1.0)) throw std::invalid_argument("solver: rho must exceed 1");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("solver: max_iter must be positive");
}

}  // namespace detail

/// ADMM decomposition Y ≈ X + E with codelength-gated atom selection.
/// Per iteration: candidate atoms from the SVD of G = Y − E + U/μ, atom
/// selection for X via the codelength rule, E = S_{θ/μ}[Y − X + U/μ],
/// U ← U + μ(Y − X − E), μ ← ρμ, θ ← mean|E|. Stops once the relative
/// feasibility residual ‖Y − X − E‖_F / ‖Y‖_F reaches tol.
inline DecompositionResult decompose(const Matrix& y, const SolverConfig& cfg) {
    require_finite(y, "decompose: Y");
    detail::validate_schedule(cfg.mu1, cfg.rho, cfg.tol, cfg.max_iter);
    if (!(cfg.theta1 > 0.0)) throw std::invalid_argument("decompose: theta1 must be positive");
    const Index m = y.rows(), n = y.cols();
    if (m < 1 || n < 1) throw std::invalid_argument("decompose: empty matrix");
    PredictorMap map;
    if (cfg.image_shape) {
        const auto [h, w] = *cfg.image_shape;
        if (h * w != m)
            throw std::invalid_argument("decompose: image shape does not match row count");
        map = build_predictor(h, w);
    } else {
        map = build_predictor(m, 1);
    }
    Index r_hat = std::min(m, n);
    if (cfg.r_hat_cap > 0) r_hat = std::min(r_hat, cfg.r_hat_cap);

    const double y_norm = y.norm();
    double mu = cfg.mu1 > 0.0 ? cfg.mu1 : detail::default_mu1(y);
    double theta = cfg.theta1;

    DecompositionResult res;
    res.x = Matrix::Zero(m, n);
    res.e = Matrix::Zero(m, n);
    res.status = SolveStatus::max_iter;
    Matrix mult = Matrix::Zero(m, n);

    for (int t = 1; t <= cfg.max_iter; ++t) {
        const Matrix g = y - res.e + mult / mu;
        const AtomBasis basis = candidate_lowrank_atoms(g, r_hat);
        const detail::AtomSelection sel = detail::select_candidates(basis, map, cfg.model, mu);
        res.x = detail::synthesize_selected(basis, sel.selected, sel.rank);
        res.e = update_sparse(y - res.x + mult / mu, theta / mu);
        const Matrix residual = y - res.x - res.e;
        mult.noalias() += mu * residual;

        const double feas = y_norm > 0.0 ? residual.norm() / y_norm : residual.norm();
        res.rank_est = sel.rank;
        res.nnz_est = nnz_count(res.e);
        res.iters = t;

        const double theta_next = cfg.theta_estimate == ThetaEstimate::support_mean
                                      ? estimate_theta(res.e)
                                      : estimate_theta_full_mean(res.e);
        const double sparse_bits =
            sparse_codelength(sparse_from_matrix(res.e), theta_next, m, n);
        res.history.push_back(
            {t, feas, res.rank_est, res.nnz_est, theta, mu, sel.selected_bits + sparse_bits});

        if (feas <= cfg.tol) {
            res.status = SolveStatus::converged;
            break;
        }
        mu *= cfg.rho;
        theta = theta_next;
    }

    if (!cfg.trace_path.empty()) detail::write_trace_csv(cfg.trace_path, res.history);
    return res;
}

}  // namespace mdlan
