#pragma once

#include <Eigen/QR>

#include <atomic>
#include <chrono>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "mdlan/rng.hpp"
#include "mdlan/rpca.hpp"
#include "mdlan/solver.hpp"

namespace mdlan {

enum class Method { mdlan, rpca };

inline const char* method_name(Method m) { return m == Method::mdlan ? "mdlan" : "rpca"; }

inline Method method_from_name(const std::string& name) {
    if (name == "mdlan") return Method::mdlan;
    if (name == "rpca") return Method::rpca;
    throw std::invalid_argument("unknown method '" + name + "' (expected mdlan or rpca)");
}

struct SyntheticSpec {
    Index m = 0;
    Index n = 0;
    Index r = 0;
    double p = 0.0;  ///< corruption ratio in [0, 1)
    std::uint64_t seed = 0;
};

struct SyntheticData {
    Matrix x0;
    Matrix e0;
    Matrix y;
    Index planted_nnz = 0;
};

/// Ground-truth instance: X0 = B·C with B an m×r orthonormal basis (QR of
/// seeded standard Gaussians) and C entries uniform on [0, 5); E0 plants
/// round(p·m·n) entries of N(0, 1) noise on a uniformly chosen support.
/// Y = X0 + E0. Bit-reproducible from the seed.
inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    if (spec.m < 1 || spec.n < 1) throw std::invalid_argument("gen_synthetic: empty shape");
    if (spec.r < 1 || spec.r > std::min(spec.m, spec.n))
        throw std::invalid_argument("gen_synthetic: rank out of range");
    if (!(spec.p >= 0.0 && spec.p < 1.0))
        throw std::invalid_argument("gen_synthetic: corruption ratio must lie in [0, 1)");
    SplitMix64 rng(spec.seed);

    Matrix gauss(spec.m, spec.r);
    for (Index j = 0; j < spec.r; ++j)
        for (Index i = 0; i < spec.m; ++i) gauss(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Matrix> qr(gauss);
    const Matrix basis = qr.householderQ() * Matrix::Identity(spec.m, spec.r);

    Matrix weights(spec.r, spec.n);
    for (Index j = 0; j < spec.n; ++j)
        for (Index i = 0; i < spec.r; ++i) weights(i, j) = rng.uniform(0.0, 5.0);

    SyntheticData data;
    data.x0 = basis * weights;
    data.e0 = Matrix::Zero(spec.m, spec.n);
    const std::uint64_t cells = static_cast<std::uint64_t>(spec.m) * static_cast<std::uint64_t>(spec.n);
    const std::uint64_t k = static_cast<std::uint64_t>(std::llround(spec.p * static_cast<double>(cells)));
    // partial Fisher-Yates for a uniform support without replacement
    std::vector<std::uint64_t> indices(cells);
    std::iota(indices.begin(), indices.end(), 0u);
    for (std::uint64_t i = 0; i < k; ++i) {
        const std::uint64_t j = i + rng.below(cells - i);
        std::swap(indices[i], indices[j]);
    }
    std::vector<std::uint64_t> support(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(support.begin(), support.end());
    for (std::uint64_t idx : support) {
        const Index i = static_cast<Index>(idx % static_cast<std::uint64_t>(spec.m));
        const Index j = static_cast<Index>(idx / static_cast<std::uint64_t>(spec.m));
        double value = rng.gaussian();
        while (value == 0.0) value = rng.gaussian();  // keep the planted count exact
        data.e0(i, j) = value;
    }
    data.planted_nnz = static_cast<Index>(k);
    data.y = data.x0 + data.e0;
    return data;
}

struct BenchRecord {
    SyntheticSpec spec;
    Method method = Method::mdlan;
    double lr_nrmse = 0.0;
    double sp_nrmse = 0.0;  ///< NaN when the planted sparse part is empty
    Index rank_est = 0;
    Index nnz_est = 0;
    bool success = false;  ///< lr_nrmse < 0.01
    bool converged = false;
    double wall_seconds = 0.0;
};

struct TrialConfig {
    SolverConfig solver{};
    RpcaConfig rpca{};
};

/// One benchmark trial: generate, solve, score against the ground truth.
/// Solver non-convergence is recorded, not fatal.
inline BenchRecord run_trial(const SyntheticSpec& spec, Method method,
                             const TrialConfig& config = {}) {
    const SyntheticData data = gen_synthetic(spec);
    BenchRecord rec;
    rec.spec = spec;
    rec.method = method;
    const auto start = std::chrono::steady_clock::now();
    const DecompositionResult result = method == Method::mdlan
                                           ? decompose(data.y, config.solver)
                                           : rpca_ialm(data.y, config.rpca);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.lr_nrmse = nrmse(data.x0, result.x);
    rec.sp_nrmse = data.e0.norm() > 0.0 ? nrmse(data.e0, result.e)
                                        : std::numeric_limits<double>::quiet_NaN();
    rec.rank_est = result.rank_est;
    rec.nnz_est = result.nnz_est;
    rec.success = rec.lr_nrmse < 0.01;
    rec.converged = result.converged();
    return rec;
}

struct GridCell {
    Method method = Method::mdlan;
    Index n = 0;
    double p = 0.0;
    int trials = 0;
    double success_ratio = 0.0;
    double mean_lr_nrmse = 0.0;
    double mean_sp_nrmse = 0.0;
    double mean_rank_est = 0.0;
    double mean_nnz_est = 0.0;
};

namespace detail {

inline GridCell aggregate_cell(Method method, Index n, double p,
                               const std::vector<BenchRecord>& records) {
    GridCell cell;
    cell.method = method;
    cell.n = n;
    cell.p = p;
    cell.trials = static_cast<int>(records.size());
    for (const BenchRecord& r : records) {
        cell.success_ratio += r.success ? 1.0 : 0.0;
        cell.mean_lr_nrmse += r.lr_nrmse;
        cell.mean_sp_nrmse += r.sp_nrmse;
        cell.mean_rank_est += static_cast<double>(r.rank_est);
        cell.mean_nnz_est += static_cast<double>(r.nnz_est);
    }
    const double t = std::max(1, cell.trials);
    cell.success_ratio /= t;
    cell.mean_lr_nrmse /= t;
    cell.mean_sp_nrmse /= t;
    cell.mean_rank_est /= t;
    cell.mean_nnz_est /= t;
    return cell;
}

/// Runs tasks 0..count-1 on `jobs` threads. Each task owns its output slot,
/// so results do not depend on scheduling.
template <typename Fn>
inline void parallel_for_tasks(std::size_t count, int jobs, Fn&& fn) {
    if (jobs < 1) jobs = 1;
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Success-ratio grid over (n, p) for m×n instances of rank r. Each trial
/// draws its own seed from hash(seed, n, p, trial), so both methods see the
/// same data and cells are reproducible regardless of execution order.
inline std::vector<GridCell> phase_grid(Index m, Index r, const std::vector<Index>& n_values,
                                        const std::vector<double>& p_values, int trials,
                                        const std::vector<Method>& methods, std::uint64_t seed,
                                        int jobs = 1, const TrialConfig& config = {}) {
    if (n_values.empty() || p_values.empty())
        throw std::invalid_argument("phase_grid: empty axis list");
    if (trials < 1) throw std::invalid_argument("phase_grid: trials must be positive");
    struct Task {
        Method method;
        Index n;
        double p;
        int trial;
    };
    std::vector<Task> tasks;
    for (Method method : methods)
        for (Index n : n_values)
            for (double p : p_values)
                for (int trial = 0; trial < trials; ++trial) tasks.push_back({method, n, p, trial});
    std::vector<BenchRecord> records(tasks.size());
    detail::parallel_for_tasks(tasks.size(), jobs, [&](std::size_t i) {
        const Task& task = tasks[i];
        SyntheticSpec spec{m, task.n, r, task.p,
                           combine_seed({seed, static_cast<std::uint64_t>(task.n), seed_bits(task.p),
                                         static_cast<std::uint64_t>(task.trial)})};
        records[i] = run_trial(spec, task.method, config);
    });
    std::vector<GridCell> cells;
    std::size_t offset = 0;
    for (Method method : methods) {
        for (Index n : n_values) {
            for (double p : p_values) {
                std::vector<BenchRecord> group(records.begin() + static_cast<std::ptrdiff_t>(offset),
                                               records.begin() + static_cast<std::ptrdiff_t>(offset + trials));
                offset += static_cast<std::size_t>(trials);
                cells.push_back(detail::aggregate_cell(method, n, p, group));
            }
        }
    }
    return cells;
}

inline void write_grid_csv(const std::filesystem::path& path, const std::vector<GridCell>& cells) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_grid_csv: cannot open " + path.string());
    out << "method,n,p,trials,success_ratio,mean_lr_nrmse,mean_sp_nrmse,mean_rank_est,mean_nnz_est\n";
    for (const GridCell& c : cells) {
        out << method_name(c.method) << ',' << c.n << ',' << format_double(c.p) << ',' << c.trials
            << ',' << format_double(c.success_ratio) << ',' << format_double(c.mean_lr_nrmse) << ','
            << format_double(c.mean_sp_nrmse) << ',' << format_double(c.mean_rank_est) << ','
            << format_double(c.mean_nnz_est) << '\n';
    }
    if (!out) throw std::runtime_error("write_grid_csv: write failed for " + path.string());
}

/// Per-corruption-ratio curves at fixed (m, n, r) for both methods.
inline std::vector<GridCell> sweep_p(Index m, Index n, Index r, const std::vector<double>& p_values,
                                     int trials, std::uint64_t seed, int jobs = 1,
                                     const TrialConfig& config = {}) {
    return phase_grid(m, r, {n}, p_values, trials, {Method::mdlan, Method::rpca}, seed, jobs,
                      config);
}

/// Harmonic mean of precision and recall of a binary mask against truth;
/// 0 when there are no true positives.
inline double f_measure(const Mask& mask, const Mask& truth) {
    if (mask.rows() != truth.rows() || mask.cols() != truth.cols())
        throw std::invalid_argument("f_measure: shape mismatch");
    long long tp = 0, fp = 0, fn = 0, positives = 0;
    for (Index j = 0; j < mask.cols(); ++j) {
        for (Index i = 0; i < mask.rows(); ++i) {
            const bool m = mask(i, j) != 0;
            const bool t = truth(i, j) != 0;
            positives += t;
            if (m && t) ++tp;
            else if (m && !t) ++fp;
            else if (!m && t) ++fn;
        }
    }
    if (positives == 0) throw std::invalid_argument("f_measure: truth has no positives");
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

struct SyntheticVideo {
    Index h = 0;
    Index w = 0;
    Index frames = 0;
    Matrix stack;       ///< (h·w)×frames, row-major raster per column
    Mask truth;         ///< foreground truth, same shape as stack
    Matrix background;  ///< clean h×w background image
};

/// Synthetic surveillance-style stack: a static seeded background (smooth
/// gradient plus fixed texture), an optional global illumination drift (a
/// rank-1 effect), and a bright square moving on a deterministic path.
/// Truth masks mark the square. square_size = 0 yields pure background.
inline SyntheticVideo gen_synthetic_video(Index h, Index w, Index frames, Index square_size,
                                          double illum_drift, std::uint64_t seed) {
    if (h < 1 || w < 1 || frames < 1)
        throw std::invalid_argument("gen_synthetic_video: empty geometry");
    if (square_size < 0 || square_size > std::min(h, w))
        throw std::invalid_argument("gen_synthetic_video: square does not fit in frame");
    SplitMix64 rng(seed);
    SyntheticVideo video;
    video.h = h;
    video.w = w;
    video.frames = frames;
    video.background.resize(h, w);
    for (Index r = 0; r < h; ++r) {
        for (Index c = 0; c < w; ++c) {
            const double vertical = h > 1 ? static_cast<double>(r) / static_cast<double>(h - 1) : 0.0;
            const double horizontal = w > 1 ? static_cast<double>(c) / static_cast<double>(w - 1) : 0.0;
            video.background(r, c) =
                60.0 + 50.0 * vertical + 35.0 * horizontal + rng.uniform(-8.0, 8.0);
        }
    }
    video.stack.resize(h * w, frames);
    video.truth = Mask::Zero(h * w, frames);
    const Index row_span = h - square_size + 1;
    const Index col_span = w - square_size + 1;
    for (Index j = 0; j < frames; ++j) {
        const double drift =
            frames > 1 ? 1.0 + illum_drift * (static_cast<double>(j) / static_cast<double>(frames - 1) - 0.5)
                       : 1.0;
        for (Index r = 0; r < h; ++r)
            for (Index c = 0; c < w; ++c) video.stack(r * w + c, j) = drift * video.background(r, c);
        if (square_size > 0) {
            const Index r0 = (j * 3) % row_span;
            const Index c0 = (j * 5) % col_span;
            for (Index r = r0; r < r0 + square_size; ++r) {
                for (Index c = c0; c < c0 + square_size; ++c) {
                    video.stack(r * w + c, j) = 250.0;
                    video.truth(r * w + c, j) = 1;
                }
            }
        }
    }
    return video;
}

}  // namespace mdlan
