#pragma once

#include <algorithm>
#include <future>

#include "mdlan/pnm.hpp"
#include "mdlan/rng.hpp"
#include "mdlan/solver.hpp"

namespace mdlan {

/// Image sequence as matrix columns: column j of channel c is frame j in
/// row-major raster order, intensities kept as reals in [0, 255].
struct ImageStack {
    Index h = 0;
    Index w = 0;
    int channels = 1;
    Index frames = 0;
    std::vector<Matrix> data;  ///< one (h·w)×frames matrix per channel
};

namespace detail {

/// Minimal glob: '*' matches any run, '?' matches one character.
inline bool glob_match(std::string_view pattern, std::string_view name) {
    std::size_t p = 0, n = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (n < name.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
            ++p;
            ++n;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = n;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            n = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

}  // namespace detail

/// Loads all PGM/PPM frames in a directory whose filenames match the
/// pattern, sorted lexicographically by filename. All frames must share
/// dimensions and channel count.
inline ImageStack load_stack(const std::filesystem::path& dir, const std::string& pattern = "*") {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("load_stack: not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (detail::glob_match(pattern, entry.path().filename().string()))
            files.push_back(entry.path());
    }
    if (files.empty())
        throw std::runtime_error("load_stack: no files matching '" + pattern + "' in " +
                                 dir.string());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });

    ImageStack stack;
    stack.frames = static_cast<Index>(files.size());
    for (Index j = 0; j < stack.frames; ++j) {
        const PnmImage img = read_pnm(files[static_cast<std::size_t>(j)]);
        if (j == 0) {
            stack.h = img.h;
            stack.w = img.w;
            stack.channels = img.channels;
            stack.data.assign(static_cast<std::size_t>(stack.channels),
                              Matrix(stack.h * stack.w, stack.frames));
        } else if (img.h != stack.h || img.w != stack.w || img.channels != stack.channels) {
            throw std::runtime_error("load_stack: frame dimensions differ in " +
                                     files[static_cast<std::size_t>(j)].string());
        }
        for (Index i = 0; i < stack.h * stack.w; ++i)
            for (int c = 0; c < stack.channels; ++c)
                stack.data[static_cast<std::size_t>(c)](i, j) =
                    static_cast<double>(img.data[static_cast<std::size_t>(i) * stack.channels + c]);
    }
    return stack;
}

/// Wraps a single-channel matrix whose columns are h×w raster frames.
inline ImageStack stack_from_matrix(Index h, Index w, const Matrix& frames) {
    if (frames.rows() != h * w)
        throw std::invalid_argument("stack_from_matrix: row count does not match geometry");
    ImageStack stack;
    stack.h = h;
    stack.w = w;
    stack.channels = 1;
    stack.frames = frames.cols();
    stack.data = {frames};
    return stack;
}

/// Decomposes each channel independently (channels run in parallel). The
/// config's image shape is filled from the stack; a conflicting preset
/// shape is rejected.
inline std::vector<DecompositionResult> decompose_stack(const ImageStack& stack,
                                                        SolverConfig config) {
    if (stack.data.empty() || stack.frames < 1)
        throw std::invalid_argument("decompose_stack: empty stack");
    if (config.image_shape) {
        if (config.image_shape->first != stack.h || config.image_shape->second != stack.w)
            throw std::invalid_argument("decompose_stack: config image shape conflicts with stack");
    } else {
        config.image_shape = {stack.h, stack.w};
    }
    std::vector<std::future<DecompositionResult>> futures;
    futures.reserve(stack.data.size());
    for (std::size_t c = 0; c < stack.data.size(); ++c) {
        SolverConfig channel_config = config;
        if (!config.trace_path.empty() && stack.data.size() > 1)
            channel_config.trace_path = config.trace_path + ".ch" + std::to_string(c);
        futures.push_back(std::async(std::launch::async,
                                     [&stack, c, channel_config] {
                                         return decompose(stack.data[c], channel_config);
                                     }));
    }
    std::vector<DecompositionResult> results;
    results.reserve(futures.size());
    for (auto& f : futures) results.push_back(f.get());
    return results;
}

/// mask_ij = 1 iff |E_ij| > κ. With κ = 0 the mask is exactly the support
/// of E (soft-thresholding leaves true zeros).
inline Mask foreground_mask(const Matrix& e, double kappa = 0.0) {
    if (kappa < 0.0) throw std::invalid_argument("foreground_mask: kappa must be nonnegative");
    Mask mask(e.rows(), e.cols());
    for (Index j = 0; j < e.cols(); ++j)
        for (Index i = 0; i < e.rows(); ++i) mask(i, j) = std::abs(e(i, j)) > kappa ? 1 : 0;
    return mask;
}

namespace detail {

inline std::uint8_t clamp_byte(double v) {
    const double r = static_cast<double>(std::lround(v));
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline std::string frame_name(const char* prefix, Index index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04lld.pgm", prefix, static_cast<long long>(index));
    return buf;
}

}  // namespace detail

/// Writes the recovered components as images plus lossless MDM1 dumps:
/// low_####.pgm holds X columns clamped to [0, 255] and rounded;
/// sparse_####.pgm holds |E| scaled so its maximum maps to 255.
inline void save_components(const DecompositionResult& result, Index h, Index w,
                            const std::filesystem::path& out_dir) {
    if (result.x.rows() != h * w)
        throw std::invalid_argument("save_components: geometry does not match component rows");
    std::filesystem::create_directories(out_dir);
    write_mdm1(result.x, out_dir / "X.mdm1");
    write_mdm1(result.e, out_dir / "E.mdm1");
    const double e_max = result.e.cwiseAbs().maxCoeff();
    const double scale = e_max > 0.0 ? 255.0 / e_max : 0.0;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h * w));
    for (Index j = 0; j < result.x.cols(); ++j) {
        for (Index i = 0; i < h * w; ++i)
            pixels[static_cast<std::size_t>(i)] = detail::clamp_byte(result.x(i, j));
        write_pnm(out_dir / detail::frame_name("low_", j), h, w, 1, pixels);
        for (Index i = 0; i < h * w; ++i)
            pixels[static_cast<std::size_t>(i)] = detail::clamp_byte(std::abs(result.e(i, j)) * scale);
        write_pnm(out_dir / detail::frame_name("sparse_", j), h, w, 1, pixels);
    }
}

/// Writes stack frames as PGM (1 channel) or PPM (3 channels) with the
/// given prefix.
inline void write_stack_frames(const ImageStack& stack, const std::filesystem::path& dir,
                               const std::string& prefix) {
    std::filesystem::create_directories(dir);
    const Index pixels = stack.h * stack.w;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(pixels * stack.channels));
    for (Index j = 0; j < stack.frames; ++j) {
        for (Index i = 0; i < pixels; ++i)
            for (int c = 0; c < stack.channels; ++c)
                buf[static_cast<std::size_t>(i) * stack.channels + c] =
                    detail::clamp_byte(stack.data[static_cast<std::size_t>(c)](i, j));
        char name[32];
        std::snprintf(name, sizeof(name), "%s%04lld.%s", prefix.c_str(), static_cast<long long>(j),
                      stack.channels == 1 ? "pgm" : "ppm");
        write_pnm(dir / name, stack.h, stack.w, stack.channels, buf);
    }
}

/// Salt-and-pepper corruption: each pixel of each frame independently
/// becomes 0 or 255 (equal odds) with the given density. All channels of a
/// corrupted pixel are affected together.
inline void add_salt_pepper(ImageStack& stack, double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0))
        throw std::invalid_argument("add_salt_pepper: density must lie in [0, 1]");
    if (density == 0.0) return;
    SplitMix64 rng(seed);
    const Index pixels = stack.h * stack.w;
    for (Index j = 0; j < stack.frames; ++j) {
        for (Index i = 0; i < pixels; ++i) {
            if (rng.uniform() >= density) continue;
            const double value = rng.uniform() < 0.5 ? 0.0 : 255.0;
            for (int c = 0; c < stack.channels; ++c) stack.data[static_cast<std::size_t>(c)](i, j) = value;
        }
    }
}

}  // namespace mdlan
