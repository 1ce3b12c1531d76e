#ifndef EVOGA_METRICS_HPP
#define EVOGA_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

#include "evoga/data.hpp"
#include "evoga/mat.hpp"

namespace evoga {

struct CoverageReport {
    std::vector<int> per_mode_counts;
    int modes_covered = 0;
    double high_quality_fraction = 0.0;
    int sample_count = 0;
};

// Assigns each sample to its nearest mixture center if within
// radius_sigmas * sigma; a mode counts as covered at min_count assigned
// samples. min_count <= 0 selects the default max(1, N / (20 * modes)).
inline CoverageReport mode_coverage(const Mat& samples, const MixtureSpec& spec,
                                    double radius_sigmas = 3.0, int min_count = 0) {
    spec.validate();
    if (samples.rows() < 1 || samples.cols() != 2)
        throw shape_error("mode_coverage: samples must be Nx2, got " + samples.shape_str());
    int n = samples.rows();
    int modes = static_cast<int>(spec.centers.size());
    if (min_count <= 0) min_count = std::max(1, n / (20 * modes));
    double radius = radius_sigmas * spec.sigma * spec.scale;

    CoverageReport rep;
    rep.per_mode_counts.assign(modes, 0);
    rep.sample_count = n;
    int assigned = 0;
    for (int r = 0; r < n; ++r) {
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < modes; ++k) {
            double dx = samples(r, 0) - spec.centers[k][0] * spec.scale;
            double dy = samples(r, 1) - spec.centers[k][1] * spec.scale;
            double d2 = dx * dx + dy * dy;
            if (d2 < best) {
                best = d2;
                nearest = k;
            }
        }
        if (std::sqrt(best) <= radius) {
            rep.per_mode_counts[nearest] += 1;
            assigned += 1;
        }
    }
    for (int k = 0; k < modes; ++k)
        if (rep.per_mode_counts[k] >= min_count) rep.modes_covered += 1;
    rep.high_quality_fraction = static_cast<double>(assigned) / n;
    return rep;
}

struct KdeGrid {
    double x_min, x_max, y_min, y_max;
    int resolution;
    double bandwidth;
    std::vector<double> density;  // row-major, resolution x resolution

    double at(int row, int col) const { return density[static_cast<size_t>(row) * resolution + col]; }
};

// Scott's rule for 1 bandwidth shared by both axes: (4/(3N))^(1/5) * std,
// with std averaged over the two axes.
inline double scott_bandwidth(const Mat& samples) {
    int n = samples.rows();
    double sd = 0;
    for (int c = 0; c < 2; ++c) {
        double mean = 0;
        for (int r = 0; r < n; ++r) mean += samples(r, c);
        mean /= n;
        double var = 0;
        for (int r = 0; r < n; ++r) var += (samples(r, c) - mean) * (samples(r, c) - mean);
        sd += std::sqrt(var / std::max(1, n - 1));
    }
    sd /= 2.0;
    double h = std::pow(4.0 / (3.0 * n), 0.2) * sd;
    return h > 0 ? h : 1.0;
}

// Isotropic Gaussian KDE evaluated at cell centers of a square grid.
inline KdeGrid kde_grid(const Mat& samples, double x_min, double x_max, double y_min, double y_max,
                        int resolution, double bandwidth = 0.0) {
    if (resolution < 2) throw shape_error("kde_grid: resolution must be >= 2");
    if (samples.rows() < 1 || samples.cols() != 2)
        throw shape_error("kde_grid: samples must be Nx2, got " + samples.shape_str());
    if (bandwidth <= 0) bandwidth = scott_bandwidth(samples);

    KdeGrid grid{x_min, x_max, y_min, y_max, resolution, bandwidth, {}};
    grid.density.assign(static_cast<size_t>(resolution) * resolution, 0.0);
    double dx = (x_max - x_min) / resolution;
    double dy = (y_max - y_min) / resolution;
    double inv_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth * samples.rows());
    for (int i = 0; i < resolution; ++i) {
        double cy = y_min + (i + 0.5) * dy;
        for (int j = 0; j < resolution; ++j) {
            double cx = x_min + (j + 0.5) * dx;
            double acc = 0;
            for (int r = 0; r < samples.rows(); ++r) {
                double ux = cx - samples(r, 0);
                double uy = cy - samples(r, 1);
                acc += std::exp(-(ux * ux + uy * uy) * inv_h2);
            }
            grid.density[static_cast<size_t>(i) * resolution + j] = acc * norm;
        }
    }
    return grid;
}

// Headered text format: bounds line, resolution line, then row-major values.
inline void write_kde_grid(std::ostream& os, const KdeGrid& grid) {
    os << grid.x_min << " " << grid.x_max << " " << grid.y_min << " " << grid.y_max << "\n";
    os << grid.resolution << "\n";
    for (int i = 0; i < grid.resolution; ++i) {
        for (int j = 0; j < grid.resolution; ++j) {
            if (j) os << " ";
            os << grid.at(i, j);
        }
        os << "\n";
    }
}

}  // namespace evoga

#endif
