#pragma once

// Investigation-domain discretization, background medium, probe geometry and
// target ingestion for the 2D scalar (TM) problem.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscat/errors.hpp"
#include "iscat/specfun.hpp"

namespace iscat {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Point = Eigen::Vector2d;

inline constexpr double kMu0 = 1.25663706212e-6;   // H/m
inline constexpr double kEps0 = 8.8541878128e-12;  // F/m
inline constexpr Complex kJ{0.0, 1.0};

struct BackgroundMedium {
    double frequency = 300e6;  // Hz
    Complex eps_r{1.0, 0.0};   // relative permittivity, Im = 0 in scope
    double mu = kMu0;          // H/m

    double omega() const { return 2.0 * std::numbers::pi * frequency; }
    double k_b() const { return omega() * std::sqrt(mu * kEps0 * eps_r.real()); }
    double lambda_b() const { return 2.0 * std::numbers::pi / k_b(); }

    void validate() const {
        if (frequency <= 0.0) throw ConfigError("medium: frequency must be positive");
        if (eps_r.imag() != 0.0) throw ConfigError("medium: lossy backgrounds are out of scope (Im eps_r must be 0)");
        if (eps_r.real() <= 0.0 || mu <= 0.0) throw ConfigError("medium: eps_r and mu must be positive");
    }
};

inline BackgroundMedium free_space_300mhz() { return BackgroundMedium{}; }

/// Uniform lattice of Nx x Ny square-domain cells centered at the origin.
struct Grid {
    double length = 0.0;  // side L (m), both directions
    int nx = 0, ny = 0;
    BackgroundMedium medium;
    std::vector<Point> centers;  // row-major, x fastest: index = iy*nx + ix

    int cell_count() const { return nx * ny; }
    double dx() const { return length / nx; }
    double dy() const { return length / ny; }
    double cell_area() const { return dx() * dy(); }
    double a_cell() const { return std::sqrt(cell_area() / std::numbers::pi); }
    /// Radius of the smallest origin-centered circle enclosing D.
    double enclosing_radius() const { return length / std::sqrt(2.0); }
};

inline Grid build_grid(double length, int nx, int ny, const BackgroundMedium& medium) {
    medium.validate();
    if (nx < 2 || ny < 2) throw ConfigError("grid: Nx and Ny must be >= 2");
    if (length <= 0.0) throw ConfigError("grid: side length must be positive");
    const double cell = std::max(length / nx, length / ny);
    if (cell > medium.lambda_b() / 10.0 * (1.0 + 1e-12))
        throw ConfigError("grid: cell size exceeds the lambda/10 sampling rule");
    Grid g;
    g.length = length;
    g.nx = nx;
    g.ny = ny;
    g.medium = medium;
    g.centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            g.centers.emplace_back((ix + 0.5) * g.dx() - length / 2.0,
                                   (iy + 0.5) * g.dy() - length / 2.0);
    return g;
}

/// Minimal non-redundant probe count for a target enclosed by radius r_D.
inline int probe_count_for(double r_d, const BackgroundMedium& medium) {
    if (!(r_d > 0.0)) throw ConfigError("probe_count_for: r_D must be positive");
    return std::max(1, static_cast<int>(std::ceil(2.0 * medium.k_b() * r_d)));
}

/// Transmitter/receiver ring on the measurement curve Gamma.
struct ProbeRing {
    double radius = 0.0;
    VectorXd tx_angles;  // rad
    VectorXd rx_angles;  // rad

    int n_tx() const { return static_cast<int>(tx_angles.size()); }
    int n_rx() const { return static_cast<int>(rx_angles.size()); }
    Point tx_position(int t) const { return {radius * std::cos(tx_angles[t]), radius * std::sin(tx_angles[t])}; }
    Point rx_position(int m) const { return {radius * std::cos(rx_angles[m]), radius * std::sin(rx_angles[m])}; }
};

inline ProbeRing make_probe_ring(double radius, int n_tx, int n_rx) {
    if (radius <= 0.0 || n_tx < 1 || n_rx < 1)
        throw ConfigError("probe ring: radius and probe counts must be positive");
    ProbeRing p;
    p.radius = radius;
    p.tx_angles = VectorXd::LinSpaced(n_tx, 0.0, 2.0 * std::numbers::pi * (n_tx - 1) / n_tx);
    p.rx_angles = VectorXd::LinSpaced(n_rx, 0.0, 2.0 * std::numbers::pi * (n_rx - 1) / n_rx);
    return p;
}

inline void require_probes_outside(const ProbeRing& probes, const Grid& grid) {
    if (probes.radius <= grid.enclosing_radius())
        throw ConfigError("probe ring: probes must lie outside D (radius > L/sqrt(2))");
}

enum class ContrastSemantics { PhysicalChi, AuxiliaryP, AuxiliaryR };

struct ContrastMap {
    VectorXcd values;
    ContrastSemantics semantics = ContrastSemantics::PhysicalChi;
};

inline void validate_physical_contrast(const ContrastMap& chi) {
    if (chi.semantics != ContrastSemantics::PhysicalChi) return;
    for (Eigen::Index i = 0; i < chi.values.size(); ++i)
        if (chi.values[i].real() < -1.0)
            throw ConfigError("contrast: Re(chi) >= -1 required (permittivity must stay non-negative)");
}

/// Line-source incident field, one column per transmitter:
///   E_i(r, r_t) = -(j/4) * omega * mu_b * H_0^(2)(k_b |r - r_t|).
inline MatrixXcd incident_fields(const Grid& grid, const ProbeRing& probes) {
    const double k = grid.medium.k_b();
    const Complex amp = -kJ / 4.0 * grid.medium.omega() * grid.medium.mu;
    MatrixXcd e(grid.cell_count(), probes.n_tx());
    for (int t = 0; t < probes.n_tx(); ++t) {
        const Point rt = probes.tx_position(t);
        for (int c = 0; c < grid.cell_count(); ++c)
            e(c, t) = amp * hankel2(0, k * (grid.centers[static_cast<std::size_t>(c)] - rt).norm());
    }
    return e;
}

namespace detail {

struct Raster {
    int width = 0, height = 0;
    std::vector<double> pixels;  // row-major, row 0 = top, normalized to [0,1]
};

inline Raster read_p2(std::istream& in) {
    auto next_token = [&in]() -> std::string {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw IngestError("raster: truncated P2 file");
    };
    Raster r;
    if (next_token() != "P2") throw IngestError("raster: expected P2 magic");
    r.width = std::stoi(next_token());
    r.height = std::stoi(next_token());
    const double maxval = std::stod(next_token());
    if (r.width <= 0 || r.height <= 0 || maxval <= 0)
        throw IngestError("raster: invalid P2 header");
    r.pixels.resize(static_cast<std::size_t>(r.width) * r.height);
    for (double& p : r.pixels) {
        const double v = std::stod(next_token());
        if (v < 0.0 || v > maxval) throw IngestError("raster: pixel outside [0, maxval]");
        p = v / maxval;
    }
    return r;
}

inline Raster read_csv_raster(std::istream& in) {
    Raster r;
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (field.find_first_not_of(" \t\r") == std::string::npos) continue;
            row.push_back(std::stod(field));
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IngestError("raster: empty CSV");
    r.height = static_cast<int>(rows.size());
    r.width = static_cast<int>(rows[0].size());
    double maxval = 0.0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != r.width)
            throw IngestError("raster: ragged CSV rows");
        for (double v : row) maxval = std::max(maxval, std::abs(v));
    }
    r.pixels.reserve(static_cast<std::size_t>(r.width) * r.height);
    for (const auto& row : rows)
        for (double v : row) r.pixels.push_back(maxval > 0.0 ? v / maxval : 0.0);
    return r;
}

inline bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

} // namespace detail

inline constexpr double kGlyphBinarizeThreshold = 0.5;

/// Raster (P2 graymap or CSV) -> contrast map on the grid.
/// Nearest-neighbor resampling; pixels are binarized at 0.5 before the
/// contrast value is applied, matching homogeneous glyph targets.
/// File row 0 maps to the top of the domain (largest y).
inline ContrastMap load_raster_target(const std::string& path, Complex chi_value, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw IngestError("raster: cannot open '" + path + "'");
    detail::Raster raster;
    if (detail::has_suffix(path, ".csv")) raster = detail::read_csv_raster(in);
    else raster = detail::read_p2(in);

    ContrastMap chi;
    chi.semantics = ContrastSemantics::PhysicalChi;
    chi.values.resize(grid.cell_count());
    for (int iy = 0; iy < grid.ny; ++iy) {
        const int src_row = std::min(raster.height - 1,
            static_cast<int>((grid.ny - 1 - iy + 0.5) * raster.height / grid.ny));
        for (int ix = 0; ix < grid.nx; ++ix) {
            const int src_col = std::min(raster.width - 1,
                static_cast<int>((ix + 0.5) * raster.width / grid.nx));
            const double pix = raster.pixels[static_cast<std::size_t>(src_row) * raster.width + src_col];
            chi.values[iy * grid.nx + ix] = (pix >= kGlyphBinarizeThreshold) ? chi_value : Complex{0.0, 0.0};
        }
    }
    validate_physical_contrast(chi);
    return chi;
}

/// Homogeneous disc: chi on cells whose center lies inside the disc.
inline ContrastMap make_circle_target(double radius, Complex chi_value, const Grid& grid,
                                      Point center = Point::Zero()) {
    if (radius < 0.0 || radius > grid.length / 2.0)
        throw ConfigError("circle target: radius must be within the domain (<= L/2)");
    ContrastMap chi;
    chi.semantics = ContrastSemantics::PhysicalChi;
    chi.values = VectorXcd::Zero(grid.cell_count());
    for (int c = 0; c < grid.cell_count(); ++c)
        if ((grid.centers[static_cast<std::size_t>(c)] - center).norm() <= radius)
            chi.values[c] = chi_value;
    validate_physical_contrast(chi);
    return chi;
}

} // namespace iscat
