#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "chemolab/error.hpp"

namespace chemolab {

/// pi^{n/2} / Gamma(n/2 + 1).
inline double unit_ball_volume(int n) {
    if (n < 3) throw Error(ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(n));
    return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

/// Periodic box [-extent, extent)^3 with cell-centred samples, so no sample
/// sits on the origin.
struct BoxGrid {
    int n = 3;
    double extent = 1.0;
    int points_per_axis = 32;

    double spacing() const { return 2.0 * extent / points_per_axis; }
    std::size_t size() const {
        const auto N = static_cast<std::size_t>(points_per_axis);
        return N * N * N;
    }
    double coordinate(int i) const { return -extent + (i + 0.5) * spacing(); }
    double cell_volume() const {
        const double h = spacing();
        return h * h * h;
    }
    std::size_t index(int i, int j, int k) const {
        const auto N = static_cast<std::size_t>(points_per_axis);
        return (static_cast<std::size_t>(i) * N + static_cast<std::size_t>(j)) * N +
               static_cast<std::size_t>(k);
    }

    bool operator==(const BoxGrid&) const = default;
};

inline void validate(const BoxGrid& g) {
    const int N = g.points_per_axis;
    if (g.n != 3) throw Error(ErrorCode::UnsupportedGrid, "box grids support n = 3 only");
    if (N < 8 || (N & (N - 1)) != 0) {
        throw Error(ErrorCode::UnsupportedGrid,
                    "points_per_axis must be a power of two >= 8, got " + std::to_string(N));
    }
    if (!(g.extent > 0.0)) throw Error(ErrorCode::UnsupportedGrid, "extent must be > 0");
}

/// Ball of radius r_max split into equal-width shells. Cell i spans
/// [i dr, (i+1) dr] and carries the exact shell volume.
class RadialMesh {
public:
    RadialMesh() : RadialMesh(3, 1.0, 16) {}

    RadialMesh(int n, double r_max, int cells) : n_(n), r_max_(r_max), cells_(cells) {
        if (n < 3) throw Error(ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(n));
        if (cells < 16) throw Error(ErrorCode::UnsupportedGrid, "radial mesh needs >= 16 cells");
        if (!(r_max > 0.0)) throw Error(ErrorCode::UnsupportedGrid, "r_max must be > 0");
        ball_ = unit_ball_volume(n);
        volume_.resize(static_cast<std::size_t>(cells));
        const double dr = spacing();
        for (int i = 0; i < cells; ++i) {
            const double lo = i * dr;
            const double hi = (i + 1) * dr;
            volume_[static_cast<std::size_t>(i)] = ball_ * (std::pow(hi, n) - std::pow(lo, n));
        }
    }

    int n() const { return n_; }
    double r_max() const { return r_max_; }
    int cells() const { return cells_; }
    std::size_t size() const { return static_cast<std::size_t>(cells_); }
    double spacing() const { return r_max_ / cells_; }
    double center(int i) const { return (i + 0.5) * spacing(); }
    /// Radius of the face between cells i and i+1.
    double outer_face(int i) const { return (i + 1) * spacing(); }
    /// Surface measure n alpha_n r^{n-1}.
    double area(double r) const { return n_ * ball_ * std::pow(r, n_ - 1); }
    double volume(int i) const { return volume_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& volumes() const { return volume_; }
    double ball_volume() const { return ball_ * std::pow(r_max_, n_); }
    double unit_ball() const { return ball_; }

    bool operator==(const RadialMesh& o) const {
        return n_ == o.n_ && r_max_ == o.r_max_ && cells_ == o.cells_;
    }

private:
    int n_;
    double r_max_;
    int cells_;
    double ball_ = 0.0;
    std::vector<double> volume_;
};

using Geometry = std::variant<BoxGrid, RadialMesh>;

inline int dimension(const Geometry& g) {
    if (const auto* box = std::get_if<BoxGrid>(&g)) return box->n;
    return std::get<RadialMesh>(g).n();
}

inline std::size_t point_count(const Geometry& g) {
    return std::visit([](const auto& x) { return x.size(); }, g);
}

inline double domain_volume(const Geometry& g) {
    if (const auto* box = std::get_if<BoxGrid>(&g)) return box->cell_volume() * box->size();
    return std::get<RadialMesh>(g).ball_volume();
}

/// Quadrature weight of sample i.
inline double weight(const Geometry& g, std::size_t i) {
    if (const auto* box = std::get_if<BoxGrid>(&g)) return box->cell_volume();
    return std::get<RadialMesh>(g).volume(static_cast<int>(i));
}

/// Nonnegative density samples on a box grid or a radial mesh.
struct Field {
    Geometry geometry;
    std::vector<double> values;

    Field() = default;
    Field(Geometry g, std::vector<double> v) : geometry(std::move(g)), values(std::move(v)) {
        if (values.size() != point_count(geometry)) {
            throw Error(ErrorCode::InputMismatch, "field size does not match its geometry");
        }
    }
    explicit Field(Geometry g) : geometry(std::move(g)), values(point_count(geometry), 0.0) {}

    std::size_t size() const { return values.size(); }
    bool is_radial() const { return std::holds_alternative<RadialMesh>(geometry); }
    const RadialMesh& radial() const { return std::get<RadialMesh>(geometry); }
    const BoxGrid& box() const { return std::get<BoxGrid>(geometry); }
};

/// Sum of w_i f(rho_i) over the geometry's quadrature.
template <class F>
double integrate(const Field& rho, F&& f) {
    double sum = 0.0;
    if (const auto* box = std::get_if<BoxGrid>(&rho.geometry)) {
        for (double v : rho.values) sum += f(v);
        return sum * box->cell_volume();
    }
    const auto& vol = std::get<RadialMesh>(rho.geometry).volumes();
    for (std::size_t i = 0; i < rho.values.size(); ++i) sum += vol[i] * f(rho.values[i]);
    return sum;
}

inline double total_mass(const Field& rho) {
    return integrate(rho, [](double v) { return v; });
}

/// Int rho^s. Uses 0^s = 0 for s > 0.
inline double power_integral(const Field& rho, double s) {
    return integrate(rho, [s](double v) { return v > 0.0 ? std::pow(v, s) : 0.0; });
}

}  // namespace chemolab
