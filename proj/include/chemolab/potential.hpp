#pragma once

// Newtonian interaction field c = U * rho with U(x) = |x|^{2-n}/(2-n), which
// satisfies Lap c = n alpha_n rho.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <fftw3.h>

#include "chemolab/error.hpp"
#include "chemolab/geometry.hpp"

namespace chemolab {

/// U(|x|) = |x|^{2-n} / (2-n); strictly negative away from the origin.
inline double potential_value(double x_norm, int n) {
    if (n < 3) throw Error(ErrorCode::DimensionTooLow, "n must be >= 3, got " + std::to_string(n));
    if (!(x_norm > 0.0)) throw Error(ErrorCode::SingularityAtOrigin, "U is singular at |x| = 0");
    return std::pow(x_norm, 2.0 - n) / (2.0 - n);
}

/// Seven-point periodic Laplacian on a box grid.
inline std::vector<double> box_laplacian(const BoxGrid& g, std::span<const double> u) {
    const int N = g.points_per_axis;
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    std::vector<double> out(u.size());
    auto wrap = [N](int i) { return (i + N) % N; };
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            for (int k = 0; k < N; ++k) {
                const double centre = u[g.index(i, j, k)];
                const double sum = u[g.index(wrap(i + 1), j, k)] + u[g.index(wrap(i - 1), j, k)] +
                                   u[g.index(i, wrap(j + 1), k)] + u[g.index(i, wrap(j - 1), k)] +
                                   u[g.index(i, j, wrap(k + 1))] + u[g.index(i, j, wrap(k - 1))];
                out[g.index(i, j, k)] = (sum - 6.0 * centre) * inv_h2;
            }
        }
    }
    return out;
}

namespace detail {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

struct FftwPlanDestroy {
    void operator()(fftw_plan p) const {
        if (p != nullptr) fftw_destroy_plan(p);
    }
};
using FftwPlan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;

// Plan creation in FFTW is not thread safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// Real-to-complex transform pair for an N^3 periodic grid.
class PeriodicFft3 {
public:
    explicit PeriodicFft3(int N)
        : N_(N),
          real_(static_cast<double*>(fftw_malloc(sizeof(double) * total()))),
          spec_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spectral_size()))) {
        std::lock_guard lock(fftw_planner_mutex());
        forward_.reset(fftw_plan_dft_r2c_3d(N, N, N, real_.get(), spec_.get(), FFTW_ESTIMATE));
        backward_.reset(fftw_plan_dft_c2r_3d(N, N, N, spec_.get(), real_.get(), FFTW_ESTIMATE));
    }

    std::size_t total() const { return static_cast<std::size_t>(N_) * N_ * N_; }
    std::size_t spectral_size() const { return static_cast<std::size_t>(N_) * N_ * (N_ / 2 + 1); }
    int size() const { return N_; }

    double* real() { return real_.get(); }
    fftw_complex* spectrum() { return spec_.get(); }

    void forward() { fftw_execute(forward_.get()); }
    /// Inverse transform including the 1/N^3 normalisation.
    void backward() {
        fftw_execute(backward_.get());
        const double scale = 1.0 / static_cast<double>(total());
        for (std::size_t i = 0; i < total(); ++i) real_.get()[i] *= scale;
    }

    /// Signed integer wavenumber for FFT index i.
    int wavenumber(int i) const { return i <= N_ / 2 ? i : i - N_; }

private:
    int N_;
    std::unique_ptr<double, FftwFree> real_;
    std::unique_ptr<fftw_complex, FftwFree> spec_;
    FftwPlan forward_;
    FftwPlan backward_;
};

/// Symbol of the 1-D second difference, (2 cos(theta) - 2)/h^2.
inline double second_difference_symbol(int wavenumber, int N, double h) {
    const double theta = 2.0 * std::numbers::pi * wavenumber / N;
    return (2.0 * std::cos(theta) - 2.0) / (h * h);
}

}  // namespace detail

/// Solves (1 - shift * Lap_h) u = f on the periodic box with the seven-point
/// symbol. shift = 0 returns f.
inline std::vector<double> box_helmholtz_solve(const BoxGrid& g, std::span<const double> f, double shift) {
    validate(g);
    const int N = g.points_per_axis;
    const double h = g.spacing();
    detail::PeriodicFft3 fft(N);
    std::copy(f.begin(), f.end(), fft.real());
    fft.forward();
    const int half = N / 2 + 1;
    for (int i = 0; i < N; ++i) {
        const double si = detail::second_difference_symbol(fft.wavenumber(i), N, h);
        for (int j = 0; j < N; ++j) {
            const double sj = detail::second_difference_symbol(fft.wavenumber(j), N, h);
            for (int k = 0; k < half; ++k) {
                const double sk = detail::second_difference_symbol(k, N, h);
                const double factor = 1.0 / (1.0 - shift * (si + sj + sk));
                auto& c = fft.spectrum()[(static_cast<std::size_t>(i) * N + j) * half + k];
                c[0] *= factor;
                c[1] *= factor;
            }
        }
    }
    fft.backward();
    return {fft.real(), fft.real() + fft.total()};
}

/// Interaction field on the periodic box. The periodic problem only admits a
/// mean-free source, so c solves Lap_h c = n alpha_n (rho - mean) with zero
/// mean; mean_density records the neutralising background that implies.
struct BoxInteraction {
    std::vector<double> c;
    std::array<std::vector<double>, 3> gradient;  // centred differences at the samples
    double mean_density = 0.0;
};

inline BoxInteraction interaction_field_box(const Field& rho) {
    const auto* grid = std::get_if<BoxGrid>(&rho.geometry);
    if (grid == nullptr) throw Error(ErrorCode::UnsupportedGrid, "interaction_field_box needs a BoxGrid");
    validate(*grid);
    const BoxGrid& g = *grid;
    const int N = g.points_per_axis;
    const double h = g.spacing();
    const double coupling = g.n * unit_ball_volume(g.n);

    BoxInteraction out;
    detail::PeriodicFft3 fft(N);
    double sum = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        fft.real()[i] = rho.values[i];
        sum += rho.values[i];
    }
    out.mean_density = sum / static_cast<double>(rho.size());
    fft.forward();
    const int half = N / 2 + 1;
    for (int i = 0; i < N; ++i) {
        const double si = detail::second_difference_symbol(fft.wavenumber(i), N, h);
        for (int j = 0; j < N; ++j) {
            const double sj = detail::second_difference_symbol(fft.wavenumber(j), N, h);
            for (int k = 0; k < half; ++k) {
                const double sk = detail::second_difference_symbol(k, N, h);
                auto& c = fft.spectrum()[(static_cast<std::size_t>(i) * N + j) * half + k];
                if (i == 0 && j == 0 && k == 0) {
                    c[0] = 0.0;
                    c[1] = 0.0;
                    continue;
                }
                const double factor = coupling / (si + sj + sk);
                c[0] *= factor;
                c[1] *= factor;
            }
        }
    }
    fft.backward();
    out.c.assign(fft.real(), fft.real() + fft.total());

    // Centred differences, i.e. the spectral multiplier i sin(k h)/h.
    auto wrap = [N](int i) { return (i + N) % N; };
    const double inv_2h = 0.5 / h;
    for (auto& comp : out.gradient) comp.resize(out.c.size());
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            for (int k = 0; k < N; ++k) {
                const std::size_t idx = g.index(i, j, k);
                out.gradient[0][idx] = (out.c[g.index(wrap(i + 1), j, k)] - out.c[g.index(wrap(i - 1), j, k)]) * inv_2h;
                out.gradient[1][idx] = (out.c[g.index(i, wrap(j + 1), k)] - out.c[g.index(i, wrap(j - 1), k)]) * inv_2h;
                out.gradient[2][idx] = (out.c[g.index(i, j, wrap(k + 1))] - out.c[g.index(i, j, wrap(k - 1))]) * inv_2h;
            }
        }
    }
    return out;
}

/// Mass enclosed by each outer cell face, M(r_{i+1/2}).
inline std::vector<double> enclosed_mass_at_faces(const Field& rho) {
    const RadialMesh& mesh = rho.radial();
    std::vector<double> mass(rho.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        acc += mesh.volume(static_cast<int>(i)) * rho.values[i];
        mass[i] = acc;
    }
    return mass;
}

/// d c / d r at the outer face of every cell: (M(r) - rho_bg alpha_n r^n) / r^{n-1}.
/// rho_bg = 0 is the free-space field; a positive background reproduces the
/// neutralised field of the periodic box.
inline std::vector<double> interaction_gradient_faces(const Field& rho, double background = 0.0) {
    const RadialMesh& mesh = rho.radial();
    const int n = mesh.n();
    std::vector<double> g = enclosed_mass_at_faces(rho);
    for (int i = 0; i < mesh.cells(); ++i) {
        const double r = mesh.outer_face(i);
        auto& gi = g[static_cast<std::size_t>(i)];
        gi = (gi - background * mesh.unit_ball() * std::pow(r, n)) / std::pow(r, n - 1);
    }
    return g;
}

/// d c / d r = M(r)/r^{n-1} at the cell centres, with M computed exactly for
/// the piecewise-constant density.
inline std::vector<double> interaction_gradient_radial(const Field& rho, double background = 0.0) {
    if (!rho.is_radial()) throw Error(ErrorCode::UnsupportedGrid, "interaction_gradient_radial needs a RadialMesh");
    const RadialMesh& mesh = rho.radial();
    const int n = mesh.n();
    const double dr = mesh.spacing();
    std::vector<double> g(rho.size());
    double inner = 0.0;
    for (int i = 0; i < mesh.cells(); ++i) {
        const double r = mesh.center(i);
        const double part = mesh.unit_ball() * (std::pow(r, n) - std::pow(i * dr, n));
        const double enclosed = inner + rho.values[static_cast<std::size_t>(i)] * part;
        g[static_cast<std::size_t>(i)] =
            (enclosed - background * mesh.unit_ball() * std::pow(r, n)) / std::pow(r, n - 1);
        inner += rho.values[static_cast<std::size_t>(i)] * mesh.volume(i);
    }
    return g;
}

}  // namespace chemolab
