#ifndef CAPSTRIP_GRID_HPP
#define CAPSTRIP_GRID_HPP

// Periodic computational domain in d = 1 or 2 horizontal dimensions and the
// real/spectral field types living on it, plus the spectral primitives the
// rest of the toolkit is built from: transforms, Fourier multipliers,
// Sobolev norms, gradients/divergence and 2/3-rule dealiasing.
//
// Conventions: grid nodes x_j = j*L/n; spectral coefficients are
//   c_k = (1/N) sum_j f_j e^{-i xi_k . x_j},   f_j = sum_k c_k e^{i xi_k . x_j},
// with integer frequencies k in {-n/2+1, ..., n/2} per axis and xi = 2*pi*k/L.
// The unmatched Nyquist mode k = n/2 is zeroed whenever a multiplier or
// derivative is applied so odd-order operators stay real-field-preserving.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "capstrip/fft.hpp"

namespace capstrip {

constexpr double kPi = 3.14159265358979323846264338327950288;

struct TorusGrid {
    int dim = 1;        // 1 or 2
    int n = 0;          // points per axis
    double period = 2.0 * kPi;

    TorusGrid() = default;
    TorusGrid(int d, int n_, double L = 2.0 * kPi) : dim(d), n(n_), period(L) {
        if (d != 1 && d != 2) throw std::invalid_argument("TorusGrid: dim must be 1 or 2");
        if (n_ < 8 || n_ % 2 != 0 || !fft::supported_size(n_))
            throw std::invalid_argument("TorusGrid: n must be even, >= 8 and of the form 2^a*3^b");
        if (!(L > 0.0)) throw std::invalid_argument("TorusGrid: period must be positive");
    }

    std::size_t points() const {
        std::size_t p = 1;
        for (int a = 0; a < dim; ++a) p *= (std::size_t)n;
        return p;
    }

    bool operator==(const TorusGrid& o) const { return dim == o.dim && n == o.n && period == o.period; }
    bool operator!=(const TorusGrid& o) const { return !(*this == o); }

    double spacing() const { return period / n; }
    double cell_measure() const { return dim == 1 ? spacing() : spacing() * spacing(); }

    // integer frequency for storage index j along one axis
    int freq_of_index(int j) const { return j <= n / 2 ? j : j - n; }
    int nyquist() const { return n / 2; }

    double node_coord(int j) const { return spacing() * j; }

    // frequency vector xi (padded with 0 for d=1) of flattened spectral index
    std::array<double, 2> xi(std::size_t flat) const {
        std::array<double, 2> out{0.0, 0.0};
        const double scale = 2.0 * kPi / period;
        if (dim == 1) {
            out[0] = scale * freq_of_index((int)flat);
        } else {
            out[0] = scale * freq_of_index((int)(flat / (std::size_t)n));
            out[1] = scale * freq_of_index((int)(flat % (std::size_t)n));
        }
        return out;
    }

    std::array<int, 2> ifreq(std::size_t flat) const {
        std::array<int, 2> out{0, 0};
        if (dim == 1) {
            out[0] = freq_of_index((int)flat);
        } else {
            out[0] = freq_of_index((int)(flat / (std::size_t)n));
            out[1] = freq_of_index((int)(flat % (std::size_t)n));
        }
        return out;
    }

    bool is_nyquist(std::size_t flat) const {
        auto k = ifreq(flat);
        return k[0] == nyquist() || (dim == 2 && k[1] == nyquist());
    }

    // node coordinates (padded with 0 for d=1) of flattened node index
    std::array<double, 2> node(std::size_t flat) const {
        std::array<double, 2> out{0.0, 0.0};
        if (dim == 1) {
            out[0] = node_coord((int)flat);
        } else {
            out[0] = node_coord((int)(flat / (std::size_t)n));
            out[1] = node_coord((int)(flat % (std::size_t)n));
        }
        return out;
    }
};

struct ScalarField {
    TorusGrid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0) : grid(g), v(g.points(), fill) {}
    ScalarField(const TorusGrid& g, std::vector<double> data) : grid(g), v(std::move(data)) {
        if (v.size() != g.points()) throw std::invalid_argument("ScalarField: size mismatch with grid");
    }

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

struct SpectralField {
    TorusGrid grid;
    std::vector<cplx> c;

    SpectralField() = default;
    explicit SpectralField(const TorusGrid& g) : grid(g), c(g.points(), cplx(0.0, 0.0)) {}

    std::size_t size() const { return c.size(); }
};

// ---------------------------------------------------------------------------
// transforms

namespace detail {

inline void transform_axes(std::vector<cplx>& data, const TorusGrid& g, bool forward) {
    const auto& plan = fft::plan_for(g.n);
    if (g.dim == 1) {
        forward ? plan.forward(data.data()) : plan.backward(data.data());
        return;
    }
    const int n = g.n;
    // second axis: contiguous rows
    for (int r = 0; r < n; ++r)
        forward ? plan.forward(data.data() + (std::size_t)r * n) : plan.backward(data.data() + (std::size_t)r * n);
    // first axis: strided columns
    std::vector<cplx> col(n);
    for (int cidx = 0; cidx < n; ++cidx) {
        for (int r = 0; r < n; ++r) col[r] = data[(std::size_t)r * n + cidx];
        forward ? plan.forward(col.data()) : plan.backward(col.data());
        for (int r = 0; r < n; ++r) data[(std::size_t)r * n + cidx] = col[r];
    }
}

inline void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

}  // namespace detail

inline SpectralField forward_transform(const ScalarField& f) {
    SpectralField out(f.grid);
    const std::size_t N = f.size();
    for (std::size_t i = 0; i < N; ++i) out.c[i] = cplx(f.v[i], 0.0);
    detail::transform_axes(out.c, f.grid, true);
    const double inv = 1.0 / (double)N;
    for (auto& z : out.c) z *= inv;
    return out;
}

inline ScalarField inverse_transform(const SpectralField& F) {
    std::vector<cplx> work = F.c;
    detail::transform_axes(work, F.grid, false);
    ScalarField out(F.grid);
    for (std::size_t i = 0; i < work.size(); ++i) out.v[i] = work[i].real();
    return out;
}

// ---------------------------------------------------------------------------
// multipliers and norms

// Coefficient-wise product in spectral space. The multiplier is sampled on the
// frequency lattice; the Nyquist mode is always zeroed and the result is real
// whenever m(-xi) = conj(m(xi)).
inline ScalarField fourier_multiplier(const std::function<cplx(const std::array<double, 2>&)>& m,
                                      const ScalarField& f) {
    SpectralField F = forward_transform(f);
    const TorusGrid& g = f.grid;
    for (std::size_t i = 0; i < F.size(); ++i) {
        if (g.is_nyquist(i)) {
            F.c[i] = 0.0;
            continue;
        }
        cplx mv = m(g.xi(i));
        if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag()))
            throw std::invalid_argument("fourier_multiplier: non-finite multiplier value");
        F.c[i] *= mv;
    }
    return inverse_transform(F);
}

inline double sobolev_norm(const ScalarField& f, double s) {
    SpectralField F = forward_transform(f);
    const TorusGrid& g = f.grid;
    const double measure = std::pow(g.period, g.dim);
    double acc = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) {
        auto xi = g.xi(i);
        const double w = std::pow(1.0 + xi[0] * xi[0] + xi[1] * xi[1], s);
        acc += w * std::norm(F.c[i]);
    }
    return std::sqrt(measure * acc);
}

inline double inner(const ScalarField& f, const ScalarField& g) {
    if (f.grid != g.grid) throw std::invalid_argument("inner: grid mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f.v[i] * g.v[i];
    return acc * f.grid.cell_measure();
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

inline double max_norm(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::fabs(x));
    return m;
}

inline double mean(const ScalarField& f) {
    double acc = 0.0;
    for (double x : f.v) acc += x;
    return acc / (double)f.size();
}

// ---------------------------------------------------------------------------
// derivatives

inline ScalarField derivative(const ScalarField& f, int axis) {
    if (axis < 0 || axis >= f.grid.dim) throw std::invalid_argument("derivative: bad axis");
    return fourier_multiplier([axis](const std::array<double, 2>& xi) { return cplx(0.0, xi[axis]); }, f);
}

inline std::vector<ScalarField> gradient(const ScalarField& f) {
    std::vector<ScalarField> out;
    out.reserve(f.grid.dim);
    for (int a = 0; a < f.grid.dim; ++a) out.push_back(derivative(f, a));
    return out;
}

inline ScalarField divergence(const std::vector<ScalarField>& w) {
    if (w.empty()) throw std::invalid_argument("divergence: empty vector field");
    ScalarField out(w[0].grid);
    for (int a = 0; a < w[0].grid.dim; ++a) {
        ScalarField da = derivative(w[a], a);
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += da.v[i];
    }
    return out;
}

inline ScalarField laplacian(const ScalarField& f) {
    return fourier_multiplier(
        [](const std::array<double, 2>& xi) { return cplx(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0); }, f);
}

// 2/3-rule dealiasing: zero all modes with |k| > floor(n/3) on any axis.
inline int dealias_cutoff(const TorusGrid& g) { return g.n / 3; }

inline ScalarField dealias(const ScalarField& f) {
    SpectralField F = forward_transform(f);
    const int cut = dealias_cutoff(f.grid);
    for (std::size_t i = 0; i < F.size(); ++i) {
        auto k = f.grid.ifreq(i);
        if (std::abs(k[0]) > cut || std::abs(k[1]) > cut) F.c[i] = 0.0;
    }
    return inverse_transform(F);
}

// zero the spatial mean
inline ScalarField remove_mean(const ScalarField& f) {
    ScalarField out = f;
    const double m = mean(f);
    for (auto& x : out.v) x -= m;
    return out;
}

// pointwise helpers (field algebra used all over the operator modules)
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b.v[i];
    return out;
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= b.v[i];
    return out;
}
inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b.v[i];
    return out;
}
inline ScalarField operator*(double s, const ScalarField& a) {
    ScalarField out = a;
    for (auto& x : out.v) x *= s;
    return out;
}

inline ScalarField map_field(const ScalarField& a, const std::function<double(double)>& fn) {
    ScalarField out = a;
    for (auto& x : out.v) x = fn(x);
    return out;
}

// sample a function of the node coordinates
inline ScalarField sample(const TorusGrid& g, const std::function<double(const std::array<double, 2>&)>& fn) {
    ScalarField out(g);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] = fn(g.node(i));
    return out;
}

}  // namespace capstrip

#endif
