#ifndef CAPSTRIP_SYMBOL_HPP
#define CAPSTRIP_SYMBOL_HPP

// (x, xi)-indexed symbols, Kohn-Nirenberg quantization on the frequency
// lattice, and the symbol products
//   s1 #_n s2 (x,xi) = sum_{|alpha|<=n} (-i)^{|alpha|}/alpha! d_xi^alpha s1 . d_x^alpha s2
//   {s1,s2}_n = s1 #_n s2 - s2 #_n s1.
// xi-derivatives are analytic closures supplied by symbol constructors;
// x-derivatives of the right factor are spectral.

#include <cassert>
#include <memory>

#include "capstrip/grid.hpp"

namespace capstrip {

using XiVec = std::array<double, 2>;
using MultiIndex = std::array<int, 2>;

struct Symbol {
    TorusGrid grid;
    double order = 0.0;  // declared operator order m
    int n_reg = 0;       // analytic xi-derivatives available up to this total order

    // value at (node flat index, xi)
    std::function<cplx(std::size_t, const XiVec&)> eval;
    // d_xi^beta value, |beta| <= n_reg
    std::function<cplx(const MultiIndex&, std::size_t, const XiVec&)> dxi;

    cplx operator()(std::size_t node, const XiVec& xi) const { return eval(node, xi); }
};

// x-independent symbol from a function of xi alone (derivatives optional).
inline Symbol multiplier_symbol(const TorusGrid& g, double order,
                                std::function<cplx(const XiVec&)> fn,
                                std::function<cplx(const MultiIndex&, const XiVec&)> dfn = nullptr) {
    Symbol s;
    s.grid = g;
    s.order = order;
    s.n_reg = dfn ? 2 : 0;
    s.eval = [fn](std::size_t, const XiVec& xi) { return fn(xi); };
    if (dfn)
        s.dxi = [dfn](const MultiIndex& b, std::size_t, const XiVec& xi) { return dfn(b, xi); };
    return s;
}

// pointwise multiplication operator m(x) as an order-0 symbol
inline Symbol multiplication_symbol(const ScalarField& m) {
    Symbol s;
    s.grid = m.grid;
    s.order = 0.0;
    s.n_reg = 2;
    auto data = std::make_shared<std::vector<double>>(m.v);
    s.eval = [data](std::size_t node, const XiVec&) { return cplx((*data)[node], 0.0); };
    s.dxi = [data](const MultiIndex& b, std::size_t node, const XiVec&) {
        return (b[0] == 0 && b[1] == 0) ? cplx((*data)[node], 0.0) : cplx(0.0, 0.0);
    };
    return s;
}

namespace detail {

// e^{2 pi i j q / n} tables shared per grid size
inline const std::vector<cplx>& phase_table(int n) {
    static std::mutex mtx;
    static std::map<int, std::vector<cplx>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) {
        std::vector<cplx> t((std::size_t)n * n);
        for (int j = 0; j < n; ++j)
            for (int q = 0; q < n; ++q)
                t[(std::size_t)j * n + q] = std::polar(1.0, 2.0 * kPi * ((j * (long long)q) % n) / n);
        it = cache.emplace(n, std::move(t)).first;
    }
    return it->second;
}

}  // namespace detail

// Sampled check that the symbol is Hermitian in xi (real-field-preserving):
// sigma(x,-xi) = conj(sigma(x,xi)).
inline bool symbol_hermitian_sampled(const Symbol& s, int node_samples = 4) {
    const TorusGrid& g = s.grid;
    const std::size_t NN = g.points();
    const std::size_t NF = g.points();
    const std::size_t node_step = std::max<std::size_t>(1, NN / (std::size_t)node_samples);
    for (std::size_t node = 0; node < NN; node += node_step) {
        for (std::size_t q = 0; q < NF; ++q) {
            if (g.is_nyquist(q)) continue;
            XiVec xi = g.xi(q);
            XiVec nxi{-xi[0], -xi[1]};
            cplx a = s.eval(node, xi);
            cplx b = s.eval(node, nxi);
            double scale = std::max(1.0, std::abs(a));
            if (std::abs(b - std::conj(a)) > 1e-10 * scale) return false;
        }
    }
    return true;
}

struct QuantizeResult {
    ScalarField field;            // real part of Op(sigma) f
    bool real_output = true;      // symbol passed the Hermitian sampling check
    double max_imag = 0.0;        // largest imaginary residual actually seen
};

// Exact x-dependent-coefficient quantization: Op(sigma) f (x) =
// sum_xi sigma(x,xi) fhat(xi) e^{i x.xi}, summed over the full lattice at
// every node (Nyquist dropped). O(n^{2d}) per apply, accepted at desk scale.
inline QuantizeResult quantize_full(const Symbol& s, const ScalarField& f) {
    if (s.grid != f.grid) throw std::invalid_argument("quantize: grid mismatch");
    const TorusGrid& g = f.grid;
    SpectralField F = forward_transform(f);
    const int n = g.n;
    const auto& T = detail::phase_table(n);

    QuantizeResult res;
    res.field = ScalarField(g);
    res.real_output = symbol_hermitian_sampled(s);

    const std::size_t NN = g.points();
    double max_imag = 0.0;
    if (g.dim == 1) {
        for (std::size_t j = 0; j < NN; ++j) {
            cplx acc(0.0, 0.0);
            for (std::size_t q = 0; q < NN; ++q) {
                if ((int)q == g.nyquist()) continue;
                const cplx sv = s.eval(j, g.xi(q));
                if (!std::isfinite(sv.real()) || !std::isfinite(sv.imag()))
                    throw std::invalid_argument("quantize: non-finite symbol sample");
                acc += sv * F.c[q] * T[j * (std::size_t)n + q];
            }
            res.field.v[j] = acc.real();
            max_imag = std::max(max_imag, std::fabs(acc.imag()));
        }
    } else {
        for (std::size_t node = 0; node < NN; ++node) {
            const std::size_t j0 = node / (std::size_t)n, j1 = node % (std::size_t)n;
            cplx acc(0.0, 0.0);
            for (std::size_t q = 0; q < NN; ++q) {
                if (g.is_nyquist(q)) continue;
                const std::size_t q0 = q / (std::size_t)n, q1 = q % (std::size_t)n;
                const cplx sv = s.eval(node, g.xi(q));
                if (!std::isfinite(sv.real()) || !std::isfinite(sv.imag()))
                    throw std::invalid_argument("quantize: non-finite symbol sample");
                acc += sv * F.c[q] * (T[j0 * (std::size_t)n + q0] * T[j1 * (std::size_t)n + q1]);
            }
            res.field.v[node] = acc.real();
            max_imag = std::max(max_imag, std::fabs(acc.imag()));
        }
    }
    res.max_imag = max_imag;
    return res;
}

inline ScalarField quantize(const Symbol& s, const ScalarField& f) { return quantize_full(s, f).field; }

// ---------------------------------------------------------------------------
// sharp products

namespace detail {

inline std::vector<MultiIndex> multi_indices_upto(int dim, int n) {
    std::vector<MultiIndex> out;
    if (dim == 1) {
        for (int a = 0; a <= n; ++a) out.push_back({a, 0});
    } else {
        for (int tot = 0; tot <= n; ++tot)
            for (int a0 = 0; a0 <= tot; ++a0) out.push_back({a0, tot - a0});
    }
    return out;
}

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// spectral d_x^alpha of a complex grid function (in place)
inline void x_derivative(std::vector<cplx>& col, const TorusGrid& g, const MultiIndex& alpha) {
    if (alpha[0] == 0 && alpha[1] == 0) return;
    transform_axes(col, g, true);
    const double inv = 1.0 / (double)g.points();
    for (std::size_t q = 0; q < col.size(); ++q) {
        if (g.is_nyquist(q)) {
            col[q] = 0.0;
            continue;
        }
        XiVec eta = g.xi(q);
        cplx fac(inv, 0.0);
        for (int a = 0; a < g.dim; ++a)
            for (int rep = 0; rep < alpha[a]; ++rep) fac *= cplx(0.0, eta[a]);
        col[q] *= fac;
    }
    transform_axes(col, g, false);
}

}  // namespace detail

// Dense (x, xi)-table symbol produced by the product routines.
inline Symbol dense_symbol(const TorusGrid& g, double order, std::shared_ptr<std::vector<cplx>> table) {
    Symbol s;
    s.grid = g;
    s.order = order;
    s.n_reg = 0;
    const std::size_t NF = g.points();
    auto gcopy = g;
    s.eval = [table, NF, gcopy](std::size_t node, const XiVec& xi) -> cplx {
        // locate the storage index of xi on the lattice
        const double scale = gcopy.period / (2.0 * kPi);
        int k0 = (int)std::lround(xi[0] * scale);
        int k1 = (int)std::lround(xi[1] * scale);
        int q0 = k0 >= 0 ? k0 : k0 + gcopy.n;
        std::size_t q = (std::size_t)q0;
        if (gcopy.dim == 2) {
            int q1 = k1 >= 0 ? k1 : k1 + gcopy.n;
            q = (std::size_t)q0 * gcopy.n + (std::size_t)q1;
        }
        return (*table)[node * NF + q];
    };
    return s;
}

// s1 #_n s2. Requires analytic xi-derivatives of s1 up to order n; spatial
// derivatives of s2 are spectral, column by column in xi.
inline Symbol sharp_product(const Symbol& s1, const Symbol& s2, int n) {
    if (s1.grid != s2.grid) throw std::invalid_argument("sharp_product: grid mismatch");
    if (n > s1.n_reg || !s1.dxi)
        throw std::invalid_argument("sharp_product: left factor lacks xi-derivatives up to order " + std::to_string(n));
    const TorusGrid& g = s1.grid;
    const std::size_t NN = g.points(), NF = g.points();
    auto table = std::make_shared<std::vector<cplx>>(NN * NF, cplx(0.0, 0.0));
    const auto alphas = detail::multi_indices_upto(g.dim, n);

    std::vector<cplx> col(NN), dcol(NN);
    for (std::size_t q = 0; q < NF; ++q) {
        const XiVec xi = g.xi(q);
        for (std::size_t node = 0; node < NN; ++node) col[node] = s2.eval(node, xi);
        for (const auto& alpha : alphas) {
            const int tot = alpha[0] + alpha[1];
            cplx coef(1.0, 0.0);
            for (int r = 0; r < tot; ++r) coef *= cplx(0.0, -1.0);
            coef /= detail::factorial(alpha[0]) * detail::factorial(alpha[1]);
            dcol = col;
            detail::x_derivative(dcol, g, alpha);
            for (std::size_t node = 0; node < NN; ++node) {
                const cplx d1 = (tot == 0) ? s1.eval(node, xi) : s1.dxi(alpha, node, xi);
                (*table)[node * NF + q] += coef * d1 * dcol[node];
            }
        }
    }
    return dense_symbol(g, s1.order + s2.order, table);
}

// {s1,s2}_n = s1#_n s2 - s2#_n s1, assembled in a single table.
inline Symbol poisson_bracket(const Symbol& s1, const Symbol& s2, int n) {
    if (s1.grid != s2.grid) throw std::invalid_argument("poisson_bracket: grid mismatch");
    if (n > s1.n_reg || n > s2.n_reg || !s1.dxi || !s2.dxi)
        throw std::invalid_argument("poisson_bracket: factors lack xi-derivatives up to order " + std::to_string(n));
    const TorusGrid& g = s1.grid;
    const std::size_t NN = g.points(), NF = g.points();
    auto table = std::make_shared<std::vector<cplx>>(NN * NF, cplx(0.0, 0.0));
    const auto alphas = detail::multi_indices_upto(g.dim, n);

    std::vector<cplx> col1(NN), col2(NN), dcol(NN);
    for (std::size_t q = 0; q < NF; ++q) {
        const XiVec xi = g.xi(q);
        for (std::size_t node = 0; node < NN; ++node) {
            col1[node] = s1.eval(node, xi);
            col2[node] = s2.eval(node, xi);
        }
        for (const auto& alpha : alphas) {
            const int tot = alpha[0] + alpha[1];
            cplx coef(1.0, 0.0);
            for (int r = 0; r < tot; ++r) coef *= cplx(0.0, -1.0);
            coef /= detail::factorial(alpha[0]) * detail::factorial(alpha[1]);
            // + d_xi^a s1 . d_x^a s2
            dcol = col2;
            detail::x_derivative(dcol, g, alpha);
            for (std::size_t node = 0; node < NN; ++node) {
                const cplx d1 = (tot == 0) ? col1[node] : s1.dxi(alpha, node, xi);
                (*table)[node * NF + q] += coef * d1 * dcol[node];
            }
            // - d_xi^a s2 . d_x^a s1
            dcol = col1;
            detail::x_derivative(dcol, g, alpha);
            for (std::size_t node = 0; node < NN; ++node) {
                const cplx d2 = (tot == 0) ? col2[node] : s2.dxi(alpha, node, xi);
                (*table)[node * NF + q] -= coef * d2 * dcol[node];
            }
        }
    }
    return dense_symbol(g, s1.order + s2.order, table);
}

// Streaming variant of the n=1 bracket used by the cancellation check:
// returns (max |{s1,s2}_1|, max first-order term magnitude) over the lattice
// without materializing the table. xi = 0 and Nyquist are skipped.
inline std::pair<double, double> poisson_bracket_scan1(const Symbol& s1, const Symbol& s2) {
    if (s1.grid != s2.grid) throw std::invalid_argument("poisson_bracket_scan1: grid mismatch");
    if (s1.n_reg < 1 || s2.n_reg < 1) throw std::invalid_argument("poisson_bracket_scan1: need xi-derivatives");
    const TorusGrid& g = s1.grid;
    const std::size_t NN = g.points(), NF = g.points();
    const auto alphas = detail::multi_indices_upto(g.dim, 1);

    double max_bracket = 0.0, max_scale = 0.0;
    std::vector<cplx> col1(NN), col2(NN), d1col(NN), d2col(NN);
    for (std::size_t q = 0; q < NF; ++q) {
        if (g.is_nyquist(q)) continue;
        const XiVec xi = g.xi(q);
        if (xi[0] == 0.0 && xi[1] == 0.0) continue;
        for (std::size_t node = 0; node < NN; ++node) {
            col1[node] = s1.eval(node, xi);
            col2[node] = s2.eval(node, xi);
        }
        for (const auto& alpha : alphas) {
            if (alpha[0] + alpha[1] != 1) continue;
            d2col = col2;
            detail::x_derivative(d2col, g, alpha);
            d1col = col1;
            detail::x_derivative(d1col, g, alpha);
            for (std::size_t node = 0; node < NN; ++node) {
                const cplx t12 = s1.dxi(alpha, node, xi) * d2col[node];
                const cplx t21 = s2.dxi(alpha, node, xi) * d1col[node];
                max_bracket = std::max(max_bracket, std::abs(t12 - t21));
                max_scale = std::max(max_scale, std::max(std::abs(t12), std::abs(t21)));
            }
        }
    }
    return {max_bracket, max_scale};
}

// Sampled sanity check from the Symbol invariant: declared xi-derivatives vs
// centered lattice differences at |xi| >= 1. Returns the largest deviation.
inline double symbol_derivative_check(const Symbol& s, int node_samples = 3) {
    if (s.n_reg < 1 || !s.dxi) return 0.0;
    const TorusGrid& g = s.grid;
    const double h = 2.0 * kPi / g.period;  // xi lattice spacing
    double worst = 0.0;
    const std::size_t NN = g.points();
    const std::size_t node_step = std::max<std::size_t>(1, NN / (std::size_t)node_samples);
    for (std::size_t node = 0; node < NN; node += node_step) {
        for (std::size_t q = 0; q < g.points(); ++q) {
            if (g.is_nyquist(q)) continue;
            XiVec xi = g.xi(q);
            const double r2 = xi[0] * xi[0] + xi[1] * xi[1];
            if (r2 < 1.0) continue;
            for (int a = 0; a < g.dim; ++a) {
                if (std::fabs(xi[a]) + h > h * (g.nyquist() - 1)) continue;  // stay on the lattice
                XiVec xp = xi, xm = xi;
                xp[a] += h;
                xm[a] -= h;
                const cplx fd = (s.eval(node, xp) - s.eval(node, xm)) / (2.0 * h);
                MultiIndex b{0, 0};
                b[a] = 1;
                worst = std::max(worst, std::abs(fd - s.dxi(b, node, xi)));
            }
        }
    }
    return worst;
}

}  // namespace capstrip

#endif
