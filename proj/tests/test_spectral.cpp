#include <gtest/gtest.h>

#include "capstrip/grid.hpp"
#include "capstrip/symbol.hpp"
#include "test_util.hpp"

using namespace capstrip;

namespace {

// direct O(n^2) DFT oracle for the FFT kernels
std::vector<cplx> dft_direct(const std::vector<cplx>& in, int sign) {
    const int n = (int)in.size();
    std::vector<cplx> out(n, cplx(0, 0));
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            out[k] += in[j] * std::polar(1.0, sign * 2.0 * kPi * j * k / n);
    return out;
}

}  // namespace

TEST(Fft, MatchesDirectDftMixedRadix) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int n : {8, 12, 16, 24, 48, 96, 128}) {
        std::vector<cplx> data(n);
        for (auto& z : data) z = cplx(unif(rng), unif(rng));
        std::vector<cplx> want = dft_direct(data, -1);
        std::vector<cplx> got = data;
        fft::plan_for(n).forward(got.data());
        for (int k = 0; k < n; ++k) EXPECT_NEAR(std::abs(got[k] - want[k]), 0.0, 1e-11) << "n=" << n;
        // backward undoes forward up to n
        fft::plan_for(n).backward(got.data());
        for (int k = 0; k < n; ++k) EXPECT_NEAR(std::abs(got[k] / (double)n - data[k]), 0.0, 1e-12);
    }
}

TEST(Fft, RejectsUnsupportedSizes) {
    EXPECT_FALSE(fft::supported_size(10));
    EXPECT_FALSE(fft::supported_size(7));
    EXPECT_TRUE(fft::supported_size(48));
    EXPECT_THROW(fft::Plan(20), std::invalid_argument);
}

TEST(Transforms, ZeroField) {
    TorusGrid g(1, 32);
    SpectralField F = forward_transform(ScalarField(g, 0.0));
    for (auto& z : F.c) EXPECT_EQ(std::abs(z), 0.0);
}

TEST(Transforms, CosineCoefficients) {
    TorusGrid g(1, 64);
    ScalarField f = sample(g, [](const std::array<double, 2>& x) { return std::cos(x[0]); });
    SpectralField F = forward_transform(f);
    for (std::size_t q = 0; q < F.size(); ++q) {
        auto k = g.ifreq(q);
        if (std::abs(k[0]) == 1)
            EXPECT_NEAR(std::abs(F.c[q] - cplx(0.5, 0.0)), 0.0, 1e-13);
        else
            EXPECT_NEAR(std::abs(F.c[q]), 0.0, 1e-13);
    }
}

TEST(Transforms, RoundTripRandom) {
    std::mt19937_64 rng(11);
    for (int dim : {1, 2}) {
        TorusGrid g(dim, dim == 1 ? 128 : 24);
        ScalarField f = testutil::random_band_limited(g, g.n / 2 - 1, rng);
        ScalarField back = inverse_transform(forward_transform(f));
        EXPECT_LT(testutil::rel_err(back, f), 1e-12);
    }
}

TEST(Transforms, HermitianSymmetryOfRealField) {
    std::mt19937_64 rng(3);
    TorusGrid g(2, 12);
    ScalarField f = testutil::random_band_limited(g, 5, rng);
    SpectralField F = forward_transform(f);
    for (std::size_t q = 0; q < F.size(); ++q) {
        auto k = g.ifreq(q);
        if (k[0] == g.nyquist() || k[1] == g.nyquist()) continue;
        // locate -k
        int q0 = (-k[0] % g.n + g.n) % g.n;
        int q1 = (-k[1] % g.n + g.n) % g.n;
        std::size_t qq = (std::size_t)q0 * g.n + q1;
        EXPECT_NEAR(std::abs(F.c[qq] - std::conj(F.c[q])), 0.0, 1e-13);
    }
}

TEST(Multiplier, IdentityAndLambdaAndDerivative) {
    TorusGrid g(1, 64);
    ScalarField f = sample(g, [](const std::array<double, 2>& x) { return std::cos(x[0]); });
    ScalarField same = fourier_multiplier([](const XiVec&) { return cplx(1.0, 0.0); }, f);
    EXPECT_LT(testutil::rel_err(same, f), 1e-12);

    ScalarField lam = fourier_multiplier(
        [](const XiVec& xi) { return cplx(std::sqrt(1.0 + xi[0] * xi[0] + xi[1] * xi[1]), 0.0); }, f);
    ScalarField want = std::sqrt(2.0) * f;
    EXPECT_LT(testutil::rel_err(lam, want), 1e-12);

    ScalarField s = sample(g, [](const std::array<double, 2>& x) { return std::sin(x[0]); });
    ScalarField ds = fourier_multiplier([](const XiVec& xi) { return cplx(0.0, xi[0]); }, s);
    ScalarField c = sample(g, [](const std::array<double, 2>& x) { return std::cos(x[0]); });
    EXPECT_LT(testutil::rel_err(ds, c), 1e-12);
}

TEST(Multiplier, NonFiniteRejected) {
    TorusGrid g(1, 16);
    ScalarField f(g, 1.0);
    EXPECT_THROW(fourier_multiplier([](const XiVec&) { return cplx(std::nan(""), 0.0); }, f),
                 std::invalid_argument);
}

TEST(Multiplier, NyquistZeroed) {
    TorusGrid g(1, 16);
    // put content on the Nyquist mode
    ScalarField f = sample(g, [&](const std::array<double, 2>& x) { return std::cos(8.0 * x[0]); });
    ScalarField out = fourier_multiplier([](const XiVec&) { return cplx(1.0, 0.0); }, f);
    EXPECT_LT(max_norm(out), 1e-13);
}

TEST(SobolevNorm, CosineValues) {
    TorusGrid g(1, 64);
    ScalarField f = sample(g, [](const std::array<double, 2>& x) { return std::cos(x[0]); });
    EXPECT_NEAR(sobolev_norm(f, 0.0), std::sqrt(kPi), 1e-12);
    EXPECT_NEAR(sobolev_norm(f, 1.0), std::sqrt(2.0 * kPi), 1e-12);
    EXPECT_EQ(sobolev_norm(ScalarField(g, 0.0), 2.5), 0.0);
}

TEST(SobolevNorm, MonotoneInSAndParseval) {
    std::mt19937_64 rng(5);
    TorusGrid g(1, 64);
    ScalarField f = testutil::random_band_limited(g, 20, rng);
    double prev = sobolev_norm(f, -1.0);
    for (double s : {-0.5, 0.0, 0.5, 1.0, 2.0}) {
        double cur = sobolev_norm(f, s);
        EXPECT_GE(cur, prev - 1e-14);
        prev = cur;
    }
    const double l2sq = inner(f, f);
    const double h0sq = std::pow(sobolev_norm(f, 0.0), 2);
    EXPECT_NEAR(h0sq, l2sq, 1e-12 * std::max(1.0, l2sq));
}

TEST(Derivatives, TrigIdentities) {
    TorusGrid g(1, 64);
    ScalarField c = sample(g, [](const std::array<double, 2>& x) { return std::cos(x[0]); });
    ScalarField ms = sample(g, [](const std::array<double, 2>& x) { return -std::sin(x[0]); });
    EXPECT_LT(testutil::rel_err(gradient(c)[0], ms), 1e-12);
    ScalarField lap = divergence(gradient(c));
    ScalarField mc = -1.0 * c;
    EXPECT_LT(testutil::rel_err(lap, mc), 1e-12);
    EXPECT_LT(max_norm(gradient(ScalarField(g, 3.7))[0]), 1e-13);
}

TEST(Derivatives, DivGradIsSpectralLaplacian2d) {
    std::mt19937_64 rng(9);
    TorusGrid g(2, 16);
    ScalarField f = testutil::random_band_limited(g, 5, rng);
    EXPECT_LT(testutil::rel_err(divergence(gradient(f)), laplacian(f)), 1e-11);
}

TEST(Dealias, CutsTopThird) {
    TorusGrid g(1, 48);
    ScalarField hi = sample(g, [](const std::array<double, 2>& x) { return std::cos(20.0 * x[0]); });
    EXPECT_LT(max_norm(dealias(hi)), 1e-13);
    ScalarField lo = sample(g, [](const std::array<double, 2>& x) { return std::cos(5.0 * x[0]); });
    EXPECT_LT(testutil::rel_err(dealias(lo), lo), 1e-12);
}

TEST(Quantize, IdentityDerivativeAndAbsXi) {
    TorusGrid g(1, 64);
    std::mt19937_64 rng(13);
    ScalarField f = testutil::random_band_limited(g, 20, rng);

    Symbol ident = multiplier_symbol(g, 0.0, [](const XiVec&) { return cplx(1.0, 0.0); });
    EXPECT_LT(testutil::rel_err(quantize(ident, f), f), 1e-12);

    Symbol dsym = multiplier_symbol(g, 1.0, [](const XiVec& xi) { return cplx(0.0, xi[0]); });
    EXPECT_LT(testutil::rel_err(quantize(dsym, f), derivative(f, 0)), 1e-12);

    Symbol absxi = multiplier_symbol(g, 1.0, [](const XiVec& xi) {
        return cplx(std::hypot(xi[0], xi[1]), 0.0);
    });
    ScalarField c2 = sample(g, [](const std::array<double, 2>& x) { return std::cos(2.0 * x[0]); });
    EXPECT_LT(testutil::rel_err(quantize(absxi, c2), 2.0 * c2), 1e-12);
}

TEST(Quantize, XIndependentMatchesMultiplier) {
    std::mt19937_64 rng(17);
    TorusGrid g(2, 12);
    ScalarField f = testutil::random_band_limited(g, 5, rng);
    auto m = [](const XiVec& xi) { return cplx(std::cos(xi[0]) + xi[1] * xi[1], 0.0); };
    Symbol s = multiplier_symbol(g, 2.0, m);
    ScalarField a = quantize(s, f);
    ScalarField b = fourier_multiplier(m, f);
    double scale = std::max(1.0, max_norm(b));
    EXPECT_LT(max_norm(a - b) / scale, 1e-12);
}

TEST(Quantize, LinearityInFieldAndSymbol) {
    std::mt19937_64 rng(19);
    TorusGrid g(1, 48);
    ScalarField f1 = testutil::random_band_limited(g, 10, rng);
    ScalarField f2 = testutil::random_band_limited(g, 10, rng);
    ScalarField m = testutil::random_band_limited(g, 3, rng);

    Symbol s;
    s.grid = g;
    s.order = 1.0;
    auto mv = std::make_shared<std::vector<double>>(m.v);
    s.eval = [mv](std::size_t node, const XiVec& xi) { return cplx((*mv)[node] * xi[0] * xi[0], xi[0]); };

    ScalarField lhs = quantize(s, f1 + f2);
    ScalarField rhs = quantize(s, f1) + quantize(s, f2);
    EXPECT_LT(max_norm(lhs - rhs), 1e-11 * std::max(1.0, max_norm(rhs)));

    Symbol ident = multiplier_symbol(g, 0.0, [](const XiVec&) { return cplx(1.0, 0.0); });
    // Op(s + ident) = Op(s) + Op(ident) pointwise
    Symbol sum;
    sum.grid = g;
    sum.order = 1.0;
    sum.eval = [mv](std::size_t node, const XiVec& xi) {
        return cplx((*mv)[node] * xi[0] * xi[0] + 1.0, xi[0]);
    };
    ScalarField l2 = quantize(sum, f1);
    ScalarField r2 = quantize(s, f1) + quantize(ident, f1);
    EXPECT_LT(max_norm(l2 - r2), 1e-11 * std::max(1.0, max_norm(r2)));
}

TEST(Quantize, FlagsNonHermitianSymbol) {
    TorusGrid g(1, 16);
    ScalarField f(g, 1.0);
    // sigma(x,xi) = i (not Hermitian in xi) -> flagged, imaginary output recorded
    Symbol s = multiplier_symbol(g, 0.0, [](const XiVec&) { return cplx(0.0, 1.0); });
    auto res = quantize_full(s, f);
    EXPECT_FALSE(res.real_output);
    EXPECT_GT(res.max_imag, 0.5);
}

TEST(Quantize, GridMismatchRejected) {
    TorusGrid g(1, 16), g2(1, 32);
    Symbol s = multiplier_symbol(g, 0.0, [](const XiVec&) { return cplx(1.0, 0.0); });
    EXPECT_THROW(quantize(s, ScalarField(g2)), std::invalid_argument);
}

TEST(SharpProduct, OrderZeroIsPointwiseProduct) {
    std::mt19937_64 rng(23);
    TorusGrid g(1, 32);
    ScalarField m = testutil::random_band_limited(g, 4, rng);
    Symbol sm = multiplication_symbol(m);
    Symbol dsym = multiplier_symbol(
        g, 1.0, [](const XiVec& xi) { return cplx(0.0, xi[0]); },
        [](const MultiIndex& b, const XiVec&) {
            return (b[0] == 1 && b[1] == 0) ? cplx(0.0, 1.0) : cplx(0.0, 0.0);
        });
    Symbol prod = sharp_product(dsym, sm, 0);
    for (std::size_t q = 0; q < g.points(); q += 5) {
        XiVec xi = g.xi(q);
        for (std::size_t node = 0; node < g.points(); node += 7) {
            cplx want = cplx(0.0, xi[0]) * m.v[node];
            EXPECT_NEAR(std::abs(prod(node, xi) - want), 0.0, 1e-12);
        }
    }
}

TEST(SharpProduct, LeibnizAtOrderOne) {
    std::mt19937_64 rng(29);
    TorusGrid g(1, 32);
    ScalarField m = testutil::random_band_limited(g, 4, rng);
    ScalarField dm = derivative(m, 0);
    Symbol sm = multiplication_symbol(m);
    Symbol dsym = multiplier_symbol(
        g, 1.0, [](const XiVec& xi) { return cplx(0.0, xi[0]); },
        [](const MultiIndex& b, const XiVec&) {
            return (b[0] == 1 && b[1] == 0) ? cplx(0.0, 1.0) : cplx(0.0, 0.0);
        });
    // i xi # m = i xi m(x) + dm/dx
    Symbol prod = sharp_product(dsym, sm, 1);
    for (std::size_t q = 1; q < g.points(); q += 3) {
        XiVec xi = g.xi(q);
        for (std::size_t node = 0; node < g.points(); node += 5) {
            cplx want = cplx(0.0, xi[0]) * m.v[node] + dm.v[node];
            EXPECT_NEAR(std::abs(prod(node, xi) - want), 0.0, 1e-10);
        }
    }
    // bracket {i xi, m}_1 = dm/dx
    Symbol br = poisson_bracket(dsym, sm, 1);
    for (std::size_t q = 1; q < g.points(); q += 3) {
        XiVec xi = g.xi(q);
        for (std::size_t node = 0; node < g.points(); node += 5)
            EXPECT_NEAR(std::abs(br(node, xi) - cplx(dm.v[node], 0.0)), 0.0, 1e-10);
    }
}

TEST(PoissonBracket, AntisymmetricAndSelfVanishing) {
    std::mt19937_64 rng(31);
    TorusGrid g(1, 24);
    ScalarField m = testutil::random_band_limited(g, 3, rng);
    auto mv = std::make_shared<std::vector<double>>(m.v);
    Symbol s;
    s.grid = g;
    s.order = 2.0;
    s.n_reg = 1;
    s.eval = [mv](std::size_t node, const XiVec& xi) {
        return cplx(xi[0] * xi[0] * (1.0 + 0.3 * (*mv)[node]), 0.0);
    };
    s.dxi = [mv](const MultiIndex& b, std::size_t node, const XiVec& xi) {
        return (b[0] == 1) ? cplx(2.0 * xi[0] * (1.0 + 0.3 * (*mv)[node]), 0.0) : cplx(0.0, 0.0);
    };
    Symbol self = poisson_bracket(s, s, 1);
    double worst = 0.0;
    for (std::size_t q = 0; q < g.points(); ++q)
        for (std::size_t node = 0; node < g.points(); ++node)
            worst = std::max(worst, std::abs(self(node, g.xi(q))));
    EXPECT_LT(worst, 1e-13);

    // x-independent pair brackets to zero
    Symbol a = multiplier_symbol(
        g, 1.0, [](const XiVec& xi) { return cplx(xi[0], 0.0); },
        [](const MultiIndex& b, const XiVec&) { return b[0] == 1 ? cplx(1.0, 0.0) : cplx(0.0, 0.0); });
    Symbol b = multiplier_symbol(
        g, 2.0, [](const XiVec& xi) { return cplx(xi[0] * xi[0], 0.0); },
        [](const MultiIndex& bb, const XiVec& xi) {
            return bb[0] == 1 ? cplx(2.0 * xi[0], 0.0) : cplx(0.0, 0.0);
        });
    Symbol br = poisson_bracket(a, b, 1);
    worst = 0.0;
    double scale = 0.0;
    for (std::size_t q = 0; q < g.points(); ++q)
        for (std::size_t node = 0; node < g.points(); ++node) {
            XiVec xi = g.xi(q);
            worst = std::max(worst, std::abs(br(node, xi)));
            scale = std::max(scale, std::abs(a(node, xi) * b(node, xi)));
        }
    // zero up to FFT roundoff on the (numerically constant) x-columns
    EXPECT_LT(worst, 1e-13 * (1.0 + scale));
}

TEST(SharpProduct, MissingDerivativesRejected) {
    TorusGrid g(1, 16);
    Symbol noderiv = multiplier_symbol(g, 1.0, [](const XiVec& xi) { return cplx(xi[0], 0.0); });
    Symbol other = multiplication_symbol(ScalarField(g, 1.0));
    EXPECT_THROW(sharp_product(noderiv, other, 1), std::invalid_argument);
}

TEST(SymbolChecks, DerivativeSanityOnSmoothSymbol) {
    TorusGrid g(1, 32);
    Symbol s = multiplier_symbol(
        g, 2.0, [](const XiVec& xi) { return cplx(xi[0] * xi[0], 0.0); },
        [](const MultiIndex& b, const XiVec& xi) {
            return b[0] == 1 ? cplx(2.0 * xi[0], 0.0) : cplx(0.0, 0.0);
        });
    const double h = 2.0 * kPi / g.period;
    EXPECT_LE(symbol_derivative_check(s), 10.0 * h * h);
}
