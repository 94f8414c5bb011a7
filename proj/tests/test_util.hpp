#ifndef CAPSTRIP_TEST_UTIL_HPP
#define CAPSTRIP_TEST_UTIL_HPP

#include <random>

#include "capstrip/grid.hpp"

namespace capstrip::testutil {

// random band-limited real field: modes |k| <= kmax with 1/(1+|k|^2) decay
inline ScalarField random_band_limited(const TorusGrid& g, int kmax, std::mt19937_64& rng,
                                       bool zero_mean = false) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    SpectralField F(g);
    for (std::size_t q = 0; q < F.size(); ++q) {
        auto k = g.ifreq(q);
        if (std::abs(k[0]) > kmax || std::abs(k[1]) > kmax) continue;
        if (g.is_nyquist(q)) continue;
        if (zero_mean && k[0] == 0 && k[1] == 0) continue;
        const double decay = 1.0 / (1.0 + k[0] * k[0] + k[1] * k[1]);
        F.c[q] = cplx(unif(rng), unif(rng)) * decay;
    }
    ScalarField f = inverse_transform(F);  // real part of a non-Hermitian draw
    return f;
}

inline double rel_err(const ScalarField& got, const ScalarField& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num = std::max(num, std::fabs(got.v[i] - want.v[i]));
        den = std::max(den, std::fabs(want.v[i]));
    }
    return num / std::max(den, 1e-300);
}

}  // namespace capstrip::testutil

#endif
