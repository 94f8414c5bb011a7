#ifndef CAPSTRIP_FFT_HPP
#define CAPSTRIP_FFT_HPP

// Mixed-radix (2,3) complex FFT, enough for periodic grids with
// n = 2^a * 3^b points per axis. Plans cache the twiddle table per size;
// execution is allocation-light and bit-deterministic.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace capstrip {

using cplx = std::complex<double>;

namespace fft {

inline bool supported_size(int n) {
    if (n < 2) return false;
    while (n % 2 == 0) n /= 2;
    while (n % 3 == 0) n /= 3;
    return n == 1;
}

class Plan {
  public:
    explicit Plan(int n) : n_(n) {
        if (!supported_size(n)) throw std::invalid_argument("fft: size must be 2^a*3^b, got " + std::to_string(n));
        tw_fwd_.resize(n);
        tw_bwd_.resize(n);
        const double step = 2.0 * pi() / n;
        for (int j = 0; j < n; ++j) {
            tw_fwd_[j] = std::polar(1.0, -step * j);
            tw_bwd_[j] = std::polar(1.0, step * j);
        }
    }

    int size() const { return n_; }

    // DFT without normalization: out[k] = sum_j in[j] e^{-2pi i jk/n} (forward).
    void forward(cplx* data) const { exec(data, tw_fwd_.data()); }
    void backward(cplx* data) const { exec(data, tw_bwd_.data()); }

    static double pi() { return 3.14159265358979323846264338327950288; }

  private:
    void exec(cplx* data, const cplx* tw) const {
        std::vector<cplx> tmp(data, data + n_);
        recurse(tmp.data(), 1, data, n_, 1, tw);
    }

    // Decimation-in-time: out[k] = sum_j in[j*stride] w^{jk}, where w runs
    // over the top-level table sampled at tw_stride.
    void recurse(const cplx* in, int stride, cplx* out, int n, int tw_stride, const cplx* tw) const {
        if (n == 1) {
            out[0] = in[0];
            return;
        }
        const int r = (n % 2 == 0) ? 2 : 3;
        const int m = n / r;
        for (int q = 0; q < r; ++q)
            recurse(in + q * stride, stride * r, out + q * m, m, tw_stride * r, tw);

        if (r == 2) {
            for (int k = 0; k < m; ++k) {
                const cplx a = out[k];
                const cplx b = out[m + k] * tw[(std::size_t)k * tw_stride];
                out[k] = a + b;
                out[m + k] = a - b;
            }
        } else {
            // radix-3 butterfly; w3 = e^{+-2pi i/3} comes from the table so the
            // direction matches the twiddles.
            const cplx w3 = tw[(std::size_t)(n_ / 3)];
            const cplx w3sq = w3 * w3;
            for (int k = 0; k < m; ++k) {
                const cplx a = out[k];
                const cplx b = out[m + k] * tw[(std::size_t)k * tw_stride];
                const cplx c = out[2 * m + k] * tw[(std::size_t)(2 * k) * tw_stride];
                out[k] = a + b + c;
                out[m + k] = a + w3 * b + w3sq * c;
                out[2 * m + k] = a + w3sq * b + w3 * c;
            }
        }
    }

    int n_;
    std::vector<cplx> tw_fwd_, tw_bwd_;
};

inline const Plan& plan_for(int n) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<Plan>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

}  // namespace fft
}  // namespace capstrip

#endif
