#ifndef CAPSTRIP_ELLIPTIC_HPP
#define CAPSTRIP_ELLIPTIC_HPP

// Variable-coefficient boundary value problem on the strip:
//   -div(P grad u) = h,  u|_{y=0} = f,  e_{d+1}.P grad u|_{y=-1} = g.
//
// Discretization: spectral collocation in x, second-order differences on the
// uniform vertical grid, assembled in flux form from the discrete energy
//   E(u,v) = sum_cells dy * [ P1 gavg(u).gavg(v) + p.(gavg(u) dv + du gavg(v))
//                             + q du dv ],
// with gavg the mean of the spectral gradients at the two cell levels and
// du = (u_{j+1}-u_j)/dy. Rows are dE/dv_k, so the reduced operator (top row
// Dirichlet-eliminated) is symmetric positive definite by construction and
// the row at the top level is the energy-consistent conormal flux.
//
// Linear solve: preconditioned conjugate gradient; the preconditioner is the
// constant-coefficient (mean-thickness, flat) operator solved exactly per
// horizontal mode by tridiagonal factorization. A dense Cholesky fallback
// covers small systems.

#include "capstrip/geometry.hpp"

namespace capstrip {

struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& m) : std::runtime_error(m) {}
};

enum class Side { top, bottom };
enum class SolveMethod { automatic, cg, direct };

struct BvpProblem {
    CoeffField coeff;
    StripField h;           // right-hand side on the strip
    ScalarField f_top;      // Dirichlet data at y = 0
    ScalarField g_bottom;   // conormal data at y = -1
};

struct BvpSolution {
    StripField u;
    double residual = 0.0;  // relative algebraic residual of the reduced system
    int iterations = 0;
};

namespace detail {

// complex work transforms on raw level rows
inline void level_gradient(const double* in, const TorusGrid& g, double* out0, double* out1,
                           std::vector<cplx>& w, std::vector<cplx>& w2) {
    const std::size_t NN = g.points();
    w.assign(NN, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < NN; ++i) w[i] = cplx(in[i], 0.0);
    transform_axes(w, g, true);
    const double inv = 1.0 / (double)NN;
    for (int axis = 0; axis < g.dim; ++axis) {
        double* out = axis == 0 ? out0 : out1;
        w2 = w;
        for (std::size_t q = 0; q < NN; ++q) {
            if (g.is_nyquist(q)) {
                w2[q] = 0.0;
                continue;
            }
            w2[q] *= cplx(0.0, g.xi(q)[axis] * inv);
        }
        transform_axes(w2, g, false);
        for (std::size_t i = 0; i < NN; ++i) out[i] = w2[i].real();
    }
}

inline void level_divergence(const double* in0, const double* in1, const TorusGrid& g, double* out,
                             std::vector<cplx>& w, std::vector<cplx>& acc) {
    const std::size_t NN = g.points();
    acc.assign(NN, cplx(0.0, 0.0));
    const double inv = 1.0 / (double)NN;
    for (int axis = 0; axis < g.dim; ++axis) {
        const double* in = axis == 0 ? in0 : in1;
        if (!in) continue;
        w.assign(NN, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < NN; ++i) w[i] = cplx(in[i], 0.0);
        transform_axes(w, g, true);
        for (std::size_t q = 0; q < NN; ++q) {
            if (g.is_nyquist(q)) continue;
            acc[q] += w[q] * cplx(0.0, g.xi(q)[axis] * inv);
        }
    }
    transform_axes(acc, g, false);
    for (std::size_t i = 0; i < NN; ++i) out[i] = acc[i].real();
}

}  // namespace detail

// Assembled strip operator with per-cell midpoint coefficients.
class StripOperator {
  public:
    explicit StripOperator(const CoeffField& c) : coeff_(c), s_(c.sampling) {
        const std::size_t NN = s_.grid.points();
        const int M = s_.M;
        const int d = s_.grid.dim;
        for (int axis = 0; axis < d; ++axis) pm_[axis].assign((std::size_t)M * NN, 0.0);
        qm_.assign((std::size_t)M * NN, 0.0);
        for (int j = 0; j < M; ++j) {
            const double y = s_.y(j + 0.5);
            for (std::size_t i = 0; i < NN; ++i) {
                auto pv = c.pvec(i, y);
                for (int axis = 0; axis < d; ++axis) pm_[axis][(std::size_t)j * NN + i] = pv[axis];
                qm_[(std::size_t)j * NN + i] = c.q(i, y);
            }
        }
    }

    const StripSampling& sampling() const { return s_; }
    const CoeffField& coeff() const { return coeff_; }

    // out = rows dE/dv_k of the full operator, k = 0..M (row M is the
    // top-flux row; Dirichlet handling is the caller's business).
    void apply_full(const std::vector<double>& u, std::vector<double>& out) const {
        const TorusGrid& g = s_.grid;
        const std::size_t NN = g.points();
        const int M = s_.M;
        const int d = g.dim;
        const double dy = s_.dy();

        std::vector<cplx> w, w2;
        std::vector<double> grad[2];
        for (int axis = 0; axis < d; ++axis) grad[axis].assign((std::size_t)(M + 1) * NN, 0.0);
        for (int j = 0; j <= M; ++j)
            detail::level_gradient(u.data() + (std::size_t)j * NN, g,
                                   grad[0].data() + (std::size_t)j * NN,
                                   d == 2 ? grad[1].data() + (std::size_t)j * NN : nullptr, w, w2);

        std::vector<double> gh[2], gy((std::size_t)M * NN), divc((std::size_t)M * NN);
        for (int axis = 0; axis < d; ++axis) gh[axis].assign((std::size_t)M * NN, 0.0);
        const std::vector<double>& p1 = coeff_.thickness.v;
        for (int j = 0; j < M; ++j) {
            const std::size_t off = (std::size_t)j * NN;
            const std::size_t lo = (std::size_t)j * NN, hi = (std::size_t)(j + 1) * NN;
            for (std::size_t i = 0; i < NN; ++i) {
                const double du = (u[hi + i] - u[lo + i]) / dy;
                double gyv = qm_[off + i] * du;
                for (int axis = 0; axis < d; ++axis) {
                    const double ga = 0.5 * (grad[axis][lo + i] + grad[axis][hi + i]);
                    gh[axis][off + i] = p1[i] * ga + pm_[axis][off + i] * du;
                    gyv += pm_[axis][off + i] * ga;
                }
                gy[off + i] = gyv;
            }
            detail::level_divergence(gh[0].data() + off, d == 2 ? gh[1].data() + off : nullptr, g,
                                     divc.data() + off, w, w2);
        }

        out.assign((std::size_t)(M + 1) * NN, 0.0);
        for (int k = 0; k <= M; ++k) {
            double* row = out.data() + (std::size_t)k * NN;
            if (k > 0) {
                const std::size_t c = (std::size_t)(k - 1) * NN;
                for (std::size_t i = 0; i < NN; ++i) row[i] += -0.5 * dy * divc[c + i] + gy[c + i];
            }
            if (k < M) {
                const std::size_t c = (std::size_t)k * NN;
                for (std::size_t i = 0; i < NN; ++i) row[i] += -0.5 * dy * divc[c + i] - gy[c + i];
            }
        }
    }

  private:
    CoeffField coeff_;
    StripSampling s_;
    std::vector<double> pm_[2];  // per-axis midpoint p, cell-major
    std::vector<double> qm_;     // midpoint q, cell-major
};

// Exact flat-strip solve per horizontal mode: tridiagonal LDL^T over the
// reduced levels 0..M-1.
class FlatPreconditioner {
  public:
    FlatPreconditioner(const StripSampling& s, double mean_thickness) : s_(s) {
        const TorusGrid& g = s.grid;
        const std::size_t NN = g.points();
        const int M = s.M;
        const double dy = s.dy();
        const double hb = mean_thickness;
        const double qb = 1.0 / hb;
        dfac_.assign(NN * (std::size_t)M, 0.0);
        lfac_.assign(NN * (std::size_t)M, 0.0);
        for (std::size_t q = 0; q < NN; ++q) {
            double K2 = 0.0;
            if (!g.is_nyquist(q)) {
                auto xi = g.xi(q);
                K2 = xi[0] * xi[0] + xi[1] * xi[1];
            }
            const double diag_int = 2.0 * qb / dy + 0.5 * dy * hb * K2;
            const double diag_bot = qb / dy + 0.25 * dy * hb * K2;
            const double off = -qb / dy + 0.25 * dy * hb * K2;
            double* dd = dfac_.data() + q * (std::size_t)M;
            double* ll = lfac_.data() + q * (std::size_t)M;
            dd[0] = diag_bot;
            for (int k = 1; k < M; ++k) {
                ll[k] = off / dd[k - 1];
                dd[k] = diag_int - off * ll[k];
            }
        }
    }

    // z = Minv r, both reduced vectors (M levels)
    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const TorusGrid& g = s_.grid;
        const std::size_t NN = g.points();
        const int M = s_.M;
        std::vector<cplx> spec((std::size_t)M * NN);
        std::vector<cplx> row(NN);
        const double inv = 1.0 / (double)NN;
        for (int j = 0; j < M; ++j) {
            for (std::size_t i = 0; i < NN; ++i) row[i] = cplx(r[(std::size_t)j * NN + i], 0.0);
            detail::transform_axes(row, g, true);
            for (std::size_t i = 0; i < NN; ++i) spec[(std::size_t)j * NN + i] = row[i] * inv;
        }
        // per-mode forward/back substitution
        std::vector<cplx> yv(M);
        for (std::size_t q = 0; q < NN; ++q) {
            const double* dd = dfac_.data() + q * (std::size_t)M;
            const double* ll = lfac_.data() + q * (std::size_t)M;
            yv[0] = spec[q];
            for (int k = 1; k < M; ++k) yv[k] = spec[(std::size_t)k * NN + q] - ll[k] * yv[k - 1];
            yv[M - 1] /= dd[M - 1];
            for (int k = M - 2; k >= 0; --k) yv[k] = yv[k] / dd[k] - ll[k + 1] * yv[k + 1];
            for (int k = 0; k < M; ++k) spec[(std::size_t)k * NN + q] = yv[k];
        }
        z.assign((std::size_t)M * NN, 0.0);
        for (int j = 0; j < M; ++j) {
            for (std::size_t i = 0; i < NN; ++i) row[i] = spec[(std::size_t)j * NN + i];
            detail::transform_axes(row, g, false);
            for (std::size_t i = 0; i < NN; ++i) z[(std::size_t)j * NN + i] = row[i].real();
        }
    }

  private:
    StripSampling s_;
    std::vector<double> dfac_, lfac_;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace detail

// Reusable solver bound to one geometry: assembled operator + preconditioner.
class EllipticSolver {
  public:
    EllipticSolver(const CoeffField& coeff, double tol = 1e-10, SolveMethod method = SolveMethod::automatic)
        : op_(coeff), pc_(coeff.sampling, mean(coeff.thickness)), tol_(tol), method_(method) {
        if (!(tol > 0.0) || tol > 1e-6) throw std::invalid_argument("EllipticSolver: tol must lie in (0, 1e-6]");
        if (!(coeff.ptilde > 0.0)) throw solver_error("EllipticSolver: coefficient field not certified elliptic");
    }

    const StripOperator& op() const { return op_; }

    BvpSolution solve(const StripField& h, const ScalarField& f_top, const ScalarField& g_bottom) const {
        const StripSampling& s = op_.sampling();
        const TorusGrid& g = s.grid;
        if (h.sampling != s || f_top.grid != g || g_bottom.grid != g)
            throw std::invalid_argument("solve_bvp: sampling/grid mismatch");
        const std::size_t NN = g.points();
        const int M = s.M;
        const double dy = s.dy();
        const std::size_t nred = (std::size_t)M * NN;

        // RHS rows: quadrature-weighted h, Neumann data folded into row 0
        std::vector<double> b(nred, 0.0);
        for (int k = 0; k < M; ++k) {
            const double theta = (k == 0) ? 0.5 * dy : dy;
            for (std::size_t i = 0; i < NN; ++i) b[(std::size_t)k * NN + i] = theta * h.at(k, i);
        }
        for (std::size_t i = 0; i < NN; ++i) b[i] -= g_bottom.v[i];

        // Dirichlet lift
        std::vector<double> full((std::size_t)(M + 1) * NN, 0.0), rows;
        std::copy(f_top.v.begin(), f_top.v.end(), full.begin() + nred);
        op_.apply_full(full, rows);
        std::vector<double> r0(nred);
        for (std::size_t i = 0; i < nred; ++i) r0[i] = b[i] - rows[i];

        const double bnorm = std::sqrt(detail::dot(b, b));
        const double r0norm = std::sqrt(detail::dot(r0, r0));
        const double denom = std::max({bnorm, r0norm, 1e-300});

        std::vector<double> x(nred, 0.0);
        int iters = 0;
        if (r0norm > 0.0) {
            const bool small = nred <= 1200;
            SolveMethod m = method_;
            if (m == SolveMethod::automatic) m = SolveMethod::cg;
            if (m == SolveMethod::direct && !small)
                throw std::invalid_argument("solve_bvp: direct method restricted to small systems");
            if (m == SolveMethod::cg) {
                iters = pcg(r0, denom, x, method_ == SolveMethod::automatic && small);
            } else {
                dense_solve(r0, x);
                iters = 1;
            }
        }

        BvpSolution sol;
        sol.u = StripField(s);
        for (std::size_t i = 0; i < nred; ++i) sol.u.v[i] = x[i];
        std::copy(f_top.v.begin(), f_top.v.end(), sol.u.v.begin() + nred);

        op_.apply_full(sol.u.v, rows);
        double rn = 0.0;
        for (std::size_t i = 0; i < nred; ++i) {
            const double ri = b[i] - rows[i];
            rn += ri * ri;
        }
        sol.residual = std::sqrt(rn) / denom;
        sol.iterations = iters;
        return sol;
    }

    // Energy-consistent top conormal flux e_{d+1}.P grad u|_{y=0} of a solved
    // field: the top row of the full operator minus the quadrature share of h.
    ScalarField top_flux(const StripField& u, const StripField* h = nullptr) const {
        const StripSampling& s = op_.sampling();
        const std::size_t NN = s.grid.points();
        std::vector<double> rows;
        op_.apply_full(u.v, rows);
        ScalarField out(s.grid);
        const std::size_t off = (std::size_t)s.M * NN;
        for (std::size_t i = 0; i < NN; ++i) out.v[i] = rows[off + i];
        if (h) {
            const double theta = 0.5 * s.dy();
            for (std::size_t i = 0; i < NN; ++i) out.v[i] -= theta * h->at(s.M, i);
        }
        return out;
    }

  private:
    // reduced operator action (top level clamped to zero)
    void apply_reduced(const std::vector<double>& x, std::vector<double>& out) const {
        const StripSampling& s = op_.sampling();
        const std::size_t NN = s.grid.points();
        const std::size_t nred = (std::size_t)s.M * NN;
        std::vector<double> full((std::size_t)(s.M + 1) * NN, 0.0), rows;
        std::copy(x.begin(), x.end(), full.begin());
        op_.apply_full(full, rows);
        out.assign(nred, 0.0);
        std::copy(rows.begin(), rows.begin() + nred, out.begin());
    }

    int pcg(const std::vector<double>& rhs, double denom, std::vector<double>& x, bool allow_dense_fallback) const {
        const std::size_t nred = rhs.size();
        const long cap = 10L * (long)nred;

        std::vector<double> r = rhs, z, p, Ap;
        pc_.apply(r, z);
        p = z;
        double rz = detail::dot(r, z);
        int it = 0;
        while (true) {
            const double rnorm = std::sqrt(detail::dot(r, r));
            if (rnorm <= tol_ * denom) break;
            if (it >= cap) {
                if (allow_dense_fallback) {
                    dense_solve(rhs, x);
                    return it;
                }
                throw solver_error("solve_bvp: conjugate gradient did not converge within iteration cap");
            }
            apply_reduced(p, Ap);
            const double pAp = detail::dot(p, Ap);
            if (!(pAp > 0.0)) throw solver_error("solve_bvp: operator lost positive definiteness");
            const double alpha = rz / pAp;
            for (std::size_t i = 0; i < nred; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
            }
            pc_.apply(r, z);
            const double rz_new = detail::dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < nred; ++i) p[i] = z[i] + beta * p[i];
            ++it;
        }
        return it;
    }

    void dense_solve(const std::vector<double>& rhs, std::vector<double>& x) const {
        const std::size_t nred = rhs.size();
        std::vector<double> A(nred * nred, 0.0), e(nred, 0.0), col;
        for (std::size_t j = 0; j < nred; ++j) {
            e.assign(nred, 0.0);
            e[j] = 1.0;
            apply_reduced(e, col);
            for (std::size_t i = 0; i < nred; ++i) A[i * nred + j] = col[i];
        }
        // Cholesky A = L L^T
        for (std::size_t k = 0; k < nred; ++k) {
            double d = A[k * nred + k];
            for (std::size_t m = 0; m < k; ++m) d -= A[k * nred + m] * A[k * nred + m];
            if (!(d > 0.0)) throw solver_error("solve_bvp: dense factorization hit a non-positive pivot");
            const double lkk = std::sqrt(d);
            A[k * nred + k] = lkk;
            for (std::size_t i = k + 1; i < nred; ++i) {
                double v = A[i * nred + k];
                for (std::size_t m = 0; m < k; ++m) v -= A[i * nred + m] * A[k * nred + m];
                A[i * nred + k] = v / lkk;
            }
        }
        x = rhs;
        for (std::size_t i = 0; i < nred; ++i) {
            for (std::size_t m = 0; m < i; ++m) x[i] -= A[i * nred + m] * x[m];
            x[i] /= A[i * nred + i];
        }
        for (std::size_t ii = nred; ii-- > 0;) {
            for (std::size_t m = ii + 1; m < nred; ++m) x[ii] -= A[m * nred + ii] * x[m];
            x[ii] /= A[ii * nred + ii];
        }
    }

    StripOperator op_;
    FlatPreconditioner pc_;
    double tol_;
    SolveMethod method_;
};

inline BvpSolution solve_bvp(const BvpProblem& problem, double tol = 1e-10,
                             SolveMethod method = SolveMethod::automatic) {
    EllipticSolver solver(problem.coeff, tol, method);
    return solver.solve(problem.h, problem.f_top, problem.g_bottom);
}

// One-sided second-order conormal trace e_{d+1}.P grad u at a strip face;
// vertical derivative by stencil, horizontal derivatives spectral.
inline ScalarField conormal_trace(const StripField& u, const CoeffField& coeff, Side side) {
    if (u.sampling != coeff.sampling) throw std::invalid_argument("conormal_trace: sampling mismatch");
    const StripSampling& s = u.sampling;
    const TorusGrid& g = s.grid;
    const std::size_t NN = g.points();
    const int M = s.M;
    const double dy = s.dy();

    const int j0 = (side == Side::top) ? M : 0;
    const double y = (side == Side::top) ? 0.0 : -1.0;
    ScalarField face = u.level_field(j0);
    std::vector<ScalarField> gx = gradient(face);

    ScalarField out(g);
    for (std::size_t i = 0; i < NN; ++i) {
        double duy;
        if (side == Side::top)
            duy = (3.0 * u.at(M, i) - 4.0 * u.at(M - 1, i) + u.at(M - 2, i)) / (2.0 * dy);
        else
            duy = (-3.0 * u.at(0, i) + 4.0 * u.at(1, i) - u.at(2, i)) / (2.0 * dy);
        auto pv = coeff.pvec(i, y);
        double val = coeff.q(i, y) * duy;
        for (int axis = 0; axis < g.dim; ++axis) val += pv[axis] * gx[axis].v[i];
        out.v[i] = val;
    }
    return out;
}

}  // namespace capstrip

#endif
