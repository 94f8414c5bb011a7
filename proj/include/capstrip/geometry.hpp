#ifndef CAPSTRIP_GEOMETRY_HPP
#define CAPSTRIP_GEOMETRY_HPP

// Fluid-domain geometry flattened onto the reference strip grid x [-1,0]:
// the diffeomorphism s(x,y) = -b(x) y + (1+y) a(x) and the symmetric
// coefficient matrix
//   P = (1/(a-b)) [ (a-b)^2 I   (b-a) grad s ; (b-a) grad s^T   1+|grad s|^2 ]
// whose blocks reduce to P1 = (a-b) I, p = -grad s, q = (1+|grad s|^2)/(a-b).
// Ellipticity is certified numerically: the reduced 2x2 pencil has unit
// determinant, so the smallest eigenvalue is min(a-b, 1/lambda_plus) in
// closed form at every strip node.

#include "capstrip/grid.hpp"

namespace capstrip {

struct geometry_error : std::runtime_error {
    explicit geometry_error(const std::string& m) : std::runtime_error(m) {}
};

// Surface a (top), bottom b, and the separation constant h0 of the
// admissibility condition min{-b, a-b} >= h0.
struct DomainShape {
    ScalarField a;
    ScalarField b;
    double h0 = 0.0;

    DomainShape() = default;
    DomainShape(ScalarField top, ScalarField bottom, double h0_) : a(std::move(top)), b(std::move(bottom)), h0(h0_) {
        if (a.grid != b.grid) throw std::invalid_argument("DomainShape: a and b on different grids");
        if (!(h0 > 0.0)) throw geometry_error("DomainShape: h0 must be positive");
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!std::isfinite(a.v[i]) || !std::isfinite(b.v[i]))
                throw std::invalid_argument("DomainShape: non-finite surface data");
            if (std::min(-b.v[i], a.v[i] - b.v[i]) < h0)
                throw geometry_error("DomainShape: separation condition min{-b, a-b} >= h0 violated");
        }
    }

    const TorusGrid& grid() const { return a.grid; }
};

inline DomainShape flat_shape(const TorusGrid& g, double depth = 1.0, double h0 = 0.5) {
    return DomainShape(ScalarField(g, 0.0), ScalarField(g, -depth), h0);
}

// Uniform vertical sampling of the strip, levels y_j = -1 + j/M, j = 0..M.
struct StripSampling {
    TorusGrid grid;
    int M = 0;

    StripSampling() = default;
    StripSampling(const TorusGrid& g, int M_) : grid(g), M(M_) {
        if (M_ < 8) throw std::invalid_argument("StripSampling: need M >= 8");
    }

    int levels() const { return M + 1; }
    double dy() const { return 1.0 / M; }
    double y(double j) const { return -1.0 + j * dy(); }  // fractional j allowed (half levels)

    bool operator==(const StripSampling& o) const { return grid == o.grid && M == o.M; }
    bool operator!=(const StripSampling& o) const { return !(*this == o); }
};

// Real-valued function on the strip, level-major storage.
struct StripField {
    StripSampling sampling;
    std::vector<double> v;

    StripField() = default;
    explicit StripField(const StripSampling& s, double fill = 0.0)
        : sampling(s), v((std::size_t)s.levels() * s.grid.points(), fill) {}

    std::size_t nodes() const { return sampling.grid.points(); }
    double* level(int j) { return v.data() + (std::size_t)j * nodes(); }
    const double* level(int j) const { return v.data() + (std::size_t)j * nodes(); }
    double& at(int j, std::size_t node) { return v[(std::size_t)j * nodes() + node]; }
    double at(int j, std::size_t node) const { return v[(std::size_t)j * nodes() + node]; }

    ScalarField level_field(int j) const {
        ScalarField f(sampling.grid);
        std::copy(level(j), level(j) + nodes(), f.v.begin());
        return f;
    }

    void set_level(int j, const ScalarField& f) { std::copy(f.v.begin(), f.v.end(), level(j)); }
};

// The strip map s itself, sampled on the vertical levels.
inline StripField strip_map(const DomainShape& shape, const StripSampling& sampling) {
    if (shape.grid() != sampling.grid) throw std::invalid_argument("strip_map: grid mismatch");
    StripField s(sampling);
    for (int j = 0; j <= sampling.M; ++j) {
        const double y = sampling.y(j);
        double* row = s.level(j);
        for (std::size_t i = 0; i < s.nodes(); ++i) row[i] = -shape.b.v[i] * y + (1.0 + y) * shape.a.v[i];
    }
    return s;
}

// Coefficient matrix of the flattened elliptic operator. Stores the generator
// fields (thickness and the spectral gradients of a, b) so P can be evaluated
// exactly at any vertical position, including the cell midpoints the solver
// uses. ptilde is the certified minimum eigenvalue over integer and half
// levels; the paper-style analytic lower bound (with its unspecified constant
// taken as 1) is kept alongside for reporting.
struct CoeffField {
    StripSampling sampling;
    ScalarField thickness;               // a - b > 0
    std::vector<ScalarField> grad_a;     // spectral gradient of the top
    std::vector<ScalarField> grad_b;     // spectral gradient of the bottom
    double ptilde = 0.0;
    double ptilde_reference = 0.0;

    int dim() const { return sampling.grid.dim; }

    // grad_x s(x, y) = -grad b * y + (1+y) grad a
    std::array<double, 2> grad_s(std::size_t node, double y) const {
        std::array<double, 2> g{0.0, 0.0};
        for (int a = 0; a < dim(); ++a) g[a] = -grad_b[a].v[node] * y + (1.0 + y) * grad_a[a].v[node];
        return g;
    }

    double p1(std::size_t node) const { return thickness.v[node]; }

    std::array<double, 2> pvec(std::size_t node, double y) const {
        auto gs = grad_s(node, y);
        return {-gs[0], -gs[1]};
    }

    double q(std::size_t node, double y) const {
        auto gs = grad_s(node, y);
        return (1.0 + gs[0] * gs[0] + gs[1] * gs[1]) / thickness.v[node];
    }

    // dense (d+1)x(d+1) matrix, row-major
    void matrix_at(std::size_t node, double y, double* P) const {
        const int d = dim();
        const double J = thickness.v[node];
        auto gs = grad_s(node, y);
        for (int r = 0; r <= d; ++r)
            for (int c = 0; c <= d; ++c) P[r * (d + 1) + c] = 0.0;
        for (int a = 0; a < d; ++a) P[a * (d + 1) + a] = J;
        for (int a = 0; a < d; ++a) {
            P[a * (d + 1) + d] = -gs[a];
            P[d * (d + 1) + a] = -gs[a];
        }
        double g2 = gs[0] * gs[0] + gs[1] * gs[1];
        P[d * (d + 1) + d] = (1.0 + g2) / J;
    }

    // smallest eigenvalue of P at (node, y); closed form through the arrow
    // structure: lambda_min = min(J, 1/lambda_plus of the reduced 2x2 block).
    double min_eigenvalue(std::size_t node, double y) const {
        const double J = thickness.v[node];
        auto gs = grad_s(node, y);
        const double g2 = gs[0] * gs[0] + gs[1] * gs[1];
        const double qq = (1.0 + g2) / J;
        const double half_tr = 0.5 * (J + qq);
        const double lam_plus = half_tr + std::sqrt(std::max(0.0, half_tr * half_tr - 1.0));
        double lam_min = 1.0 / lam_plus;  // det of the reduced block is exactly 1
        if (dim() == 2) lam_min = std::min(lam_min, J);
        return lam_min;
    }
};

inline CoeffField build_coeff(const DomainShape& shape, const StripSampling& sampling) {
    if (shape.grid() != sampling.grid) throw std::invalid_argument("build_coeff: grid mismatch");
    CoeffField c;
    c.sampling = sampling;
    c.thickness = shape.a - shape.b;
    c.grad_a = gradient(shape.a);
    c.grad_b = gradient(shape.b);

    double min_eig = std::numeric_limits<double>::infinity();
    const std::size_t NN = sampling.grid.points();
    for (int half = 0; half <= 2 * sampling.M; ++half) {
        const double y = sampling.y(0.5 * half);
        for (std::size_t i = 0; i < NN; ++i) min_eig = std::min(min_eig, c.min_eigenvalue(i, y));
    }
    if (!(min_eig > 0.0)) throw geometry_error("build_coeff: coefficient matrix not positive definite");
    c.ptilde = min_eig;

    double sup_thick = 0.0, sup_grad2 = 0.0;
    for (std::size_t i = 0; i < NN; ++i) {
        sup_thick = std::max(sup_thick, c.thickness.v[i]);
        double g2 = 0.0;
        for (int a = 0; a < sampling.grid.dim; ++a)
            g2 += c.grad_a[a].v[i] * c.grad_a[a].v[i] + c.grad_b[a].v[i] * c.grad_b[a].v[i];
        sup_grad2 = std::max(sup_grad2, g2);
    }
    c.ptilde_reference = shape.h0 * shape.h0 / (sup_thick * (1.0 + sup_grad2));
    return c;
}

}  // namespace capstrip

#endif
