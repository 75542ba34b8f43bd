#pragma once

// Discrete realizations of tau_{2m}(a, b, q) = (tau_2)^m.
//
// With W the m-fattened domain and Z the zero extension Omega -> W (the
// first N nodes of W, by construction of fatten):
//
//   D_m = T_W^m Z             rows on W, columns on Omega
//   F_m = Z^* T_W^m Z         Friedrichs matrix (top N rows of D_m)
//   pencil: D_m^* D_m u = lambda F_m u
//
// T_W is tau_2 on W with the full diagonal (all 2n links of every node), so
// T_W v equals the full-lattice T_2 v for every v supported in the
// (m-1)-fattened domain. The boundary-layer rows of D_m (W minus Omega)
// are what separate the buckling pencil from the Friedrichs problem.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <ostream>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "kreinlab/coefficients.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/grid_domain.hpp"

namespace kreinlab {

using Complex = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;

struct HermitianOperator {
    SparseMatrixC matrix;
    std::shared_ptr<const GridDomain> domain;
    int order = 2;  // 2m
    std::shared_ptr<const CoefficientField> coeffs;
    bool real = true;  // all entries have zero imaginary part

    Eigen::Index size() const { return matrix.rows(); }
};

struct ExtensionOperator {
    SparseMatrixC matrix;  // rows: target nodes, columns: source nodes
    std::shared_ptr<const GridDomain> source;
    std::shared_ptr<const GridDomain> target;
};

/// Which numerator the Krein pencil uses. `RestrictedSquare` (F_m^2) drops
/// the boundary-layer rows and exists only for mutation testing.
enum class PencilNumerator { BoundaryLayer, RestrictedSquare };

namespace detail {

inline double max_abs(const SparseMatrixC& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    }
    return v;
}

inline bool all_real(const SparseMatrixC& m) {
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            if (it.value().imag() != 0.0) return false;
        }
    }
    return true;
}

/// Checks ||M - M^*||_max <= 1e-12 ||M||_max and returns (M + M^*) / 2.
inline SparseMatrixC symmetrized(const SparseMatrixC& m, const char* what) {
    SparseMatrixC adj = m.adjoint();
    SparseMatrixC diff = m - adj;
    const double scale = max_abs(m);
    const double dev = max_abs(diff);
    if (dev > 1e-12 * scale) {
        throw SolverError(std::string("assembled ") + what +
                          " is not Hermitian: relative deviation " + std::to_string(dev / scale));
    }
    SparseMatrixC out = 0.5 * (m + adj);
    out.prune(Complex(0.0, 0.0));
    out.makeCompressed();
    return out;
}

}  // namespace detail

/// tau_2 stencil with link coefficients a, Peierls phases theta and node
/// potential q:
///   (T u)(p) = sum_j [ a(p, p+e_j) (u(p) - e^{-i theta} u(p+e_j))
///                    + a(p-e_j, p) (u(p) - e^{+i theta'} u(p-e_j)) ] / h^2
///              + q(p) u(p)
/// theta the phase on p -> p+e_j, theta' the phase on p-e_j -> p.
class Tau2Stencil {
public:
    explicit Tau2Stencil(std::shared_ptr<const CoefficientField> coeffs)
        : coeffs_(std::move(coeffs)) {}

    const CoefficientField& coeffs() const { return *coeffs_; }

    /// Sparse matrix of the stencil on the node set of `w` (values outside
    /// `w` taken as zero).
    SparseMatrixC matrix_on(const GridDomain& w) const {
        check_grid(w);
        const auto& c = *coeffs_;
        const double inv_h2 = 1.0 / (w.spacing() * w.spacing());
        std::vector<Eigen::Triplet<Complex>> trip;
        trip.reserve(w.size() * static_cast<std::size_t>(2 * w.dim() + 1));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const LatticePoint p = w.node(i);
            double diag = c.q(p);
            for (int axis = 0; axis < w.dim(); ++axis) {
                LatticePoint fwd = p;
                fwd[axis] += 1;
                LatticePoint bwd = p;
                bwd[axis] -= 1;
                const double a_f = c.a(axis, p);
                const double a_b = c.a(axis, bwd);
                diag += (a_f + a_b) * inv_h2;
                const auto row = static_cast<Eigen::Index>(i);
                if (const auto j = w.index_of(fwd); j >= 0) {
                    trip.emplace_back(row, j, -a_f * inv_h2 * std::polar(1.0, -c.theta(axis, p)));
                }
                if (const auto j = w.index_of(bwd); j >= 0) {
                    trip.emplace_back(row, j, -a_b * inv_h2 * std::polar(1.0, c.theta(axis, bwd)));
                }
            }
            trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), diag);
        }
        const auto n = static_cast<Eigen::Index>(w.size());
        SparseMatrixC t(n, n);
        t.setFromTriplets(trip.begin(), trip.end());
        t.makeCompressed();
        return t;
    }

    /// Applies the stencil to a grid function on `w`.
    Eigen::VectorXcd apply(const GridDomain& w, const Eigen::VectorXcd& u) const {
        if (u.size() != static_cast<Eigen::Index>(w.size())) {
            throw ArgumentError("grid function size does not match the node set");
        }
        return matrix_on(w) * u;
    }

private:
    void check_grid(const GridDomain& w) const {
        const auto& c = *coeffs_;
        if (w.dim() != c.dim() || w.spacing() != c.spacing()) {
            throw ArgumentError("coefficient field was sampled on a different grid");
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            const LatticePoint p = w.node(i);
            for (int axis = 0; axis < w.dim(); ++axis) {
                LatticePoint fwd = p;
                fwd[axis] += 1;
                LatticePoint bwd = p;
                bwd[axis] -= 1;
                if (!c.in_box(fwd) || !c.in_box(bwd)) {
                    throw CoefficientError(
                        "extension undefined: coefficients do not cover the stencil support");
                }
            }
        }
    }

    std::shared_ptr<const CoefficientField> coeffs_;
};

inline Tau2Stencil assemble_tau2(std::shared_ptr<const CoefficientField> c) {
    return Tau2Stencil(std::move(c));
}

namespace detail {

inline void check_order(const GridDomain& d, const CoefficientField& c, int m) {
    if (m < 1) throw ArgumentError("operator order parameter m must be >= 1");
    if (d.dim() != c.dim() || d.spacing() != c.spacing()) {
        throw ArgumentError("coefficient field was sampled on a different grid");
    }
    if (!c.covers(d, m)) {
        throw CoefficientError(
            "extension undefined: coefficient samples do not cover the m-fattened domain");
    }
}

}  // namespace detail

/// D_m = T_W^m Z mapping Omega-nodes to the m-fattened domain W.
inline ExtensionOperator assemble_extension(const GridDomain& d,
                                            std::shared_ptr<const CoefficientField> c, int m) {
    detail::check_order(d, *c, m);
    auto w = std::make_shared<const GridDomain>(fatten(d, m));
    const SparseMatrixC t = Tau2Stencil(c).matrix_on(*w);
    const auto n = static_cast<Eigen::Index>(d.size());
    SparseMatrixC p = t.leftCols(n);
    for (int j = 1; j < m; ++j) {
        SparseMatrixC next = t * p;
        p = std::move(next);
    }
    p.prune(Complex(0.0, 0.0));
    p.makeCompressed();
    return ExtensionOperator{std::move(p), std::make_shared<const GridDomain>(d), std::move(w)};
}

/// F_m = Z^* T_2^m Z, Hermitian positive definite.
inline HermitianOperator assemble_friedrichs(const GridDomain& d,
                                             std::shared_ptr<const CoefficientField> c, int m) {
    const ExtensionOperator ext = assemble_extension(d, c, m);
    const auto n = static_cast<Eigen::Index>(d.size());
    SparseMatrixC f = ext.matrix.topRows(n);
    f = detail::symmetrized(f, "Friedrichs matrix");
    const bool real = detail::all_real(f);
    return HermitianOperator{std::move(f), ext.source, 2 * m, std::move(c), real};
}

struct KreinPencil {
    HermitianOperator numerator;    // D_m^* D_m
    HermitianOperator denominator;  // F_m
};

/// Buckling pencil (D_m^* D_m, F_m) whose eigenvalues are the positive
/// eigenvalues of the discrete Krein-von Neumann extension.
inline KreinPencil assemble_krein_pencil(const GridDomain& d,
                                         std::shared_ptr<const CoefficientField> c, int m,
                                         PencilNumerator variant = PencilNumerator::BoundaryLayer) {
    const ExtensionOperator ext = assemble_extension(d, c, m);
    const auto n = static_cast<Eigen::Index>(d.size());
    SparseMatrixC f = detail::symmetrized(SparseMatrixC(ext.matrix.topRows(n)), "Friedrichs matrix");
    SparseMatrixC num;
    if (variant == PencilNumerator::BoundaryLayer) {
        num = SparseMatrixC(ext.matrix.adjoint()) * ext.matrix;
    } else {
        num = f * f;
    }
    num = detail::symmetrized(num, "pencil numerator");
    const bool real_f = detail::all_real(f);
    const bool real_num = detail::all_real(num);
    HermitianOperator numerator{std::move(num), ext.source, 4 * m, c, real_num};
    HermitianOperator denominator{std::move(f), ext.source, 2 * m, std::move(c), real_f};
    return KreinPencil{std::move(numerator), std::move(denominator)};
}

/// Coordinate dump: header "N nnz", then "row col re im" in row-major order.
inline void write_matrix(std::ostream& out, const SparseMatrixC& m) {
    std::vector<std::tuple<Eigen::Index, Eigen::Index, Complex>> entries;
    entries.reserve(static_cast<std::size_t>(m.nonZeros()));
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) {
            entries.emplace_back(it.row(), it.col(), it.value());
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
        return std::tie(std::get<0>(x), std::get<1>(x)) < std::tie(std::get<0>(y), std::get<1>(y));
    });
    out << m.rows() << ' ' << entries.size() << '\n';
    char buf[96];
    for (const auto& [r, c, v] : entries) {
        std::snprintf(buf, sizeof buf, "%ld %ld %.17g %.17g\n", static_cast<long>(r),
                      static_cast<long>(c), v.real(), v.imag());
        out << buf;
    }
}

}  // namespace kreinlab
