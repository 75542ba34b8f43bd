#pragma once

// Distorted plane waves for -Delta + q via the Lippmann-Schwinger equation
//
//   phi(x, xi) = e^{i xi.x} - int G_{+-}(x - y) q(y) phi(y, xi) dy,
//
// solved by Nystrom collocation on supp(q) (n = 1 and n = 3), and the
// sampled constant C_phi = max_xi ||phi(., xi)||^2_{L^2(Omega)}.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/IterativeSolvers>

#include "kreinlab/coefficients.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/grid_domain.hpp"

namespace kreinlab {

using Complex = std::complex<double>;

/// Boundary-value branch z = k^2 +- i0.
enum class Branch { Plus, Minus };

/// Resolvent kernel of -Delta at k^2 +- i0.
///   n = 1: (i / 2k) e^{ikr}       n = 3: e^{ikr} / (4 pi r)
/// The minus branch is the complex conjugate.
inline Complex green_kernel(int dim, double k, double r, Branch sign) {
    if (!(k > 0.0)) throw ArgumentError("green_kernel: k must be positive");
    if (r < 0.0) throw ArgumentError("green_kernel: negative distance");
    Complex g;
    if (dim == 1) {
        g = Complex(0.0, 0.5 / k) * std::polar(1.0, k * r);
    } else if (dim == 3) {
        if (r == 0.0) throw ArgumentError("green_kernel: 3D kernel is singular at r = 0");
        g = std::polar(1.0, k * r) / (4.0 * std::numbers::pi * r);
    } else {
        throw ArgumentError("green_kernel: only n = 1 and n = 3 are supported");
    }
    return sign == Branch::Plus ? g : std::conj(g);
}

/// Nystrom discretization of supp(q).
///   n = 1: Gauss-Legendre panels on [support_lo, support_hi].
///   n = 3: uniform cubic cells on the support box, midpoint rule.
struct ScatteringProblem {
    int dim = 1;
    Branch sign = Branch::Plus;
    ScalarField q;
    Point support_lo{0.0, 0.0, 0.0};
    Point support_hi{0.0, 0.0, 0.0};
    int panels = 8;       // n = 1
    int cells = 12;       // n = 3, per axis
    std::vector<Point> nodes;
    std::vector<double> quad_weights;
    std::vector<double> q_nodes;
    /// n = 3 systems above this size use matrix-free GMRES.
    Eigen::Index dense_limit = 3000;
    double cond_limit = 1e12;
    double residual_tol = 1e-8;

    std::size_t size() const { return nodes.size(); }
    bool free() const {
        return std::all_of(q_nodes.begin(), q_nodes.end(), [](double v) { return v == 0.0; });
    }
    double cell_size() const { return (support_hi[0] - support_lo[0]) / cells; }
};

namespace detail {

inline constexpr int panel_order = 16;
static_assert(panel_order % 2 == 0, "panel rule assumes no centre node");
using PanelRule = boost::math::quadrature::gauss<double, panel_order>;

/// Full Gauss-Legendre rule on [a, b].
inline void gauss_rule(double a, double b, std::vector<double>& x, std::vector<double>& w) {
    const auto& abs = PanelRule::abscissa();
    const auto& wts = PanelRule::weights();
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    x.clear();
    w.clear();
    for (std::size_t i = abs.size(); i-- > 0;) {
        x.push_back(c - r * abs[i]);
        w.push_back(r * wts[i]);
    }
    for (std::size_t i = 0; i < abs.size(); ++i) {
        x.push_back(c + r * abs[i]);
        w.push_back(r * wts[i]);
    }
}

inline double eval_q(const ScalarField& q, const Point& x, int dim) {
    return q(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
}

inline void sample_q(ScatteringProblem& p) {
    p.q_nodes.resize(p.nodes.size());
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        const double v = eval_q(p.q, p.nodes[i], p.dim);
        if (!std::isfinite(v)) throw CoefficientError("potential is not finite on its support");
        if (v < 0.0) throw CoefficientError("sign violated: q < 0 on the scattering support");
        p.q_nodes[i] = v;
    }
}

}  // namespace detail

inline ScatteringProblem make_scattering_problem_1d(ScalarField q, double lo, double hi, int panels = 8,
                                                    Branch sign = Branch::Plus) {
    if (!(hi > lo)) throw ArgumentError("scattering support must be a nonempty interval");
    if (panels < 1) throw ArgumentError("panel count must be >= 1");
    ScatteringProblem p;
    p.dim = 1;
    p.sign = sign;
    p.q = std::move(q);
    p.support_lo = {lo, 0.0, 0.0};
    p.support_hi = {hi, 0.0, 0.0};
    p.panels = panels;
    std::vector<double> x;
    std::vector<double> w;
    const double len = (hi - lo) / panels;
    for (int j = 0; j < panels; ++j) {
        detail::gauss_rule(lo + j * len, lo + (j + 1) * len, x, w);
        for (std::size_t i = 0; i < x.size(); ++i) {
            p.nodes.push_back({x[i], 0.0, 0.0});
            p.quad_weights.push_back(w[i]);
        }
    }
    detail::sample_q(p);
    return p;
}

/// Support box [lo, lo + side]^3 split into cells^3 cubes.
inline ScatteringProblem make_scattering_problem_3d(ScalarField q, const Point& lo, double side, int cells = 12,
                                                    Branch sign = Branch::Plus) {
    if (!(side > 0.0)) throw ArgumentError("scattering support must be a nonempty cube");
    if (cells < 1) throw ArgumentError("cell count must be >= 1");
    ScatteringProblem p;
    p.dim = 3;
    p.sign = sign;
    p.q = std::move(q);
    p.support_lo = lo;
    p.support_hi = {lo[0] + side, lo[1] + side, lo[2] + side};
    p.cells = cells;
    const double h = side / cells;
    const double vol = h * h * h;
    for (int k = 0; k < cells; ++k) {
        for (int j = 0; j < cells; ++j) {
            for (int i = 0; i < cells; ++i) {
                p.nodes.push_back({lo[0] + (i + 0.5) * h, lo[1] + (j + 0.5) * h, lo[2] + (k + 0.5) * h});
                p.quad_weights.push_back(vol);
            }
        }
    }
    detail::sample_q(p);
    return p;
}

/// Same problem on the opposite branch.
inline ScatteringProblem with_branch(ScatteringProblem p, Branch sign) {
    p.sign = sign;
    return p;
}

struct DistortedWave {
    Point xi{0.0, 0.0, 0.0};
    Eigen::VectorXcd values_on_support;
    Eigen::VectorXcd values_on_domain;
    double l2_on_domain = 0.0;
    double residual = 0.0;
    /// 1-norm condition estimate of the dense system; NaN on the GMRES path.
    double condition = std::numeric_limits<double>::quiet_NaN();
    /// Nodes per wavelength of the support discretization.
    double points_per_wavelength = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double norm(const Point& v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

inline Complex plane_wave(const Point& xi, const Point& x, int dim) {
    double phase = 0.0;
    for (int i = 0; i < dim; ++i) phase += xi[i] * x[i];
    return std::polar(1.0, phase);
}

/// Barycentric Lagrange basis of `nodes` evaluated at t.
inline std::vector<double> lagrange_basis(const std::vector<double>& nodes, double t) {
    const std::size_t n = nodes.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (t == nodes[k]) {
            out[k] = 1.0;
            return out;
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double bw = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != k) bw /= nodes[k] - nodes[j];
        }
        out[k] = bw / (t - nodes[k]);
        total += out[k];
    }
    for (double& v : out) v /= total;
    return out;
}

/// Weights W with int G(x - y) q(y) phi(y) dy ~= sum_j W_j phi_j (n = 1).
/// On the panel containing x the kink of |x - y| is handled by splitting
/// the panel at x and interpolating phi from the panel nodes.
inline Eigen::VectorXcd row_weights_1d(const ScatteringProblem& p, double k, double x) {
    const auto n = static_cast<Eigen::Index>(p.size());
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n);
    const int order = panel_order;
    const double len = (p.support_hi[0] - p.support_lo[0]) / p.panels;
    std::vector<double> panel_x(static_cast<std::size_t>(order));
    std::vector<double> sx;
    std::vector<double> sw;
    for (int j = 0; j < p.panels; ++j) {
        const double a = p.support_lo[0] + j * len;
        const double b = a + len;
        const std::size_t off = static_cast<std::size_t>(j) * order;
        if (x > a && x < b) {
            for (int i = 0; i < order; ++i) panel_x[i] = p.nodes[off + i][0];
            for (const auto& [s0, s1] : {std::pair{a, x}, std::pair{x, b}}) {
                detail::gauss_rule(s0, s1, sx, sw);
                for (std::size_t l = 0; l < sx.size(); ++l) {
                    const Point t{sx[l], 0.0, 0.0};
                    const Complex g = sw[l] * green_kernel(1, k, std::abs(x - sx[l]), p.sign) * eval_q(p.q, t, 1);
                    if (g == Complex(0.0, 0.0)) continue;
                    const auto basis = lagrange_basis(panel_x, sx[l]);
                    for (int i = 0; i < order; ++i) w[static_cast<Eigen::Index>(off) + i] += g * basis[i];
                }
            }
        } else {
            for (int i = 0; i < order; ++i) {
                const std::size_t idx = off + i;
                w[static_cast<Eigen::Index>(idx)] +=
                    p.quad_weights[idx] * green_kernel(1, k, std::abs(x - p.nodes[idx][0]), p.sign) * p.q_nodes[idx];
            }
        }
    }
    return w;
}

/// int over a cube of side h centred at the origin of e^{ikr} / (4 pi r).
/// Each face subtends a pyramid; the radial integral is exact,
///   int_0^R e^{ikr} r dr = e^{ikR}(R/(ik) + 1/k^2) - 1/k^2,
/// and the face is integrated by a tensor Gauss rule.
inline Complex cube_self_integral(double k, double h) {
    const double d = 0.5 * h;
    std::vector<double> gx;
    std::vector<double> gw;
    Complex sum(0.0, 0.0);
    const Complex ik(0.0, k);
    const double ik2 = 1.0 / (k * k);
    // four sub-squares per face keep the rule away from the corner kinks
    for (const auto& [u0, u1] : {std::pair{-d, 0.0}, std::pair{0.0, d}}) {
        for (const auto& [v0, v1] : {std::pair{-d, 0.0}, std::pair{0.0, d}}) {
            std::vector<double> ux;
            std::vector<double> uw;
            gauss_rule(u0, u1, ux, uw);
            gauss_rule(v0, v1, gx, gw);
            for (std::size_t a = 0; a < ux.size(); ++a) {
                for (std::size_t b = 0; b < gx.size(); ++b) {
                    const double rho = std::sqrt(ux[a] * ux[a] + gx[b] * gx[b] + d * d);
                    const Complex radial = std::exp(ik * rho) * (rho / ik + ik2) - ik2;
                    sum += uw[a] * gw[b] * radial * d / (rho * rho * rho);
                }
            }
        }
    }
    return 6.0 * sum / (4.0 * std::numbers::pi);
}

/// Kernel table for the n = 3 cell grid: entry for offset (dx, dy, dz)
/// holds h^3 G(|offset| h), the origin holds the exact self-cell integral.
struct KernelTable3d {
    int cells = 0;
    std::vector<Complex> values;  // (2c-1)^3

    const Complex& at(int dx, int dy, int dz) const {
        const int s = 2 * cells - 1;
        return values[static_cast<std::size_t>((dz + cells - 1) * s * s + (dy + cells - 1) * s + (dx + cells - 1))];
    }
};

inline KernelTable3d kernel_table_3d(const ScatteringProblem& p, double k) {
    KernelTable3d t;
    t.cells = p.cells;
    const int c = p.cells;
    const int s = 2 * c - 1;
    const double h = p.cell_size();
    t.values.resize(static_cast<std::size_t>(s) * s * s);
    for (int dz = -(c - 1); dz < c; ++dz) {
        for (int dy = -(c - 1); dy < c; ++dy) {
            for (int dx = -(c - 1); dx < c; ++dx) {
                Complex v;
                if (dx == 0 && dy == 0 && dz == 0) {
                    v = cube_self_integral(k, h);
                    if (p.sign == Branch::Minus) v = std::conj(v);
                } else {
                    const double r = h * std::sqrt(double(dx * dx + dy * dy + dz * dz));
                    v = h * h * h * green_kernel(3, k, r, p.sign);
                }
                t.values[static_cast<std::size_t>((dz + c - 1) * s * s + (dy + c - 1) * s + (dx + c - 1))] = v;
            }
        }
    }
    return t;
}

}  // namespace detail

/// Matrix-free (I + K M) for the n = 3 cell grid.
class LippmannSchwinger3d;

}  // namespace kreinlab

namespace Eigen::internal {
template <>
struct traits<kreinlab::LippmannSchwinger3d>
    : public Eigen::internal::traits<Eigen::SparseMatrix<std::complex<double>>> {};
}  // namespace Eigen::internal

namespace kreinlab {

class LippmannSchwinger3d : public Eigen::EigenBase<LippmannSchwinger3d> {
public:
    using Scalar = Complex;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    LippmannSchwinger3d(const ScatteringProblem& p, const detail::KernelTable3d& t) : p_(&p), t_(&t) {}

    Eigen::Index rows() const { return static_cast<Eigen::Index>(p_->size()); }
    Eigen::Index cols() const { return rows(); }

    template <typename Rhs>
    Eigen::Product<LippmannSchwinger3d, Rhs, Eigen::AliasFreeProduct> operator*(
        const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<LippmannSchwinger3d, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const {
        const int c = p_->cells;
        const auto n = rows();
        Eigen::VectorXcd qu(n);
        for (Eigen::Index i = 0; i < n; ++i) qu[i] = p_->q_nodes[static_cast<std::size_t>(i)] * u[i];
        Eigen::VectorXcd out = u;
        for (int iz = 0; iz < c; ++iz) {
            for (int iy = 0; iy < c; ++iy) {
                for (int ix = 0; ix < c; ++ix) {
                    Complex acc(0.0, 0.0);
                    Eigen::Index j = 0;
                    for (int jz = 0; jz < c; ++jz) {
                        for (int jy = 0; jy < c; ++jy) {
                            const Complex* row = &t_->at(ix, iy - jy, iz - jz);
                            for (int jx = 0; jx < c; ++jx, ++j) acc += *(row - jx) * qu[j];
                        }
                    }
                    out[(iz * c + iy) * c + ix] += acc;
                }
            }
        }
        return out;
    }

private:
    const ScatteringProblem* p_;
    const detail::KernelTable3d* t_;
};

}  // namespace kreinlab

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<kreinlab::LippmannSchwinger3d, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<kreinlab::LippmannSchwinger3d, Rhs,
                                generic_product_impl<kreinlab::LippmannSchwinger3d, Rhs>> {
    using Scalar = typename Product<kreinlab::LippmannSchwinger3d, Rhs>::Scalar;

    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const kreinlab::LippmannSchwinger3d& lhs, const Rhs& rhs,
                              const Scalar& alpha) {
        dst.noalias() += alpha * lhs.apply(rhs);
    }
};
}  // namespace Eigen::internal

namespace kreinlab {

namespace detail {

inline Eigen::MatrixXcd dense_system_3d(const ScatteringProblem& p, const KernelTable3d& t) {
    const int c = p.cells;
    const auto n = static_cast<Eigen::Index>(p.size());
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double qj = p.q_nodes[static_cast<std::size_t>(j)];
        if (qj == 0.0) continue;
        const int jx = static_cast<int>(j % c);
        const int jy = static_cast<int>((j / c) % c);
        const int jz = static_cast<int>(j / (static_cast<Eigen::Index>(c) * c));
        for (Eigen::Index i = 0; i < n; ++i) {
            const int ix = static_cast<int>(i % c);
            const int iy = static_cast<int>((i / c) % c);
            const int iz = static_cast<int>(i / (static_cast<Eigen::Index>(c) * c));
            a(i, j) += t.at(ix - jx, iy - jy, iz - jz) * qj;
        }
    }
    return a;
}

inline void check_xi(const ScatteringProblem& p, const Point& xi) {
    if (p.dim != 1 && p.dim != 3) throw ArgumentError("scattering supports n = 1 and n = 3 only");
    if (!(norm(xi, p.dim) > 0.0)) throw ArgumentError("xi must be nonzero");
    if (p.dim == 3 && p.size() != static_cast<std::size_t>(p.cells) * p.cells * p.cells) {
        throw ArgumentError("3D scattering problem has an inconsistent cell grid");
    }
}

inline double relative_residual(const Eigen::VectorXcd& r, const Eigen::VectorXcd& b) {
    const double nb = b.norm();
    return nb > 0.0 ? r.norm() / nb : r.norm();
}

}  // namespace detail

/// Solves the Nystrom system on supp(q) and evaluates phi on the nodes of d.
inline DistortedWave solve_lippmann_schwinger(const ScatteringProblem& p, const Point& xi, const GridDomain& d) {
    detail::check_xi(p, xi);
    if (d.dim() != p.dim) throw ArgumentError("domain and scattering problem differ in dimension");
    const double k = detail::norm(xi, p.dim);
    const auto n = static_cast<Eigen::Index>(p.size());

    DistortedWave wave;
    wave.xi = xi;
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs[i] = detail::plane_wave(xi, p.nodes[static_cast<std::size_t>(i)], p.dim);

    const double wavelength = 2.0 * std::numbers::pi / k;
    if (p.dim == 1) {
        const double len = (p.support_hi[0] - p.support_lo[0]) / p.panels;
        wave.points_per_wavelength = detail::panel_order * wavelength / len;
    } else {
        wave.points_per_wavelength = wavelength / p.cell_size();
    }

    if (p.free()) {
        wave.values_on_support = rhs;
        wave.residual = 0.0;
        wave.condition = 1.0;
    } else if (p.dim == 1) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a.row(i) += detail::row_weights_1d(p, k, p.nodes[static_cast<std::size_t>(i)][0]).transpose();
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
        wave.condition = 1.0 / lu.rcond();
        if (!(wave.condition <= p.cond_limit)) {
            throw SolverError("possible embedded resonance at this xi: condition estimate " +
                              std::to_string(wave.condition));
        }
        wave.values_on_support = lu.solve(rhs);
        wave.residual = detail::relative_residual(a * wave.values_on_support - rhs, rhs);
    } else {
        const detail::KernelTable3d table = detail::kernel_table_3d(p, k);
        if (n <= p.dense_limit) {
            const Eigen::MatrixXcd a = detail::dense_system_3d(p, table);
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
            wave.condition = 1.0 / lu.rcond();
            if (!(wave.condition <= p.cond_limit)) {
                throw SolverError("possible embedded resonance at this xi: condition estimate " +
                                  std::to_string(wave.condition));
            }
            wave.values_on_support = lu.solve(rhs);
            wave.residual = detail::relative_residual(a * wave.values_on_support - rhs, rhs);
        } else {
            const LippmannSchwinger3d op(p, table);
            Eigen::GMRES<LippmannSchwinger3d, Eigen::IdentityPreconditioner> gmres(op);
            gmres.setTolerance(1e-11);
            gmres.setMaxIterations(400);
            gmres.set_restart(60);
            wave.values_on_support = gmres.solve(rhs);
            if (gmres.info() != Eigen::Success) {
                throw SolverError("possible embedded resonance at this xi: GMRES did not converge");
            }
            wave.residual = detail::relative_residual(op.apply(wave.values_on_support) - rhs, rhs);
        }
    }
    if (!(wave.residual <= p.residual_tol)) {
        throw SolverError("Lippmann-Schwinger residual " + std::to_string(wave.residual) + " above tolerance");
    }

    // phi on Omega: one application of the integral term.
    wave.values_on_domain.resize(static_cast<Eigen::Index>(d.size()));
    Eigen::VectorXcd qphi(n);
    for (Eigen::Index j = 0; j < n; ++j) qphi[j] = p.q_nodes[static_cast<std::size_t>(j)] * wave.values_on_support[j];
    const bool free = p.free();
    const double h3 = p.dim == 3 ? std::pow(p.cell_size(), 3) : 0.0;
    const Complex self = (p.dim == 3 && !free) ? detail::kernel_table_3d(p, k).at(0, 0, 0) : Complex(0.0, 0.0);
    double l2 = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Point x = d.coords(i);
        Complex v = detail::plane_wave(xi, x, p.dim);
        if (!free) {
            if (p.dim == 1) {
                v -= detail::row_weights_1d(p, k, x[0]).cwiseProduct(wave.values_on_support).sum();
            } else {
                Complex acc(0.0, 0.0);
                const double tol = 1e-9 * p.cell_size();
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (qphi[j] == Complex(0.0, 0.0)) continue;
                    const Point& y = p.nodes[static_cast<std::size_t>(j)];
                    const double r = std::sqrt((x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]) +
                                               (x[2] - y[2]) * (x[2] - y[2]));
                    acc += (r < tol ? self : h3 * green_kernel(3, k, r, p.sign)) * qphi[j];
                }
                v -= acc;
            }
        }
        wave.values_on_domain[static_cast<Eigen::Index>(i)] = v;
        l2 += std::norm(v);
    }
    wave.l2_on_domain = l2 * d.cell_volume();
    return wave;
}

// ---------------------------------------------------------------------------
// C_phi

/// Directions times log-spaced moduli in [k_min, k_max]. n = 1 uses the two
/// directions +-1; n = 3 uses a Fibonacci sphere with `directions` points.
inline std::vector<Point> xi_grid(int dim, int directions, int moduli, double k_min = 0.5, double k_max = 40.0) {
    if (moduli < 1 || directions < 1) throw ArgumentError("xi grid needs at least one direction and modulus");
    if (!(k_min > 0.0) || !(k_max >= k_min)) throw ArgumentError("xi grid moduli must satisfy 0 < k_min <= k_max");
    std::vector<Point> dirs;
    if (dim == 1) {
        dirs = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
    } else if (dim == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < directions; ++i) {
            const double z = directions == 1 ? 1.0 : 1.0 - 2.0 * (i + 0.5) / directions;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            dirs.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
        }
    } else {
        throw ArgumentError("xi grid supports n = 1 and n = 3 only");
    }
    std::vector<Point> grid;
    for (int j = 0; j < moduli; ++j) {
        const double t = moduli == 1 ? 0.0 : double(j) / (moduli - 1);
        const double k = k_min * std::pow(k_max / k_min, t);
        for (const Point& e : dirs) grid.push_back({k * e[0], k * e[1], k * e[2]});
    }
    return grid;
}

struct CphiReport {
    double cphi = 0.0;
    Point argmax_xi{0.0, 0.0, 0.0};
    double free_field_value = 0.0;  // |Omega|
    std::size_t grid_size = 0;
    std::vector<std::string> warnings;  // skipped xi
    int dim = 1;
};

/// Max of ||phi(., xi)||^2_{L^2(Omega)} over the grid: a lower estimate of
/// the supremum. Solver failures skip the point with a warning. Points are
/// split across `threads` workers; the reduction runs in grid order, so the
/// result does not depend on the thread count.
inline CphiReport cphi_estimate(const ScatteringProblem& p, const GridDomain& d, const std::vector<Point>& grid,
                                int threads = 1) {
    if (grid.empty()) throw ArgumentError("xi grid is empty");
    for (const Point& xi : grid) {
        if (!(detail::norm(xi, p.dim) > 0.0)) throw ArgumentError("xi grid must exclude xi = 0");
    }
    std::vector<double> l2(grid.size(), 0.0);
    std::vector<std::string> failure(grid.size());
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < grid.size(); i += stride) {
            try {
                l2[i] = solve_lippmann_schwinger(p, grid[i], d).l2_on_domain;
            } catch (const SolverError& e) {
                failure[i] = e.what();
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, static_cast<int>(grid.size())));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work, t, workers);
        for (auto& t : pool) t.join();
    }

    CphiReport r;
    r.dim = p.dim;
    r.free_field_value = d.volume();
    r.grid_size = grid.size();
    bool any = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!failure[i].empty()) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "xi = (%.6g, %.6g, %.6g) skipped: ", grid[i][0], grid[i][1], grid[i][2]);
            r.warnings.push_back(buf + failure[i]);
            continue;
        }
        if (!any || l2[i] > r.cphi) {
            r.cphi = l2[i];
            r.argmax_xi = grid[i];
            any = true;
        }
    }
    if (!any) throw SolverError("every xi in the grid failed to solve");
    return r;
}

inline nlohmann::json to_json(const CphiReport& r) {
    nlohmann::json j;
    j["cphi"] = r.cphi;
    j["argmax_xi"] = std::vector<double>(r.argmax_xi.begin(), r.argmax_xi.begin() + r.dim);
    j["free_field_value"] = r.free_field_value;
    j["grid_size"] = r.grid_size;
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    return j;
}

/// Columns xi_1..xi_n,x_1..x_n,re_phi,im_phi over the nodes of d.
inline void write_wave_csv(std::ostream& out, const DistortedWave& w, const GridDomain& d, bool header = true) {
    const int n = d.dim();
    if (header) {
        for (int i = 1; i <= n; ++i) out << "xi_" << i << ',';
        for (int i = 1; i <= n; ++i) out << "x_" << i << ',';
        out << "re_phi,im_phi\n";
    }
    char buf[64];
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Point x = d.coords(i);
        for (int a = 0; a < n; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", w.xi[a]);
            out << buf;
        }
        for (int a = 0; a < n; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
            out << buf;
        }
        const Complex v = w.values_on_domain[static_cast<Eigen::Index>(i)];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", v.real(), v.imag());
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Square-well oracle (n = 1)

/// Exact + branch solution for q = q0 on [-a, a], incident e^{ikx} (k > 0)
/// or e^{-i|k|x} (k < 0). Coefficients from continuity of value and slope.
class SquareWellSolution {
public:
    SquareWellSolution(double q0, double a, double xi) : a_(a), xi_(xi) {
        if (!(a > 0.0) || q0 < 0.0 || xi == 0.0) throw ArgumentError("square well needs a > 0, q0 >= 0, xi != 0");
        k_ = std::abs(xi);
        kappa_ = std::sqrt(Complex(k_ * k_ - q0, 0.0));
        // Work with incidence from the left; mirror x for xi < 0.
        // Unknowns: R, A, B, T.
        const Complex i(0.0, 1.0);
        Eigen::Matrix4cd m;
        Eigen::Vector4cd rhs;
        const double x0 = -a;
        const double x1 = a;
        auto e = [&](Complex c, double x) { return std::exp(i * c * x); };
        const Complex kc(k_, 0.0);
        // value at -a: e^{ik x0} + R e^{-ik x0} = A e^{i kappa x0} + B e^{-i kappa x0}
        m << e(-kc, x0), -e(kappa_, x0), -e(-kappa_, x0), 0.0,
            -i * kc * e(-kc, x0), -i * kappa_ * e(kappa_, x0), i * kappa_ * e(-kappa_, x0), 0.0,
            0.0, e(kappa_, x1), e(-kappa_, x1), -e(kc, x1),
            0.0, i * kappa_ * e(kappa_, x1), -i * kappa_ * e(-kappa_, x1), -i * kc * e(kc, x1);
        rhs << -e(kc, x0), -i * kc * e(kc, x0), 0.0, 0.0;
        const Eigen::Vector4cd c = m.fullPivLu().solve(rhs);
        r_ = c[0];
        a_in_ = c[1];
        b_in_ = c[2];
        t_ = c[3];
    }

    Complex operator()(double x) const {
        const double y = xi_ > 0.0 ? x : -x;
        const Complex i(0.0, 1.0);
        if (y < -a_) return std::exp(i * k_ * y) + r_ * std::exp(-i * k_ * y);
        if (y > a_) return t_ * std::exp(i * k_ * y);
        return a_in_ * std::exp(i * kappa_ * y) + b_in_ * std::exp(-i * kappa_ * y);
    }

    Complex reflection() const { return r_; }
    Complex transmission() const { return t_; }

private:
    double a_;
    double xi_;
    double k_ = 0.0;
    Complex kappa_;
    Complex r_, a_in_, b_in_, t_;
};

}  // namespace kreinlab
