#pragma once

// Hermitian and buckling-pencil eigenvalues, counting functions and the
// trusted-resolution cutoff.
//
// Problems up to `dense_threshold` unknowns use dense solvers (Cholesky
// reduction for pencils). Larger problems use shift-invert Lanczos with full
// reorthogonalization in the B-inner product around shift 0, which targets
// the smallest eigenvalues of positive definite problems.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "kreinlab/assembly.hpp"
#include "kreinlab/coefficients.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/grid_domain.hpp"

namespace kreinlab {

struct Spectrum {
    std::vector<double> values;     // nondecreasing
    std::vector<double> residuals;  // relative residual per eigenpair
    std::size_t problem_size = 0;   // N
    double trust_cutoff = std::numeric_limits<double>::infinity();

    std::size_t count_computed() const { return values.size(); }
    bool complete() const { return values.size() == problem_size; }
};

struct EigenOptions {
    /// Dense path for N <= dense_threshold.
    Eigen::Index dense_threshold = 4000;
    /// Required ||A v - lambda B v|| / ((||A|| + |lambda| ||B||) ||v||).
    double residual_tol = 1e-8;
    /// Lanczos convergence tolerance on Ritz values (relative).
    double lanczos_tol = 1e-11;
    unsigned seed = 0;
};

/// Value type for "all eigenvalues".
inline constexpr Eigen::Index all_eigenvalues = -1;

namespace detail {

inline double inf_norm(const SparseMatrixC& m) {
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrixC::InnerIterator it(m, k); it; ++it) rows[it.row()] += std::abs(it.value());
    }
    return rows.size() ? rows.maxCoeff() : 0.0;
}

template <class Scalar>
Eigen::SparseMatrix<Scalar> convert(const SparseMatrixC& m) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return m.real();
    } else {
        return m;
    }
}

inline Eigen::Index resolve_k(Eigen::Index k, Eigen::Index n) {
    if (k == all_eigenvalues) return n;
    if (k < 0 || k > n) throw ArgumentError("requested eigenvalue count exceeds problem size");
    return k;
}

/// Dense solve of A u = lambda B u (B = I when `b` is null).
template <class Scalar>
Spectrum dense_solve(const SparseMatrixC& a_in, const SparseMatrixC* b_in, Eigen::Index k,
                     const EigenOptions& opt) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = a_in.rows();
    const Mat a = Mat(convert<Scalar>(a_in));
    const double norm_a = inf_norm(a_in);
    const double norm_b = b_in ? inf_norm(*b_in) : 1.0;

    Eigen::SelfAdjointEigenSolver<Mat> es;
    Mat vecs;
    Eigen::VectorXd vals;
    std::optional<Mat> bmat;
    if (!b_in) {
        es.compute(a, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) throw SolverError("dense Hermitian eigensolver did not converge");
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
    } else {
        bmat = Mat(convert<Scalar>(*b_in));
        Eigen::LLT<Mat> llt(*bmat);
        if (llt.info() != Eigen::Success) {
            throw SolverError("denominator not PD: Cholesky factorization failed");
        }
        // C = L^{-1} A L^{-*}; A Hermitian gives (L^{-1} A)^* = A L^{-*}.
        Mat x = llt.matrixL().solve(a);
        Mat c = llt.matrixL().solve(Mat(x.adjoint()));
        c = Scalar(0.5) * (c + Mat(c.adjoint()));
        es.compute(c, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) throw SolverError("dense pencil eigensolver did not converge");
        vals = es.eigenvalues();
        vecs = llt.matrixU().solve(es.eigenvectors());
    }

    Spectrum s;
    s.problem_size = static_cast<std::size_t>(n);
    s.values.reserve(static_cast<std::size_t>(k));
    s.residuals.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        const double lam = vals[i];
        const auto v = vecs.col(i);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r = a * v;
        if (bmat) {
            r -= Scalar(lam) * ((*bmat) * v);
        } else {
            r -= Scalar(lam) * v;
        }
        const double scale = (norm_a + std::abs(lam) * norm_b) * v.norm();
        const double rel = scale > 0.0 ? r.norm() / scale : r.norm();
        if (!(rel <= opt.residual_tol)) {
            throw SolverError("eigenpair " + std::to_string(i) + " residual " + std::to_string(rel) +
                              " exceeds tolerance");
        }
        s.values.push_back(lam);
        s.residuals.push_back(rel);
    }
    return s;
}

/// Shift-invert Lanczos around 0 for the k smallest eigenvalues of the
/// positive definite pencil (A, B).
template <class Scalar>
Spectrum lanczos_solve(const SparseMatrixC& a_in, const SparseMatrixC* b_in, Eigen::Index k,
                       const EigenOptions& opt) {
    using SpMat = Eigen::SparseMatrix<Scalar>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index n = a_in.rows();
    const SpMat a = convert<Scalar>(a_in);
    SpMat b;
    if (b_in) b = convert<Scalar>(*b_in);
    auto apply_b = [&](const Vec& x) -> Vec { return b_in ? Vec(b * x) : x; };
    auto dot_b = [&](const Vec& x, const Vec& y) -> double {
        return std::real(x.dot(apply_b(y)));
    };

    Eigen::SimplicialLDLT<SpMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw SolverError("shift-invert factorization failed (operator not positive definite?)");
    }

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if constexpr (std::is_same_v<Scalar, double>) {
            q[i] = gauss(rng);
        } else {
            q[i] = Scalar(gauss(rng), gauss(rng));
        }
    }
    q /= std::sqrt(dot_b(q, q));

    const Eigen::Index max_dim = std::min<Eigen::Index>(n, std::max<Eigen::Index>(4 * k + 60, 200));
    Mat basis(n, max_dim);
    std::vector<double> alpha, beta;
    basis.col(0) = q;
    Eigen::VectorXd theta;
    Eigen::MatrixXd s_vecs;
    bool converged = false;
    Eigen::Index dim = 0;
    for (Eigen::Index j = 0; j < max_dim; ++j) {
        Vec w = ldlt.solve(apply_b(basis.col(j)));
        const double al = dot_b(basis.col(j), w);
        alpha.push_back(al);
        // Full reorthogonalization, twice.
        for (int pass = 0; pass < 2; ++pass) {
            const Vec bw = apply_b(w);
            for (Eigen::Index i = 0; i <= j; ++i) {
                const Scalar c = basis.col(i).dot(bw);
                w -= c * basis.col(i);
            }
        }
        const double be = std::sqrt(std::max(0.0, dot_b(w, w)));
        dim = j + 1;
        const bool exhausted = dim == n || be < 1e-14 * std::abs(al);
        if (exhausted && dim < k) {
            throw SolverError("Lanczos start vector spans an invariant subspace smaller than k");
        }
        if (dim >= k &&(dim % 10 == 0 || exhausted || dim == max_dim)) {
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
                t(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(t);
            theta = tes.eigenvalues();
            s_vecs = tes.eigenvectors();
            converged = true;
            for (Eigen::Index i = 0; i < k; ++i) {
                const Eigen::Index idx = dim - 1 - i;
                const double est = be * std::abs(s_vecs(dim - 1, idx));
                if (!(est <= opt.lanczos_tol * std::abs(theta[idx])) && !exhausted) {
                    converged = false;
                    break;
                }
            }
            if (converged || exhausted) break;
        }
        if (j + 1 < max_dim) {
            beta.push_back(be);
            basis.col(j + 1) = w / be;
        }
    }
    if (!converged) {
        throw SolverError("shift-invert Lanczos did not converge within " + std::to_string(max_dim) +
                          " iterations");
    }

    const double norm_a = inf_norm(a_in);
    const double norm_b = b_in ? inf_norm(*b_in) : 1.0;
    Spectrum s;
    s.problem_size = static_cast<std::size_t>(n);
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index idx = dim - 1 - i;
        const double lam = 1.0 / theta[idx];
        const Vec v = basis.leftCols(dim) * s_vecs.col(idx).template cast<Scalar>();
        const Vec r = a * v - Scalar(lam) * apply_b(v);
        const double rel = r.norm() / ((norm_a + std::abs(lam) * norm_b) * v.norm());
        if (!(rel <= opt.residual_tol)) {
            throw SolverError("Lanczos eigenpair " + std::to_string(i) + " residual " +
                              std::to_string(rel) + " exceeds tolerance");
        }
        s.values.push_back(lam);
        s.residuals.push_back(rel);
    }
    return s;
}

template <class Scalar>
Spectrum solve_any(const SparseMatrixC& a, const SparseMatrixC* b, Eigen::Index k,
                   const EigenOptions& opt) {
    if (a.rows() <= opt.dense_threshold) return dense_solve<Scalar>(a, b, k, opt);
    return lanczos_solve<Scalar>(a, b, k, opt);
}

}  // namespace detail

/// k smallest eigenvalues of a Hermitian operator (all when k == all_eigenvalues).
inline Spectrum hermitian_eigs(const HermitianOperator& a, Eigen::Index k = all_eigenvalues,
                               const EigenOptions& opt = {}) {
    const Eigen::Index n = a.size();
    if (a.matrix.cols() != n) throw ArgumentError("operator is not square");
    k = detail::resolve_k(k, n);
    if (n > opt.dense_threshold && k == n) {
        throw ArgumentError("all eigenvalues requested above the dense threshold; pass k");
    }
    return a.real ? detail::solve_any<double>(a.matrix, nullptr, k, opt)
                  : detail::solve_any<Complex>(a.matrix, nullptr, k, opt);
}

/// k smallest eigenvalues of numerator u = lambda denominator u.
inline Spectrum pencil_eigs(const HermitianOperator& numerator, const HermitianOperator& denominator,
                            Eigen::Index k = all_eigenvalues, const EigenOptions& opt = {}) {
    const Eigen::Index n = numerator.size();
    if (denominator.size() != n || numerator.matrix.cols() != n) {
        throw ArgumentError("pencil blocks have mismatched sizes");
    }
    k = detail::resolve_k(k, n);
    if (n > opt.dense_threshold && k == n) {
        throw ArgumentError("all eigenvalues requested above the dense threshold; pass k");
    }
    const bool real = numerator.real && denominator.real;
    return real ? detail::solve_any<double>(numerator.matrix, &denominator.matrix, k, opt)
                : detail::solve_any<Complex>(numerator.matrix, &denominator.matrix, k, opt);
}

struct CountResult {
    std::size_t count = 0;
    /// lambda <= trust cutoff.
    bool trusted = true;
    /// False when the spectrum is truncated below lambda (count is a lower bound).
    bool complete = true;
};

/// #{j : 0 < lambda_j < lambda}, with multiplicity.
inline CountResult counting(const Spectrum& s, double lambda) {
    CountResult r;
    for (double v : s.values) {
        if (v > 0.0 && v < lambda) ++r.count;
    }
    r.trusted = lambda <= s.trust_cutoff;
    if (!s.complete() && (s.values.empty() || !(s.values.back() >= lambda))) r.complete = false;
    return r;
}

/// fraction * ((4 / h^2) * (max_a + h^2 max_q))^m.
inline double trust_cutoff(const GridDomain& d, int m, double fraction = 0.1, double max_a = 1.0,
                           double max_q = 0.0) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("trust fraction must lie in (0, 1]");
    if (m < 1) throw ArgumentError("operator order parameter m must be >= 1");
    const double h2 = d.spacing() * d.spacing();
    return fraction * std::pow(4.0 / h2 * (max_a + h2 * max_q), m);
}

inline double trust_cutoff(const GridDomain& d, const CoefficientField& c, int m,
                           double fraction = 0.1) {
    return trust_cutoff(d, m, fraction, c.max_a(), c.max_q());
}

/// CSV with columns index,eigenvalue,residual,trusted.
inline void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
    out << "index,eigenvalue,residual,trusted\n";
    char buf[128];
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", i + 1, s.values[i], s.residuals[i],
                      s.values[i] <= s.trust_cutoff ? 1 : 0);
        out << buf;
    }
}

}  // namespace kreinlab
