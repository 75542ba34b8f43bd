#pragma once

// Coefficient fields a (diagonal), b and q for
//     tau_2 = sum_j (-i d_j - b_j) a_jj (-i d_j - b_j) + q
// sampled on a lattice box that covers the m-fattened domain plus one layer
// of outgoing links.
//
// Link samples are indexed by their tail node: the link along axis j starting
// at lattice point p ends at p + e_j and is sampled at the midpoint. The
// magnetic potential enters as the Peierls phase theta = h * b_j(midpoint).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kreinlab/errors.hpp"
#include "kreinlab/expression.hpp"
#include "kreinlab/grid_domain.hpp"

namespace kreinlab {

using ScalarField = std::function<double(std::span<const double>)>;

/// Where the user-supplied expressions apply.
enum class Extension {
    /// Expressions are used on the whole fattened box.
    Analytic,
    /// Expressions inside the domain; a = 1, b = 0, q = 0 outside it.
    DefaultOutside,
};

struct FieldSpec {
    std::vector<ScalarField> a_diag;  // one per axis
    std::vector<ScalarField> b;       // one per axis
    ScalarField q;
    std::optional<double> r0;  // a must be the identity for |x| >= r0
    Extension extension = Extension::Analytic;
    bool declared_free = false;  // set when built by free(); lets callers skip checks

    /// a = I, b = 0, q = 0.
    static FieldSpec free(int dim) {
        FieldSpec s;
        auto one = [](std::span<const double>) { return 1.0; };
        auto zero = [](std::span<const double>) { return 0.0; };
        s.a_diag.assign(static_cast<std::size_t>(dim), one);
        s.b.assign(static_cast<std::size_t>(dim), zero);
        s.q = zero;
        s.declared_free = true;
        return s;
    }

    /// Parses {"a": [...] | "expr", "b": [...] | "expr", "q": "expr",
    ///         "R0": number, "extension": "analytic" | "default"}.
    /// Missing fields default to the free case.
    static FieldSpec from_json(const nlohmann::json& j, int dim) {
        FieldSpec s = free(dim);
        s.declared_free = !(j.contains("a") || j.contains("b") || j.contains("q"));
        auto exprs = [&](const char* key) {
            std::vector<ScalarField> out;
            const auto& v = j.at(key);
            if (v.is_array()) {
                if (static_cast<int>(v.size()) != dim) {
                    throw ConfigError(std::string("coefficient '") + key + "' needs " +
                                      std::to_string(dim) + " entries");
                }
                for (const auto& e : v) out.push_back(to_field(e, dim));
            } else {
                auto f = to_field(v, dim);
                out.assign(static_cast<std::size_t>(dim), f);
            }
            return out;
        };
        if (j.contains("a")) s.a_diag = exprs("a");
        if (j.contains("b")) s.b = exprs("b");
        if (j.contains("q")) s.q = to_field(j.at("q"), dim);
        if (j.contains("R0")) s.r0 = j.at("R0").get<double>();
        if (j.contains("extension")) {
            const auto e = j.at("extension").get<std::string>();
            if (e == "analytic") {
                s.extension = Extension::Analytic;
            } else if (e == "default") {
                s.extension = Extension::DefaultOutside;
            } else {
                throw ConfigError("extension must be 'analytic' or 'default'");
            }
        }
        return s;
    }

private:
    static ScalarField to_field(const nlohmann::json& v, int dim) {
        if (v.is_number()) {
            const double c = v.get<double>();
            return [c](std::span<const double>) { return c; };
        }
        if (!v.is_string()) throw ConfigError("coefficient expressions must be strings or numbers");
        Expression e;
        try {
            e = Expression::parse(v.get<std::string>(), dim);
        } catch (const ArgumentError& err) {
            throw ConfigError(err.what());
        }
        return [e](std::span<const double> x) { return e(x); };
    }
};

class CoefficientField {
public:
    int dim() const { return dim_; }
    double spacing() const { return h_; }
    /// Fattening radius the samples cover.
    int radius() const { return radius_; }
    double eps_a() const { return eps_a_; }
    double max_a() const { return max_a_; }
    double max_q() const { return max_q_; }
    const FieldSpec& spec() const { return *spec_; }

    /// True when every sample equals the free case exactly.
    bool is_free() const { return is_free_; }
    /// True when all Peierls phases vanish.
    bool is_real() const { return is_real_; }

    /// Coefficient a_jj on the link p -> p + e_axis.
    double a(int axis, const LatticePoint& tail) const { return link(a_, axis, tail); }
    /// Peierls phase on the link p -> p + e_axis.
    double theta(int axis, const LatticePoint& tail) const { return link(theta_, axis, tail); }
    double q(const LatticePoint& p) const { return q_[box_index(p)]; }

    /// Diagonal of a at a node: analytic value where available.
    double a_node(int axis, const LatticePoint& p) const {
        const Point x = coords(p);
        return eval(spec_->a_diag[static_cast<std::size_t>(axis)], x, in_domain_node(p), 1.0);
    }

    /// True when every lattice point of `d` plus `r` layers plus one link is sampled.
    bool covers(const GridDomain& d, int r) const {
        if (!d.same_lattice(*domain_)) return false;
        for (int a = 0; a < dim_; ++a) {
            const int lo = d.lo()[a] - r - 1;
            const int hi = d.lo()[a] + d.extent()[a] - 1 + r + 1;
            if (lo < lo_[a] || hi > lo_[a] + ext_[a] - 1) return false;
        }
        return true;
    }

    bool in_box(const LatticePoint& p) const {
        for (int a = 0; a < dim_; ++a) {
            if (p[a] < lo_[a] || p[a] >= lo_[a] + ext_[a]) return false;
        }
        return true;
    }

    /// Returns the field with phases theta + chi(head) - chi(tail).
    CoefficientField gauge_transformed(const std::function<double(const LatticePoint&)>& chi) const {
        CoefficientField out = *this;
        for (int axis = 0; axis < dim_; ++axis) {
            for (std::size_t b = 0; b < box_size(); ++b) {
                const LatticePoint tail = unflatten(b);
                LatticePoint head = tail;
                head[axis] += 1;
                if (!in_box(head)) continue;
                out.theta_[axis][b] += chi(head) - chi(tail);
            }
        }
        out.is_real_ = false;
        out.is_free_ = false;
        return out;
    }

    friend CoefficientField sample_coefficients(const GridDomain& d, const FieldSpec& spec, int m);

private:
    CoefficientField() = default;

    std::size_t box_size() const {
        return static_cast<std::size_t>(ext_[0]) * ext_[1] * ext_[2];
    }

    std::size_t box_index(const LatticePoint& p) const {
        std::size_t b = 0;
        std::size_t stride = 1;
        for (int a = 0; a < dim_; ++a) {
            const int local = p[a] - lo_[a];
            if (local < 0 || local >= ext_[a]) {
                throw CoefficientError(
                    "extension undefined: coefficient samples do not cover the requested lattice "
                    "point");
            }
            b += static_cast<std::size_t>(local) * stride;
            stride *= static_cast<std::size_t>(ext_[a]);
        }
        return b;
    }

    LatticePoint unflatten(std::size_t b) const {
        LatticePoint p{0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            p[a] = lo_[a] + static_cast<int>(b % static_cast<std::size_t>(ext_[a]));
            b /= static_cast<std::size_t>(ext_[a]);
        }
        return p;
    }

    double link(const std::array<std::vector<double>, 3>& arr, int axis,
                const LatticePoint& tail) const {
        LatticePoint head = tail;
        head[axis] += 1;
        if (!in_box(head)) {
            throw CoefficientError("extension undefined: link leaves the sampled coefficient box");
        }
        return arr[static_cast<std::size_t>(axis)][box_index(tail)];
    }

    Point coords(const LatticePoint& p) const { return domain_->coords_of(p); }

    bool in_domain_node(const LatticePoint& p) const { return domain_->contains(p); }

    double eval(const ScalarField& f, const Point& x, bool inside, double outside_value) const {
        if (spec_->extension == Extension::DefaultOutside && !inside) return outside_value;
        return f(std::span<const double>(x.data(), static_cast<std::size_t>(dim_)));
    }

    int dim_ = 1;
    double h_ = 1.0;
    int radius_ = 0;
    LatticePoint lo_{0, 0, 0};
    LatticePoint ext_{1, 1, 1};
    std::array<std::vector<double>, 3> a_;
    std::array<std::vector<double>, 3> theta_;
    std::vector<double> q_;
    double eps_a_ = 1.0;
    double max_a_ = 1.0;
    double max_q_ = 0.0;
    bool is_free_ = true;
    bool is_real_ = true;
    std::shared_ptr<const FieldSpec> spec_;
    std::shared_ptr<const GridDomain> domain_;
};

/// Samples `spec` on the lattice box covering `d` fattened by `m` plus one
/// link layer: a and b at link midpoints, q at nodes.
inline CoefficientField sample_coefficients(const GridDomain& d, const FieldSpec& spec, int m) {
    if (m < 1) throw ArgumentError("operator order parameter m must be >= 1");
    const int n = d.dim();
    if (static_cast<int>(spec.a_diag.size()) != n || static_cast<int>(spec.b.size()) != n ||
        !spec.q) {
        throw ArgumentError("field spec does not match domain dimension");
    }
    CoefficientField c;
    c.dim_ = n;
    c.h_ = d.spacing();
    c.radius_ = m;
    c.spec_ = std::make_shared<const FieldSpec>(spec);
    c.domain_ = std::make_shared<const GridDomain>(d);
    for (int a = 0; a < n; ++a) {
        c.lo_[a] = d.lo()[a] - m - 1;
        c.ext_[a] = d.extent()[a] + 2 * (m + 1);
    }
    const std::size_t total = c.box_size();
    c.q_.assign(total, 0.0);
    for (int a = 0; a < n; ++a) {
        c.a_[a].assign(total, 1.0);
        c.theta_[a].assign(total, 0.0);
    }

    const double h = d.spacing();
    const double tiny = 1e-12;
    double eps = std::numeric_limits<double>::infinity();
    double amax = 0.0;
    double qmax = 0.0;
    bool free = true;
    bool real = true;
    for (std::size_t b = 0; b < total; ++b) {
        const LatticePoint p = c.unflatten(b);
        const bool p_inside = d.contains(p);
        const Point x = d.coords_of(p);

        const double qv = c.eval(spec.q, x, p_inside, 0.0);
        if (!std::isfinite(qv)) throw CoefficientError("q sample is not finite");
        if (qv < 0.0) throw CoefficientError("sign violated: q < 0 at a sample point");
        c.q_[b] = qv;
        qmax = std::max(qmax, qv);
        free = free && qv == 0.0;

        for (int axis = 0; axis < n; ++axis) {
            LatticePoint head = p;
            head[axis] += 1;
            if (!c.in_box(head)) continue;
            Point mid = x;
            mid[axis] += 0.5 * h;
            const bool link_inside = p_inside && d.contains(head);
            const double av = c.eval(spec.a_diag[axis], mid, link_inside, 1.0);
            const double bv = c.eval(spec.b[axis], mid, link_inside, 0.0);
            if (!std::isfinite(av) || !std::isfinite(bv)) {
                throw CoefficientError("coefficient sample is not finite");
            }
            if (av < tiny) throw CoefficientError("ellipticity violated: a_diag sample below tolerance");
            if (spec.r0) {
                double r2 = 0.0;
                for (int k = 0; k < n; ++k) r2 += mid[k] * mid[k];
                if (std::sqrt(r2) >= *spec.r0 && std::abs(av - 1.0) > 1e-12) {
                    throw CoefficientError("a must equal the identity outside R0");
                }
            }
            c.a_[axis][b] = av;
            c.theta_[axis][b] = h * bv;
            eps = std::min(eps, av);
            amax = std::max(amax, av);
            free = free && av == 1.0 && bv == 0.0;
            real = real && bv == 0.0;
        }
    }
    c.eps_a_ = eps;
    c.max_a_ = amax;
    c.max_q_ = qmax;
    c.is_free_ = free;
    c.is_real_ = real;
    return c;
}

}  // namespace kreinlab
