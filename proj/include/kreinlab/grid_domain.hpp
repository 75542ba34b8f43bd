#pragma once

// Bounded open sets realized as node masks on a uniform lattice.
//
// Node (i, j, k) of a domain's bounding box sits at
//     base + (lo + (i, j, k)) * h
// where `base` is the lattice anchor and `lo` the integer corner of the box.
// Domains derived from one another (fattening) share `base`, so lattice
// coordinates agree exactly across them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "kreinlab/errors.hpp"

namespace kreinlab {

using LatticePoint = std::array<int, 3>;
using Point = std::array<double, 3>;

class GridDomain {
public:
    /// Builds a domain from a box-local mask; interior nodes are numbered in
    /// row-major order (axis 0 fastest).
    static GridDomain from_mask(int dim, double h, const Point& base, const LatticePoint& lo,
                                const LatticePoint& extent, std::vector<std::uint8_t> mask) {
        GridDomain d(dim, h, base, lo, extent);
        if (mask.size() != d.box_size()) {
            throw ArgumentError("mask size " + std::to_string(mask.size()) +
                                " does not match bounding box size " +
                                std::to_string(d.box_size()));
        }
        d.mask_ = std::move(mask);
        for (std::size_t b = 0; b < d.mask_.size(); ++b) {
            if (d.mask_[b]) d.nodes_.push_back(static_cast<std::int64_t>(b));
        }
        d.finish();
        return d;
    }

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    const Point& base() const { return base_; }
    const LatticePoint& lo() const { return lo_; }
    const LatticePoint& extent() const { return extent_; }

    /// Coordinates of the bounding-box corner node.
    Point origin() const {
        Point o{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) o[a] = base_[a] + lo_[a] * h_;
        return o;
    }

    /// Number of interior nodes N.
    std::size_t size() const { return nodes_.size(); }
    std::size_t box_size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim_; ++a) s *= static_cast<std::size_t>(extent_[a]);
        return s;
    }

    /// (#interior nodes) * h^n.
    double volume() const { return static_cast<double>(size()) * cell_volume(); }
    double cell_volume() const { return std::pow(h_, dim_); }

    const std::vector<std::uint8_t>& mask() const { return mask_; }

    /// Global lattice coordinates of interior node `i`.
    LatticePoint node(std::size_t i) const { return unflatten(nodes_[i]); }

    Point coords(std::size_t i) const { return coords_of(node(i)); }

    Point coords_of(const LatticePoint& p) const {
        Point x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) x[a] = base_[a] + p[a] * h_;
        return x;
    }

    /// Interior index of lattice point `p`, or -1 when `p` is not in the mask.
    std::int64_t index_of(const LatticePoint& p) const {
        const std::int64_t b = flat(p);
        return b < 0 ? -1 : node_index_[static_cast<std::size_t>(b)];
    }

    bool contains(const LatticePoint& p) const { return index_of(p) >= 0; }

    /// Box-flat index of `p`, or -1 when outside the bounding box.
    std::int64_t flat(const LatticePoint& p) const {
        std::int64_t b = 0;
        std::int64_t stride = 1;
        for (int a = 0; a < dim_; ++a) {
            const int local = p[a] - lo_[a];
            if (local < 0 || local >= extent_[a]) return -1;
            b += local * stride;
            stride *= extent_[a];
        }
        return b;
    }

    LatticePoint unflatten(std::int64_t b) const {
        LatticePoint p{0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            p[a] = lo_[a] + static_cast<int>(b % extent_[a]);
            b /= extent_[a];
        }
        return p;
    }

    /// Same lattice and node set (ordering ignored).
    bool same_mask(const GridDomain& o) const {
        if (dim_ != o.dim_ || h_ != o.h_ || size() != o.size()) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (!o.contains(node(i))) return false;
        }
        return true;
    }

    /// Same lattice anchor and spacing.
    bool same_lattice(const GridDomain& o) const {
        if (dim_ != o.dim_ || h_ != o.h_) return false;
        for (int a = 0; a < dim_; ++a) {
            if (base_[a] != o.base_[a]) return false;
        }
        return true;
    }

private:
    friend GridDomain fatten(const GridDomain& d, int radius);

    GridDomain(int dim, double h, const Point& base, const LatticePoint& lo,
               const LatticePoint& extent)
        : dim_(dim), h_(h), base_(base), lo_(lo), extent_(extent) {
        if (dim < 1 || dim > 3) throw ArgumentError("dimension must be 1, 2 or 3");
        if (!(h > 0.0)) throw ArgumentError("grid spacing h must be positive");
        for (int a = dim; a < 3; ++a) {
            base_[a] = 0.0;
            lo_[a] = 0;
            extent_[a] = 1;
        }
        for (int a = 0; a < dim; ++a) {
            if (extent_[a] < 1) throw ArgumentError("bounding box extent must be positive");
        }
    }

    void finish() {
        if (nodes_.empty()) throw DomainError("degenerate domain: mask has no interior nodes");
        node_index_.assign(box_size(), -1);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            node_index_[static_cast<std::size_t>(nodes_[i])] = static_cast<std::int64_t>(i);
        }
    }

    int dim_;
    double h_;
    Point base_;
    LatticePoint lo_;
    LatticePoint extent_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::int64_t> nodes_;       // interior index -> box-flat index
    std::vector<std::int64_t> node_index_;  // box-flat index -> interior index or -1
};

/// l-infinity dilation of the mask by `radius` nodes per axis. Original nodes
/// keep their indices; new nodes follow in row-major order.
inline GridDomain fatten(const GridDomain& d, int radius) {
    if (radius < 1) throw ArgumentError("fattening radius must be >= 1");
    const int n = d.dim();
    LatticePoint lo = d.lo();
    LatticePoint ext = d.extent();
    for (int a = 0; a < n; ++a) {
        lo[a] -= radius;
        ext[a] += 2 * radius;
    }
    GridDomain out(n, d.spacing(), d.base(), lo, ext);

    std::vector<std::uint8_t> mask(out.box_size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        mask[static_cast<std::size_t>(out.flat(d.node(i)))] = 1;
    }
    // The l-infinity ball is a cube, so dilate one axis at a time.
    std::size_t stride = 1;
    for (int a = 0; a < n; ++a) {
        std::vector<std::uint8_t> next(mask.size(), 0);
        for (std::size_t b = 0; b < mask.size(); ++b) {
            if (!mask[b]) continue;
            const auto pos = static_cast<int>((b / stride) % ext[a]);
            for (int s = -radius; s <= radius; ++s) {
                const int q = pos + s;
                if (q < 0 || q >= ext[a]) continue;
                next[static_cast<std::size_t>(static_cast<std::int64_t>(b) +
                                              static_cast<std::int64_t>(s) *
                                                  static_cast<std::int64_t>(stride))] = 1;
            }
        }
        mask = std::move(next);
        stride *= static_cast<std::size_t>(ext[a]);
    }

    out.mask_ = mask;
    out.nodes_.reserve(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    std::vector<std::uint8_t> taken(mask.size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto b = out.flat(d.node(i));
        out.nodes_.push_back(b);
        taken[static_cast<std::size_t>(b)] = 1;
    }
    for (std::size_t b = 0; b < mask.size(); ++b) {
        if (mask[b] && !taken[b]) out.nodes_.push_back(static_cast<std::int64_t>(b));
    }
    out.finish();
    return out;
}

// ---------------------------------------------------------------------------
// Shape descriptors

struct IntervalShape {
    double lo = 0.0;
    double hi = 1.0;
};

struct BoxShape {
    std::vector<double> lo;
    std::vector<double> hi;
};

/// Open ball of the given radius; dimension taken from `center`.
struct DiskShape {
    std::vector<double> center;
    double radius = 1.0;
};

struct MaskFileShape {
    std::filesystem::path path;
};

using ShapeSpec = std::variant<IntervalShape, BoxShape, DiskShape, MaskFileShape>;

namespace detail {

template <class Inside>
GridDomain rasterize(int dim, double h, const std::vector<double>& lo,
                     const std::vector<double>& hi, Inside inside) {
    LatticePoint klo{0, 0, 0};
    LatticePoint ext{1, 1, 1};
    for (int a = 0; a < dim; ++a) {
        klo[a] = static_cast<int>(std::floor(lo[a] / h)) - 1;
        const int khi = static_cast<int>(std::ceil(hi[a] / h)) + 1;
        ext[a] = khi - klo[a] + 1;
    }
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(ext[0]) * ext[1] * ext[2], 0);
    LatticePoint tlo{ext[0], ext[1], ext[2]};
    LatticePoint thi{-1, -1, -1};
    std::size_t count = 0;
    for (int k = 0; k < ext[2]; ++k) {
        for (int j = 0; j < ext[1]; ++j) {
            for (int i = 0; i < ext[0]; ++i) {
                const LatticePoint loc{i, j, k};
                Point x{0.0, 0.0, 0.0};
                for (int a = 0; a < dim; ++a) x[a] = (klo[a] + loc[a]) * h;
                if (!inside(x)) continue;
                mask[static_cast<std::size_t>(i + ext[0] * (j + ext[1] * k))] = 1;
                ++count;
                for (int a = 0; a < dim; ++a) {
                    tlo[a] = std::min(tlo[a], loc[a]);
                    thi[a] = std::max(thi[a], loc[a]);
                }
            }
        }
    }
    if (count == 0) throw DomainError("degenerate domain: rasterization produced no nodes");

    // Trim to the tight bounding box.
    LatticePoint text{1, 1, 1};
    LatticePoint tcorner{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        text[a] = thi[a] - tlo[a] + 1;
        tcorner[a] = klo[a] + tlo[a];
    }
    std::vector<std::uint8_t> tight(static_cast<std::size_t>(text[0]) * text[1] * text[2], 0);
    for (int k = 0; k < text[2]; ++k) {
        for (int j = 0; j < text[1]; ++j) {
            for (int i = 0; i < text[0]; ++i) {
                const int si = i + (dim > 0 ? tlo[0] : 0);
                const int sj = j + (dim > 1 ? tlo[1] : 0);
                const int sk = k + (dim > 2 ? tlo[2] : 0);
                tight[static_cast<std::size_t>(i + text[0] * (j + text[1] * k))] =
                    mask[static_cast<std::size_t>(si + ext[0] * (sj + ext[1] * sk))];
            }
        }
    }
    return GridDomain::from_mask(dim, h, Point{0.0, 0.0, 0.0}, tcorner, text, std::move(tight));
}

}  // namespace detail

/// Reads the mask text format:
///   dim h nx [ny [nz]] ox [oy [oz]]
///   0/1 entries, row-major with axis 0 fastest
inline GridDomain read_mask(std::istream& in) {
    int dim = 0;
    double h = 0.0;
    in >> std::ws;
    if (in.eof()) throw DomainError("degenerate domain: empty mask file");
    if (!(in >> dim >> h)) throw ArgumentError("mask header: expected 'dim h'");
    if (dim < 1 || dim > 3) throw ArgumentError("mask header: dim must be 1, 2 or 3");
    if (!(h > 0.0)) throw ArgumentError("mask header: h must be positive");
    LatticePoint ext{1, 1, 1};
    Point origin{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
        if (!(in >> ext[a]) || ext[a] < 0) throw ArgumentError("mask header: bad extent");
    }
    for (int a = 0; a < dim; ++a) {
        if (!(in >> origin[a])) throw ArgumentError("mask header: bad origin");
    }
    const std::size_t total = static_cast<std::size_t>(ext[0]) * ext[1] * ext[2];
    if (total == 0) throw DomainError("degenerate domain: empty bounding box");
    std::vector<std::uint8_t> mask(total, 0);
    for (std::size_t b = 0; b < total; ++b) {
        int v = 0;
        if (!(in >> v) || (v != 0 && v != 1)) {
            throw ArgumentError("mask body: expected " + std::to_string(total) +
                                " entries of 0 or 1");
        }
        mask[b] = static_cast<std::uint8_t>(v);
    }
    return GridDomain::from_mask(dim, h, origin, LatticePoint{0, 0, 0}, ext, std::move(mask));
}

inline void write_mask(std::ostream& out, const GridDomain& d) {
    const Point o = d.origin();
    out << d.dim() << ' ';
    out.precision(17);
    out << d.spacing();
    for (int a = 0; a < d.dim(); ++a) out << ' ' << d.extent()[a];
    for (int a = 0; a < d.dim(); ++a) out << ' ' << o[a];
    out << '\n';
    const auto ext0 = static_cast<std::size_t>(d.extent()[0]);
    for (std::size_t b = 0; b < d.mask().size(); ++b) {
        out << int(d.mask()[b]) << ((b + 1) % ext0 == 0 ? '\n' : ' ');
    }
}

/// Rasterizes `shape` at spacing `h`: a lattice node belongs to the domain
/// when it lies strictly inside the open set.
inline GridDomain build_domain(const ShapeSpec& shape, double h) {
    if (!(h > 0.0)) throw ArgumentError("grid spacing h must be positive");
    const double tol = 1e-9 * h;
    return std::visit(
        [&](const auto& s) -> GridDomain {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, IntervalShape>) {
                if (!(s.hi > s.lo)) throw DomainError("degenerate domain: empty interval");
                return detail::rasterize(1, h, {s.lo}, {s.hi}, [&](const Point& x) {
                    return x[0] > s.lo + tol && x[0] < s.hi - tol;
                });
            } else if constexpr (std::is_same_v<S, BoxShape>) {
                const int dim = static_cast<int>(s.lo.size());
                if (dim < 1 || dim > 3 || s.hi.size() != s.lo.size()) {
                    throw ArgumentError("box needs matching lo/hi of length 1..3");
                }
                return detail::rasterize(dim, h, s.lo, s.hi, [&](const Point& x) {
                    for (int a = 0; a < dim; ++a) {
                        if (!(x[a] > s.lo[a] + tol && x[a] < s.hi[a] - tol)) return false;
                    }
                    return true;
                });
            } else if constexpr (std::is_same_v<S, DiskShape>) {
                const int dim = static_cast<int>(s.center.size());
                if (dim < 1 || dim > 3) throw ArgumentError("disk center must have 1..3 entries");
                if (!(s.radius > 0.0)) throw DomainError("degenerate domain: nonpositive radius");
                std::vector<double> lo(dim), hi(dim);
                for (int a = 0; a < dim; ++a) {
                    lo[a] = s.center[a] - s.radius;
                    hi[a] = s.center[a] + s.radius;
                }
                return detail::rasterize(dim, h, lo, hi, [&](const Point& x) {
                    double r2 = 0.0;
                    for (int a = 0; a < dim; ++a) r2 += (x[a] - s.center[a]) * (x[a] - s.center[a]);
                    return std::sqrt(r2) < s.radius - tol;
                });
            } else {
                std::ifstream in(s.path);
                if (!in) throw ArgumentError("cannot open mask file " + s.path.string());
                GridDomain d = read_mask(in);
                if (std::abs(d.spacing() - h) > 1e-12 * h) {
                    throw ArgumentError("mask file spacing differs from requested h");
                }
                return d;
            }
        },
        shape);
}

}  // namespace kreinlab
