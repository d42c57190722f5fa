#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "marginlab/errors.hpp"
#include "marginlab/linalg.hpp"

namespace marginlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::uint64_t kDefaultEnumerationCap = 1ull << 24;

inline bool is_inf_exponent(double q) { return std::isinf(q); }

inline void check_exponent(double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("exponent q must be in [2, inf]");
}

// ---------------------------------------------------------------------------
// lq norms

// ||v||_q for q in [2, inf]. Large finite q is handled by scaling out the
// max entry so the powering never overflows (entries of |v|/vmax are <= 1).
inline double lq_norm(std::span<const double> v, double q) {
  check_exponent(q);
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  if (is_inf_exponent(q) || vmax == 0.0) return vmax;
  if (q == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double x : v) {
    const double r = std::abs(x) / vmax;
    if (r > 0.0) s += std::pow(r, q);
  }
  return vmax * std::pow(s, 1.0 / q);
}

inline double lq_norm(const Vector& v, double q) {
  return lq_norm(std::span<const double>(v), q);
}

// ---------------------------------------------------------------------------
// Feasible sets Q

struct ScaledHypercube {
  std::size_t n;
};

struct UnitSphere {
  std::size_t n;
};

struct FiniteList {
  std::vector<Vector> members;
};

// Integer box {lo_i..hi_i}^N scaled by the reciprocal of the largest member
// norm so the set sits inside the unit ball.
struct LatticeBox {
  std::vector<std::pair<long, long>> ranges;
  double scale = 1.0;
};

struct Singleton {
  Vector point;
};

class FeasibleSet {
 public:
  using Variant = std::variant<ScaledHypercube, UnitSphere, FiniteList, LatticeBox, Singleton>;

  static FeasibleSet scaled_hypercube(std::size_t n) {
    if (n == 0) throw std::invalid_argument("ScaledHypercube: n must be >= 1");
    return FeasibleSet(ScaledHypercube{n}, n);
  }

  static FeasibleSet unit_sphere(std::size_t n) {
    if (n == 0) throw std::invalid_argument("UnitSphere: n must be >= 1");
    return FeasibleSet(UnitSphere{n}, n);
  }

  static FeasibleSet finite_list(std::vector<Vector> members) {
    if (members.empty()) throw std::invalid_argument("FiniteList: empty");
    const std::size_t n = members.front().size();
    for (const auto& v : members) {
      if (v.size() != n) throw std::invalid_argument("FiniteList: ragged member dimensions");
      if (norm2(v) > 1.0 + 1e-12)
        throw std::invalid_argument("FiniteList: member outside the unit ball");
    }
    return FeasibleSet(FiniteList{std::move(members)}, n);
  }

  static FeasibleSet singleton(Vector point) {
    if (point.empty()) throw std::invalid_argument("Singleton: empty point");
    if (norm2(point) > 1.0 + 1e-12)
      throw std::invalid_argument("Singleton: point outside the unit ball");
    const std::size_t n = point.size();
    return FeasibleSet(Singleton{std::move(point)}, n);
  }

  static FeasibleSet lattice_box(std::vector<std::pair<long, long>> ranges) {
    if (ranges.empty()) throw std::invalid_argument("LatticeBox: empty ranges");
    double max_sq = 0.0;
    for (auto [lo, hi] : ranges) {
      if (lo > hi) throw std::invalid_argument("LatticeBox: range with lo > hi");
      const double m = std::max(std::abs(static_cast<double>(lo)),
                                std::abs(static_cast<double>(hi)));
      max_sq += m * m;
    }
    LatticeBox box{std::move(ranges), 1.0};
    if (max_sq > 0.0) box.scale = 1.0 / std::sqrt(max_sq);
    const std::size_t n = box.ranges.size();
    return FeasibleSet(std::move(box), n);
  }

  const Variant& variant() const { return v_; }
  std::size_t dim() const { return dim_; }

  bool enumerable() const { return !std::holds_alternative<UnitSphere>(v_); }

  bool is_hypercube() const { return std::holds_alternative<ScaledHypercube>(v_); }
  bool is_sphere() const { return std::holds_alternative<UnitSphere>(v_); }

  // Exact cardinality for enumerable variants; throws for the sphere.
  std::uint64_t cardinality() const {
    if (auto* h = std::get_if<ScaledHypercube>(&v_)) {
      if (h->n >= 64) throw resource_limit_error("ScaledHypercube: 2^N exceeds 64-bit range");
      return 1ull << h->n;
    }
    if (auto* l = std::get_if<FiniteList>(&v_)) return l->members.size();
    if (auto* b = std::get_if<LatticeBox>(&v_)) {
      std::uint64_t c = 1;
      for (auto [lo, hi] : b->ranges) {
        const std::uint64_t w = static_cast<std::uint64_t>(hi - lo) + 1;
        if (c > std::numeric_limits<std::uint64_t>::max() / w)
          throw resource_limit_error("LatticeBox: cardinality exceeds 64-bit range");
        c *= w;
      }
      return c;
    }
    if (std::holds_alternative<Singleton>(v_)) return 1;
    throw not_enumerable_error("UnitSphere has no finite enumeration");
  }

  // k-th member in enumeration order, k < cardinality().
  //   hypercube: bit j of k gives the sign of coordinate j (0 -> +1/sqrt(N))
  //   lattice box: mixed-radix odometer, coordinate 0 fastest
  //   finite list: list order
  void member(std::uint64_t k, std::span<double> out) const {
    if (auto* h = std::get_if<ScaledHypercube>(&v_)) {
      const double s = 1.0 / std::sqrt(static_cast<double>(h->n));
      for (std::size_t j = 0; j < h->n; ++j)
        out[j] = ((k >> j) & 1ull) ? -s : s;
      return;
    }
    if (auto* l = std::get_if<FiniteList>(&v_)) {
      const Vector& m = l->members[static_cast<std::size_t>(k)];
      std::copy(m.begin(), m.end(), out.begin());
      return;
    }
    if (auto* b = std::get_if<LatticeBox>(&v_)) {
      for (std::size_t j = 0; j < b->ranges.size(); ++j) {
        const auto [lo, hi] = b->ranges[j];
        const std::uint64_t w = static_cast<std::uint64_t>(hi - lo) + 1;
        out[j] = b->scale * static_cast<double>(lo + static_cast<long>(k % w));
        k /= w;
      }
      return;
    }
    if (auto* s = std::get_if<Singleton>(&v_)) {
      std::copy(s->point.begin(), s->point.end(), out.begin());
      return;
    }
    throw not_enumerable_error("UnitSphere has no finite enumeration");
  }

  Vector member(std::uint64_t k) const {
    Vector out(dim_);
    member(k, std::span<double>(out));
    return out;
  }

 private:
  FeasibleSet(Variant v, std::size_t dim) : v_(std::move(v)), dim_(dim) {}
  Variant v_;
  std::size_t dim_;
};

// Lazy enumeration handle with the cap check applied up front.
class Enumerator {
 public:
  Enumerator(const FeasibleSet& q, std::uint64_t cap) : q_(&q) {
    if (!q.enumerable()) throw not_enumerable_error("enumerate_feasible: UnitSphere is not enumerable");
    size_ = q.cardinality();
    if (size_ > cap)
      throw resource_limit_error("enumerate_feasible: cardinality " + std::to_string(size_) +
                                 " exceeds cap " + std::to_string(cap));
  }

  std::uint64_t size() const { return size_; }
  std::size_t dim() const { return q_->dim(); }
  void member(std::uint64_t k, std::span<double> out) const { q_->member(k, out); }
  Vector member(std::uint64_t k) const { return q_->member(k); }

 private:
  const FeasibleSet* q_;
  std::uint64_t size_;
};

inline Enumerator enumerate_feasible(const FeasibleSet& q,
                                     std::uint64_t cap = kDefaultEnumerationCap) {
  return Enumerator(q, cap);
}

// Materialized enumeration for small sets (tests, tiny oracles).
inline std::vector<Vector> enumerate_all(const FeasibleSet& q,
                                         std::uint64_t cap = kDefaultEnumerationCap) {
  Enumerator e(q, cap);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(e.size()));
  for (std::uint64_t k = 0; k < e.size(); ++k) out.push_back(e.member(k));
  return out;
}

// ---------------------------------------------------------------------------
// Constraint sets E

// Closed interval, endpoints may be +-inf.
struct Interval {
  double lo;
  double hi;
};

enum class SymmetryKind { full, blocks, none };

struct SymmetrySignature {
  SymmetryKind kind;
  std::vector<std::size_t> block_sizes;  // filled for kind == blocks

  bool operator==(const SymmetrySignature&) const = default;
};

struct SingletonZero {
  std::size_t m;
};

// C^M where C is a finite union of closed intervals, the same in every
// coordinate.
struct IntervalProduct {
  std::size_t m;
  std::vector<Interval> intervals;  // sorted, disjoint
};

// {x : x_i <= b_i}
struct Rectangle {
  Vector upper;
};

struct EuclideanBall {
  std::size_t m;
  double radius;
};

class ConstraintSet;

struct BlockProduct {
  std::vector<ConstraintSet> factors;
};

class ConstraintSet {
 public:
  using Variant = std::variant<SingletonZero, IntervalProduct, Rectangle, BlockProduct, EuclideanBall>;

  static ConstraintSet singleton_zero(std::size_t m) {
    if (m == 0) throw std::invalid_argument("SingletonZero: m must be >= 1");
    return ConstraintSet(SingletonZero{m}, m);
  }

  static ConstraintSet interval_product(std::size_t m, std::vector<Interval> intervals) {
    if (m == 0) throw std::invalid_argument("IntervalProduct: m must be >= 1");
    if (intervals.empty()) throw std::invalid_argument("IntervalProduct: empty coordinate set");
    for (const auto& iv : intervals) {
      if (!(iv.lo <= iv.hi)) throw std::invalid_argument("IntervalProduct: interval with lo > hi");
      if (std::isnan(iv.lo) || std::isnan(iv.hi))
        throw std::invalid_argument("IntervalProduct: NaN endpoint");
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    // merge overlaps into canonical disjoint form
    std::vector<Interval> merged;
    for (const auto& iv : intervals) {
      if (!merged.empty() && iv.lo <= merged.back().hi) {
        merged.back().hi = std::max(merged.back().hi, iv.hi);
      } else {
        merged.push_back(iv);
      }
    }
    return ConstraintSet(IntervalProduct{m, std::move(merged)}, m);
  }

  static ConstraintSet half_line_product(std::size_t m, double k) {
    return interval_product(m, {Interval{k, kInf}});
  }

  static ConstraintSet rectangle(Vector upper) {
    if (upper.empty()) throw std::invalid_argument("Rectangle: empty bound vector");
    const std::size_t m = upper.size();
    return ConstraintSet(Rectangle{std::move(upper)}, m);
  }

  static ConstraintSet euclidean_ball(std::size_t m, double radius) {
    if (m == 0) throw std::invalid_argument("EuclideanBall: m must be >= 1");
    if (!(radius >= 0.0)) throw std::invalid_argument("EuclideanBall: radius must be >= 0");
    return ConstraintSet(EuclideanBall{m, radius}, m);
  }

  static ConstraintSet block_product(std::vector<ConstraintSet> factors) {
    if (factors.empty()) throw std::invalid_argument("BlockProduct: empty factor list");
    std::size_t m = 0;
    for (const auto& f : factors) m += f.dim();
    return ConstraintSet(BlockProduct{std::move(factors)}, m);
  }

  const Variant& variant() const { return *v_; }
  std::size_t dim() const { return dim_; }

  // Declared symmetry. Rectangle with constant bounds upgrades to full.
  SymmetrySignature symmetry() const {
    if (std::holds_alternative<SingletonZero>(*v_) ||
        std::holds_alternative<IntervalProduct>(*v_) ||
        std::holds_alternative<EuclideanBall>(*v_))
      return {SymmetryKind::full, {}};
    if (auto* r = std::get_if<Rectangle>(v_.get())) {
      const bool constant = std::all_of(r->upper.begin(), r->upper.end(),
                                        [&](double b) { return b == r->upper.front(); });
      return constant ? SymmetrySignature{SymmetryKind::full, {}}
                      : SymmetrySignature{SymmetryKind::none, {}};
    }
    const auto& bp = std::get<BlockProduct>(*v_);
    SymmetrySignature sig{SymmetryKind::blocks, {}};
    for (const auto& f : bp.factors) {
      if (f.symmetry().kind != SymmetryKind::full) return {SymmetryKind::none, {}};
      sig.block_sizes.push_back(f.dim());
    }
    return sig;
  }

  // True when the set factors into one-dimensional coordinate sets, i.e.
  // every leaf is SingletonZero, IntervalProduct or Rectangle.
  bool coordinatewise() const {
    if (std::holds_alternative<EuclideanBall>(*v_)) return false;
    if (auto* bp = std::get_if<BlockProduct>(v_.get()))
      return std::all_of(bp->factors.begin(), bp->factors.end(),
                         [](const ConstraintSet& f) { return f.coordinatewise(); });
    return true;
  }

  bool contains_ball() const { return !coordinatewise(); }

 private:
  ConstraintSet(Variant v, std::size_t dim)
      : v_(std::make_shared<Variant>(std::move(v))), dim_(dim) {}
  std::shared_ptr<const Variant> v_;  // immutable after construction
  std::size_t dim_;
};

inline SymmetrySignature symmetry_signature(const ConstraintSet& e) { return e.symmetry(); }

// ---------------------------------------------------------------------------
// Distance and projection

struct DistanceResult {
  double dist = 0.0;
  Vector projection;    // z in E
  Vector residual;      // v = x - z
  Vector abs_residual;  // |v|
};

namespace detail {

// Nearest point of a finite union of closed intervals; equidistant ties take
// the smaller endpoint.
inline double project_1d(const std::vector<Interval>& intervals, double x) {
  double best = 0.0;
  double best_d = kInf;
  for (const auto& iv : intervals) {
    double cand, d;
    if (x < iv.lo) {
      cand = iv.lo;
      d = iv.lo - x;
    } else if (x > iv.hi) {
      cand = iv.hi;
      d = x - iv.hi;
    } else {
      return x;  // inside, distance 0
    }
    if (d < best_d || (d == best_d && cand < best)) {
      best_d = d;
      best = cand;
    }
  }
  return best;
}

inline double dist_1d(const std::vector<Interval>& intervals, double x) {
  double best = kInf;
  for (const auto& iv : intervals) {
    if (x < iv.lo) best = std::min(best, iv.lo - x);
    else if (x > iv.hi) best = std::min(best, x - iv.hi);
    else return 0.0;
  }
  return best;
}

// Per-coordinate view of a coordinatewise constraint set: coordinate i is
// constrained to the interval union coord(i). Interval storage is pooled so
// shared coordinate sets (IntervalProduct) are stored once.
struct CoordTable {
  std::vector<Interval> pool;
  // per-coordinate (offset, count) into the pool
  std::vector<std::pair<std::uint32_t, std::uint32_t>> index;

  std::span<const Interval> coord(std::size_t i) const {
    const auto [off, cnt] = index[i];
    return {pool.data() + off, cnt};
  }

  double dist(std::size_t i, double x) const {
    const auto [off, cnt] = index[i];
    const Interval* iv = pool.data() + off;
    double best = kInf;
    for (std::uint32_t k = 0; k < cnt; ++k) {
      if (x < iv[k].lo) best = std::min(best, iv[k].lo - x);
      else if (x > iv[k].hi) best = std::min(best, x - iv[k].hi);
      else return 0.0;
    }
    return best;
  }
};

inline void append_coord_table(const ConstraintSet& e, CoordTable& t) {
  const auto& v = e.variant();
  if (auto* z = std::get_if<SingletonZero>(&v)) {
    const auto off = static_cast<std::uint32_t>(t.pool.size());
    t.pool.push_back(Interval{0.0, 0.0});
    for (std::size_t i = 0; i < z->m; ++i) t.index.emplace_back(off, 1);
    return;
  }
  if (auto* ip = std::get_if<IntervalProduct>(&v)) {
    const auto off = static_cast<std::uint32_t>(t.pool.size());
    t.pool.insert(t.pool.end(), ip->intervals.begin(), ip->intervals.end());
    const auto cnt = static_cast<std::uint32_t>(ip->intervals.size());
    for (std::size_t i = 0; i < ip->m; ++i) t.index.emplace_back(off, cnt);
    return;
  }
  if (auto* r = std::get_if<Rectangle>(&v)) {
    for (double b : r->upper) {
      const auto off = static_cast<std::uint32_t>(t.pool.size());
      t.pool.push_back(Interval{-kInf, b});
      t.index.emplace_back(off, 1);
    }
    return;
  }
  if (auto* bp = std::get_if<BlockProduct>(&v)) {
    for (const auto& f : bp->factors) append_coord_table(f, t);
    return;
  }
  throw unsupported_combination_error("constraint set is not coordinatewise");
}

inline CoordTable build_coord_table(const ConstraintSet& e) {
  CoordTable t;
  t.pool.reserve(8);
  t.index.reserve(e.dim());
  append_coord_table(e, t);
  return t;
}

// Recursive distance: fills z for the subvector [begin, begin+dim) and
// returns nothing; aggregation happens on the residual afterwards.
inline void project_onto(const ConstraintSet& e, std::span<const double> x,
                         std::span<double> z, double q) {
  const auto& v = e.variant();
  if (std::holds_alternative<SingletonZero>(v)) {
    std::fill(z.begin(), z.end(), 0.0);
    return;
  }
  if (auto* ip = std::get_if<IntervalProduct>(&v)) {
    for (std::size_t i = 0; i < ip->m; ++i) z[i] = project_1d(ip->intervals, x[i]);
    return;
  }
  if (auto* r = std::get_if<Rectangle>(&v)) {
    for (std::size_t i = 0; i < r->upper.size(); ++i) z[i] = std::min(x[i], r->upper[i]);
    return;
  }
  if (auto* bp = std::get_if<BlockProduct>(&v)) {
    std::size_t off = 0;
    for (const auto& f : bp->factors) {
      project_onto(f, x.subspan(off, f.dim()), z.subspan(off, f.dim()), q);
      off += f.dim();
    }
    return;
  }
  const auto& ball = std::get<EuclideanBall>(v);
  if (q != 2.0)
    throw unsupported_combination_error(
        "EuclideanBall supports only q = 2 (radial projection); other exponents are rejected");
  const double nx = norm2(x);
  if (nx <= ball.radius) {
    std::copy(x.begin(), x.end(), z.begin());
  } else {
    const double s = ball.radius / nx;
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = s * x[i];
  }
}

}  // namespace detail

// Exact lq distance from x to E with the projection point. Coordinatewise
// sets decompose exactly for every q in [2, inf]; the Euclidean ball is exact
// only for q = 2 and rejects other exponents.
inline DistanceResult lq_distance(const ConstraintSet& e, std::span<const double> x, double q) {
  check_exponent(q);
  if (x.size() != e.dim()) throw std::invalid_argument("lq_distance: dimension mismatch");
  for (double xi : x)
    if (!std::isfinite(xi)) throw std::invalid_argument("lq_distance: non-finite input");
  DistanceResult r;
  r.projection.resize(x.size());
  detail::project_onto(e, x, std::span<double>(r.projection), q);
  r.residual.resize(x.size());
  r.abs_residual.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.residual[i] = x[i] - r.projection[i];
    r.abs_residual[i] = std::abs(r.residual[i]);
  }
  r.dist = lq_norm(r.residual, q);
  return r;
}

inline DistanceResult lq_distance(const ConstraintSet& e, const Vector& x, double q) {
  return lq_distance(e, std::span<const double>(x), q);
}

inline bool in_expansion(const ConstraintSet& e, const Vector& x, double delta, double q) {
  if (!(delta >= 0.0)) throw std::invalid_argument("in_expansion: delta must be >= 0");
  return lq_distance(e, x, q).dist <= delta;
}

}  // namespace marginlab
