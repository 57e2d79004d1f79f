#pragma once
//! \file
//! \brief Weighted metric graphs: the measure model, vertex/edge fields,
//! generators, refinement and restriction.
//!
//! The measure is mu = sum_e w_e (length measure on e) + sum_v a_v delta_v.
//! Integrals of vertex fields use the lumped masses
//! mu_v = a_v + 1/2 sum_{e ~ v} w_e l_e, which conserve total mass exactly.

#include "sdl/normed.hpp"
#include "sdl/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdl {

struct VertexTag {};
struct EdgeTag {};

/// Strongly typed vector of per-vertex or per-edge values.
template <class Tag, class S>
struct Field {
  std::vector<S> values;

  Field() = default;
  explicit Field(std::vector<S> v) : values(std::move(v)) {}
  Field(std::size_t n, const S& fill) : values(n, fill) {}
  Field(std::initializer_list<S> init) : values(init) {}

  std::size_t size() const { return values.size(); }
  S& operator[](std::size_t i) { return values[i]; }
  const S& operator[](std::size_t i) const { return values[i]; }
  const S& at(std::size_t i) const { return values.at(i); }
  auto begin() const { return values.begin(); }
  auto end() const { return values.end(); }

  friend bool operator==(const Field&, const Field&) = default;
};

template <class S = double>
using ScalarField = Field<VertexTag, S>;
template <class S = double>
using EdgeField = Field<EdgeTag, S>;

/// Nonnegative density: an edge part (w.r.t. edge measure) and a vertex part
/// (value at the atom).
template <class S = double>
struct DensityField {
  std::vector<S> edge;
  std::vector<S> vertex;
};

template <class S>
struct VertexData {
  std::vector<double> x;
  S atom{0};
};

template <class S>
struct EdgeSpec {
  std::size_t tail = 0;
  std::size_t head = 0;
  S density{1};
  std::optional<S> length;  ///< defaults to the norm distance of the endpoints
};

template <class S>
struct EdgeData {
  std::size_t tail = 0;
  std::size_t head = 0;
  S density{1};
  S length{1};
};

/// Edge incident to a vertex; sign is +1 at the head, -1 at the tail.
struct Incidence {
  std::size_t edge;
  std::size_t other;
  int sign;
};

template <class S>
class Instance {
 public:
  using scalar_type = S;

  Instance(Norm norm, std::vector<VertexData<S>> vertices, const std::vector<EdgeSpec<S>>& edges)
      : norm_(std::move(norm)), vertices_(std::move(vertices)) {
    for (const auto& v : vertices_)
      if (v.x.size() != norm_.dimension())
        throw std::invalid_argument("vertex coordinate dimension does not match the norm");
    edges_.reserve(edges.size());
    for (const auto& e : edges) {
      if (e.tail >= vertices_.size() || e.head >= vertices_.size())
        throw std::invalid_argument("edge endpoint out of range");
      EdgeData<S> d{e.tail, e.head, e.density, S{}};
      if (e.length) {
        d.length = *e.length;
      } else {
        std::vector<double> diff(norm_.dimension());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = vertices_[e.head].x[i] - vertices_[e.tail].x[i];
        d.length = scalar_traits<S>::from_double(norm_(diff));
      }
      edges_.push_back(std::move(d));
    }
    derive();
  }

  const Norm& norm() const { return norm_; }
  std::size_t dimension() const { return norm_.dimension(); }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const VertexData<S>& vertex(std::size_t v) const { return vertices_[v]; }
  const EdgeData<S>& edge(std::size_t e) const { return edges_[e]; }
  const std::vector<VertexData<S>>& vertices() const { return vertices_; }
  const std::vector<EdgeData<S>>& edges() const { return edges_; }

  const S& atom(std::size_t v) const { return vertices_[v].atom; }
  const S& length(std::size_t e) const { return edges_[e].length; }
  const S& density(std::size_t e) const { return edges_[e].density; }
  const S& edge_mass(std::size_t e) const { return edge_mass_[e]; }
  const S& lumped_mass(std::size_t v) const { return lumped_[v]; }
  const S& total_mass() const { return total_mass_; }

  std::span<const Incidence> incident(std::size_t v) const { return incidence_[v]; }
  std::size_t component_of(std::size_t v) const { return component_[v]; }
  std::size_t num_components() const { return num_components_; }

  std::vector<EdgeSpec<S>> edge_specs() const {
    std::vector<EdgeSpec<S>> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back({e.tail, e.head, e.density, e.length});
    return out;
  }

  /// Same instance over another scalar type (exact when widening to Rational).
  template <class T>
  Instance<T> cast() const {
    std::vector<VertexData<T>> vs;
    vs.reserve(vertices_.size());
    for (const auto& v : vertices_) vs.push_back({v.x, convert<T>(v.atom)});
    std::vector<EdgeSpec<T>> es;
    es.reserve(edges_.size());
    for (const auto& e : edges_) es.push_back({e.tail, e.head, convert<T>(e.density), convert<T>(e.length)});
    return Instance<T>(norm_, std::move(vs), es);
  }

  friend bool operator==(const Instance& a, const Instance& b) {
    if (!(a.norm_ == b.norm_) || a.vertices_.size() != b.vertices_.size() || a.edges_.size() != b.edges_.size())
      return false;
    for (std::size_t v = 0; v < a.vertices_.size(); ++v)
      if (a.vertices_[v].x != b.vertices_[v].x || a.vertices_[v].atom != b.vertices_[v].atom) return false;
    for (std::size_t e = 0; e < a.edges_.size(); ++e) {
      const auto &x = a.edges_[e], &y = b.edges_[e];
      if (x.tail != y.tail || x.head != y.head || x.density != y.density || x.length != y.length) return false;
    }
    return true;
  }

 private:
  template <class T>
  static T convert(const S& x) {
    if constexpr (std::is_same_v<T, S>)
      return x;
    else
      return scalar_traits<T>::from_double(to_double(x));
  }

  void derive() {
    const std::size_t n = vertices_.size();
    edge_mass_.resize(edges_.size());
    lumped_.assign(n, S{0});
    incidence_.assign(n, {});
    total_mass_ = S{0};
    for (std::size_t v = 0; v < n; ++v) {
      lumped_[v] = vertices_[v].atom;
      total_mass_ += vertices_[v].atom;
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& d = edges_[e];
      edge_mass_[e] = d.density * d.length;
      total_mass_ += edge_mass_[e];
      const S half = edge_mass_[e] / S{2};
      lumped_[d.tail] += half;
      lumped_[d.head] += half;
      incidence_[d.tail].push_back({e, d.head, -1});
      incidence_[d.head].push_back({e, d.tail, +1});
    }
    component_.assign(n, n);
    num_components_ = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < n; ++s) {
      if (component_[s] != n) continue;
      component_[s] = num_components_;
      stack.push_back(s);
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (const auto& inc : incidence_[v])
          if (component_[inc.other] == n) {
            component_[inc.other] = num_components_;
            stack.push_back(inc.other);
          }
      }
      ++num_components_;
    }
  }

  Norm norm_;
  std::vector<VertexData<S>> vertices_;
  std::vector<EdgeData<S>> edges_;
  std::vector<S> edge_mass_;
  std::vector<S> lumped_;
  std::vector<std::vector<Incidence>> incidence_;
  std::vector<std::size_t> component_;
  std::size_t num_components_ = 0;
  S total_mass_{0};
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string kind;
  std::string detail;
};

template <class S>
std::vector<Violation> validate(const Instance<S>& inst) {
  std::vector<Violation> out;
  auto finite = [](const S& x) {
    if constexpr (is_exact_v<S>)
      return true;
    else
      return std::isfinite(x);
  };
  for (std::size_t v = 0; v < inst.num_vertices(); ++v) {
    const auto& vd = inst.vertex(v);
    for (double c : vd.x)
      if (!std::isfinite(c)) out.push_back({"nonfinite value", "vertex " + std::to_string(v) + " coordinate"});
    if (!finite(vd.atom))
      out.push_back({"nonfinite value", "vertex " + std::to_string(v) + " atom"});
    else if (vd.atom < S{0})
      out.push_back({"negative atom", "vertex " + std::to_string(v)});
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    const std::string where = "edge " + std::to_string(e);
    if (ed.tail == ed.head) out.push_back({"self-loop", where});
    const auto key = std::minmax(ed.tail, ed.head);
    if (!seen.insert(key).second) out.push_back({"parallel edge", where});
    if (!finite(ed.density))
      out.push_back({"nonfinite value", where + " density"});
    else if (!(ed.density > S{0}))
      out.push_back({"nonpositive density", where});
    if (!finite(ed.length))
      out.push_back({"nonfinite value", where + " length"});
    else if (!(ed.length > S{0}))
      out.push_back({"nonpositive length", where});
  }
  for (std::size_t v = 0; v < inst.num_vertices(); ++v)
    if (!(inst.lumped_mass(v) > S{0})) out.push_back({"nonpositive lumped mass", "vertex " + std::to_string(v)});
  if (inst.num_vertices() == 0 || !(inst.total_mass() > S{0}))
    out.push_back({"nonpositive total mass", "instance"});
  return out;
}

template <class S>
void require_valid(const Instance<S>& inst) {
  const auto issues = validate(inst);
  if (!issues.empty()) throw std::invalid_argument("invalid instance: " + issues.front().kind + " (" + issues.front().detail + ")");
}

// ---------------------------------------------------------------------------
// Generators

enum class Topology { path, grid, tree, star, random_geometric };

struct GeneratorSpec {
  Topology topology = Topology::path;
  std::size_t n = 2;       ///< vertices (path, tree, random-geometric), rows (grid)
  std::size_t m = 2;       ///< grid columns
  std::size_t k = 3;       ///< star leaves
  double radius = 0.4;     ///< random-geometric connection radius
  std::uint64_t seed = 0;
  Norm norm = Norm::lr(2, 2.0);
  double atom = 1.0;
  double density = 1.0;
  std::optional<double> length;  ///< overrides every edge length when set
  bool require_connected = true;
};

namespace detail {

inline Instance<double> assemble(const GeneratorSpec& spec, std::vector<std::vector<double>> coords,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<VertexData<double>> vs;
  vs.reserve(coords.size());
  for (auto& x : coords) vs.push_back({std::move(x), spec.atom});
  std::vector<EdgeSpec<double>> es;
  es.reserve(pairs.size());
  for (const auto& [t, h] : pairs) es.push_back({t, h, spec.density, spec.length});
  Instance<double> inst(spec.norm, std::move(vs), es);
  if (spec.require_connected && inst.num_components() != 1)
    throw std::invalid_argument("generated graph is disconnected (" + std::to_string(inst.num_components()) +
                                " components)");
  require_valid(inst);
  return inst;
}

}  // namespace detail

/// Deterministic given the seed.
inline Instance<double> build_instance(const GeneratorSpec& spec) {
  const std::size_t d = spec.norm.dimension();
  auto point = [d](std::initializer_list<double> head) {
    std::vector<double> x(d, 0.0);
    std::size_t i = 0;
    for (double c : head) {
      if (i < d) x[i] = c;
      ++i;
    }
    return x;
  };
  std::vector<std::vector<double>> coords;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Rng rng(spec.seed);

  switch (spec.topology) {
    case Topology::path:
      if (spec.n < 2) throw std::invalid_argument("path needs n >= 2");
      for (std::size_t i = 0; i < spec.n; ++i) coords.push_back(point({double(i)}));
      for (std::size_t i = 0; i + 1 < spec.n; ++i) pairs.emplace_back(i, i + 1);
      break;
    case Topology::grid:
      if (spec.n < 1 || spec.m < 1 || spec.n * spec.m < 2) throw std::invalid_argument("grid needs n*m >= 2");
      if (d < 2 && spec.n > 1 && spec.m > 1) throw std::invalid_argument("grid needs dimension >= 2");
      // Vertex (r, c) has index r*m + c and sits at (c, r); right edge first.
      for (std::size_t r = 0; r < spec.n; ++r)
        for (std::size_t c = 0; c < spec.m; ++c) coords.push_back(point({double(c), double(r)}));
      for (std::size_t r = 0; r < spec.n; ++r)
        for (std::size_t c = 0; c < spec.m; ++c) {
          const std::size_t v = r * spec.m + c;
          if (c + 1 < spec.m) pairs.emplace_back(v, v + 1);
          if (r + 1 < spec.n) pairs.emplace_back(v, v + spec.m);
        }
      break;
    case Topology::tree:
      if (spec.n < 2) throw std::invalid_argument("tree needs n >= 2");
      coords.push_back(std::vector<double>(d, 0.0));
      for (std::size_t i = 1; i < spec.n; ++i) {
        const std::size_t parent = uniform_index(rng, i);
        std::vector<double> off(d);
        do {
          for (auto& c : off) c = uniform(rng, -1.0, 1.0);
        } while (spec.norm(off) < 0.25);
        std::vector<double> x = coords[parent];
        for (std::size_t j = 0; j < d; ++j) x[j] += off[j];
        coords.push_back(std::move(x));
        pairs.emplace_back(parent, i);
      }
      break;
    case Topology::star:
      if (spec.k < 1) throw std::invalid_argument("star needs k >= 1");
      coords.push_back(std::vector<double>(d, 0.0));
      // Leaf j on axis j mod d, alternating sign, pushed outwards once both
      // signs of every axis are used.
      for (std::size_t j = 0; j < spec.k; ++j) {
        std::vector<double> x(d, 0.0);
        const double sign = (j / d) % 2 == 0 ? 1.0 : -1.0;
        x[j % d] = sign * double(1 + j / (2 * d));
        coords.push_back(std::move(x));
        pairs.emplace_back(0, j + 1);
      }
      break;
    case Topology::random_geometric: {
      if (spec.n < 2) throw std::invalid_argument("random-geometric needs n >= 2");
      if (!(spec.radius > 0.0)) throw std::invalid_argument("random-geometric needs radius > 0");
      for (std::size_t i = 0; i < spec.n; ++i) {
        std::vector<double> x(d);
        for (auto& c : x) c = uniform01(rng);
        coords.push_back(std::move(x));
      }
      std::vector<double> diff(d);
      for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = i + 1; j < spec.n; ++j) {
          for (std::size_t c = 0; c < d; ++c) diff[c] = coords[j][c] - coords[i][c];
          const double dist = spec.norm(diff);
          if (dist > 0.0 && dist <= spec.radius) pairs.emplace_back(i, j);
        }
      if (spec.require_connected) {
        std::vector<bool> touched(spec.n, false);
        for (const auto& [a, b] : pairs) touched[a] = touched[b] = true;
        for (std::size_t i = 0; i < spec.n; ++i)
          if (!touched[i])
            throw std::invalid_argument("radius " + std::to_string(spec.radius) + " leaves vertex " +
                                        std::to_string(i) + " isolated");
      }
      break;
    }
  }
  return detail::assemble(spec, std::move(coords), pairs);
}

// ---------------------------------------------------------------------------
// Subdivision

/// Refined value at a vertex: f_a + t (f_b - f_a).
template <class S>
struct Interpolant {
  std::size_t a;
  std::size_t b;
  S t;
};

template <class S>
struct Subdivision {
  Instance<S> refined;
  std::size_t parts = 2;
  std::size_t coarse_vertices = 0;
  std::vector<Interpolant<S>> interpolation;       ///< per refined vertex
  std::vector<std::vector<std::size_t>> chain;     ///< original edge -> refined vertices tail..head
  std::vector<std::vector<std::size_t>> pieces;    ///< original edge -> refined edges in order

  ScalarField<S> interpolate(const ScalarField<S>& f) const {
    if (f.size() != coarse_vertices) throw std::invalid_argument("field dimension does not match the coarse instance");
    ScalarField<S> out(interpolation.size(), S{0});
    for (std::size_t v = 0; v < interpolation.size(); ++v) {
      const auto& ip = interpolation[v];
      out[v] = f[ip.a] + ip.t * (f[ip.b] - f[ip.a]);
    }
    return out;
  }
};

/// Splits every edge into k equal pieces. Original vertices keep their
/// indices; interior vertices follow, grouped by edge.
template <class S>
Subdivision<S> subdivide(const Instance<S>& inst, std::size_t k) {
  if (k < 2) throw std::invalid_argument("subdivide needs k >= 2");
  const std::size_t n = inst.num_vertices(), d = inst.dimension();
  std::vector<VertexData<S>> vs = inst.vertices();
  std::vector<Interpolant<S>> interp;
  interp.reserve(n + inst.num_edges() * (k - 1));
  for (std::size_t v = 0; v < n; ++v) interp.push_back({v, v, S{0}});
  std::vector<EdgeSpec<S>> es;
  std::vector<std::vector<std::size_t>> chain(inst.num_edges()), pieces(inst.num_edges());
  const S kk = S(static_cast<long long>(k));
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    const auto& xt = inst.vertex(ed.tail).x;
    const auto& xh = inst.vertex(ed.head).x;
    chain[e].push_back(ed.tail);
    for (std::size_t j = 1; j < k; ++j) {
      const double s = double(j) / double(k);
      std::vector<double> x(d);
      for (std::size_t c = 0; c < d; ++c) x[c] = xt[c] + s * (xh[c] - xt[c]);
      chain[e].push_back(vs.size());
      interp.push_back({ed.tail, ed.head, S(static_cast<long long>(j)) / kk});
      vs.push_back({std::move(x), S{0}});
    }
    chain[e].push_back(ed.head);
    const S piece = ed.length / kk;
    for (std::size_t j = 0; j < k; ++j) {
      pieces[e].push_back(es.size());
      es.push_back({chain[e][j], chain[e][j + 1], ed.density, piece});
    }
  }
  return Subdivision<S>{Instance<S>(inst.norm(), std::move(vs), es), k, n, std::move(interp), std::move(chain),
                        std::move(pieces)};
}

// ---------------------------------------------------------------------------
// Restriction

template <class S>
struct Restriction {
  Instance<S> instance;
  std::vector<std::size_t> vertex_map;  ///< restricted vertex -> original vertex
  std::vector<std::size_t> edge_map;    ///< restricted edge -> original edge
};

/// Induced sub-instance on `subset` (order and duplicates ignored; original
/// index order is kept).
template <class S>
Restriction<S> restrict_to(const Instance<S>& inst, std::span<const std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("restriction to an empty vertex set");
  std::vector<std::size_t> keep(subset.begin(), subset.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.back() >= inst.num_vertices()) throw std::invalid_argument("restriction vertex out of range");
  const std::size_t none = inst.num_vertices();
  std::vector<std::size_t> index(inst.num_vertices(), none);
  std::vector<VertexData<S>> vs;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    index[keep[i]] = i;
    vs.push_back(inst.vertex(keep[i]));
  }
  std::vector<EdgeSpec<S>> es;
  std::vector<std::size_t> emap;
  for (std::size_t e = 0; e < inst.num_edges(); ++e) {
    const auto& ed = inst.edge(e);
    if (index[ed.tail] == none || index[ed.head] == none) continue;
    es.push_back({index[ed.tail], index[ed.head], ed.density, ed.length});
    emap.push_back(e);
  }
  return Restriction<S>{Instance<S>(inst.norm(), std::move(vs), es), std::move(keep), std::move(emap)};
}

template <class S>
ScalarField<S> restrict_field(const ScalarField<S>& f, std::span<const std::size_t> vertex_map) {
  ScalarField<S> out;
  out.values.reserve(vertex_map.size());
  for (std::size_t v : vertex_map) out.values.push_back(f.at(v));
  return out;
}

/// mu-weighted pairing sum_v mu_v f_v g_v of two vertex fields.
template <class S>
S lumped_pairing(const Instance<S>& inst, const ScalarField<S>& f, const ScalarField<S>& g) {
  if (f.size() != inst.num_vertices() || g.size() != inst.num_vertices())
    throw std::invalid_argument("field dimension mismatch");
  S s{0};
  for (std::size_t v = 0; v < f.size(); ++v) s += inst.lumped_mass(v) * f[v] * g[v];
  return s;
}

/// Plain sum_v f_v b_v against a vertex measure.
template <class S>
S measure_pairing(const ScalarField<S>& f, std::span<const S> measure) {
  if (f.size() != measure.size()) throw std::invalid_argument("field dimension mismatch");
  S s{0};
  for (std::size_t v = 0; v < f.size(); ++v) s += f[v] * measure[v];
  return s;
}

}  // namespace sdl
