/**
 * @file mesh.hpp
 * @brief Conforming triangular meshes, boundary partitions, vertex patches
 * and hat functions.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "quadrature.hpp"

namespace equiflux {

/// Raised when mesh ingestion detects invalid input.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryMarker : std::uint8_t { Interior, Dirichlet, Neumann };

inline char marker_char(BoundaryMarker m) {
  return m == BoundaryMarker::Dirichlet ? 'D' : (m == BoundaryMarker::Neumann ? 'N' : 'I');
}

/// Affine map x = origin + jacobian * x̂ of one element.
struct ElementGeometry {
  Vec2 origin;
  Mat2 jacobian;
  Mat2 inverse;
  double det = 0.0;

  Vec2 map(const Vec2& xhat) const { return origin + jacobian * xhat; }
  Vec2 pullback(const Vec2& x) const { return inverse * (x - origin); }
  double area() const { return 0.5 * det; }
};

struct Face {
  std::array<int, 2> vertices{};     // sorted ascending; defines the face parameter direction
  std::array<int, 2> elements{-1, -1};
  std::array<int, 2> local{-1, -1};  // local face index in each adjacent element
  bool is_boundary() const { return elements[1] < 0; }
};

/**
 * @brief Conforming 2D simplicial mesh.
 *
 * Elements are stored counterclockwise; local face l of an element is
 * opposite its local vertex l and runs from local vertex l+1 to l+2.
 */
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> elements;
  std::vector<Face> faces;
  std::vector<std::array<int, 3>> element_faces;
  std::vector<std::vector<int>> vertex_elements;
  std::vector<double> diameters;
  std::vector<ElementGeometry> geometry;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_elements() const { return elements.size(); }
  std::size_t num_faces() const { return faces.size(); }

  std::vector<int> boundary_faces() const {
    std::vector<int> out;
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (faces[f].is_boundary()) out.push_back(static_cast<int>(f));
    return out;
  }

  /// max over elements of h_K / inradius(K)
  double shape_regularity() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < elements.size(); ++k) {
      const auto& e = elements[k];
      const double a = (vertices[e[1]] - vertices[e[2]]).norm();
      const double b = (vertices[e[2]] - vertices[e[0]]).norm();
      const double c = (vertices[e[0]] - vertices[e[1]]).norm();
      const double inradius = 2.0 * geometry[k].area() / (a + b + c);
      worst = std::max(worst, diameters[k] / inradius);
    }
    return worst;
  }

  double domain_diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      for (std::size_t j = i + 1; j < vertices.size(); ++j)
        d = std::max(d, (vertices[i] - vertices[j]).norm());
    return d;
  }

  double area() const {
    double a = 0.0;
    for (const auto& g : geometry) a += g.area();
    return a;
  }

  /// Outward unit normal of element `elem` on its local face `local`.
  Vec2 outward_normal(int elem, int local) const {
    const auto& e = elements[elem];
    const Vec2 t = vertices[e[(local + 2) % 3]] - vertices[e[(local + 1) % 3]];
    return Vec2(t[1], -t[0]).normalized();
  }

  double face_length(int f) const {
    return (vertices[faces[f].vertices[1]] - vertices[faces[f].vertices[0]]).norm();
  }
};

/// Dirichlet/Neumann marker per face (Interior for interior faces).
struct BoundaryPartition {
  std::vector<BoundaryMarker> marker;

  bool has_dirichlet() const {
    return std::any_of(marker.begin(), marker.end(), [](auto m) { return m == BoundaryMarker::Dirichlet; });
  }
  bool all_neumann() const { return !has_dirichlet(); }

  static BoundaryPartition uniform(const Mesh& mesh, BoundaryMarker m) {
    BoundaryPartition bp;
    bp.marker.resize(mesh.num_faces(), BoundaryMarker::Interior);
    for (std::size_t f = 0; f < mesh.num_faces(); ++f)
      if (mesh.faces[f].is_boundary()) bp.marker[f] = m;
    return bp;
  }
};

/// Boundary marker keyed by an unordered vertex pair.
using BoundaryMarkerMap = std::map<std::pair<int, int>, BoundaryMarker>;

inline std::pair<int, int> edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

namespace detail {

inline ElementGeometry make_geometry(const Vec2& a, const Vec2& b, const Vec2& c) {
  ElementGeometry g;
  g.origin = a;
  g.jacobian.col(0) = b - a;
  g.jacobian.col(1) = c - a;
  g.det = g.jacobian.determinant();
  g.inverse = g.jacobian.inverse();
  return g;
}

}  // namespace detail

/**
 * @brief Builds faces, adjacency and geometry; orients elements
 * counterclockwise.
 *
 * @throws MeshError on out-of-range indices, duplicate or zero-area
 * elements, edges shared by more than two elements, and unmarked boundary
 * faces.
 */
inline std::pair<Mesh, BoundaryPartition> build_mesh(std::vector<Vec2> vertices,
                                                     std::vector<std::array<int, 3>> elements,
                                                     const BoundaryMarkerMap& markers) {
  if (elements.empty()) throw MeshError("mesh has no elements");
  Mesh mesh;
  mesh.vertices = std::move(vertices);
  const int nv = static_cast<int>(mesh.vertices.size());
  std::map<std::array<int, 3>, int> seen;
  for (auto& e : elements) {
    for (int v : e)
      if (v < 0 || v >= nv) throw MeshError("vertex index out of range: " + std::to_string(v));
    if (e[0] == e[1] || e[1] == e[2] || e[0] == e[2]) throw MeshError("zero-area element (repeated vertex)");
    auto key = e;
    std::sort(key.begin(), key.end());
    if (!seen.emplace(key, 0).second) throw MeshError("duplicate element");
    const Vec2& a = mesh.vertices[e[0]];
    const Vec2& b = mesh.vertices[e[1]];
    const Vec2& c = mesh.vertices[e[2]];
    const double cross = (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0];
    const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
    if (std::abs(cross) <= 1e-14 * scale) throw MeshError("zero-area element");
    if (cross < 0.0) std::swap(e[1], e[2]);
  }
  mesh.elements = std::move(elements);

  std::map<std::pair<int, int>, int> face_index;
  mesh.element_faces.resize(mesh.elements.size());
  for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
    const auto& e = mesh.elements[k];
    for (int l = 0; l < 3; ++l) {
      const auto key = edge_key(e[(l + 1) % 3], e[(l + 2) % 3]);
      auto [it, inserted] = face_index.emplace(key, static_cast<int>(mesh.faces.size()));
      if (inserted) {
        Face f;
        f.vertices = {key.first, key.second};
        f.elements[0] = static_cast<int>(k);
        f.local[0] = l;
        mesh.faces.push_back(f);
      } else {
        Face& f = mesh.faces[it->second];
        if (f.elements[1] >= 0)
          throw MeshError("non-conforming connectivity: edge (" + std::to_string(key.first) + "," +
                          std::to_string(key.second) + ") shared by more than two elements");
        f.elements[1] = static_cast<int>(k);
        f.local[1] = l;
      }
      mesh.element_faces[k][l] = it->second;
    }
  }

  mesh.vertex_elements.assign(mesh.vertices.size(), {});
  mesh.geometry.reserve(mesh.elements.size());
  for (std::size_t k = 0; k < mesh.elements.size(); ++k) {
    const auto& e = mesh.elements[k];
    for (int v : e) mesh.vertex_elements[v].push_back(static_cast<int>(k));
    mesh.geometry.push_back(detail::make_geometry(mesh.vertices[e[0]], mesh.vertices[e[1]], mesh.vertices[e[2]]));
    mesh.diameters.push_back(std::max({(mesh.vertices[e[0]] - mesh.vertices[e[1]]).norm(),
                                       (mesh.vertices[e[1]] - mesh.vertices[e[2]]).norm(),
                                       (mesh.vertices[e[2]] - mesh.vertices[e[0]]).norm()}));
  }

  BoundaryPartition bp;
  bp.marker.assign(mesh.faces.size(), BoundaryMarker::Interior);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    const auto key = edge_key(face.vertices[0], face.vertices[1]);
    auto it = markers.find(key);
    if (face.is_boundary()) {
      if (it == markers.end() || it->second == BoundaryMarker::Interior)
        throw MeshError("unmarked boundary face (" + std::to_string(key.first) + "," +
                        std::to_string(key.second) + ")");
      bp.marker[f] = it->second;
    }
  }
  return {std::move(mesh), std::move(bp)};
}

/// Markers of all boundary faces of a mesh, keyed by vertex pair.
inline BoundaryMarkerMap marker_map(const Mesh& mesh, const BoundaryPartition& bp) {
  BoundaryMarkerMap out;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
    if (mesh.faces[f].is_boundary()) out[edge_key(mesh.faces[f].vertices[0], mesh.faces[f].vertices[1])] = bp.marker[f];
  return out;
}

enum class VertexClass : std::uint8_t { Interior, Dirichlet };

/**
 * @brief Interior-or-Neumann vertices versus Dirichlet vertices.
 *
 * A vertex is Dirichlet iff it lies on the closure of Γ_D, i.e. it is an
 * endpoint of some Dirichlet face. With Γ_D empty every vertex is interior.
 */
inline std::vector<VertexClass> classify_vertices(const Mesh& mesh, const BoundaryPartition& bp) {
  std::vector<VertexClass> cls(mesh.num_vertices(), VertexClass::Interior);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
    if (bp.marker[f] == BoundaryMarker::Dirichlet)
      for (int v : mesh.faces[f].vertices) cls[v] = VertexClass::Dirichlet;
  return cls;
}

/// Number of connected components of the faces carrying `m` (joined at shared vertices).
inline int marker_components(const Mesh& mesh, const BoundaryPartition& bp, BoundaryMarker m) {
  std::vector<int> parent(mesh.num_vertices());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> used(mesh.num_vertices(), 0);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (bp.marker[f] != m) continue;
    const auto [a, b] = mesh.faces[f].vertices;
    used[a] = used[b] = 1;
    parent[find(a)] = find(b);
  }
  int count = 0;
  for (std::size_t v = 0; v < used.size(); ++v)
    if (used[v] && find(static_cast<int>(v)) == static_cast<int>(v)) ++count;
  return count;
}

/// Vertex patch ω_a with its boundary bookkeeping.
struct Patch {
  int center = -1;
  VertexClass vertex_class = VertexClass::Interior;
  std::vector<int> elements;        // T^a
  std::vector<int> interior_faces;  // faces containing a shared by two patch elements
  std::vector<int> boundary_faces;  // faces of ∂ω_a
  std::vector<int> dirichlet_faces; // ∂ω_a ∩ Γ_D
  std::vector<int> gamma_faces;     // Γ_a: faces of ∂ω_a not containing a
  double diameter = 0.0;

  bool contains_element(int k) const { return std::find(elements.begin(), elements.end(), k) != elements.end(); }
  /// local vertex index of the center in element k, or -1
  int local_index(const Mesh& mesh, int k) const {
    const auto& e = mesh.elements[k];
    for (int l = 0; l < 3; ++l)
      if (e[l] == center) return l;
    return -1;
  }
};

inline Patch vertex_patch(const Mesh& mesh, const BoundaryPartition& bp, const std::vector<VertexClass>& classes,
                          int a) {
  if (a < 0 || a >= static_cast<int>(mesh.num_vertices())) throw std::out_of_range("vertex_patch: bad vertex");
  Patch patch;
  patch.center = a;
  patch.vertex_class = classes[a];
  patch.elements = mesh.vertex_elements[a];
  std::vector<int> touched;
  for (int k : patch.elements)
    for (int f : mesh.element_faces[k]) touched.push_back(f);
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (int f : touched) {
    const Face& face = mesh.faces[f];
    const bool in0 = patch.contains_element(face.elements[0]);
    const bool in1 = face.elements[1] >= 0 && patch.contains_element(face.elements[1]);
    const bool has_a = face.vertices[0] == a || face.vertices[1] == a;
    if (in0 && in1) {
      patch.interior_faces.push_back(f);
      continue;
    }
    patch.boundary_faces.push_back(f);
    if (bp.marker[f] == BoundaryMarker::Dirichlet) patch.dirichlet_faces.push_back(f);
    if (!has_a) patch.gamma_faces.push_back(f);
  }
  std::vector<int> verts;
  for (int k : patch.elements)
    for (int v : mesh.elements[k]) verts.push_back(v);
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      patch.diameter = std::max(patch.diameter, (mesh.vertices[verts[i]] - mesh.vertices[verts[j]]).norm());
  return patch;
}

inline Patch vertex_patch(const Mesh& mesh, const BoundaryPartition& bp, int a) {
  return vertex_patch(mesh, bp, classify_vertices(mesh, bp), a);
}

/// Hat function ψ_a at physical point x in element k, with its constant gradient there.
inline std::pair<double, Vec2> hat_eval(const Mesh& mesh, const Patch& patch, int k, const Vec2& x) {
  const int l = patch.local_index(mesh, k);
  if (l < 0) throw std::invalid_argument("hat_eval: element not in patch");
  const ElementGeometry& g = mesh.geometry[k];
  const Vec2 xhat = g.pullback(x);
  const Eigen::Vector3d lam(1.0 - xhat[0] - xhat[1], xhat[0], xhat[1]);
  // reference gradients of barycentric coordinates
  static const std::array<Vec2, 3> dlam = {Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  const Vec2 grad = g.inverse.transpose() * dlam[l];
  return {lam[l], grad};
}

/// Physical gradient of the barycentric coordinate of local vertex l in element k.
inline Vec2 barycentric_gradient(const Mesh& mesh, int k, int l) {
  static const std::array<Vec2, 3> dlam = {Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  return mesh.geometry[k].inverse.transpose() * dlam[l];
}

/// Uniformly refined mesh together with the parent element of each child.
struct RefinedMesh {
  Mesh mesh;
  BoundaryPartition partition;
  std::vector<int> parent;
};

/// Splits every triangle into four similar ones via edge midpoints; markers are inherited.
inline RefinedMesh refine_uniform(const Mesh& mesh, const BoundaryPartition& bp) {
  std::vector<Vec2> verts = mesh.vertices;
  std::vector<int> midpoint(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    const auto [a, b] = mesh.faces[f].vertices;
    midpoint[f] = static_cast<int>(verts.size());
    verts.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
  }
  std::vector<std::array<int, 3>> elems;
  std::vector<int> parent;
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& e = mesh.elements[k];
    const auto& ef = mesh.element_faces[k];
    const int m0 = midpoint[ef[0]], m1 = midpoint[ef[1]], m2 = midpoint[ef[2]];
    elems.push_back({e[0], m2, m1});
    elems.push_back({m2, e[1], m0});
    elems.push_back({m1, m0, e[2]});
    elems.push_back({m0, m1, m2});
    for (int i = 0; i < 4; ++i) parent.push_back(static_cast<int>(k));
  }
  BoundaryMarkerMap markers;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.faces[f].is_boundary()) continue;
    const auto [a, b] = mesh.faces[f].vertices;
    markers[edge_key(a, midpoint[f])] = bp.marker[f];
    markers[edge_key(midpoint[f], b)] = bp.marker[f];
  }
  auto [fine, fine_bp] = build_mesh(std::move(verts), std::move(elems), markers);
  return {std::move(fine), std::move(fine_bp), std::move(parent)};
}

/**
 * @brief Structured mesh of the unit square: n x n cells, each split by a
 * diagonal into two triangles (2 n^2 elements).
 *
 * With `perturb > 0` interior vertices are displaced by up to perturb * h
 * and diagonal directions are drawn at random (seeded), giving an
 * unstructured-looking conforming mesh.
 */
inline std::vector<Vec2> square_vertices(int n, double perturb, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double h = 1.0 / n;
  std::vector<Vec2> verts;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      Vec2 x(i * h, j * h);
      if (perturb > 0.0 && i > 0 && i < n && j > 0 && j < n) {
        x[0] += perturb * h * unif(rng);
        x[1] += perturb * h * unif(rng);
      }
      verts.push_back(x);
    }
  return verts;
}

inline std::pair<Mesh, BoundaryPartition> structured_square(int n, BoundaryMarker marker = BoundaryMarker::Dirichlet,
                                                            double perturb = 0.0, std::uint64_t seed = 0) {
  if (n < 1) throw MeshError("structured_square: n must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Vec2> verts = square_vertices(n, perturb, rng);
  std::bernoulli_distribution flip(0.5);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> elems;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if (perturb > 0.0 && flip(rng)) {
        elems.push_back({v00, v10, v01});
        elems.push_back({v10, v11, v01});
      } else {
        elems.push_back({v00, v10, v11});
        elems.push_back({v00, v11, v01});
      }
    }
  BoundaryMarkerMap markers;
  for (int i = 0; i < n; ++i) {
    markers[edge_key(id(i, 0), id(i + 1, 0))] = marker;
    markers[edge_key(id(i, n), id(i + 1, n))] = marker;
    markers[edge_key(id(0, i), id(0, i + 1))] = marker;
    markers[edge_key(id(n, i), id(n, i + 1))] = marker;
  }
  return build_mesh(std::move(verts), std::move(elems), markers);
}

/// Re-marks boundary faces by a predicate on the face midpoint.
template <class Pred>
BoundaryPartition mark_boundary(const Mesh& mesh, Pred&& is_dirichlet) {
  BoundaryPartition bp = BoundaryPartition::uniform(mesh, BoundaryMarker::Neumann);
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    if (!mesh.faces[f].is_boundary()) continue;
    const Vec2 mid = 0.5 * (mesh.vertices[mesh.faces[f].vertices[0]] + mesh.vertices[mesh.faces[f].vertices[1]]);
    if (is_dirichlet(mid)) bp.marker[f] = BoundaryMarker::Dirichlet;
  }
  return bp;
}

}  // namespace equiflux
