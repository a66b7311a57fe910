/**
 * @file mesh_io.hpp
 * @brief Plain-text mesh files.
 *
 *   <base>.node   count, then `id x y` per line
 *   <base>.ele    count, then `id v1 v2 v3` per line
 *   <base>.bnd    `v1 v2 marker` per line, marker in {D, N}
 *
 * All indices are 0-based; ids must equal the line position.
 */
#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mesh.hpp"

namespace equiflux {

inline std::pair<Mesh, BoundaryPartition> read_mesh_streams(std::istream& nodes, std::istream& elems,
                                                            std::istream& bnd) {
  std::size_t count = 0;
  if (!(nodes >> count)) throw MeshError("node file: missing count");
  std::vector<Vec2> verts(count);
  for (std::size_t i = 0; i < count; ++i) {
    long id;
    double x, y;
    if (!(nodes >> id >> x >> y)) throw MeshError("node file: truncated at entry " + std::to_string(i));
    if (id != static_cast<long>(i)) throw MeshError("node file: ids must be 0-based and consecutive");
    verts[i] = Vec2(x, y);
  }
  if (!(elems >> count)) throw MeshError("element file: missing count");
  std::vector<std::array<int, 3>> tris(count);
  for (std::size_t i = 0; i < count; ++i) {
    long id;
    if (!(elems >> id >> tris[i][0] >> tris[i][1] >> tris[i][2]))
      throw MeshError("element file: truncated at entry " + std::to_string(i));
    if (id != static_cast<long>(i)) throw MeshError("element file: ids must be 0-based and consecutive");
  }
  BoundaryMarkerMap markers;
  int a, b;
  std::string m;
  while (bnd >> a >> b >> m) {
    if (m == "D")
      markers[edge_key(a, b)] = BoundaryMarker::Dirichlet;
    else if (m == "N")
      markers[edge_key(a, b)] = BoundaryMarker::Neumann;
    else
      throw MeshError("boundary file: unknown marker '" + m + "'");
  }
  return build_mesh(std::move(verts), std::move(tris), markers);
}

inline std::pair<Mesh, BoundaryPartition> read_mesh(const std::string& base) {
  std::ifstream n(base + ".node"), e(base + ".ele"), b(base + ".bnd");
  if (!n) throw MeshError("cannot open " + base + ".node");
  if (!e) throw MeshError("cannot open " + base + ".ele");
  if (!b) throw MeshError("cannot open " + base + ".bnd");
  return read_mesh_streams(n, e, b);
}

inline void write_mesh_streams(const Mesh& mesh, const BoundaryPartition& bp, std::ostream& nodes,
                               std::ostream& elems, std::ostream& bnd) {
  nodes << mesh.num_vertices() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i)
    nodes << i << ' ' << mesh.vertices[i][0] << ' ' << mesh.vertices[i][1] << '\n';
  elems << mesh.num_elements() << '\n';
  for (std::size_t k = 0; k < mesh.num_elements(); ++k)
    elems << k << ' ' << mesh.elements[k][0] << ' ' << mesh.elements[k][1] << ' ' << mesh.elements[k][2] << '\n';
  for (std::size_t f = 0; f < mesh.num_faces(); ++f)
    if (mesh.faces[f].is_boundary())
      bnd << mesh.faces[f].vertices[0] << ' ' << mesh.faces[f].vertices[1] << ' ' << marker_char(bp.marker[f]) << '\n';
}

inline void write_mesh(const Mesh& mesh, const BoundaryPartition& bp, const std::string& base) {
  std::ofstream n(base + ".node"), e(base + ".ele"), b(base + ".bnd");
  if (!n || !e || !b) throw MeshError("cannot write mesh files at " + base);
  write_mesh_streams(mesh, bp, n, e, b);
}

}  // namespace equiflux
