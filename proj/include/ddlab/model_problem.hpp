#pragma once

// Model problem -div(rho grad u) = 1 on the unit square (bilinear Q1
// elements, uniform grid) or on the bar (0, m) with linear elements, split
// into a regular grid of substructures with piecewise-constant rho. Every
// substructure is assembled separately and condensed to its interface.

#include "ddlab/linalg.hpp"
#include "ddlab/parallel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ddlab {

enum class Geometry { square, bar };

/// Edges of the unit square (the bar uses left/right only).
enum class Edge : unsigned { left = 1u, right = 2u, bottom = 4u, top = 8u };

struct DirichletEdges {
  unsigned mask = static_cast<unsigned>(Edge::left);

  [[nodiscard]] bool has(Edge e) const { return (mask & static_cast<unsigned>(e)) != 0; }
  static DirichletEdges left() { return {static_cast<unsigned>(Edge::left)}; }
  static DirichletEdges left_bottom() { return {static_cast<unsigned>(Edge::left) | static_cast<unsigned>(Edge::bottom)}; }
  static DirichletEdges all() { return {15u}; }
};

/// Piecewise-constant coefficient: uniform value or a checkerboard where
/// substructure (sx, sy) gets `first` when sx + sy is even, else `second`.
struct Coefficients {
  enum class Kind { uniform, checkerboard };
  Kind kind = Kind::uniform;
  double first = 1.0;
  double second = 1.0;

  static Coefficients uniform(double rho) { return {Kind::uniform, rho, rho}; }
  static Coefficients checkerboard(double a, double b) { return {Kind::checkerboard, a, b}; }
  [[nodiscard]] double value(int sx, int sy) const
  {
    return kind == Kind::uniform || (sx + sy) % 2 == 0 ? first : second;
  }
};

/// Interface residual used in solve experiments. `load` assembles the
/// condensed unit-source loads of the substructures.
struct RhsSeed {
  enum class Kind { zero, ones, random, load };
  Kind kind = Kind::random;
  std::uint64_t seed = 42;
};

struct ProblemConfig {
  Geometry geometry = Geometry::square;
  int subs_x = 2;  // substructures per direction
  int subs_y = 2;
  int elems_per_sub = 2;  // H/h
  Coefficients coefficient{};
  DirichletEdges dirichlet{};
  RhsSeed rhs{};

  /// Throws ConfigError on non-positive sizes, non-positive rho, or no
  /// Dirichlet edge.
  void validate() const;
  [[nodiscard]] int num_subs() const { return subs_x * subs_y; }
};

/// The 1D desk example: (0, 2), four elements of h = 1/2, two
/// substructures, Dirichlet at x = 0.
ProblemConfig bar4_config();

struct Element {
  std::vector<int> nodes;  // 2 (bar) or 4 (quad, counterclockwise from lower left)
  int sub = 0;
};

struct Mesh {
  Geometry geometry = Geometry::square;
  double hx = 1.0;
  double hy = 1.0;
  std::vector<std::array<double, 2>> coords;
  std::vector<bool> dirichlet;                   // per node
  std::vector<Element> elements;
  std::vector<std::vector<int>> sub_elements;    // element ids per substructure
  std::vector<std::vector<int>> sub_nodes;       // sorted node ids per substructure
  std::vector<std::vector<int>> sub_vertices;    // rectangle (or segment) vertices
  std::vector<double> rho;                       // per substructure

  [[nodiscard]] int num_nodes() const { return static_cast<int>(coords.size()); }
  [[nodiscard]] int num_subs() const { return static_cast<int>(sub_nodes.size()); }
};

/// Nodes numbered lexicographically by (y, x); substructures likewise.
Mesh build_mesh(const ProblemConfig& config);

/// rho-free element stiffness (rho = 1).
Matrix element_stiffness(const Mesh& mesh, const Element& element);
/// Consistent load of a unit source on one element.
Vector element_load(const Mesh& mesh, const Element& element);

/// Full local stiffness of one substructure on its non-Dirichlet nodes,
/// ordered by node id, with the (interior, interface) partition.
struct LocalSystem {
  int sub = 0;
  std::vector<int> nodes;           // local dof -> mesh node
  Matrix stiffness;                 // rho_i * sum of element matrices
  Vector load;
  std::vector<Index> interior;      // local dof indices
  std::vector<Index> interface;     // local dof indices, ascending node id
};

/// `is_interface_node[v]` marks non-Dirichlet nodes shared by >= 2 substructures.
LocalSystem assemble_substructure(const Mesh& mesh, int sub, const std::vector<bool>& is_interface_node);

struct Condensed {
  Matrix schur;
  Vector load;
};

/// S = K_GG - K_GI K_II^{-1} K_IG and f = g_G - K_GI K_II^{-1} g_I.
/// Throws NumericalError if K_II is not SPD.
Condensed schur_reduce(const LocalSystem& local);

enum class NullspaceMode { analytic, verify };

/// Orthonormal basis of null(S): the normalized constant when the
/// substructure floats, empty otherwise. In verify mode the analytic count
/// is compared against an eigendecomposition (threshold 1e-10 lambda_max) and
/// a disagreement throws NumericalError.
Matrix nullspace_basis(const Matrix& schur, bool touches_dirichlet,
                       NullspaceMode mode = NullspaceMode::analytic);

struct SubstructureLocal {
  int id = 0;
  Matrix S;
  Vector f;
  Matrix Z;
  std::vector<int> iface_local_to_global;
  bool touches_dirichlet = false;
  double rho = 1.0;

  [[nodiscard]] Index size() const { return S.rows(); }
};

struct Sharer {
  int sub = 0;
  Index local = 0;
};

struct InterfaceMap {
  int n_global = 0;
  std::vector<int> multiplicity;
  std::vector<std::vector<Sharer>> sharers;  // ordered by substructure id
  std::vector<int> node;                     // mesh node of each global dof
  std::vector<bool> is_vertex;               // vertex of some substructure
};

struct Problem {
  ProblemConfig config;
  Mesh mesh;
  std::vector<SubstructureLocal> subs;
  InterfaceMap iface;

  [[nodiscard]] int num_subs() const { return static_cast<int>(subs.size()); }
  [[nodiscard]] int num_floating() const;
};

/// Assembles and condenses every substructure. Throws ConfigError for an
/// invalid configuration or an empty interface.
Problem build_problem(const ProblemConfig& config, Execution exec = Execution::parallel,
                      NullspaceMode nullspace = NullspaceMode::verify);

/// Interface residual r selected by config.rhs.
Vector interface_rhs(const Problem& problem);

std::string to_string(Geometry g);

} // namespace ddlab
