#include "ddlab/model_problem.hpp"

#include "ddlab/errors.hpp"

#include <cmath>
#include <random>

namespace ddlab {

void ProblemConfig::validate() const
{
  if (subs_x < 1 || subs_y < 1) throw ConfigError("substructure grid must be at least 1x1");
  if (elems_per_sub < 1) throw ConfigError("elements per substructure must be positive");
  if (geometry == Geometry::bar && subs_y != 1) throw ConfigError("bar geometry needs a sub grid of Mx1");
  if (!(coefficient.first > 0.0) || !(coefficient.second > 0.0))
    throw ConfigError("coefficients must be positive");
  const unsigned usable = geometry == Geometry::bar
                              ? dirichlet.mask & (static_cast<unsigned>(Edge::left) | static_cast<unsigned>(Edge::right))
                              : dirichlet.mask & 15u;
  if (usable == 0) throw ConfigError("at least one Dirichlet edge is required");
}

ProblemConfig bar4_config()
{
  ProblemConfig config;
  config.geometry = Geometry::bar;
  config.subs_x = 2;
  config.subs_y = 1;
  config.elems_per_sub = 2;
  config.dirichlet = DirichletEdges::left();
  config.rhs.kind = RhsSeed::Kind::ones;
  return config;
}

std::string to_string(Geometry g)
{
  return g == Geometry::bar ? "bar" : "square";
}

Mesh build_mesh(const ProblemConfig& config)
{
  config.validate();
  Mesh mesh;
  mesh.geometry = config.geometry;
  const int n = config.elems_per_sub;
  const int nx = config.subs_x * n;

  if (config.geometry == Geometry::bar) {
    mesh.hx = 1.0 / n;
    mesh.hy = 1.0;
    for (int i = 0; i <= nx; ++i) {
      mesh.coords.push_back({i * mesh.hx, 0.0});
      mesh.dirichlet.push_back((i == 0 && config.dirichlet.has(Edge::left)) ||
                               (i == nx && config.dirichlet.has(Edge::right)));
    }
    mesh.sub_elements.resize(config.subs_x);
    mesh.sub_nodes.resize(config.subs_x);
    mesh.sub_vertices.resize(config.subs_x);
    for (int e = 0; e < nx; ++e) {
      mesh.elements.push_back({{e, e + 1}, e / n});
      mesh.sub_elements[e / n].push_back(e);
    }
    for (int s = 0; s < config.subs_x; ++s) {
      for (int i = s * n; i <= (s + 1) * n; ++i) mesh.sub_nodes[s].push_back(i);
      mesh.sub_vertices[s] = {s * n, (s + 1) * n};
      mesh.rho.push_back(config.coefficient.value(s, 0));
    }
    return mesh;
  }

  const int ny = config.subs_y * n;
  mesh.hx = 1.0 / nx;
  mesh.hy = 1.0 / ny;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.coords.push_back({i * mesh.hx, j * mesh.hy});
      const bool on_dirichlet = (i == 0 && config.dirichlet.has(Edge::left)) ||
                                (i == nx && config.dirichlet.has(Edge::right)) ||
                                (j == 0 && config.dirichlet.has(Edge::bottom)) ||
                                (j == ny && config.dirichlet.has(Edge::top));
      mesh.dirichlet.push_back(on_dirichlet);
    }
  }
  const int num_subs = config.num_subs();
  mesh.sub_elements.resize(num_subs);
  mesh.sub_nodes.resize(num_subs);
  mesh.sub_vertices.resize(num_subs);
  for (int ej = 0; ej < ny; ++ej) {
    for (int ei = 0; ei < nx; ++ei) {
      const int sub = (ej / n) * config.subs_x + ei / n;
      mesh.sub_elements[sub].push_back(static_cast<int>(mesh.elements.size()));
      mesh.elements.push_back({{id(ei, ej), id(ei + 1, ej), id(ei + 1, ej + 1), id(ei, ej + 1)}, sub});
    }
  }
  for (int sy = 0; sy < config.subs_y; ++sy) {
    for (int sx = 0; sx < config.subs_x; ++sx) {
      const int sub = sy * config.subs_x + sx;
      for (int j = sy * n; j <= (sy + 1) * n; ++j)
        for (int i = sx * n; i <= (sx + 1) * n; ++i) mesh.sub_nodes[sub].push_back(id(i, j));
      mesh.sub_vertices[sub] = {id(sx * n, sy * n), id((sx + 1) * n, sy * n),
                                id((sx + 1) * n, (sy + 1) * n), id(sx * n, (sy + 1) * n)};
      mesh.rho.push_back(config.coefficient.value(sx, sy));
    }
  }
  return mesh;
}

Matrix element_stiffness(const Mesh& mesh, const Element& element)
{
  if (element.nodes.size() == 2) {
    Matrix k(2, 2);
    k << 1.0, -1.0, -1.0, 1.0;
    return k / mesh.hx;
  }
  Matrix kx(4, 4), ky(4, 4);
  kx << 2, -2, -1, 1,
       -2, 2, 1, -1,
       -1, 1, 2, -2,
        1, -1, -2, 2;
  ky << 2, 1, -1, -2,
        1, 2, -2, -1,
       -1, -2, 2, 1,
       -2, -1, 1, 2;
  return (mesh.hy / (6.0 * mesh.hx)) * kx + (mesh.hx / (6.0 * mesh.hy)) * ky;
}

Vector element_load(const Mesh& mesh, const Element& element)
{
  if (element.nodes.size() == 2) return Vector::Constant(2, 0.5 * mesh.hx);
  return Vector::Constant(4, 0.25 * mesh.hx * mesh.hy);
}

LocalSystem assemble_substructure(const Mesh& mesh, int sub, const std::vector<bool>& is_interface_node)
{
  if (sub < 0 || sub >= mesh.num_subs()) throw ConfigError("substructure id out of range");
  LocalSystem local;
  local.sub = sub;
  std::vector<int> local_of(mesh.num_nodes(), -1);
  for (int v : mesh.sub_nodes[sub]) {
    if (mesh.dirichlet[v]) continue;
    local_of[v] = static_cast<int>(local.nodes.size());
    local.nodes.push_back(v);
  }
  const Index size = static_cast<Index>(local.nodes.size());
  local.stiffness = Matrix::Zero(size, size);
  local.load = Vector::Zero(size);
  const double rho = mesh.rho[sub];
  for (int e : mesh.sub_elements[sub]) {
    const Element& element = mesh.elements[e];
    const Matrix ke = rho * element_stiffness(mesh, element);
    const Vector fe = element_load(mesh, element);
    for (std::size_t a = 0; a < element.nodes.size(); ++a) {
      const int la = local_of[element.nodes[a]];
      if (la < 0) continue;
      local.load(la) += fe(a);
      for (std::size_t b = 0; b < element.nodes.size(); ++b) {
        const int lb = local_of[element.nodes[b]];
        if (lb >= 0) local.stiffness(la, lb) += ke(a, b);
      }
    }
  }
  for (Index k = 0; k < size; ++k) {
    if (is_interface_node[local.nodes[k]])
      local.interface.push_back(k);
    else
      local.interior.push_back(k);
  }
  return local;
}

Condensed schur_reduce(const LocalSystem& local)
{
  const auto& gam = local.interface;
  const auto& in = local.interior;
  Matrix k_gg = local.stiffness(gam, gam);
  Vector g_g = local.load(gam);
  if (in.empty()) return {k_gg, g_g};

  const Matrix k_ii = local.stiffness(in, in);
  const Matrix k_ig = local.stiffness(in, gam);
  const SpdFactor interior(k_ii, "interior block of substructure " + std::to_string(local.sub));
  const Matrix x = interior.solve(k_ig);
  const Vector y = interior.solve(Vector(local.load(in)));
  Matrix s = k_gg - k_ig.transpose() * x;
  s = 0.5 * (s + s.transpose()).eval();
  return {s, g_g - k_ig.transpose() * y};
}

Matrix nullspace_basis(const Matrix& schur, bool touches_dirichlet, NullspaceMode mode)
{
  const Index n = schur.rows();
  Matrix z = touches_dirichlet ? Matrix(n, 0) : Matrix(Vector::Constant(n, 1.0 / std::sqrt(double(n))));
  if (mode == NullspaceMode::verify) {
    const Index numeric = sym_eig(schur).null_count();
    if (numeric != z.cols())
      throw NumericalError("nullspace dimension mismatch: analytic " + std::to_string(z.cols()) +
                           ", numerical " + std::to_string(numeric));
  }
  return z;
}

int Problem::num_floating() const
{
  int count = 0;
  for (const auto& s : subs) count += s.touches_dirichlet ? 0 : 1;
  return count;
}

Problem build_problem(const ProblemConfig& config, Execution exec, NullspaceMode nullspace)
{
  Problem problem;
  problem.config = config;
  problem.mesh = build_mesh(config);
  const Mesh& mesh = problem.mesh;

  std::vector<int> owners(mesh.num_nodes(), 0);
  for (const auto& nodes : mesh.sub_nodes)
    for (int v : nodes) ++owners[v];
  std::vector<bool> is_interface(mesh.num_nodes(), false);
  std::vector<int> global_of(mesh.num_nodes(), -1);
  InterfaceMap& iface = problem.iface;
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    if (owners[v] >= 2 && !mesh.dirichlet[v]) {
      is_interface[v] = true;
      global_of[v] = iface.n_global++;
      iface.node.push_back(v);
    }
  }
  if (iface.n_global == 0) throw ConfigError("configuration has no interface degrees of freedom");

  const int num_subs = mesh.num_subs();
  problem.subs.resize(num_subs);
  for_each_index(exec, num_subs, [&](std::ptrdiff_t i) {
    const int sub = static_cast<int>(i);
    const LocalSystem local = assemble_substructure(mesh, sub, is_interface);
    Condensed condensed = schur_reduce(local);
    SubstructureLocal& out = problem.subs[sub];
    out.id = sub;
    out.rho = mesh.rho[sub];
    out.touches_dirichlet = false;
    for (int v : mesh.sub_nodes[sub]) out.touches_dirichlet = out.touches_dirichlet || mesh.dirichlet[v];
    for (Index k : local.interface) out.iface_local_to_global.push_back(global_of[local.nodes[k]]);
    out.Z = nullspace_basis(condensed.schur, out.touches_dirichlet, nullspace);
    out.S = std::move(condensed.schur);
    out.f = std::move(condensed.load);
  });

  iface.multiplicity.assign(iface.n_global, 0);
  iface.sharers.assign(iface.n_global, {});
  for (const auto& s : problem.subs) {
    for (std::size_t k = 0; k < s.iface_local_to_global.size(); ++k) {
      const int g = s.iface_local_to_global[k];
      ++iface.multiplicity[g];
      iface.sharers[g].push_back({s.id, static_cast<Index>(k)});
    }
  }
  iface.is_vertex.assign(iface.n_global, false);
  for (const auto& vertices : mesh.sub_vertices)
    for (int v : vertices)
      if (global_of[v] >= 0) iface.is_vertex[global_of[v]] = true;
  return problem;
}

Vector interface_rhs(const Problem& problem)
{
  const int n = problem.iface.n_global;
  switch (problem.config.rhs.kind) {
  case RhsSeed::Kind::zero:
    return Vector::Zero(n);
  case RhsSeed::Kind::ones:
    return Vector::Ones(n);
  case RhsSeed::Kind::random: {
    std::mt19937_64 rng(problem.config.rhs.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector r(n);
    for (int i = 0; i < n; ++i) r(i) = dist(rng);
    return r;
  }
  case RhsSeed::Kind::load: {
    Vector r = Vector::Zero(n);
    for (const auto& s : problem.subs)
      for (std::size_t k = 0; k < s.iface_local_to_global.size(); ++k) r(s.iface_local_to_global[k]) += s.f(k);
    return r;
  }
  }
  return Vector::Zero(n);
}

} // namespace ddlab
