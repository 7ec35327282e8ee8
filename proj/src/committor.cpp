#include "milestone/committor.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace milestone {

Region Region::ball(Point center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("ball radius must be positive");
  Region r;
  r.kind = Kind::ball;
  r.center = std::move(center);
  r.radius = radius;
  return r;
}

Region Region::halfspace(Point normal, double offset) {
  if (normal.norm() == 0.0) throw InvalidArgument("half-space normal must be nonzero");
  Region r;
  r.kind = Kind::halfspace;
  r.normal = std::move(normal);
  r.offset = offset;
  return r;
}

bool Region::contains(const Point& x) const {
  if (kind == Kind::ball) return (x - center).norm() <= radius;
  return normal.dot(x) <= offset;
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// Solves  div(rho a grad q) + sign * J.grad q = 0  off A and B.
// sign = -1 gives rho L-dagger (backward), +1 gives rho L (forward).
CommittorField solve_committor(const DiffusionModel& model, std::shared_ptr<const DensityField> rho,
                               const Region& reactant, const Region& product, const Grid& grid,
                               Advection advection, bool backward) {
  if (!rho) throw InvalidArgument("committor: density required");
  if (grid.dim() != model.dim) throw InvalidArgument("committor: grid dimension mismatch");
  const Eigen::Index n = grid.size();
  const int d = grid.dim();

  Eigen::VectorXd dens(n);
  for (Eigen::Index k = 0; k < n; ++k) dens[k] = std::max(rho->field.value(grid.node(k)), 1e-300);

  // Under detailed balance J vanishes identically; its finite-difference estimate does not, and
  // would spoil q- + q+ = 1. Use the exact zero.
  Eigen::MatrixXd current = Eigen::MatrixXd::Zero(n, d);
  if (!model.reversible) {
    const Eigen::MatrixXd jr = stationary_current_nodes(model, *rho);
    for (Eigen::Index k = 0; k < n; ++k) current.row(k) = rho->field.interpolate_rows(jr, grid.node(k)).transpose();
  }
  const double sign = backward ? -1.0 : 1.0;
  const double on_a = backward ? 1.0 : 0.0;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * d + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  Eigen::Index count_a = 0, count_b = 0;

  for (Eigen::Index k = 0; k < n; ++k) {
    const Point x = grid.node(k);
    const bool in_a = reactant.contains(x), in_b = product.contains(x);
    if (in_a && in_b) throw InvalidArgument("committor: sets A and B overlap at a grid node");
    if (in_a || in_b) {
      trip.emplace_back(k, k, 1.0);
      rhs[k] = in_a ? on_a : 1.0 - on_a;
      (in_a ? count_a : count_b)++;
      continue;
    }
    const auto c = grid.coords(k);
    std::map<Eigen::Index, double> row;
    double diag = 0.0;
    for (int axis = 0; axis < d; ++axis) {
      const double h = grid.spacing(axis);
      Eigen::Index nb[2] = {-1, -1};  // minus, plus
      double flux[2] = {0.0, 0.0};
      for (int side = 0; side < 2; ++side) {
        auto cn = c;
        cn[axis] += side == 0 ? -1 : 1;
        if (cn[axis] < 0 || cn[axis] >= grid.nodes(axis)) continue;
        nb[side] = grid.index(cn[0], cn[1]);
        const Point mid = 0.5 * (x + grid.node(nb[side]));
        flux[side] = 0.5 * (dens[k] + dens[nb[side]]) * model.diffusion(mid)(axis, axis);
        row[nb[side]] += flux[side] / (h * h);
        diag -= flux[side] / (h * h);
      }
      const double adv = sign * current(k, axis);
      if (adv == 0.0) continue;
      const bool both = nb[0] >= 0 && nb[1] >= 0;
      const bool stable = both && std::abs(adv) * h <= 2.0 * std::min(flux[0], flux[1]);
      if (advection == Advection::centered && stable) {
        row[nb[1]] += adv / (2.0 * h);
        row[nb[0]] -= adv / (2.0 * h);
      } else if (adv > 0.0 && nb[1] >= 0) {
        row[nb[1]] += adv / h;
        diag -= adv / h;
      } else if (adv < 0.0 && nb[0] >= 0) {
        row[nb[0]] -= adv / h;
        diag += adv / h;
      }
    }
    if (!(diag < 0.0)) throw NumericalError("committor: degenerate stencil at node " + std::to_string(k));
    const double scale = -diag;
    trip.emplace_back(k, k, diag / scale);
    for (const auto& [col, v] : row) trip.emplace_back(k, col, v / scale);
  }
  if (count_a == 0 || count_b == 0) throw InvalidArgument("committor: A and B must each contain a grid node");

  Eigen::SparseMatrix<double> sys(n, n);
  sys.setFromTriplets(trip.begin(), trip.end());
  sys.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success) throw NumericalError("committor: factorization failed (" + lu.lastErrorMessage() + ")");
  Eigen::VectorXd q = lu.solve(rhs);
  if (!q.allFinite()) throw NumericalError("committor: solve produced non-finite values");
  const double res = (sys * q - rhs).cwiseAbs().maxCoeff();
  if (res > 1e-9) throw NumericalError("committor: linear solve residual " + fmt(res));
  q = q.cwiseMax(0.0).cwiseMin(1.0);

  CommittorField out;
  out.values = std::make_shared<const GridField>(grid, std::move(q));
  out.density = std::move(rho);
  out.reactant = reactant;
  out.product = product;
  out.backward = backward;
  return out;
}

// Polylines through marching-squares edge crossings.
std::vector<std::vector<Point>> marching_squares(const GridField& field, double level, std::vector<bool>& closed) {
  const Grid& g = field.grid();
  const Eigen::VectorXd& v = field.values();
  const int nx = g.nodes(0), ny = g.nodes(1);
  auto hid = [&](int i, int j) { return 2 * g.index(i, j); };      // (i,j)-(i+1,j)
  auto vid = [&](int i, int j) { return 2 * g.index(i, j) + 1; };  // (i,j)-(i,j+1)
  auto above = [&](Eigen::Index k) { return v[k] > level; };

  std::map<Eigen::Index, Point> points;
  std::map<Eigen::Index, std::vector<Eigen::Index>> adj;
  auto edge_point = [&](Eigen::Index id) {
    auto it = points.find(id);
    if (it != points.end()) return;
    const Eigen::Index k0 = id / 2;
    const auto c = g.coords(k0);
    const Eigen::Index k1 = (id % 2 == 0) ? g.index(c[0] + 1, c[1]) : g.index(c[0], c[1] + 1);
    const double t = (level - v[k0]) / (v[k1] - v[k0]);
    points.emplace(id, Point(g.node(k0) + t * (g.node(k1) - g.node(k0))));
  };
  auto link = [&](Eigen::Index a, Eigen::Index b) {
    edge_point(a);
    edge_point(b);
    adj[a].push_back(b);
    adj[b].push_back(a);
  };

  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const Eigen::Index c00 = g.index(i, j), c10 = g.index(i + 1, j), c11 = g.index(i + 1, j + 1),
                         c01 = g.index(i, j + 1);
      const bool a00 = above(c00), a10 = above(c10), a11 = above(c11), a01 = above(c01);
      const Eigen::Index e0 = hid(i, j), e1 = vid(i + 1, j), e2 = hid(i, j + 1), e3 = vid(i, j);
      const bool x0 = a00 != a10, x1 = a10 != a11, x2 = a01 != a11, x3 = a00 != a01;
      const int crossings = x0 + x1 + x2 + x3;
      if (crossings == 0) continue;
      if (crossings == 2) {
        std::vector<Eigen::Index> e;
        if (x0) e.push_back(e0);
        if (x1) e.push_back(e1);
        if (x2) e.push_back(e2);
        if (x3) e.push_back(e3);
        link(e[0], e[1]);
        continue;
      }
      // Saddle cell: cut off the corners whose side differs from the cell centre.
      const bool centre = 0.25 * (v[c00] + v[c10] + v[c11] + v[c01]) > level;
      if (a00 != centre) link(e3, e0);
      if (a10 != centre) link(e0, e1);
      if (a11 != centre) link(e1, e2);
      if (a01 != centre) link(e2, e3);
    }
  }

  std::vector<std::vector<Point>> lines;
  closed.clear();
  std::map<Eigen::Index, bool> seen;
  auto walk = [&](Eigen::Index start) {
    std::vector<Point> line;
    Eigen::Index prev = -1, cur = start;
    while (true) {
      seen[cur] = true;
      line.push_back(points.at(cur));
      Eigen::Index next = -1;
      for (Eigen::Index nb : adj[cur]) {
        if (nb != prev && !seen[nb]) {
          next = nb;
          break;
        }
      }
      if (next < 0) break;
      prev = cur;
      cur = next;
    }
    return line;
  };
  // Open components first, each from its lowest-numbered end; then closed loops.
  for (const auto& [id, nbs] : adj) {
    if (nbs.size() == 1 && !seen[id]) {
      lines.push_back(walk(id));
      closed.push_back(false);
    }
  }
  for (const auto& [id, nbs] : adj) {
    if (!seen[id]) {
      auto line = walk(id);
      line.push_back(line.front());
      lines.push_back(std::move(line));
      closed.push_back(true);
    }
  }
  return lines;
}

void finish_mesh(const GridField& field, LevelSetMesh& mesh) {
  const Eigen::MatrixXd grad = field.nodal_gradient();
  mesh.normals.clear();
  mesh.gradient_norm.clear();
  mesh.arc_length.clear();
  double s = 0.0;
  for (std::size_t k = 0; k < mesh.points.size(); ++k) {
    const Point g = field.interpolate_rows(grad, mesh.points[k]);
    const double gn = g.norm();
    if (!(gn >= kRegularityThreshold)) {
      throw NumericalError("irregular level " + fmt(mesh.level) + ": |grad| = " + fmt(gn) + " on the level set");
    }
    mesh.normals.push_back(g / gn);
    mesh.gradient_norm.push_back(gn);
    if (k > 0) s += (mesh.points[k] - mesh.points[k - 1]).norm();
    mesh.arc_length.push_back(s);
  }
}

double trapezoid(const std::vector<double>& s, const std::vector<double>& y) {
  if (y.size() == 1) return y[0];
  double total = 0.0;
  for (std::size_t k = 1; k < y.size(); ++k) total += 0.5 * (s[k] - s[k - 1]) * (y[k] + y[k - 1]);
  return total;
}

std::vector<double> flux_integrand(const DiffusionModel& model, const DensityField& rho, const LevelSetMesh& mesh) {
  std::vector<double> out;
  for (std::size_t k = 0; k < mesh.points.size(); ++k) {
    const Point g = mesh.normals[k] * mesh.gradient_norm[k];
    const double quad = g.dot(model.diffusion(mesh.points[k]) * g);
    out.push_back(rho(mesh.points[k]) * quad / mesh.gradient_norm[k]);
  }
  return out;
}

}  // namespace

CommittorField solve_backward_committor(const DiffusionModel& model, std::shared_ptr<const DensityField> rho,
                                        const Region& reactant, const Region& product, const Grid& grid,
                                        Advection advection) {
  return solve_committor(model, std::move(rho), reactant, product, grid, advection, true);
}

CommittorField solve_forward_committor(const DiffusionModel& model, std::shared_ptr<const DensityField> rho,
                                       const Region& reactant, const Region& product, const Grid& grid,
                                       Advection advection) {
  return solve_committor(model, std::move(rho), reactant, product, grid, advection, false);
}

CommittorField solve_forward_committor(const DiffusionModel& model, const Region& reactant, const Region& product,
                                       const Grid& grid, Advection advection) {
  auto rho = std::make_shared<const DensityField>(density_for(model, grid));
  return solve_forward_committor(model, std::move(rho), reactant, product, grid, advection);
}

double LevelSetMesh::arc_coordinate(const Point& x) const {
  if (points.size() < 2) return 0.0;
  double best = std::numeric_limits<double>::infinity(), best_s = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    const Point seg = points[k] - points[k - 1];
    const double len2 = seg.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((x - points[k - 1]).dot(seg) / len2, 0.0, 1.0) : 0.0;
    const double dist = (points[k - 1] + t * seg - x).norm();
    if (dist < best) {
      best = dist;
      best_s = arc_length[k - 1] + t * (arc_length[k] - arc_length[k - 1]);
    }
  }
  return best_s;
}

LevelSetMesh extract_level_set(const GridField& field, double level, bool require_connected) {
  const Eigen::VectorXd& v = field.values();
  if (!(level > v.minCoeff() && level < v.maxCoeff())) {
    throw InvalidArgument("level " + fmt(level) + " lies outside the field's range");
  }
  const Grid& g = field.grid();
  LevelSetMesh mesh;
  mesh.level = level;
  mesh.dim = g.dim();
  if (g.dim() == 1) {
    std::vector<Point> roots;
    for (int i = 0; i + 1 < g.nodes(0); ++i) {
      if ((v[i] > level) == (v[i + 1] > level)) continue;
      double lo = g.node(i, 0)[0], hi = g.node(i + 1, 0)[0];
      const bool lo_above = v[i] > level;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((field.value(make_point(mid)) > level) == lo_above) lo = mid; else hi = mid;
      }
      roots.push_back(make_point(0.5 * (lo + hi)));
    }
    if (roots.size() > 1 && require_connected) {
      throw NumericalError("disconnected milestone: level " + fmt(level) + " has " + std::to_string(roots.size()) +
                           " components");
    }
    mesh.points = {roots.front()};
  } else {
    std::vector<bool> closed;
    auto lines = marching_squares(field, level, closed);
    if (lines.empty()) throw NumericalError("level " + fmt(level) + " not found on the grid");
    if (lines.size() > 1 && require_connected) {
      throw NumericalError("disconnected milestone: level " + fmt(level) + " has " + std::to_string(lines.size()) +
                           " components");
    }
    // Without the connectivity requirement keep the longest component.
    std::size_t pick = 0;
    auto len = [](const std::vector<Point>& l) {
      double s = 0.0;
      for (std::size_t k = 1; k < l.size(); ++k) s += (l[k] - l[k - 1]).norm();
      return s;
    };
    for (std::size_t k = 1; k < lines.size(); ++k) {
      if (len(lines[k]) > len(lines[pick])) pick = k;
    }
    // Drop coincident consecutive points (crossings exactly at a node).
    for (const Point& p : lines[pick]) {
      if (mesh.points.empty() || (p - mesh.points.back()).norm() > 1e-14) mesh.points.push_back(p);
    }
    mesh.closed = closed[pick];
    if (mesh.points.size() < 2) throw NumericalError("level " + fmt(level) + " degenerates to a point");
  }
  finish_mesh(field, mesh);
  return mesh;
}

LevelSetMesh extract_level_set(const CommittorField& field, double level, bool require_connected) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("committor level " + fmt(level) + " must lie in (0, 1)");
  return extract_level_set(*field.values, level, require_connected);
}

double surface_integral_Z(const DiffusionModel& model, const DensityField& rho, const CommittorField&,
                          const LevelSetMesh& mesh) {
  if (mesh.points.empty()) throw InvalidArgument("surface integral: empty mesh");
  return trapezoid(mesh.arc_length, flux_integrand(model, rho, mesh));
}

double MilestoneDensity::total() const { return trapezoid(mesh.arc_length, values); }

double MilestoneDensity::cdf(double s) const {
  if (values.size() == 1) return s >= 0.0 ? 1.0 : 0.0;
  const auto& a = mesh.arc_length;
  if (s <= a.front()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double w = a[k] - a[k - 1];
    if (s < a[k]) {
      const double u = s - a[k - 1];
      const double slope = w > 0.0 ? (values[k] - values[k - 1]) / w : 0.0;
      return acc + u * values[k - 1] + 0.5 * slope * u * u;
    }
    acc += 0.5 * w * (values[k] + values[k - 1]);
  }
  return acc;
}

MilestoneDensity milestone_density(const DiffusionModel& model, const DensityField& rho, const CommittorField& field,
                                   const LevelSetMesh& mesh) {
  const double z = surface_integral_Z(model, rho, field, mesh);
  if (!(z > 1e-300) || !std::isfinite(z)) throw NumericalError("milestone density: Z is zero at level " + fmt(mesh.level));
  MilestoneDensity out;
  out.mesh = mesh;
  out.normalization = z;
  for (double w : flux_integrand(model, rho, mesh)) out.values.push_back(w / z);
  return out;
}

Eigen::MatrixXd analytic_q(const std::vector<double>& z) {
  const int n = static_cast<int>(z.size());
  if (n < 2) throw InvalidArgument("analytic_q: need at least two levels");
  for (int k = 1; k < n; ++k) {
    if (!(z[k] < z[k - 1])) throw InvalidArgument("analytic_q: levels must be strictly decreasing");
  }
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  q(0, 1) = 1.0;
  q(n - 1, n - 2) = 1.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double width = z[i - 1] - z[i + 1];
    q(i, i - 1) = (z[i] - z[i + 1]) / width;
    q(i, i + 1) = 1.0 - q(i, i - 1);
  }
  return q;
}

}  // namespace milestone
