#include "milestone/model.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace milestone {

namespace {

Tensor scaled_identity(int dim, double s) { return Tensor::Identity(dim, dim) * s; }

double partition_on_box(const Potential& v, double beta, const Box& box) {
  const int n = box.dim() == 1 ? 4001 : 401;
  const Grid grid = Grid::uniform(box, n);
  double z = 0.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) z += grid.weight(k) * std::exp(-beta * v.value(grid.node(k)));
  return z;
}

// Bernoulli function x / (e^x - 1).
double bernoulli(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

}  // namespace

Potential ou_potential() {
  return {[](const Point& x) { return 0.5 * x[0] * x[0]; },
          [](const Point& x) { return make_point(x[0]); },
          [](const Point&) { return Tensor::Identity(1, 1).eval(); }};
}

Potential double_well_1d_potential() {
  return {[](const Point& x) {
            const double u = x[0] * x[0] - 1.0;
            return u * u;
          },
          [](const Point& x) { return make_point(4.0 * x[0] * (x[0] * x[0] - 1.0)); },
          [](const Point& x) {
            Tensor h(1, 1);
            h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
            return h;
          }};
}

Potential double_well_2d_potential() {
  return {[](const Point& x) {
            const double u = x[0] * x[0] - 1.0;
            return u * u + 2.0 * x[1] * x[1];
          },
          [](const Point& x) { return make_point(4.0 * x[0] * (x[0] * x[0] - 1.0), 4.0 * x[1]); },
          [](const Point& x) {
            Tensor h = Tensor::Zero(2, 2);
            h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
            h(1, 1) = 4.0;
            return h;
          }};
}

Potential flat_potential(int dim) {
  return {[](const Point&) { return 0.0; }, [dim](const Point&) { return Point::Zero(dim).eval(); },
          [dim](const Point&) { return Tensor::Zero(dim, dim).eval(); }};
}

DiffusionModel make_overdamped_langevin(const Potential& potential, double beta, const Box& box,
                                        std::string name) {
  if (!(beta > 0.0)) throw InvalidArgument("overdamped Langevin: beta must be positive");
  const int d = box.dim();
  DiffusionModel m;
  m.name = std::move(name);
  m.dim = d;
  m.beta = beta;
  m.box = box;
  m.reversible = true;
  m.potential = potential;
  auto grad = potential.gradient;
  m.drift = [grad](const Point& x) -> Point { return -grad(x); };
  const Tensor a = scaled_identity(d, 1.0 / beta);
  const Tensor sigma = scaled_identity(d, std::sqrt(1.0 / beta));
  m.diffusion = [a](const Point&) { return a; };
  m.noise = [sigma](const Point&) { return sigma; };
  m.constant_noise = sigma;
  m.partition_function = partition_on_box(potential, beta, box);
  return m;
}

Box default_box(const std::string& name, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("default box: beta must be positive");
  if (name == "ou_1d") {
    const double s = 6.0 / std::sqrt(beta);
    return {make_point(-s), make_point(s)};
  }
  const double sx = 1.0 + 6.0 / std::sqrt(8.0 * beta);
  if (name == "double_well_1d") return {make_point(-sx), make_point(sx)};
  if (name == "double_well_2d" || name == "nonrev_2d") {
    const double sy = 6.0 / std::sqrt(4.0 * beta);
    return {make_point(-sx, -sy), make_point(sx, sy)};
  }
  throw InvalidArgument("unknown model '" + name + "'");
}

DiffusionModel make_nonreversible_2d(double beta, double curl, std::optional<Box> box) {
  const Box b = box.value_or(default_box("nonrev_2d", beta));
  DiffusionModel m = make_overdamped_langevin(double_well_2d_potential(), beta, b, "nonrev_2d");
  if (curl == 0.0) return m;
  auto grad = m.potential->gradient;
  m.drift = [grad, curl](const Point& x) -> Point {
    const Point g = grad(x);
    return make_point(-g[0] - curl * g[1], -g[1] + curl * g[0]);
  };
  m.reversible = false;
  return m;
}

DiffusionModel make_builtin(const std::string& name, double beta, double curl, std::optional<Box> box) {
  if (name == "nonrev_2d") return make_nonreversible_2d(beta, curl, box);
  const Box b = box.value_or(default_box(name, beta));
  if (name == "ou_1d") return make_overdamped_langevin(ou_potential(), beta, b, name);
  if (name == "double_well_1d") return make_overdamped_langevin(double_well_1d_potential(), beta, b, name);
  if (name == "double_well_2d") return make_overdamped_langevin(double_well_2d_potential(), beta, b, name);
  throw InvalidArgument("unknown model '" + name + "'");
}

DiffusionModel with_box(DiffusionModel model, const Box& box) {
  if (box.dim() != model.dim) throw InvalidArgument("with_box: dimension mismatch");
  model.box = box;
  if (model.potential) model.partition_function = partition_on_box(*model.potential, model.beta, box);
  model.density.reset();
  return model;
}

double invariant_density(const DiffusionModel& model, const Point& x) {
  if (model.reversible && model.potential && model.partition_function > 0.0) {
    return std::exp(-model.beta * model.potential->value(x)) / model.partition_function;
  }
  if (model.density) return (*model.density)(x);
  throw NumericalError("density unavailable: model '" + model.name +
                       "' is not reversible and has no attached density field");
}

DensityField analytic_density(const DiffusionModel& model, const Grid& grid) {
  if (!model.reversible || !model.potential) {
    throw InvalidArgument("analytic density requires a reversible model with a potential");
  }
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) v[k] = std::exp(-model.beta * model.potential->value(grid.node(k)));
  const double z = grid.weights().dot(v);
  return {GridField(grid, v / z), z};
}

Eigen::SparseMatrix<double> adjoint_operator(const DiffusionModel& model, const Grid& grid) {
  const int d = grid.dim();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(grid.size()) * (2 * d + 1) * 2);
  // Flux through the face between nodes k0 -> k1 along `axis` (positive direction),
  // J = (a/h) [B(-P) rho0 - B(P) rho1], P = b h / a at the face midpoint.
  for (Eigen::Index k0 = 0; k0 < grid.size(); ++k0) {
    const auto c = grid.coords(k0);
    for (int axis = 0; axis < d; ++axis) {
      if (c[axis] + 1 >= grid.nodes(axis)) continue;
      auto c1 = c;
      c1[axis] += 1;
      const Eigen::Index k1 = grid.index(c1[0], c1[1]);
      const Point mid = 0.5 * (grid.node(k0) + grid.node(k1));
      const Tensor a = model.diffusion(mid);
      for (int r = 0; r < d; ++r) {
        for (int s = 0; s < d; ++s) {
          if (r != s && a(r, s) != 0.0) throw InvalidArgument("grid solvers support diagonal diffusion only");
        }
      }
      const double h = grid.spacing(axis);
      double b = model.drift(mid)[axis];
      if (model.diffusion_divergence) b += model.diffusion_divergence(mid)[axis];
      const double aa = a(axis, axis);
      const double p = b * h / aa;
      // Face area: product of the other axes' cell widths (1 in 1D); half at box faces.
      double area = 1.0;
      for (int o = 0; o < d; ++o) {
        if (o == axis) continue;
        const bool edge = c[o] == 0 || c[o] == grid.nodes(o) - 1;
        area *= edge ? 0.5 * grid.spacing(o) : grid.spacing(o);
      }
      const double w0 = area * aa / h * bernoulli(-p);
      const double w1 = area * aa / h * bernoulli(p);
      // Row k: -(outflow) = 0, i.e. L* rho integrated over the control volume.
      trip.emplace_back(k0, k0, -w0);
      trip.emplace_back(k0, k1, w1);
      trip.emplace_back(k1, k0, w0);
      trip.emplace_back(k1, k1, -w1);
    }
  }
  Eigen::SparseMatrix<double> m(grid.size(), grid.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

DensityField solve_invariant_density(const DiffusionModel& model, const Grid& grid) {
  if (grid.dim() != model.dim) throw InvalidArgument("solve_invariant_density: grid dimension mismatch");
  const Eigen::SparseMatrix<double> op = adjoint_operator(model, grid);

  // The rows sum to a dependent system; pin one node (lowest potential if known, else the
  // centre) and normalize afterwards.
  Eigen::Index pin = grid.size() / 2;
  if (model.potential) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      const double v = model.potential->value(grid.node(k));
      if (v < best) {
        best = v;
        pin = k;
      }
    }
  }
  Eigen::SparseMatrix<double> sys = op;
  for (Eigen::Index col = 0; col < sys.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys, col); it; ++it) {
      if (it.row() == pin) it.valueRef() = 0.0;
    }
  }
  sys.coeffRef(pin, pin) = 1.0;
  sys.prune(0.0);
  sys.makeCompressed();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid.size());
  rhs[pin] = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("invariant density: factorization failed (" + lu.lastErrorMessage() + ")");
  }
  Eigen::VectorXd rho = lu.solve(rhs);

  // Relative residual of L* rho against the magnitude of the individual flux terms.
  const Eigen::VectorXd res = op * rho;
  const Eigen::VectorXd scale = op.cwiseAbs() * rho.cwiseAbs();
  const double rel = res.cwiseAbs().maxCoeff() / std::max(scale.maxCoeff(), 1e-300);
  if (!rho.allFinite() || rel > 1e-8) {
    throw NumericalError("invariant density: discrete system ill-conditioned (relative residual " +
                         std::to_string(rel) + ")");
  }
  rho = rho.cwiseMax(0.0);
  const double z = grid.weights().dot(rho);
  if (!(z > 0.0)) throw NumericalError("invariant density: solution has zero mass");
  return {GridField(grid, rho / z), z};
}

DensityField density_for(const DiffusionModel& model, const Grid& grid) {
  if (model.reversible && model.potential) return analytic_density(model, grid);
  return solve_invariant_density(model, grid);
}

Eigen::MatrixXd stationary_current_nodes(const DiffusionModel& model, const DensityField& rho) {
  const Grid& grid = rho.field.grid();
  const Eigen::MatrixXd grad = rho.field.nodal_gradient();
  Eigen::MatrixXd j(grid.size(), grid.dim());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Point x = grid.node(k);
    Point b = model.drift(x);
    if (model.diffusion_divergence) b += model.diffusion_divergence(x);
    const Point g = grad.row(k).transpose();
    j.row(k) = (rho.field.values()[k] * b - model.diffusion(x) * g).transpose();
  }
  return j;
}

Point stationary_current(const DiffusionModel& model, const DensityField& rho, const Point& x) {
  const Grid& grid = rho.field.grid();
  if (!grid.box().contains(x, 1e-12)) throw InvalidArgument("stationary_current: point outside the grid");
  return rho.field.interpolate_rows(stationary_current_nodes(model, rho), x);
}

Eigen::VectorXd nodal_divergence(const Grid& grid, const Eigen::MatrixXd& field) {
  Eigen::VectorXd div = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto c = grid.coords(k);
    bool interior = true;
    for (int a = 0; a < grid.dim(); ++a) interior = interior && c[a] > 0 && c[a] < grid.nodes(a) - 1;
    if (!interior) continue;
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      auto cp = c, cm = c;
      cp[a] += 1;
      cm[a] -= 1;
      s += (field(grid.index(cp[0], cp[1]), a) - field(grid.index(cm[0], cm[1]), a)) / (2.0 * grid.spacing(a));
    }
    div[k] = s;
  }
  return div;
}

TensorCheck check_diffusion_tensor(const DiffusionModel& model, const std::vector<Point>& points) {
  TensorCheck out{0.0, std::numeric_limits<double>::infinity()};
  for (const Point& x : points) {
    const Tensor a = model.diffusion(x);
    const Tensor s = model.noise(x);
    out.max_factor_error = std::max(out.max_factor_error, (s * s.transpose() - a).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Tensor> es(a);
    out.min_eigenvalue = std::min(out.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  return out;
}

}  // namespace milestone
