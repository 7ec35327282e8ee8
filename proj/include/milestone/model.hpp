#pragma once

#include "milestone/core.hpp"
#include "milestone/grid.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace milestone {

/// Potential energy with analytic derivatives.
struct Potential {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::function<Tensor(const Point&)> hessian;
};

/// Normalized stationary density on a grid.
struct DensityField {
  GridField field;
  /// Integral of the unnormalized solution (or of exp(-beta V)) before scaling.
  double normalization = 1.0;

  double operator()(const Point& x) const { return field.value(x); }
};

/// Elliptic diffusion dX = (b + div a) dt + sqrt(2) sigma dW with sigma sigma^T = a.
struct DiffusionModel {
  std::string name;
  int dim = 1;
  std::function<Point(const Point&)> drift;
  std::function<Tensor(const Point&)> diffusion;
  std::function<Tensor(const Point&)> noise;
  /// Divergence of a; empty means a is constant.
  std::function<Point(const Point&)> diffusion_divergence;
  /// Set when a and sigma do not depend on x; lets the stepper skip the calls.
  std::optional<Tensor> constant_noise;

  bool reversible = false;
  std::optional<Potential> potential;
  double beta = 1.0;
  /// Truncation of R^d used for all grid work.
  Box box;
  /// Integral of exp(-beta V) over the box, set for reversible models.
  double partition_function = 0.0;
  /// Numerically solved density, required by non-reversible models for density queries.
  std::shared_ptr<const DensityField> density;
};

DiffusionModel make_overdamped_langevin(const Potential& potential, double beta, const Box& box,
                                        std::string name = "overdamped_langevin");

/// Built-in benchmark potentials.
Potential ou_potential();
Potential double_well_1d_potential();
Potential double_well_2d_potential();
Potential flat_potential(int dim);

/// Box reaching 6 standard deviations past the outermost well of a built-in model.
Box default_box(const std::string& name, double beta);

/// "ou_1d", "double_well_1d", "double_well_2d" or "nonrev_2d"; `curl` only affects nonrev_2d.
DiffusionModel make_builtin(const std::string& name, double beta, double curl = 0.0,
                            std::optional<Box> box = std::nullopt);

/// Drift -grad V + curl * (-d2 V, d1 V) of the 2D double well; exp(-beta V) stays invariant.
DiffusionModel make_nonreversible_2d(double beta, double curl, std::optional<Box> box = std::nullopt);

/// Same model on a different truncation box (recomputes the partition function).
DiffusionModel with_box(DiffusionModel model, const Box& box);

/// Stationary density at x: exp(-beta V)/Z for reversible models, else the attached field.
double invariant_density(const DiffusionModel& model, const Point& x);

/// exp(-beta V)/Z sampled at the grid nodes (reversible models only).
DensityField analytic_density(const DiffusionModel& model, const Grid& grid);

/// Conservative no-flux discretization of L* on the grid (exponentially fitted fluxes).
/// Only diagonal diffusion tensors are supported.
Eigen::SparseMatrix<double> adjoint_operator(const DiffusionModel& model, const Grid& grid);

/// Solves L* rho = 0 with integral(rho) = 1.
DensityField solve_invariant_density(const DiffusionModel& model, const Grid& grid);

/// Density to use for grid work: analytic when reversible, otherwise solved on `grid`.
DensityField density_for(const DiffusionModel& model, const Grid& grid);

/// J = rho b - a grad rho at the nodes (rows = nodes), gradient by central differences.
Eigen::MatrixXd stationary_current_nodes(const DiffusionModel& model, const DensityField& rho);

/// J(x), interpolated from the nodal current. Throws when x lies outside the grid.
Point stationary_current(const DiffusionModel& model, const DensityField& rho, const Point& x);

/// Central-difference divergence of a nodal vector field at interior nodes (zero elsewhere).
Eigen::VectorXd nodal_divergence(const Grid& grid, const Eigen::MatrixXd& field);

/// Max |sigma sigma^T - a| and min eigenvalue of a at the given points.
struct TensorCheck {
  double max_factor_error = 0.0;
  double min_eigenvalue = 0.0;
};
TensorCheck check_diffusion_tensor(const DiffusionModel& model, const std::vector<Point>& points);

}  // namespace milestone
