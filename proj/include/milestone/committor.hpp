#pragma once

#include "milestone/grid.hpp"
#include "milestone/level.hpp"
#include "milestone/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace milestone {

/// Reactant/product set: a closed ball or the half-space {<normal, x> <= offset}.
struct Region {
  enum class Kind { ball, halfspace };
  Kind kind = Kind::ball;
  Point center;  // ball
  double radius = 0.0;
  Point normal;  // halfspace
  double offset = 0.0;

  static Region ball(Point center, double radius);
  static Region halfspace(Point normal, double offset);
  bool contains(const Point& x) const;
};

/// Treatment of the current term J.grad q.
enum class Advection {
  centered,  // central differences, upwind where the cell Peclet number exceeds 2
  upwind,
};

/// Committor on a grid together with the density used to build the operator.
struct CommittorField {
  std::shared_ptr<const GridField> values;
  std::shared_ptr<const DensityField> density;
  Region reactant;  // A
  Region product;   // B
  bool backward = true;

  const Grid& grid() const { return values->grid(); }
  double operator()(const Point& x) const { return values->value(x); }
  LevelFunction level_function() const { return LevelFunction::from_field(values); }
};

/// q- with L-dagger q- = 0 off A and B, q- = 1 on A, 0 on B, no flux through the box faces.
CommittorField solve_backward_committor(const DiffusionModel& model, std::shared_ptr<const DensityField> rho,
                                        const Region& reactant, const Region& product, const Grid& grid,
                                        Advection advection = Advection::centered);

/// q+ with L q+ = 0, q+ = 0 on A, 1 on B.
CommittorField solve_forward_committor(const DiffusionModel& model, std::shared_ptr<const DensityField> rho,
                                       const Region& reactant, const Region& product, const Grid& grid,
                                       Advection advection = Advection::centered);
/// Same, with the density taken from density_for(model, grid).
CommittorField solve_forward_committor(const DiffusionModel& model, const Region& reactant, const Region& product,
                                       const Grid& grid, Advection advection = Advection::centered);

inline constexpr double kRegularityThreshold = 1e-8;

/// Ordered points on {field = level}. 1D: one point; 2D: a polyline in marching-squares order.
struct LevelSetMesh {
  double level = 0.0;
  int dim = 1;
  std::vector<Point> points;
  std::vector<Point> normals;          // grad / |grad|
  std::vector<double> gradient_norm;   // |grad| at each point
  std::vector<double> arc_length;      // cumulative, starts at 0
  bool closed = false;

  double length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
  /// Arc-length coordinate of the mesh point nearest to x (projection onto the polyline).
  double arc_coordinate(const Point& x) const;
};

/// Level set of a grid field. With `require_connected`, more than one component throws
/// "disconnected milestone". Gradient magnitudes below kRegularityThreshold throw "irregular level".
LevelSetMesh extract_level_set(const GridField& field, double level, bool require_connected = true);
/// Level z strictly inside (0, 1).
LevelSetMesh extract_level_set(const CommittorField& field, double level, bool require_connected = true);

/// Z = integral over the level set of rho <a grad q, grad q> / |grad q| (trapezoid rule).
double surface_integral_Z(const DiffusionModel& model, const DensityField& rho, const CommittorField& field,
                          const LevelSetMesh& mesh);

/// rho_i = Z^-1 rho <a grad q, grad q> / |grad q| at the mesh points.
struct MilestoneDensity {
  LevelSetMesh mesh;
  std::vector<double> values;
  double normalization = 0.0;  // Z_i

  /// Trapezoid integral of the density (1 up to rounding).
  double total() const;
  /// CDF at arc length s (piecewise-linear density, exact trapezoid cumulative).
  double cdf(double s) const;
};

MilestoneDensity milestone_density(const DiffusionModel& model, const DensityField& rho, const CommittorField& field,
                                   const LevelSetMesh& mesh);

/// Nearest-neighbour transition matrix of isocommittor milestones for strictly decreasing levels.
Eigen::MatrixXd analytic_q(const std::vector<double>& levels);

}  // namespace milestone
