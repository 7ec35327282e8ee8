#include "milestone/grid.hpp"

#include <algorithm>
#include <cmath>

namespace milestone {

bool Box::contains(const Point& x, double slack) const {
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < lower[a] - slack || x[a] > upper[a] + slack) return false;
  }
  return true;
}

Point Box::clamp(const Point& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Grid::Grid(Box box, std::array<int, 2> nodes) : box_(std::move(box)), nodes_(nodes), h_{0.0, 0.0} {
  const int d = box_.dim();
  if (d < 1 || d > 2 || box_.upper.size() != d) throw InvalidArgument("grid: dimension must be 1 or 2");
  if (d == 1) nodes_[1] = 1;
  for (int a = 0; a < d; ++a) {
    if (nodes_[a] < kMinNodes) throw InvalidArgument("grid: at least 32 nodes per axis required");
    if (!(box_.upper[a] > box_.lower[a])) throw InvalidArgument("grid: empty box");
    h_[a] = (box_.upper[a] - box_.lower[a]) / (nodes_[a] - 1);
  }
}

Grid Grid::uniform(const Box& box, int nodes_per_axis) { return Grid(box, {nodes_per_axis, nodes_per_axis}); }

Eigen::Index Grid::size() const { return static_cast<Eigen::Index>(nodes_[0]) * nodes_[1]; }

std::array<int, 2> Grid::coords(Eigen::Index k) const {
  return {static_cast<int>(k % nodes_[0]), static_cast<int>(k / nodes_[0])};
}

Point Grid::node(int i, int j) const {
  Point p(dim());
  p[0] = box_.lower[0] + i * h_[0];
  if (dim() == 2) p[1] = box_.lower[1] + j * h_[1];
  return p;
}

Point Grid::node(Eigen::Index k) const {
  const auto [i, j] = coords(k);
  return node(i, j);
}

double Grid::weight(Eigen::Index k) const {
  const auto c = coords(k);
  double w = 1.0;
  for (int a = 0; a < dim(); ++a) {
    const bool edge = c[a] == 0 || c[a] == nodes_[a] - 1;
    w *= edge ? 0.5 * h_[a] : h_[a];
  }
  return w;
}

Eigen::VectorXd Grid::weights() const {
  Eigen::VectorXd w(size());
  for (Eigen::Index k = 0; k < size(); ++k) w[k] = weight(k);
  return w;
}

Grid Grid::refined(int factor) const {
  std::array<int, 2> n = nodes_;
  for (int a = 0; a < dim(); ++a) n[a] = (n[a] - 1) * factor + 1;
  return Grid(box_, n);
}

GridField::GridField(Grid grid, Eigen::VectorXd values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InvalidArgument("grid field: value count does not match grid");
}

GridField::Cell GridField::locate(const Point& x) const {
  Cell c{0, 0, 0.0, 0.0};
  const Box& box = grid_.box();
  auto axis = [&](int a, int& idx, double& t) {
    const int n = grid_.nodes(a);
    double u = (std::clamp(x[a], box.lower[a], box.upper[a]) - box.lower[a]) / grid_.spacing(a);
    idx = std::min(static_cast<int>(u), n - 2);
    t = u - idx;
  };
  axis(0, c.i, c.tx);
  if (grid_.dim() == 2) axis(1, c.j, c.ty);
  return c;
}

double GridField::value(const Point& x) const {
  const Cell c = locate(x);
  if (grid_.dim() == 1) return (1.0 - c.tx) * values_[c.i] + c.tx * values_[c.i + 1];
  const double v00 = values_[grid_.index(c.i, c.j)];
  const double v10 = values_[grid_.index(c.i + 1, c.j)];
  const double v01 = values_[grid_.index(c.i, c.j + 1)];
  const double v11 = values_[grid_.index(c.i + 1, c.j + 1)];
  return (1.0 - c.ty) * ((1.0 - c.tx) * v00 + c.tx * v10) + c.ty * ((1.0 - c.tx) * v01 + c.tx * v11);
}

Point GridField::gradient(const Point& x) const {
  const Cell c = locate(x);
  Point g(grid_.dim());
  if (grid_.dim() == 1) {
    g[0] = (values_[c.i + 1] - values_[c.i]) / grid_.spacing(0);
    return g;
  }
  const double v00 = values_[grid_.index(c.i, c.j)];
  const double v10 = values_[grid_.index(c.i + 1, c.j)];
  const double v01 = values_[grid_.index(c.i, c.j + 1)];
  const double v11 = values_[grid_.index(c.i + 1, c.j + 1)];
  g[0] = ((1.0 - c.ty) * (v10 - v00) + c.ty * (v11 - v01)) / grid_.spacing(0);
  g[1] = ((1.0 - c.tx) * (v01 - v00) + c.tx * (v11 - v10)) / grid_.spacing(1);
  return g;
}

Eigen::MatrixXd GridField::nodal_gradient() const {
  const int d = grid_.dim();
  Eigen::MatrixXd g(grid_.size(), d);
  for (Eigen::Index k = 0; k < grid_.size(); ++k) {
    const auto c = grid_.coords(k);
    for (int a = 0; a < d; ++a) {
      const int n = grid_.nodes(a);
      auto at = [&](int shift) {
        auto cc = c;
        cc[a] += shift;
        return values_[grid_.index(cc[0], cc[1])];
      };
      const double h = grid_.spacing(a);
      if (c[a] == 0) {
        g(k, a) = (at(1) - at(0)) / h;
      } else if (c[a] == n - 1) {
        g(k, a) = (at(0) - at(-1)) / h;
      } else {
        g(k, a) = (at(1) - at(-1)) / (2.0 * h);
      }
    }
  }
  return g;
}

Point GridField::interpolate_rows(const Eigen::MatrixXd& nodal, const Point& x) const {
  const Cell c = locate(x);
  if (grid_.dim() == 1) {
    return ((1.0 - c.tx) * nodal.row(c.i) + c.tx * nodal.row(c.i + 1)).transpose();
  }
  const auto r00 = nodal.row(grid_.index(c.i, c.j));
  const auto r10 = nodal.row(grid_.index(c.i + 1, c.j));
  const auto r01 = nodal.row(grid_.index(c.i, c.j + 1));
  const auto r11 = nodal.row(grid_.index(c.i + 1, c.j + 1));
  return ((1.0 - c.ty) * ((1.0 - c.tx) * r00 + c.tx * r10) + c.ty * ((1.0 - c.tx) * r01 + c.tx * r11))
      .transpose();
}

double GridField::integral() const { return grid_.weights().dot(values_); }

}  // namespace milestone
