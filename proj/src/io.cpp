#include "milestone/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef MILESTONE_VERSION
#define MILESTONE_VERSION "0.0.0"
#endif

namespace milestone {

static_assert(std::endian::native == std::endian::little, "binary grid I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'K', 'G', 'R', 'I', 'D', '0', '1'};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InvalidArgument("truncated grid file '" + path.string() + "'");
  return v;
}

}  // namespace

std::string version() { return MILESTONE_VERSION; }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

void write_grid_binary(const std::filesystem::path& path, const GridField& field) {
  auto out = open_out(path, std::ios::binary);
  const Grid& g = field.grid();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nodes(0)));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim() == 2 ? g.nodes(1) : 1));
  for (int a = 0; a < 2; ++a) put<double>(out, a < g.dim() ? g.box().lower[a] : 0.0);
  for (int a = 0; a < 2; ++a) put<double>(out, a < g.dim() ? g.box().upper[a] : 0.0);
  for (Eigen::Index k = 0; k < g.size(); ++k) put<double>(out, field.values()[k]);
}

GridField read_grid_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InvalidArgument("'" + path.string() + "' is not a grid file");
  }
  const auto dim = get<std::uint32_t>(in, path);
  const auto nx = get<std::uint32_t>(in, path), ny = get<std::uint32_t>(in, path);
  if (dim < 1 || dim > 2) throw InvalidArgument("grid file '" + path.string() + "': bad dimension");
  double lo[2], hi[2];
  for (double& v : lo) v = get<double>(in, path);
  for (double& v : hi) v = get<double>(in, path);
  Box box = dim == 1 ? Box{make_point(lo[0]), make_point(hi[0])} : Box{make_point(lo[0], lo[1]), make_point(hi[0], hi[1])};
  Grid grid(box, {static_cast<int>(nx), static_cast<int>(ny)});
  Eigen::VectorXd values(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) values[k] = get<double>(in, path);
  return GridField(grid, std::move(values));
}

void write_grid_csv(const std::filesystem::path& path, const GridField& field, const std::string& value_name) {
  auto out = open_out(path);
  const Grid& g = field.grid();
  out << (g.dim() == 1 ? "x," : "x,y,") << value_name << '\n';
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    for (Eigen::Index a = 0; a < x.size(); ++a) out << x[a] << ',';
    out << field.values()[k] << '\n';
  }
}

Curve read_curve_csv(const std::filesystem::path& path, int dim, int samples) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read curve file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw InvalidArgument("curve file '" + path.string() + "': non-numeric row '" + line + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("curve file '" + path.string() + "' has no rows");
  const std::size_t width = rows.front().size();
  if (width != static_cast<std::size_t>(dim) && width != static_cast<std::size_t>(dim + 1)) {
    throw InvalidArgument("curve file '" + path.string() + "': expected " + std::to_string(dim) + " or " +
                          std::to_string(dim + 1) + " columns");
  }
  auto point = [dim](const std::vector<double>& r, std::size_t from) {
    return dim == 1 ? make_point(r[from]) : make_point(r[from], r[from + 1]);
  };
  if (width == static_cast<std::size_t>(dim)) {
    std::vector<Point> pts;
    for (const auto& r : rows) {
      if (r.size() != width) throw InvalidArgument("curve file '" + path.string() + "': ragged rows");
      pts.push_back(point(r, 0));
    }
    return Curve::from_points(pts, samples);
  }
  std::vector<std::pair<double, Point>> param;
  for (const auto& r : rows) {
    if (r.size() != width) throw InvalidArgument("curve file '" + path.string() + "': ragged rows");
    param.emplace_back(r[0], point(r, 1));
  }
  return Curve::from_parametrized(std::move(param), samples);
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite_or_null(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

}  // namespace

nlohmann::json stats_json(const TransitionStats& stats) {
  nlohmann::json j;
  j["size"] = stats.size();
  j["batches"] = stats.batches();
  j["total_time"] = stats.total_time;
  j["censored"] = stats.censored;
  j["counts"] = matrix_json(stats.counts);
  j["lag_sums"] = matrix_json(stats.lag_sums);
  j["residence"] = vector_json(stats.residence);
  j["hit_counts"] = vector_json(stats.hit_counts());
  j["p"] = matrix_json(stats.p_hat());
  j["p_stderr"] = matrix_json(stats.p_stderr());
  j["t"] = vector_json(stats.t_hat());
  j["t_stderr"] = vector_json(stats.t_stderr());
  nlohmann::json retained = nlohmann::json::array();
  for (const auto& r : stats.hits) retained.push_back({{"seen", r.seen}, {"retained", r.samples.size()}});
  j["hits"] = retained;
  return j;
}

void write_hits_csv(const std::filesystem::path& path, const std::vector<double>& arc) {
  auto out = open_out(path);
  out << "arc_length,weight\n";
  const double w = arc.empty() ? 0.0 : 1.0 / static_cast<double>(arc.size());
  for (double s : arc) out << s << ',' << w << '\n';
}

void write_kernel_csv(const std::filesystem::path& path, const KernelEstimate& kernel, int milestone) {
  auto out = open_out(path);
  out << "bin,target,target_bin,probability,mean_time\n";
  const Eigen::MatrixXd nu = kernel.nu();
  const Eigen::VectorXd tau = kernel.tau();
  const auto& m = kernel.milestones.at(static_cast<std::size_t>(milestone));
  for (int b = 0; b < m.bins(); ++b) {
    const int s = m.offset + b;
    for (int t = 0; t < kernel.states(); ++t) {
      if (nu(s, t) == 0.0) continue;
      const int j = kernel.milestone_of(t);
      out << b << ',' << j << ',' << t - kernel.milestones[static_cast<std::size_t>(j)].offset << ',' << nu(s, t) << ','
          << tau[s] << '\n';
    }
  }
}

nlohmann::json to_json(const MFPTSolution& s) {
  return {{"target", s.target},
          {"method", s.method},
          {"values", vector_json(s.values)},
          {"stderr", vector_json(s.stderr_)},
          {"residual", finite_or_null(s.residual)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace milestone
