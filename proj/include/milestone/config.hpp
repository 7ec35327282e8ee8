#pragma once

#include "milestone/committor.hpp"
#include "milestone/estimate.hpp"
#include "milestone/surfaces.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace milestone {

enum class LevelSource { linear, committor, curve };
enum class SamplingMode { long_run, cells };

struct MilestoneConfig {
  LevelSource source = LevelSource::committor;
  std::vector<double> levels;  // strictly decreasing after parsing
  Point direction;             // linear
  double offset = 0.0;         // linear
  std::vector<Point> curve_points;
  int curve_samples = 0;
  double delta = 0.0;
  Rescale rescale = Rescale::identity();
  bool require_connected = true;
};

struct SamplingConfig {
  SamplingMode mode = SamplingMode::long_run;
  double total_time = 1e3;
  long long per_cell_transitions = 10000;
  double dt = 1e-3;
  double max_time = 1e4;
  int batches = 10;
  std::size_t reservoir_cap = 100000;
  long long min_count = 100;
  CrossingRule crossing = CrossingRule::sign_change;
  int bins = 20;
  long long kernel_samples_per_bin = 2000;
  StartMode start = StartMode::bin_centers;
};

struct MfptConfig {
  int source = 0;
  int target = -1;  // default: last milestone
  std::vector<std::string> methods{"optimal"};
  long long empirical_transitions = 1000;
  int replicas = 10;
};

struct ValidationConfig {
  double budget_scale = 1.0;
  std::vector<std::string> criteria;  // empty: all
};

struct Config {
  std::string model = "double_well_2d";
  double beta = 1.0;
  double curl = 0.0;
  Box box;
  int grid_nodes = 201;
  Region reactant, product;
  Advection advection = Advection::centered;
  MilestoneConfig milestones;
  SamplingConfig sampling;
  MfptConfig mfpt;
  ValidationConfig validation;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "out";
  /// Input with defaults filled in; the hash covers everything except workers and output.
  nlohmann::json resolved;

  int dim() const { return box.dim(); }
  std::string hash() const;
};

/// Throws InvalidArgument naming the offending key. Relative curve files resolve against `base`.
Config parse_config(const nlohmann::json& input, const std::filesystem::path& base = {});
Config load_config(const std::filesystem::path& path);

/// Objects built from a config, in dependency order.
struct Pipeline {
  DiffusionModel model;
  std::optional<Grid> grid;
  std::shared_ptr<const DensityField> density;
  std::optional<CommittorField> committor;
  std::optional<Curve> curve;
  std::optional<MilestoneSet> milestones;
  /// Level-set meshes of the milestones (in 1D a single point each).
  std::vector<LevelSetMesh> meshes;
};

/// With `milestones` false only the model, grid, density and committor are built.
Pipeline build_pipeline(const Config& config, bool milestones = true);

}  // namespace milestone
