#pragma once

#include "milestone/committor.hpp"
#include "milestone/estimate.hpp"
#include "milestone/mfpt.hpp"
#include "milestone/surfaces.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace milestone {

/// Artifact version embedded in every report.
std::string version();

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);

/// Binary grid file: "MKGRID01", u32 dim, u32 nx, u32 ny, f64 lower[2], f64 upper[2], then
/// nx * ny f64 values with x fastest. Everything little-endian.
void write_grid_binary(const std::filesystem::path& path, const GridField& field);
GridField read_grid_binary(const std::filesystem::path& path);

/// CSV with node coordinates then the value.
void write_grid_csv(const std::filesystem::path& path, const GridField& field, const std::string& value_name);

/// Curve rows: "x1,...,xd" or "s,x1,...,xd" when `with_parameter`. '#' lines and a non-numeric
/// header line are skipped.
Curve read_curve_csv(const std::filesystem::path& path, int dim, int samples = 0);

/// Counts, estimators and standard errors.
nlohmann::json stats_json(const TransitionStats& stats);
/// hits_<i>.csv: arc length and weight (1 / retained) per retained hit.
void write_hits_csv(const std::filesystem::path& path, const std::vector<double>& arc);
/// kernel_<i>.csv: bin, target index, target bin, probability, mean time.
void write_kernel_csv(const std::filesystem::path& path, const KernelEstimate& kernel, int milestone);

nlohmann::json to_json(const MFPTSolution& s);

/// Writes `j` with a trailing newline, two-space indent.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Rejects a non-finite number before it reaches a report (JSON has no NaN).
nlohmann::json finite_or_null(double x);

}  // namespace milestone
