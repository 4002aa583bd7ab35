#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperspline/kinematics.hpp"
#include "hyperspline/model.hpp"
#include "hyperspline/operators.hpp"

namespace hyperspline {

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

/// Parses `mode,stretch,stress` rows. Blank lines and lines starting with '#'
/// are skipped; errors carry `source:line`. Stresses are multiplied by
/// `stress_scale`.
std::vector<Sample> parse_samples(std::istream& in, const std::string& source, double stress_scale = 1.0);
std::vector<Sample> read_samples(const std::filesystem::path& path, double stress_scale = 1.0);

std::map<Mode, int> mode_counts(const std::vector<Sample>& samples);

/// Rows of `mode,stretch` with an optional third `stress` column (ignored).
std::vector<std::pair<Mode, double>> read_stretches(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Writes every file to a temporary sibling first and renames only after all
/// writes succeeded; on failure the temporaries are removed.
void write_files_atomic(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

struct RunConfig {
  ModelKind kind = ModelKind::SurfaceMapped;
  int n1 = 20;
  int n2 = 5;
  double delta = 1e-6;
  bool use_polyconvex = true;
  /// Surface kinds; nullopt selects lambda by the L-curve.
  std::optional<double> lambda_pen;
  /// Penalty weight used for Separable models.
  double separable_lambda_pen = 0.0;
  double lcurve_min = 1e-10;
  double lcurve_max = 1e2;
  int lcurve_count = 25;
  std::filesystem::path data;
  std::filesystem::path output = "out";
  std::string stress_unit = "kPa";
  double stress_scale = 1.0;
  ConstraintFamilies constraints;
  std::vector<double> sites1;  // empty: uniform
  std::vector<double> sites2;
  int quad_order = 4;

  void validate() const;
};

/// Flat JSON object; unknown keys are rejected. Relative `data` and `output`
/// paths resolve against `base_dir`.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig read_config(const std::filesystem::path& path);

inline constexpr int kModelSchemaVersion = 1;

struct ModelFile {
  int schema_version = kModelSchemaVersion;
  ModelState state;
  double lambda_pen = 0.0;
  FitMetrics metrics;
  int iterations = 0;
  double kkt_residual = 0.0;
  bool ridge_applied = false;
  std::string stress_unit = "kPa";
  std::string data_sha256;
  std::string timestamp;
};

std::string to_json(const ModelFile& file);
ModelFile parse_model_file(const std::string& json_text);
ModelFile read_model_file(const std::filesystem::path& path);

/// UTC ISO-8601; honors SOURCE_DATE_EPOCH when set.
std::string utc_timestamp();

}  // namespace hyperspline
