#include "hyperspline/io.hpp"

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

// Reads data lines after a header whose leading columns must match `head`.
// Returns the number of header columns.
std::size_t for_each_row(std::istream& in, const std::string& source, const std::vector<std::string>& head,
                         std::size_t max_cols, const auto& visit) {
  std::string raw;
  int line_no = 0;
  std::size_t ncols = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line_no == 1 && line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split(line);
    if (ncols == 0) {
      if (cols.size() < head.size() || cols.size() > max_cols) fail_at(source, line_no, "unexpected header");
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const std::string expect = k < head.size() ? head[k] : "stress";
        if (cols[k] != expect) fail_at(source, line_no, "expected header column '" + expect + "'");
      }
      ncols = cols.size();
      continue;
    }
    if (cols.size() != ncols) {
      fail_at(source, line_no, "expected " + std::to_string(ncols) + " columns, found " + std::to_string(cols.size()));
    }
    visit(cols, line_no);
  }
  if (ncols == 0) throw InputError(source + ": missing header");
  return ncols;
}

Mode mode_at(std::string_view text, const std::string& source, int line) {
  try {
    return parse_mode(text);
  } catch (const InputError&) {
    fail_at(source, line, "unknown mode '" + std::string(text) + "'");
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InputError("config: key '" + key + "' has the wrong type");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw InputError("config: key '" + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw InputError("config: key '" + key + "' must be an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw InputError("config: key '" + key + "' must be true or false");
  return j.get<bool>();
}

std::vector<double> get_sites(const json& j, const std::string& key) {
  if (!j.is_array()) throw InputError("config: key '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(get_number(v, key));
  return out;
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

json metrics_json(const FitMetrics& m) {
  json out = json::object();
  for (const auto& [mode, n] : m.count) {
    json entry = {{"count", n}, {"mse", m.mse.at(mode)}};
    const auto r2 = m.r2.find(mode);
    entry["r2"] = r2 != m.r2.end() ? json(r2->second) : json(nullptr);
    out[std::string(to_string(mode))] = entry;
  }
  out["mse_combined"] = m.mse_combined;
  return out;
}

FitMetrics metrics_from_json(const json& j) {
  FitMetrics m;
  for (const Mode mode : kAllModes) {
    const auto it = j.find(std::string(to_string(mode)));
    if (it == j.end()) continue;
    m.count[mode] = it->at("count").get<int>();
    m.mse[mode] = it->at("mse").get<double>();
    if (!it->at("r2").is_null()) m.r2[mode] = it->at("r2").get<double>();
  }
  m.mse_combined = j.at("mse_combined").get<double>();
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::vector<Sample> parse_samples(std::istream& in, const std::string& source, double stress_scale) {
  if (!(stress_scale > 0.0) || !std::isfinite(stress_scale)) throw InputError("stress_scale must be positive");
  std::vector<Sample> out;
  for_each_row(in, source, {"mode", "stretch", "stress"}, 3, [&](const auto& cols, int line) {
    const Mode mode = mode_at(cols[0], source, line);
    const auto stretch = to_double(cols[1]);
    const auto stress = to_double(cols[2]);
    if (!stretch) fail_at(source, line, "malformed stretch '" + std::string(cols[1]) + "'");
    if (!stress) fail_at(source, line, "malformed stress '" + std::string(cols[2]) + "'");
    if (*stretch < kMinStretch || *stretch > kMaxStretch) {
      fail_at(source, line, "stretch " + std::string(cols[1]) + " outside [0.05, 20]");
    }
    out.push_back({mode, *stretch, *stress * stress_scale});
  });
  if (out.empty()) throw InputError(source + ": no samples");
  return out;
}

std::vector<Sample> read_samples(const fs::path& path, double stress_scale) {
  std::ifstream in = open_input(path);
  return parse_samples(in, path.string(), stress_scale);
}

std::map<Mode, int> mode_counts(const std::vector<Sample>& samples) {
  std::map<Mode, int> counts;
  for (const Sample& s : samples) ++counts[s.mode];
  return counts;
}

std::vector<std::pair<Mode, double>> read_stretches(const fs::path& path) {
  std::ifstream in = open_input(path);
  const std::string source = path.string();
  std::vector<std::pair<Mode, double>> out;
  for_each_row(in, source, {"mode", "stretch"}, 3, [&](const auto& cols, int line) {
    const Mode mode = mode_at(cols[0], source, line);
    const auto stretch = to_double(cols[1]);
    if (!stretch || !(*stretch > 0.0)) fail_at(source, line, "malformed stretch '" + std::string(cols[1]) + "'");
    out.emplace_back(mode, *stretch);
  });
  if (out.empty()) throw InputError(source + ": no rows");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += kHex[digest[k] >> 4];
    out += kHex[digest[k] & 0xF];
  }
  return out;
}

void write_files_atomic(const std::vector<std::pair<fs::path, std::string>>& files) {
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const fs::path& t : temps) fs::remove(t, ec);
  };
  try {
    for (const auto& [path, content] : files) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      fs::path tmp = path;
      tmp += ".tmp" + std::to_string(::getpid());
      temps.push_back(tmp);
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      out.close();
      if (!out) throw InputError("cannot write " + tmp.string());
    }
    for (const auto& [path, content] : files) {
      if (fs::is_directory(path)) throw InputError("cannot write " + path.string() + ": is a directory");
    }
    std::size_t renamed = 0;
    try {
      for (; renamed < files.size(); ++renamed) fs::rename(temps[renamed], files[renamed].first);
    } catch (...) {
      std::error_code ec;
      for (std::size_t k = 0; k < renamed; ++k) fs::remove(files[k].first, ec);
      throw;
    }
  } catch (const fs::filesystem_error& e) {
    cleanup();
    throw InputError(e.what());
  } catch (...) {
    cleanup();
    throw;
  }
}

void RunConfig::validate() const {
  if (n1 < 4 || n2 < 4) throw InputError("config: n1 and n2 must be >= 4");
  if (!sites1.empty() && static_cast<int>(sites1.size()) != n1) throw InputError("config: sites1 length must equal n1");
  if (!sites2.empty() && static_cast<int>(sites2.size()) != n2) throw InputError("config: sites2 length must equal n2");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InputError("config: delta must be >= 0");
  if (lambda_pen && (!(*lambda_pen >= 0.0) || !std::isfinite(*lambda_pen))) {
    throw InputError("config: lambda_pen must be >= 0 or \"auto\"");
  }
  if (!(separable_lambda_pen >= 0.0) || !std::isfinite(separable_lambda_pen)) {
    throw InputError("config: separable_lambda_pen must be >= 0");
  }
  if (!(lcurve_min > 0.0) || !(lcurve_max > lcurve_min)) throw InputError("config: need 0 < lcurve_min < lcurve_max");
  if (lcurve_count < 5) throw InputError("config: lcurve_count must be >= 5");
  if (data.empty()) throw InputError("config: 'data' is required");
  if (!(stress_scale > 0.0) || !std::isfinite(stress_scale)) throw InputError("config: stress_scale must be positive");
  if (quad_order < 1 || quad_order > 16) throw InputError("config: quad_order must be in [1, 16]");
}

RunConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config: expected a JSON object");

  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "model") {
      c.kind = parse_kind(get_as<std::string>(v, key));
    } else if (key == "n1") {
      c.n1 = get_int(v, key);
    } else if (key == "n2") {
      c.n2 = get_int(v, key);
    } else if (key == "delta") {
      c.delta = get_number(v, key);
    } else if (key == "use_polyconvex") {
      c.use_polyconvex = get_bool(v, key);
    } else if (key == "lambda_pen") {
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") throw InputError("config: lambda_pen must be a number or \"auto\"");
        c.lambda_pen.reset();
      } else {
        c.lambda_pen = get_number(v, key);
      }
    } else if (key == "separable_lambda_pen") {
      c.separable_lambda_pen = get_number(v, key);
    } else if (key == "lcurve_min") {
      c.lcurve_min = get_number(v, key);
    } else if (key == "lcurve_max") {
      c.lcurve_max = get_number(v, key);
    } else if (key == "lcurve_count") {
      c.lcurve_count = get_int(v, key);
    } else if (key == "data") {
      c.data = get_as<std::string>(v, key);
    } else if (key == "output") {
      c.output = get_as<std::string>(v, key);
    } else if (key == "stress_unit") {
      c.stress_unit = get_as<std::string>(v, key);
    } else if (key == "stress_scale") {
      c.stress_scale = get_number(v, key);
    } else if (key == "monotone_1") {
      c.constraints.monotone_1 = get_bool(v, key);
    } else if (key == "monotone_2") {
      c.constraints.monotone_2 = get_bool(v, key);
    } else if (key == "convex_1") {
      c.constraints.convex_1 = get_bool(v, key);
    } else if (key == "convex_2") {
      c.constraints.convex_2 = get_bool(v, key);
    } else if (key == "sites1") {
      c.sites1 = get_sites(v, key);
    } else if (key == "sites2") {
      c.sites2 = get_sites(v, key);
    } else if (key == "quad_order") {
      c.quad_order = get_int(v, key);
    } else {
      throw InputError("config: unknown key '" + key + "'");
    }
  }
  c.data = resolve(c.data, base_dir);
  c.output = resolve(c.output, base_dir);
  c.validate();
  return c;
}

RunConfig read_config(const fs::path& path) {
  return parse_config(read_text(path), path.parent_path());
}

std::string to_json(const ModelFile& f) {
  const ModelSpec& s = f.state.spec;
  json j;
  j["schema_version"] = f.schema_version;
  j["kind"] = std::string(to_string(s.kind));
  j["domain"] = {{"u_min", s.domain.u_min},
                 {"u_max", s.domain.u_max},
                 {"i2_axis_max", s.i2_axis_max},
                 {"delta", s.domain.delta},
                 {"use_polyconvex", s.domain.use_polyconvex}};
  j["sites1"] = s.sites1;
  j["sites2"] = s.sites2;
  j["theta"] = std::vector<double>(f.state.theta.data(), f.state.theta.data() + f.state.theta.size());
  j["fixed_zero"] = f.state.fixed_zero;
  j["lambda_pen"] = f.lambda_pen;
  j["metrics"] = metrics_json(f.metrics);
  j["solver"] = {{"iterations", f.iterations}, {"kkt_residual", f.kkt_residual}, {"ridge_applied", f.ridge_applied}};
  j["stress_unit"] = f.stress_unit;
  j["provenance"] = {{"data_sha256", f.data_sha256}, {"timestamp", f.timestamp}};
  return j.dump(2) + "\n";
}

ModelFile parse_model_file(const std::string& json_text) {
  ModelFile f;
  try {
    const json j = json::parse(json_text);
    f.schema_version = j.at("schema_version").get<int>();
    if (f.schema_version != kModelSchemaVersion) {
      throw InputError("model file: schema version " + std::to_string(f.schema_version) + " is not supported (expected " +
                       std::to_string(kModelSchemaVersion) + ")");
    }
    ModelSpec& s = f.state.spec;
    s.kind = parse_kind(j.at("kind").get<std::string>());
    const json& d = j.at("domain");
    s.domain.u_min = d.at("u_min").get<double>();
    s.domain.u_max = d.at("u_max").get<double>();
    s.i2_axis_max = d.at("i2_axis_max").get<double>();
    s.domain.delta = d.at("delta").get<double>();
    s.domain.use_polyconvex = d.at("use_polyconvex").get<bool>();
    s.sites1 = j.at("sites1").get<std::vector<double>>();
    s.sites2 = j.at("sites2").get<std::vector<double>>();
    s.validate();
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (static_cast<int>(theta.size()) != s.parameter_count()) throw InputError("model file: theta length mismatch");
    f.state.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    f.state.fixed_zero = j.at("fixed_zero").get<std::vector<int>>();
    f.lambda_pen = j.at("lambda_pen").get<double>();
    f.metrics = metrics_from_json(j.at("metrics"));
    const json& sol = j.at("solver");
    f.iterations = sol.at("iterations").get<int>();
    f.kkt_residual = sol.at("kkt_residual").get<double>();
    f.ridge_applied = sol.at("ridge_applied").get<bool>();
    f.stress_unit = j.at("stress_unit").get<std::string>();
    f.data_sha256 = j.at("provenance").at("data_sha256").get<std::string>();
    f.timestamp = j.at("provenance").at("timestamp").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  return f;
}

ModelFile read_model_file(const fs::path& path) { return parse_model_file(read_text(path)); }

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    if (const auto v = to_double(epoch)) t = static_cast<std::time_t>(*v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace hyperspline
