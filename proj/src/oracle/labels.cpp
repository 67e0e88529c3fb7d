#include "windmil/oracle/labels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "windmil/error.hpp"

namespace windmil::oracle {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": cannot parse number '" + s + "'");
  }
}

std::size_t parse_index(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError(where + ": bad node id '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const FlowConditions& fc) {
  if (!(fc.rho > 0.0)) throw DomainError("air density must be positive");
  if (!(fc.u_inf > 0.0)) throw DomainError("reference velocity must be positive");
}

Eigen::Vector3d wind_vector(double theta_deg) {
  const double t = theta_deg * std::numbers::pi / 180.0;
  return {std::cos(t), 0.0, std::sin(t)};
}

CpLabels pseudo_cp(const graph::FeatureTable& x, double theta_deg) {
  if (x.cols() != graph::kFeatureCount) throw ShapeError("feature table must have 6 columns");
  const Eigen::Vector3d w = wind_vector(theta_deg);
  CpLabels labels;
  labels.source = LabelSource::kOracle;
  labels.cp_mean.resize(static_cast<std::size_t>(x.rows()));
  labels.cp_std.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index v = 0; v < x.rows(); ++v) {
    const double y = x(v, 1);
    const double z = x(v, 2);
    const double d = x(v, 3) * w.x() + x(v, 4) * w.y() + x(v, 5) * w.z();
    const double lateral = std::max(0.0, 1.0 - d * d);
    const double skew = std::tanh(3.0 * z * w.z());
    const auto i = static_cast<std::size_t>(v);
    labels.cp_mean[i] = 0.8 * (-d) * (0.3 + 0.7 * y) - 0.5 * lateral + 0.2 * skew;
    labels.cp_std[i] = 0.25 * std::sqrt(lateral) * (0.4 + 0.6 * y) + 0.05 * (1.0 + skew) / 2.0;
  }
  return labels;
}

CpLabels pseudo_cp(const graph::SurfaceGraph& g, double theta_deg) {
  return pseudo_cp(g.features, theta_deg);
}

CpStats cp_from_pressure(std::span<const double> p_series, const FlowConditions& fc) {
  validate(fc);
  if (p_series.empty()) throw DomainError("empty pressure series");
  const double q = 0.5 * fc.rho * fc.u_inf * fc.u_inf;
  double sum = 0.0;
  for (double p : p_series) sum += (p - fc.p_inf) / q;
  const double mean = sum / static_cast<double>(p_series.size());
  double ss = 0.0;
  for (double p : p_series) {
    const double d = (p - fc.p_inf) / q - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / static_cast<double>(p_series.size()))};
}

CpStats cp_from_pressure_stats(double p_mean, double p_std, const FlowConditions& fc) {
  validate(fc);
  if (p_std < 0.0) throw DomainError("pressure std must be >= 0");
  const double q = 0.5 * fc.rho * fc.u_inf * fc.u_inf;
  return {(p_mean - fc.p_inf) / q, p_std / q};
}

std::string to_string(LabelSource s) { return s == LabelSource::kOracle ? "oracle" : "ingested"; }

void write_labels_csv(const CpLabels& labels, const std::filesystem::path& path) {
  if (labels.cp_mean.size() != labels.cp_std.size()) throw ShapeError("label columns differ in length");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "node_id,cp_mean,cp_std,source\n";
  const std::string src = to_string(labels.source);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << i << ',' << format_double(labels.cp_mean[i]) << ',' << format_double(labels.cp_std[i])
        << ',' << src << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

CpLabels read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"node_id", "cp_mean", "cp_std", "source"}) {
    throw FormatError(path.string() + ": expected header node_id,cp_mean,cp_std,source");
  }
  CpLabels labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    const std::string where = path.string() + " row " + std::to_string(row + 1);
    if (cells.size() != 4) throw FormatError(where + ": expected 4 columns");
    if (parse_index(cells[0], where) != row) throw FormatError(where + ": node ids must be 0..n-1 in order");
    labels.cp_mean.push_back(parse_double(cells[1], where));
    labels.cp_std.push_back(parse_double(cells[2], where));
    if (cells[3] == "oracle") {
      labels.source = LabelSource::kOracle;
    } else if (cells[3] == "ingested") {
      labels.source = LabelSource::kIngested;
    } else {
      throw FormatError(where + ": unknown source '" + cells[3] + "'");
    }
    if (!std::isfinite(labels.cp_mean.back()) || !std::isfinite(labels.cp_std.back()) ||
        labels.cp_std.back() < 0.0) {
      throw FormatError(where + ": labels must be finite with cp_std >= 0");
    }
    ++row;
  }
  return labels;
}

FlowConditions read_flow_conditions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FlowConditions fc;
  try {
    const auto j = nlohmann::json::parse(in);
    fc.p_inf = j.at("p_inf").get<double>();
    fc.rho = j.at("rho").get<double>();
    fc.u_inf = j.at("u_inf").get<double>();
    fc.theta_deg = j.value("theta_deg", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  validate(fc);
  return fc;
}

CpLabels ingest_csv(const std::filesystem::path& csv, std::size_t node_count,
                    const std::filesystem::path& flow_json) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(csv.string() + ": empty file");
  const auto header = split_csv_line(line);
  const bool pressure = header == std::vector<std::string>{"node_id", "p_mean", "p_std"};
  const bool direct = header == std::vector<std::string>{"node_id", "cp_mean", "cp_std"};
  if (!pressure && !direct) {
    throw FormatError(csv.string() + ": expected node_id,p_mean,p_std or node_id,cp_mean,cp_std");
  }
  FlowConditions fc;
  if (pressure) {
    if (flow_json.empty()) throw ConfigError("pressure ingestion needs a flow-conditions JSON");
    fc = read_flow_conditions(flow_json);
  }
  CpLabels labels;
  labels.source = LabelSource::kIngested;
  labels.cp_mean.assign(node_count, 0.0);
  labels.cp_std.assign(node_count, 0.0);
  std::vector<bool> seen(node_count, false);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::string where = csv.string() + " row " + std::to_string(row);
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw FormatError(where + ": expected 3 columns");
    const std::size_t id = parse_index(cells[0], where);
    if (id >= node_count) throw FormatError(where + ": node id out of range");
    if (seen[id]) throw FormatError(where + ": duplicate node id");
    seen[id] = true;
    const double a = parse_double(cells[1], where);
    const double b = parse_double(cells[2], where);
    if (pressure) {
      const CpStats s = cp_from_pressure_stats(a, b, fc);
      labels.cp_mean[id] = s.mean;
      labels.cp_std[id] = s.std;
    } else {
      if (b < 0.0) throw FormatError(where + ": cp_std must be >= 0");
      labels.cp_mean[id] = a;
      labels.cp_std[id] = b;
    }
  }
  if (row != node_count) {
    throw FormatError(csv.string() + ": " + std::to_string(row) + " rows for " +
                      std::to_string(node_count) + " nodes");
  }
  return labels;
}

}  // namespace windmil::oracle
