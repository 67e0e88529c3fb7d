#include "windmil/harness/contours.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "windmil/error.hpp"

namespace windmil::harness {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_scalars(std::ostream& out, const std::string& name, const std::vector<double>& values) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : values) out << num(v) << '\n';
}

}  // namespace

void export_contours(const geometry::TriangleMesh& mesh, std::span<const double> pred,
                     std::span<const double> target, const std::filesystem::path& path) {
  const std::size_t n = mesh.vertices.size();
  if (pred.size() != n || target.size() != n) {
    throw ShapeError("contour export: " + std::to_string(pred.size()) + " predictions and " +
                     std::to_string(target.size()) + " targets for " + std::to_string(n) + " vertices");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# vtk DataFile Version 3.0\nwindmil surface cp\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.vertices) out << num(p.x()) << ' ' << num(p.y()) << ' ' << num(p.z()) << '\n';
  out << "POLYGONS " << mesh.faces.size() << ' ' << mesh.faces.size() * 4 << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  std::vector<double> err(n);
  for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(pred[i] - target[i]);
  out << "POINT_DATA " << n << '\n';
  write_scalars(out, "cp_pred", {pred.begin(), pred.end()});
  write_scalars(out, "cp_true", {target.begin(), target.end()});
  write_scalars(out, "cp_abs_err", err);
  if (!out) throw IoError("write failed for " + path.string());
}

VtkPolyData read_vtk_polydata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& what) { return FormatError(path.string() + ": " + what); };
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw fail("truncated header");
  }
  if (line != "DATASET POLYDATA") throw fail("expected DATASET POLYDATA");

  VtkPolyData d;
  std::string word;
  std::size_t point_data = 0;
  while (in >> word) {
    if (word == "POINTS") {
      std::size_t n;
      std::string type;
      in >> n >> type;
      d.points.resize(n);
      for (auto& p : d.points) in >> p.x() >> p.y() >> p.z();
    } else if (word == "POLYGONS") {
      std::size_t count, total;
      in >> count >> total;
      d.polygons.resize(count);
      for (auto& poly : d.polygons) {
        std::size_t k;
        in >> k;
        poly.resize(k);
        for (auto& v : poly) in >> v;
      }
    } else if (word == "POINT_DATA") {
      in >> point_data;
    } else if (word == "SCALARS") {
      std::string name, type, lut, lut_name;
      int comps;
      in >> name >> type >> comps >> lut >> lut_name;
      if (comps != 1 || lut != "LOOKUP_TABLE") throw fail("unsupported SCALARS block " + name);
      std::vector<double> values(point_data);
      for (auto& v : values) in >> v;
      d.point_scalars[name] = std::move(values);
    } else {
      throw fail("unexpected token '" + word + "'");
    }
    if (!in) throw fail("truncated " + word + " block");
  }
  if (point_data != 0 && point_data != d.points.size()) throw fail("POINT_DATA count differs from POINTS");
  return d;
}

}  // namespace windmil::harness
