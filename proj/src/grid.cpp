#include "pmelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pmelab/errors.hpp"

namespace pmelab {

RadialGrid RadialGrid::uniform(double L, std::size_t N) {
  if (!(L > 0) || N < 2) throw InvalidArgument("uniform grid needs L > 0, N >= 2");
  RadialGrid g;
  g.L = L;
  g.spacing = Spacing::Uniform;
  g.r.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) g.r[i] = L * double(i) / double(N);
  g.r[N] = L;
  return g;
}

RadialGrid RadialGrid::graded(double L, double h0, double r_switch, double rel) {
  if (!(L > 0) || !(h0 > 0) || !(rel > 0) || r_switch < 0)
    throw InvalidArgument("graded grid needs positive L, h0, rel");
  RadialGrid g;
  g.L = L;
  g.spacing = Spacing::Graded;
  std::size_t nu = std::size_t(std::llround(std::min(r_switch, L) / h0));
  for (std::size_t i = 0; i <= nu; ++i) g.r.push_back(double(i) * h0);
  double x = g.r.back();
  while (x < L) {
    double h = std::max(h0, rel * x);
    // avoid a sliver at the end
    if (x + 1.5 * h >= L) h = L - x;
    x += h;
    g.r.push_back(x);
  }
  g.r.back() = L;
  g.validate();
  return g;
}

RadialGrid RadialGrid::from_nodes(std::vector<double> nodes) {
  RadialGrid g;
  g.r = std::move(nodes);
  g.L = g.r.empty() ? 0.0 : g.r.back();
  g.spacing = Spacing::Graded;
  g.validate();
  return g;
}

void RadialGrid::validate() const {
  if (r.size() < 3) throw InvalidArgument("grid needs at least 3 nodes");
  if (r.front() != 0.0) throw InvalidArgument("first node must be 0");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw InvalidArgument("grid nodes must increase");
}

std::size_t RadialGrid::locate(double x) const {
  auto it = std::upper_bound(r.begin(), r.end(), x);
  if (it == r.begin()) return 0;
  return std::min<std::size_t>(std::size_t(it - r.begin()) - 1, r.size() - 1);
}

std::size_t RadialGrid::nearest(double x) const {
  std::size_t i = locate(x);
  if (i + 1 < r.size() && std::abs(r[i + 1] - x) < std::abs(r[i] - x)) return i + 1;
  return i;
}

double RadialField::sup() const {
  double s = 0.0;
  for (double v : f) s = std::max(s, v);
  return s;
}

double RadialField::at(double x) const {
  if (r.empty()) return 0.0;
  if (x <= r.front()) return f.front();
  if (x > r.back()) return 0.0;
  auto it = std::upper_bound(r.begin(), r.end(), x);
  std::size_t i = std::size_t(it - r.begin());
  if (i >= r.size()) return f.back();
  double th = (x - r[i - 1]) / (r[i] - r[i - 1]);
  return (1 - th) * f[i - 1] + th * f[i];
}

void require_same_nodes(const std::vector<double>& a,
                        const std::vector<double>& b, const std::string& who) {
  if (a.size() != b.size()) throw GridMismatch(who + ": node counts differ");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) throw GridMismatch(who + ": nodes differ");
}

void write_field_csv(const std::string& path, const RadialField& field,
                     const std::string& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << header << "\n";
  char buf[64];
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", field.r[i], field.f[i]);
    out << buf << "\n";
  }
}

}  // namespace pmelab
