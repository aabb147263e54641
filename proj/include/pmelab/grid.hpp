#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pmelab {

enum class Spacing { Uniform, Graded };

struct RadialGrid {
  double L = 0.0;
  std::vector<double> r;
  Spacing spacing = Spacing::Uniform;

  // N intervals of width L/N
  static RadialGrid uniform(double L, std::size_t N);
  // step h0 up to r_switch, then steps of rel*r (last step shortened to hit L)
  static RadialGrid graded(double L, double h0, double r_switch, double rel);
  static RadialGrid from_nodes(std::vector<double> nodes);

  std::size_t size() const { return r.size(); }
  std::size_t last() const { return r.size() - 1; }
  // index of the node closest to x
  std::size_t nearest(double x) const;
  // largest i with r[i] <= x
  std::size_t locate(double x) const;
  void validate() const;
};

struct RadialField {
  std::vector<double> r;
  std::vector<double> f;

  RadialField() = default;
  RadialField(std::vector<double> r_, std::vector<double> f_)
      : r(std::move(r_)), f(std::move(f_)) {}
  RadialField(const RadialGrid& g, double value)
      : r(g.r), f(g.r.size(), value) {}

  std::size_t size() const { return f.size(); }
  double operator[](std::size_t i) const { return f[i]; }
  double& operator[](std::size_t i) { return f[i]; }
  double sup() const;
  // linear interpolation, 0 beyond the last node
  double at(double x) const;
};

// throws GridMismatch unless both carry the same nodes
void require_same_nodes(const std::vector<double>& a,
                        const std::vector<double>& b, const std::string& who);

void write_field_csv(const std::string& path, const RadialField& field,
                     const std::string& header);

}  // namespace pmelab
