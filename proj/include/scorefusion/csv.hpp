#pragma once

#include <fstream>
#include <iomanip>
#include <string>

#include "scorefusion/barycenter.hpp"
#include "scorefusion/core.hpp"
#include "scorefusion/metrics.hpp"
#include "scorefusion/vanilla_fusion.hpp"

namespace scorefusion {

namespace detail {

inline std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << std::setprecision(17);
  return out;
}

}  // namespace detail

/// One row per sample, columns x0..x{d-1}.
inline void write_samples_csv(const std::string& path, const SampleSet& samples) {
  auto out = detail::open_csv(path);
  for (int j = 0; j < samples.dim; ++j) out << (j ? ",x" : "x") << j;
  out << "\n";
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    for (int j = 0; j < samples.dim; ++j) out << (j ? "," : "") << samples.data(i, j);
    out << "\n";
  }
}

inline SampleSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("samples csv: empty file");
  int dim = 1;
  for (char ch : line) dim += (ch == ',');
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (int j = 0; j < dim; ++j) {
      std::size_t next = line.find(',', pos);
      values.push_back(std::stod(line.substr(pos, next - pos)));
      pos = next == std::string::npos ? line.size() : next + 1;
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(values.size()) / dim;
  MatrixXd data(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) data(i, j) = values[static_cast<std::size_t>(i * dim + j)];
  return SampleSet(dim, std::move(data), "csv:" + path, 0);
}

/// 1-D grid density as (x, value) rows.
inline void write_density_csv(const std::string& path, const GridDensity& d) {
  if (d.grid.dim() != 1) throw DimensionError("write_density_csv: 1-D only");
  auto out = detail::open_csv(path);
  out << "x,value\n";
  const VectorXd xs = d.grid.axis_points(0);
  for (Eigen::Index i = 0; i < xs.size(); ++i) out << xs[i] << "," << d.values[i] << "\n";
}

/// Frank-Wolfe convergence trace as (tau, objective, gap) rows.
inline void write_trace_csv(const std::string& path, const FrankWolfeTrace& trace) {
  auto out = detail::open_csv(path);
  out << "tau,objective,gap\n";
  for (std::size_t i = 0; i < trace.gap.size(); ++i)
    out << (i + 1) << "," << trace.objective[i] << "," << trace.gap[i] << "\n";
}

inline void write_histogram_csv(const std::string& path, const Histogram& h) {
  auto out = detail::open_csv(path);
  out << "bin_lo,bin_hi,count\n";
  for (Eigen::Index i = 0; i < h.counts.size(); ++i)
    out << h.edges[i] << "," << h.edges[i + 1] << "," << h.counts[i] << "\n";
}

}  // namespace scorefusion
