// CSV tables, SVG line plots and the binary path dump written by the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "rou/random_coeffs.hpp"
#include "rou/sde.hpp"

namespace rou::cli {

// %.17g; non-finite values print as inf, -inf or nan.
std::string format_double(double x);

using Cell = std::variant<std::string, double, std::int64_t>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  // Header line plus one line per row, quoted where needed, '\n' line ends.
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
  double opacity = 1.0;
};

// Polylines on shared axes; non-finite points are dropped.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series);

// Writes `text` to `path`; Io error on failure.
void write_file(const std::string& path, const std::string& text);

// One record: u64 r, u64 K, K+1 grid times, K+1 row-major A matrices, K+1 B
// matrices, then u64 M, M recorded times and M states. Little-endian doubles.
void append_path_record(std::string& buffer, const PathRealization& path, const TrajectoryOutput& traj);

}  // namespace rou::cli
