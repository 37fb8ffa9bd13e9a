#pragma once

// File exporters: binary PGM images, CSV tables and run records.

#include "ntopo/opt.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace ntopo {

/// 8-bit P5 image of densities, element (ex, ey) at column ex, row ey, gray
/// level 255 (1 - y) so that material is dark.
void write_density_pgm(const std::filesystem::path& path,
                       const Eigen::VectorXd& y, int nx, int ny);

/// 8-bit P5 image of an nx-by-ny array rescaled from [min, max] to [0, 255].
void write_image_pgm(const std::filesystem::path& path,
                     const Eigen::MatrixXd& image);

/// Header row then one row per entry of `rows`, 17 significant digits.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Wall time is omitted unless `timing`, keeping reruns byte-identical.
void write_record_csv(const std::filesystem::path& path,
                      const RunRecord& record, bool timing = false);

/// Shortest round-trippable decimal with 17 significant digits.
std::string format_double(double v);

}  // namespace ntopo
