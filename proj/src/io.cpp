#include "ntopo/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ntopo {

namespace {

std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_p5(const std::filesystem::path& path, int width, int height,
              const std::vector<unsigned char>& pixels) {
  auto out = open_output(path, std::ios::out | std::ios::binary);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(
      std::lround(255.0 * std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0)));
}

}  // namespace

void write_density_pgm(const std::filesystem::path& path,
                       const Eigen::VectorXd& y, int nx, int ny) {
  std::vector<unsigned char> pixels(static_cast<std::size_t>(nx) * ny);
  for (int ey = 0; ey < ny; ++ey)
    for (int ex = 0; ex < nx; ++ex)
      pixels[static_cast<std::size_t>(ey) * nx + ex] =
          to_byte(1.0 - y(ex * ny + ey));
  write_p5(path, nx, ny, pixels);
}

void write_image_pgm(const std::filesystem::path& path,
                     const Eigen::MatrixXd& image) {
  const int nx = static_cast<int>(image.rows());
  const int ny = static_cast<int>(image.cols());
  const double lo = image.minCoeff();
  const double span = image.maxCoeff() - lo;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(nx) * ny);
  for (int ey = 0; ey < ny; ++ey)
    for (int ex = 0; ex < nx; ++ex)
      pixels[static_cast<std::size_t>(ey) * nx + ex] =
          to_byte(span > 0.0 ? (image(ex, ey) - lo) / span : 0.5);
  write_p5(path, nx, ny, pixels);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto out = open_output(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void write_record_csv(const std::filesystem::path& path,
                      const RunRecord& record, bool timing) {
  std::vector<std::string> header = {"iter",          "compliance",
                                     "volume_error",  "gray_fraction",
                                     "grad_norm",     "ntk_drift"};
  if (timing) header.push_back("wall_time");
  std::vector<std::vector<double>> rows;
  rows.reserve(record.iterations.size());
  for (const auto& r : record.iterations) {
    rows.push_back({static_cast<double>(r.iter), r.compliance, r.volume_error,
                    r.gray_fraction, r.grad_norm, r.ntk_drift});
    if (timing) rows.back().push_back(r.wall_time);
  }
  write_csv(path, header, rows);
}

}  // namespace ntopo
