#pragma once

// Plain-text file formats: basis CSV, activation CSV, ensemble CSV, summary
// JSON and a minimal SVG ensemble plot.

#include "srm/srm.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace srm::io {

// Shortest round-trip decimal representation.
std::string format_double(double value);

std::string format_basis_csv(const BasisSet& basis);
void write_basis_csv(const std::filesystem::path& path, const BasisSet& basis);

// One vector per row, no header. Rows within 1e-6 of unit length are
// renormalized; anything further off is rejected.
BasisSet parse_basis_csv(std::string_view text);
BasisSet read_basis_csv(const std::filesystem::path& path);

// One sample per row; a non-numeric first line is treated as a header.
RowMatrix parse_matrix_csv(std::string_view text);
RowMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const RowMatrix& rows);

// theta,alpha,beta,value
std::string format_ensemble_csv(const SrmEnsemble& ensemble);
void write_ensemble_csv(const std::filesystem::path& path, const SrmEnsemble& ensemble);

// Summary: config, mean curve, per-plane amplitudes and the Pearson
// correlation of the mean curve with the reference (self-SRM) mean curve.
std::string format_summary_json(const SrmEnsemble& ensemble,
                                const SrmEnsemble* reference = nullptr);
void write_summary_json(const std::filesystem::path& path, const SrmEnsemble& ensemble,
                        const SrmEnsemble* reference = nullptr);

struct SvgOptions {
  int width = 640;
  int height = 360;
  std::string title;
};

// Faint per-plane polylines plus a dashed mean curve.
std::string render_ensemble_svg(const SrmEnsemble& ensemble, const SvgOptions& options = {});
void write_ensemble_svg(const std::filesystem::path& path, const SrmEnsemble& ensemble,
                        const SvgOptions& options = {});

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace srm::io
