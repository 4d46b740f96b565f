#include "srm/io.hpp"

#include "srm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace srm::io {

namespace {

constexpr double kRenormalizeTol = 1e-6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_number(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : split(text, '\n')) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string format_double(double value) {
  if (value == 0.0) value = 0.0;
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::NumericalFailure, "double formatting failed");
  return std::string(buf, ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

RowMatrix parse_matrix_csv(std::string_view text) {
  auto lines = lines_of(text);
  if (lines.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has no rows");
  double probe = 0.0;
  const auto first = split(lines.front(), ',');
  if (!std::all_of(first.begin(), first.end(),
                   [&](std::string_view f) { return parse_number(f, probe); })) {
    lines.erase(lines.begin());
  }
  if (lines.empty()) throw Error(ErrorCode::EmptyDataset, "CSV has a header but no rows");

  const auto cols = static_cast<Eigen::Index>(split(lines.front(), ',').size());
  RowMatrix out(static_cast<Eigen::Index>(lines.size()), cols);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split(lines[r], ',');
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  "CSV row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                      " columns, expected " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      double value = 0.0;
      if (!parse_number(fields[static_cast<std::size_t>(c)], value)) {
        throw Error(ErrorCode::InvalidArgument, "CSV row " + std::to_string(r) +
                                                    " has a non-numeric field");
      }
      out(static_cast<Eigen::Index>(r), c) = value;
    }
  }
  return out;
}

RowMatrix read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_text(path));
}

void write_matrix_csv(const std::filesystem::path& path, const RowMatrix& rows) {
  std::string text;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (c) text += ',';
      text += format_double(rows(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

std::string format_basis_csv(const BasisSet& basis) {
  std::string text;
  for (Eigen::Index r = 0; r < basis.count(); ++r) {
    for (Eigen::Index c = 0; c < basis.dim(); ++c) {
      if (c) text += ',';
      text += format_double(basis.vectors(r, c));
    }
    text += '\n';
  }
  return text;
}

void write_basis_csv(const std::filesystem::path& path, const BasisSet& basis) {
  write_text(path, format_basis_csv(basis));
}

BasisSet parse_basis_csv(std::string_view text) {
  RowMatrix rows = parse_matrix_csv(text);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double norm = rows.row(r).norm();
    if (!(std::abs(norm - 1.0) <= kRenormalizeTol)) {
      throw Error(ErrorCode::InvalidArgument, "basis row " + std::to_string(r) +
                                                  " is not unit length (norm " +
                                                  std::to_string(norm) + ")");
    }
    rows.row(r) /= norm;
  }
  return BasisSet{std::move(rows), BasisKind::File, std::nullopt};
}

BasisSet read_basis_csv(const std::filesystem::path& path) {
  return parse_basis_csv(read_text(path));
}

std::string format_ensemble_csv(const SrmEnsemble& ensemble) {
  std::string text = "theta,alpha,beta,value\n";
  for (const auto& curve : ensemble.curves) {
    const std::string a = std::to_string(curve.plane.alpha);
    const std::string b = std::to_string(curve.plane.beta);
    for (std::size_t t = 0; t < curve.values.size(); ++t) {
      text += format_double(curve.thetas[t]);
      text += ',';
      text += a;
      text += ',';
      text += b;
      text += ',';
      text += format_double(curve.values[t]);
      text += '\n';
    }
  }
  return text;
}

void write_ensemble_csv(const std::filesystem::path& path, const SrmEnsemble& ensemble) {
  write_text(path, format_ensemble_csv(ensemble));
}

std::string format_summary_json(const SrmEnsemble& ensemble, const SrmEnsemble* reference) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["config"] = {
      {"epsilon", ensemble.config.epsilon},
      {"theta_samples", ensemble.config.theta_samples},
      {"variant", std::string(to_string(ensemble.config.variant))},
      {"mode", std::string(to_string(ensemble.config.mode))},
  };
  char fp[17];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(ensemble.basis_fingerprint));
  j["basis_fingerprint"] = fp;
  j["planes"] = ensemble.curves.size();
  j["skipped_planes"] = ordered_json::array();
  for (const auto& p : ensemble.skipped_planes) j["skipped_planes"].push_back({p.alpha, p.beta});
  j["thetas"] = ensemble.thetas;
  j["mean_curve"] = ensemble.mean_curve;
  j["median_curve"] = ensemble.median_curve();
  auto amps = ordered_json::array();
  for (const auto& curve : ensemble.curves) {
    amps.push_back({{"alpha", curve.plane.alpha},
                    {"beta", curve.plane.beta},
                    {"amplitude", curve.amplitude()}});
  }
  j["amplitudes"] = std::move(amps);
  j["mean_amplitude"] = ensemble.mean_amplitude();
  if (reference) {
    try {
      j["correlation_vs_self"] = curve_correlation(ensemble.mean_curve, reference->mean_curve);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      j["correlation_vs_self"] = nullptr;
    }
    j["self_mean_curve"] = reference->mean_curve;
  }
  return j.dump(2) + "\n";
}

void write_summary_json(const std::filesystem::path& path, const SrmEnsemble& ensemble,
                        const SrmEnsemble* reference) {
  write_text(path, format_summary_json(ensemble, reference));
}

namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_ensemble_svg(const SrmEnsemble& ensemble, const SvgOptions& options) {
  const double margin = 40.0;
  const double w = options.width - 2 * margin;
  const double h = options.height - 2 * margin;
  const bool is_signed = ensemble.config.variant == SrmVariant::Signed;
  const double lo = is_signed ? -1.0 : 0.0;
  double hi = 0.0;
  for (const auto& c : ensemble.curves) {
    for (double v : c.values) hi = std::max(hi, std::abs(v));
  }
  hi = hi > 0.0 ? hi : 1.0;
  const double y_min = is_signed ? -hi : lo;
  const double two_pi = 2.0 * 3.14159265358979323846;

  auto point = [&](double theta, double value) {
    const double x = margin + w * theta / two_pi;
    const double y = margin + h * (1.0 - (value - y_min) / (hi - y_min));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << options.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w << "\" height=\""
      << h << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << margin << "\" y=\"" << margin / 2
        << "\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(options.title) << "</text>\n";
  }
  svg << "<text x=\"" << margin << "\" y=\"" << options.height - 10
      << "\" font-family=\"sans-serif\" font-size=\"11\">theta 0..2pi, max "
      << format_double(hi) << "</text>\n";
  for (const auto& c : ensemble.curves) {
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-opacity=\"0.08\" points=\"";
    for (std::size_t t = 0; t < c.values.size(); ++t) svg << point(c.thetas[t], c.values[t]);
    svg << "\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" "
         "stroke-dasharray=\"6,4\" points=\"";
  for (std::size_t t = 0; t < ensemble.mean_curve.size(); ++t) {
    svg << point(ensemble.thetas[t], ensemble.mean_curve[t]);
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

void write_ensemble_svg(const std::filesystem::path& path, const SrmEnsemble& ensemble,
                        const SvgOptions& options) {
  write_text(path, render_ensemble_svg(ensemble, options));
}

}  // namespace srm::io
