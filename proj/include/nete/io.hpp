#pragma once

// CSV input/output: observation tables and the two-column wave/surge file.
// Numbers are written with std::to_chars (shortest round-trip, no locale).

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nete/error.hpp"
#include "nete/table.hpp"

namespace nete {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline bool parse_number(std::string_view field, double& out) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace detail

/// Writes the header x1..x{d_x},d,y,u1..u{d_u} followed by one row per unit.
inline void write_table_csv(std::ostream& out, const ObservationTable& t) {
  for (Eigen::Index j = 0; j < t.d_x(); ++j) out << 'x' << (j + 1) << ',';
  out << "d,y";
  for (Eigen::Index j = 0; j < t.d_u(); ++j) out << ",u" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < t.n(); ++i) {
    for (Eigen::Index j = 0; j < t.d_x(); ++j) out << format_double(t.X(i, j)) << ',';
    out << (t.D(i) == 1.0 ? '1' : '0') << ',' << format_double(t.Y(i));
    for (Eigen::Index j = 0; j < t.d_u(); ++j) out << ',' << format_double(t.U(i, j));
    out << '\n';
  }
}

inline void write_table_csv(const std::string& path, const ObservationTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_table_csv(out, t);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline ObservationTable read_table_csv(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file");
  const auto header = detail::split_commas(line);

  enum class Col { x, d, y, u };
  std::vector<std::pair<Col, Eigen::Index>> layout;
  Eigen::Index d_x = 0;
  Eigen::Index d_u = 0;
  int n_d = 0;
  int n_y = 0;
  for (const auto name : header) {
    auto indexed = [&](char prefix) -> Eigen::Index {
      double idx = 0.0;
      if (name.size() < 2 || name.front() != prefix || !detail::parse_number(name.substr(1), idx) || idx < 1) {
        throw SchemaError(source + ": unrecognised column '" + std::string(name) + "'");
      }
      return static_cast<Eigen::Index>(idx) - 1;
    };
    if (name == "d") {
      layout.emplace_back(Col::d, 0);
      ++n_d;
    } else if (name == "y") {
      layout.emplace_back(Col::y, 0);
      ++n_y;
    } else if (!name.empty() && name.front() == 'x') {
      layout.emplace_back(Col::x, indexed('x'));
      ++d_x;
    } else if (!name.empty() && name.front() == 'u') {
      layout.emplace_back(Col::u, indexed('u'));
      ++d_u;
    } else {
      throw SchemaError(source + ": unrecognised column '" + std::string(name) + "'");
    }
  }
  if (n_d != 1 || n_y != 1 || d_x < 1 || d_u < 1) {
    throw SchemaError(source + ": header must contain x1.., d, y, u1..");
  }
  for (const auto& [col, idx] : layout) {
    if ((col == Col::x && idx >= d_x) || (col == Col::u && idx >= d_u)) {
      throw SchemaError(source + ": column indices must be contiguous from 1");
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != layout.size()) {
      throw ParseError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(layout.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_number(fields[j], values[j])) {
        throw ParseError(source + ": line " + std::to_string(line_no) + " field " + std::to_string(j + 1) +
                         " is not a number: '" + std::string(fields[j]) + "'");
      }
    }
    rows.push_back(std::move(values));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  ObservationTable t;
  t.X.resize(n, d_x);
  t.D.resize(n);
  t.Y.resize(n);
  t.U.resize(n, d_u);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < layout.size(); ++j) {
      const double v = rows[static_cast<std::size_t>(i)][j];
      switch (layout[j].first) {
        case Col::x: t.X(i, layout[j].second) = v; break;
        case Col::d: t.D(i) = v; break;
        case Col::y: t.Y(i) = v; break;
        case Col::u: t.U(i, layout[j].second) = v; break;
      }
    }
  }
  t.validate();
  return t;
}

inline ObservationTable read_table_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return read_table_csv(in, path);
}

inline constexpr Eigen::Index kWavesurgeRows = 2894;

struct WavesurgeData {
  Eigen::MatrixXd raw;  ///< n x 2: wave, surge
  std::string warning;  ///< set when the row count differs from the canonical file
};

/// Two numeric columns (wave, surge); a non-numeric first row is a header.
inline WavesurgeData load_wavesurge(std::istream& in, const std::string& source = "<stream>") {
  std::vector<std::array<double, 2>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != 2) {
      throw SchemaError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                        " columns, expected 2 (wave, surge)");
    }
    std::array<double, 2> v{};
    const bool ok = detail::parse_number(fields[0], v[0]) && detail::parse_number(fields[1], v[1]);
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError(source + ": line " + std::to_string(line_no) + " is not numeric: '" + line + "'");
    }
    rows.push_back(v);
  }
  WavesurgeData data;
  data.raw.resize(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    data.raw(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    data.raw(static_cast<Eigen::Index>(i), 1) = rows[i][1];
  }
  if (data.raw.rows() != kWavesurgeRows) {
    data.warning = source + ": expected " + std::to_string(kWavesurgeRows) + " rows, found " +
                   std::to_string(data.raw.rows());
  }
  return data;
}

inline WavesurgeData load_wavesurge(const std::string& path) {
  auto in = detail::open_input(path);
  return load_wavesurge(in, path);
}

}  // namespace nete
