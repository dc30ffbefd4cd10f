#include "lowps/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "lowps/errors.hpp"

namespace lowps::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool try_parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  if (!try_parse_double(s, v))
    throw ParseError(where + ": '" + std::string(s) + "' is not a number");
  return v;
}

long long parse_int(std::string_view s, const std::string& where) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(where + ": '" + std::string(s) + "' is not an integer");
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

struct MmHeader {
  bool coordinate = false;
  std::string field;
  std::string symmetry;
};

MmHeader parse_header(const std::string& line, const std::string& path) {
  const auto t = tokens(line);
  if (t.size() != 5 || lower(t[0]) != "%%matrixmarket" || lower(t[1]) != "matrix")
    throw ParseError(path + ": missing '%%MatrixMarket matrix' banner");
  MmHeader h;
  const std::string fmt = lower(t[2]);
  if (fmt != "array" && fmt != "coordinate")
    throw ParseError(path + ": unknown layout '" + t[2] + "'");
  h.coordinate = fmt == "coordinate";
  h.field = lower(t[3]);
  if (h.field != "real" && h.field != "integer" && h.field != "complex" && h.field != "pattern")
    throw ParseError(path + ": unsupported field '" + t[3] + "'");
  if (h.field == "pattern" && !h.coordinate)
    throw ParseError(path + ": pattern field needs the coordinate layout");
  h.symmetry = lower(t[4]);
  if (h.symmetry != "general" && h.symmetry != "symmetric" && h.symmetry != "hermitian" &&
      h.symmetry != "skew-symmetric")
    throw ParseError(path + ": unknown symmetry '" + t[4] + "'");
  if (h.symmetry == "hermitian" && h.field != "complex")
    throw ParseError(path + ": hermitian storage needs the complex field");
  return h;
}

// Mirrors the stored entry (i, j), i > j, into (j, i).
void mirror(CMatrix& m, Index i, Index j, const std::string& symmetry) {
  if (i == j) return;
  if (symmetry == "symmetric") m(j, i) = m(i, j);
  else if (symmetry == "skew-symmetric") m(j, i) = -m(i, j);
  else if (symmetry == "hermitian") m(j, i) = std::conj(m(i, j));
}

}  // namespace

CMatrix read_matrix_market(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const MmHeader h = parse_header(line, path);

  // Data lines, comments dropped; entries may wrap across lines.
  std::vector<std::string> data;
  std::size_t line_no = 1;
  std::vector<std::string> size_tokens;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '%') continue;
    if (size_tokens.empty()) {
      size_tokens = tokens(line);
      continue;
    }
    for (auto& tok : tokens(line)) data.push_back(std::move(tok));
  }
  if (size_tokens.size() != (h.coordinate ? 3u : 2u))
    throw ParseError(path + ": malformed size line");
  const long long rows = parse_int(size_tokens[0], path + " size line");
  const long long cols = parse_int(size_tokens[1], path + " size line");
  if (rows < 1 || cols < 1) throw ParseError(path + ": dimensions must be positive");
  if (h.symmetry != "general" && rows != cols)
    throw ParseError(path + ": symmetric storage needs a square matrix");

  const bool complex_field = h.field == "complex";
  const std::size_t per_value = complex_field ? 2 : (h.field == "pattern" ? 0 : 1);
  CMatrix m = CMatrix::Zero(rows, cols);
  auto value_at = [&](std::size_t pos) -> Complex {
    if (per_value == 0) return Complex(1.0, 0.0);
    const double re = parse_double(data[pos], path);
    const double im = complex_field ? parse_double(data[pos + 1], path) : 0.0;
    return Complex(re, im);
  };

  if (h.coordinate) {
    const long long nnz = parse_int(size_tokens[2], path + " size line");
    if (nnz < 0) throw ParseError(path + ": negative entry count");
    const std::size_t stride = 2 + per_value;
    if (data.size() != static_cast<std::size_t>(nnz) * stride)
      throw ParseError(path + ": expected " + std::to_string(nnz) + " entries of " +
                       std::to_string(stride) + " fields, found " + std::to_string(data.size()) +
                       " fields");
    for (long long e = 0; e < nnz; ++e) {
      const std::size_t pos = static_cast<std::size_t>(e) * stride;
      const long long i = parse_int(data[pos], path) - 1;
      const long long j = parse_int(data[pos + 1], path) - 1;
      if (i < 0 || i >= rows || j < 0 || j >= cols)
        throw ParseError(path + ": entry " + std::to_string(e + 1) + " is out of range");
      if (h.symmetry != "general" && i < j)
        throw ParseError(path + ": symmetric storage lists the lower triangle only");
      m(i, j) += value_at(pos + 2);
      mirror(m, i, j, h.symmetry);
    }
    return m;
  }

  // Array layout: column major, lower triangle only for symmetric kinds.
  const bool skew = h.symmetry == "skew-symmetric";
  std::size_t expected = 0;
  for (long long j = 0; j < cols; ++j) {
    const long long first = h.symmetry == "general" ? 0 : (skew ? j + 1 : j);
    expected += static_cast<std::size_t>(std::max(0LL, rows - first));
  }
  if (data.size() != expected * per_value)
    throw ParseError(path + ": expected " + std::to_string(expected) + " values, found " +
                     std::to_string(data.size() / std::max<std::size_t>(per_value, 1)));
  std::size_t pos = 0;
  for (long long j = 0; j < cols; ++j) {
    const long long first = h.symmetry == "general" ? 0 : (skew ? j + 1 : j);
    for (long long i = first; i < rows; ++i, pos += per_value) {
      m(i, j) = value_at(pos);
      mirror(m, i, j, h.symmetry);
    }
  }
  return m;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

TextWriter::TextWriter(const std::string& path) : path_(path) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw IoError("cannot open '" + path + "' for writing");
}

TextWriter::~TextWriter() {
  if (f_) std::fclose(f_);
}

void TextWriter::line(const std::string& s) {
  if (std::fputs(s.c_str(), f_) < 0 || std::fputc('\n', f_) == EOF)
    throw IoError("write to '" + path_ + "' failed");
}

void TextWriter::row(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  line(s);
}

void TextWriter::close() {
  if (!f_) return;
  const int rc = std::fclose(f_);
  f_ = nullptr;
  if (rc != 0) throw IoError("closing '" + path_ + "' failed");
}

void write_matrix_market(const std::string& path, const CMatrix& m) {
  TextWriter w(path);
  w.line("%%MatrixMarket matrix array complex general");
  w.line(std::to_string(m.rows()) + " " + std::to_string(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      w.line(format_double(m(i, j).real()) + " " + format_double(m(i, j).imag()));
  w.close();
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size(); ++k) numeric = numeric && try_parse_double(fields[k], values[k]);
    if (first && !numeric) {
      first = false;
      continue;
    }
    first = false;
    if (!numeric)
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    if (!rows.empty() && values.size() != rows.front().size())
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns, found " +
                       std::to_string(values.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  Trajectory t;
  t.states.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.states(i, j) = rows[i][j];
  t.meta = "csv:" + path;
  return t;
}

void write_trajectory_csv(const std::string& path, const Trajectory& t) {
  TextWriter w(path);
  for (Index i = 0; i < t.size(); ++i) {
    std::vector<std::string> f;
    for (Index j = 0; j < t.state_dim(); ++j) f.push_back(format_double(t.states(i, j)));
    w.row(f);
  }
  w.close();
}

}  // namespace lowps::io
