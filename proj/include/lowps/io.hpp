#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "lowps/transfer_operator.hpp"
#include "lowps/types.hpp"

namespace lowps::io {

// Reads a dense matrix from a Matrix Market file. Accepts array and
// coordinate layouts with real, integer, complex or pattern fields and the
// general, symmetric, hermitian and skew-symmetric qualifiers. Missing or
// unreadable files raise IoError, malformed contents ParseError.
CMatrix read_matrix_market(const std::string& path);

// Writes m as "matrix array complex general" at 17 significant digits.
void write_matrix_market(const std::string& path, const CMatrix& m);

// One state per line, comma separated. A first line with any non-numeric
// field is taken as a header and skipped. Blank lines are ignored.
Trajectory read_trajectory_csv(const std::string& path);

void write_trajectory_csv(const std::string& path, const Trajectory& t);

// %.17g, so that doubles survive a round trip through text.
std::string format_double(double x);

// Fails with IoError when the file cannot be opened for writing.
class TextWriter {
 public:
  explicit TextWriter(const std::string& path);
  ~TextWriter();
  TextWriter(const TextWriter&) = delete;
  TextWriter& operator=(const TextWriter&) = delete;

  void line(const std::string& s);
  // Joins the fields with commas.
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

}  // namespace lowps::io
