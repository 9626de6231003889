#include "dsd/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "dsd/digest.hpp"
#include "dsd/errors.hpp"

namespace dsd::io {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

[[noreturn]] void fail(const std::string& what, int line_no, const std::string& line) {
  std::ostringstream os;
  os << what << " at line " << line_no << ": '" << line << "'";
  throw DomainError(os.str());
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Eigen::MatrixXd read_matrix_market(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw DomainError("Matrix Market: empty input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix") {
    fail("Matrix Market: missing '%%MatrixMarket matrix' banner", line_no, line);
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array") fail("Matrix Market: unknown format", line_no, line);
  if (field != "real" && field != "integer" && field != "double" &&
      !(field == "pattern" && format == "coordinate")) {
    fail("Matrix Market: unsupported field", line_no, line);
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    fail("Matrix Market: unsupported symmetry", line_no, line);
  }
  const bool symmetric = symmetry == "symmetric";

  // Size line.
  long rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line[0] == '%') continue;
    std::istringstream ss(line);
    ss >> rows >> cols;
    if (format == "coordinate") ss >> entries;
    if (!ss || rows < 1 || cols < 1 || (format == "coordinate" && entries < 0)) {
      fail("Matrix Market: bad size line", line_no, line);
    }
    break;
  }
  if (rows < 1) throw DomainError("Matrix Market: missing size line");
  if (symmetric && rows != cols) throw DomainError("Matrix Market: symmetric matrix must be square");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  long read = 0;
  if (format == "coordinate") {
    while (read < entries && std::getline(in, line)) {
      ++line_no;
      if (blank(line) || line[0] == '%') continue;
      std::istringstream ss(line);
      long i = 0, j = 0;
      double v = 1.0;
      ss >> i >> j;
      if (field != "pattern") ss >> v;
      if (!ss || i < 1 || i > rows || j < 1 || j > cols) fail("Matrix Market: bad entry", line_no, line);
      m(i - 1, j - 1) += v;
      if (symmetric && i != j) m(j - 1, i - 1) += v;
      ++read;
    }
    if (read != entries) throw DomainError("Matrix Market: fewer entries than declared");
  } else {
    // Column-major; symmetric stores the lower triangle only.
    const long expected = symmetric ? rows * (rows + 1) / 2 : rows * cols;
    long col = 0, row = 0;
    while (read < expected && std::getline(in, line)) {
      ++line_no;
      if (blank(line) || line[0] == '%') continue;
      std::istringstream ss(line);
      double v = 0.0;
      if (!(ss >> v)) fail("Matrix Market: bad value", line_no, line);
      m(row, col) = v;
      if (symmetric) m(col, row) = v;
      ++read;
      if (++row == rows) {
        ++col;
        row = symmetric ? col : 0;
      }
    }
    if (read != expected) throw DomainError("Matrix Market: fewer values than declared");
  }
  return m;
}

Eigen::MatrixXd read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        fail("CSV: non-numeric cell", line_no, line);
      }
      if (!blank(cell.substr(used))) fail("CSV: trailing characters in cell", line_no, line);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) fail("CSV: ragged row", line_no, line);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw DomainError("CSV: no data");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  std::ifstream in = open_in(path);
  const bool mtx = path.size() >= 4 && lower(path.substr(path.size() - 4)) == ".mtx";
  return mtx ? read_matrix_market(in) : read_csv(in);
}

void write_matrix_market(std::ostream& out, const Eigen::MatrixXd& m, MatrixFormat format) {
  if (format == MatrixFormat::array) {
    out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
    }
    return;
  }
  long nnz = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) nnz += m(i, j) != 0.0;
  }
  out << "%%MatrixMarket matrix coordinate real general\n"
      << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << format_double(m(i, j)) << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m, MatrixFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot open '" + path + "' for writing");
  write_matrix_market(out, m, format);
  if (!out) throw DomainError("write to '" + path + "' failed");
}

Eigen::MatrixXd read_edge_list(std::istream& in, int n) {
  std::vector<std::pair<long, long>> edges;
  std::string line;
  int line_no = 0;
  long max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line) || line[0] == '#' || line[0] == '%') continue;
    std::istringstream ss(line);
    long i = 0, j = 0;
    if (!(ss >> i >> j) || i < 1 || j < 1) fail("edge list: expected 'i j' with 1-based indices", line_no, line);
    if (i == j) fail("edge list: self-loop", line_no, line);
    edges.emplace_back(i, j);
    max_index = std::max({max_index, i, j});
  }
  const long size = n > 0 ? n : max_index;
  if (size < 1) throw DomainError("edge list: no nodes");
  if (max_index > size) throw DomainError("edge list: node index exceeds the declared size");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
  for (const auto& [i, j] : edges) {
    a(i - 1, j - 1) = 1.0;
    a(j - 1, i - 1) = 1.0;
  }
  return a;
}

Eigen::MatrixXd read_edge_list(const std::string& path, int n) {
  std::ifstream in = open_in(path);
  return read_edge_list(in, n);
}

std::string file_digest(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes));
}

}  // namespace dsd::io
