#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace dsd::io {

enum class MatrixFormat { array, coordinate };

/// Matrix Market (coordinate real/integer/pattern, array real/integer; general
/// or symmetric). Throws DomainError with the offending line on bad input.
Eigen::MatrixXd read_matrix_market(std::istream& in);
/// Headerless CSV: one row per line, comma separated; blank lines ignored.
Eigen::MatrixXd read_csv(std::istream& in);
/// Dispatches on the extension: ".mtx" is Matrix Market, anything else CSV.
Eigen::MatrixXd read_matrix(const std::string& path);

/// Writes with 17 significant digits so that reading back is bit-exact.
void write_matrix_market(std::ostream& out, const Eigen::MatrixXd& m,
                         MatrixFormat format = MatrixFormat::array);
void write_matrix_market(const std::string& path, const Eigen::MatrixXd& m,
                         MatrixFormat format = MatrixFormat::array);

/// Symmetric 0/1 adjacency from "i j" lines (1-based). `n` <= 0 takes the
/// largest index seen. Lines starting with '#' or '%' are comments.
Eigen::MatrixXd read_edge_list(std::istream& in, int n = 0);
Eigen::MatrixXd read_edge_list(const std::string& path, int n = 0);

/// FNV-1a 64 digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

/// %.17g
std::string format_double(double x);

}  // namespace dsd::io
