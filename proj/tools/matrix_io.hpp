#pragma once

#include <string>
#include <string_view>

#include "cardpen/symmat.hpp"

namespace cardpen::cli {

enum class MatrixFormat { Json, Csv };

/// "%.17g" rendering, independent of the C locale.
std::string format_double(double v);

/// {"n": int, "sigma": [[row-major reals]]}
SymMatrix parse_matrix_json(std::string_view text);

/// n lines of n comma-separated reals. Blank lines are ignored.
SymMatrix parse_matrix_csv(std::string_view text);

/// Inline form "a,b;c,d" (rows separated by ';').
SymMatrix parse_matrix_inline(std::string_view text);

/// Picks the parser from the extension (.json / .csv), falling back to
/// sniffing for a leading '{'.
SymMatrix load_matrix(const std::string& path);

std::string write_matrix(const SymMatrix& m, MatrixFormat format);

}  // namespace cardpen::cli
