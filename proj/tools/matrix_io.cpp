#include "matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "cardpen/errors.hpp"

namespace cardpen::cli {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

SymMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  const auto n = rows.size();
  if (n == 0) throw ParseError("matrix has no rows");
  Matrix m(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ParseError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                       " entries, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return SymMatrix(m);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view tok) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("invalid number '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<double> parse_row(std::string_view line) {
  std::vector<double> row;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    row.push_back(parse_number(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return row;
}

std::vector<std::vector<double>> split_rows(std::string_view text, char sep) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(sep, start);
    const auto line = trim(text.substr(start, end - start));
    if (!line.empty()) rows.push_back(parse_row(line));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return rows;
}

}  // namespace

SymMatrix parse_matrix_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("matrix JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sigma")) {
    throw ParseError("matrix JSON must be an object with a \"sigma\" array");
  }
  const auto& sigma = doc.at("sigma");
  if (!sigma.is_array()) throw ParseError("\"sigma\" must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& r : sigma) {
    if (!r.is_array()) throw ParseError("\"sigma\" rows must be arrays");
    std::vector<double> row;
    for (const auto& v : r) {
      if (!v.is_number()) throw ParseError("\"sigma\" entries must be numbers");
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
  }
  if (doc.contains("n")) {
    const auto& n = doc.at("n");
    if (!n.is_number_integer() || n.get<std::int64_t>() != static_cast<std::int64_t>(rows.size())) {
      throw ParseError("\"n\" does not match the number of rows in \"sigma\"");
    }
  }
  return from_rows(rows);
}

SymMatrix parse_matrix_csv(std::string_view text) { return from_rows(split_rows(text, '\n')); }

SymMatrix parse_matrix_inline(std::string_view text) { return from_rows(split_rows(text, ';')); }

SymMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open matrix file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto ends_with = [&](std::string_view suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".json")) return parse_matrix_json(text);
  if (ends_with(".csv")) return parse_matrix_csv(text);
  return trim(text).starts_with("{") ? parse_matrix_json(text) : parse_matrix_csv(text);
}

std::string write_matrix(const SymMatrix& m, MatrixFormat format) {
  std::string out;
  const Index n = m.dim();
  if (format == MatrixFormat::Json) {
    out += "{\"n\": " + std::to_string(n) + ", \"sigma\": [";
    for (Index i = 0; i < n; ++i) {
      out += i ? ", [" : "[";
      for (Index j = 0; j < n; ++j) {
        if (j) out += ", ";
        out += format_double(m(i, j));
      }
      out += "]";
    }
    out += "]}\n";
  } else {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (j) out += ",";
        out += format_double(m(i, j));
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace cardpen::cli
