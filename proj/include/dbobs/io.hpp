#pragma once

// File formats: JSON system files and CSV traces.
//
//   system file:  {"A": [[row], ...], "C": [[row], ...]}
//   trace CSV:    k, x_1..x_n, xhat_1..xhat_n, [u,] err

#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dbobs/error.hpp"
#include "dbobs/format.hpp"
#include "dbobs/linear.hpp"

namespace dbobs {

/// Malformed input file; `line` is 0 when no position applies.
class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InvalidInput(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

inline Matrix json_matrix(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"", 0);
  const auto& rows = doc.at(key);
  if (!rows.is_array() || rows.empty()) throw ParseError(std::string("\"") + key + "\" must be a non-empty array of rows", 0);
  const std::size_t cols = rows.front().is_array() ? rows.front().size() : 0;
  if (cols == 0) throw ParseError(std::string("\"") + key + "\" rows must be non-empty arrays", 0);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(std::string("\"") + key + "\" row " + std::to_string(i + 1) + " has " +
                           (row.is_array() ? std::to_string(row.size()) : std::string("no")) + " entries, expected " +
                           std::to_string(cols),
                       0);
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!row[j].is_number()) {
        throw ParseError(std::string("\"") + key + "\"[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) +
                             "] is not a number",
                         0);
      }
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j].get<double>();
    }
  }
  return m;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline LinearSystem parse_system_json(const std::string& text, double tol = kDefaultSystemTol) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), detail::line_of_byte(text, e.byte));
  }
  if (!doc.is_object()) throw ParseError("system file must hold a JSON object", 1);
  Matrix a = detail::json_matrix(doc, "A");
  Matrix c = detail::json_matrix(doc, "C");
  if (a.rows() != a.cols()) {
    throw ParseError("\"A\" must be square, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()), 0);
  }
  if (c.cols() != a.cols()) {
    throw ParseError("\"C\" must have " + std::to_string(a.cols()) + " columns, got " + std::to_string(c.cols()), 0);
  }
  return LinearSystem(std::move(a), std::move(c), tol);
}

inline LinearSystem read_system_file(const std::string& path, double tol = kDefaultSystemTol) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file '" + path + "'", 0);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_system_json(text, tol);
}

inline std::string system_to_json(const LinearSystem& sys) {
  nlohmann::json doc;
  doc["A"] = detail::matrix_json(sys.A());
  doc["C"] = detail::matrix_json(sys.C());
  return doc.dump(2) + "\n";
}

/// "1,2.5,-3" -> (1, 2.5, -3).
inline Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidInput("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) throw InvalidInput("not a number: '" + item + "'");
    if (!std::isfinite(v)) throw InvalidInput("non-finite value: '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw InvalidInput("empty vector");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// Numbers separated by whitespace or commas.
inline std::vector<double> read_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file '" + path + "'", 0);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ParseError("not a number: '" + tok + "'", lineno);
      }
      if (used != tok.size() || !std::isfinite(v)) throw ParseError("not a finite number: '" + tok + "'", lineno);
      values.push_back(v);
    }
  }
  return values;
}

inline void write_trace_csv(std::ostream& out, const ObserverTrace& trace) {
  if (trace.plant_states.empty()) return;
  const Eigen::Index n = trace.plant_states.front().size();
  const bool with_input = !trace.inputs.empty();
  out << 'k';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",xhat_" << i;
  if (with_input) out << ",u";
  out << ",err\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trace.plant_states[k](i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trace.observer_states[k](i));
    if (with_input) {
      out << ',';
      if (!std::isnan(trace.inputs[k])) out << format_double(trace.inputs[k]);
    }
    out << ',' << format_double(trace.errors[k]) << '\n';
  }
}

}  // namespace dbobs
