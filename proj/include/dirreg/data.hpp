// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_DATA_HPP
#define DIRREG_DATA_HPP

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dirreg/composition.hpp"
#include "dirreg/errors.hpp"

namespace dirreg {

// One named column.  A column is numeric when every present value parses as
// a double; otherwise it is categorical.  "" and "NA" mark missing values.
struct Column {
  std::string name;
  bool numeric = false;
  std::vector<double> num;          // valid when numeric
  std::vector<std::string> str;     // valid when categorical
  std::vector<bool> missing;

  std::size_t size() const { return missing.size(); }
};

struct DataTable {
  std::vector<Column> columns;
  std::size_t n_rows = 0;

  const Column* find(const std::string& name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  const Column& at(const std::string& name) const {
    const Column* c = find(name);
    require(c != nullptr, "UnknownColumn", "no column named '" + name + "'");
    return *c;
  }
};

namespace detail {

inline bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return std::nullopt;
  return v;
}

// RFC 4180 record reader: quoted fields, doubled quotes, CRLF or LF, and
// newlines inside quoted fields.  Returns false at end of input.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields, int& line_no) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool record_open = true;
  while (record_open) {
    if (c == EOF) {
      require(!in_quotes, "ParseError",
              "unterminated quoted field at line " + std::to_string(line_no));
      break;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_no;
        field.push_back(ch);
      }
    } else if (ch == '"') {
      require(field.empty(), "ParseError",
              "stray quote inside unquoted field at line " + std::to_string(line_no));
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      record_open = false;
    } else if (ch == '\n') {
      ++line_no;
      record_open = false;
    } else {
      field.push_back(ch);
    }
    if (record_open) c = in.get();
  }
  fields.push_back(std::move(field));
  return true;
}

}  // namespace detail

// Reads a CSV file (RFC 4180, header row required) into typed columns.
inline DataTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "ParseError", "cannot open '" + path + "'");

  int line_no = 1;
  std::vector<std::string> header;
  require(detail::read_csv_record(in, header, line_no), "ParseError",
          "'" + path + "' is empty");
  require(!header.empty() && !header[0].empty(), "ParseError",
          "'" + path + "' has an empty header");

  std::vector<std::vector<std::string>> raw(header.size());
  std::vector<std::string> fields;
  std::size_t n_rows = 0;
  while (detail::read_csv_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    require(fields.size() == header.size(), "ParseError",
            "line " + std::to_string(line_no) + " of '" + path + "' has " +
                std::to_string(fields.size()) + " fields, expected " +
                std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) raw[j].push_back(fields[j]);
    ++n_rows;
  }

  DataTable table;
  table.n_rows = n_rows;
  for (std::size_t j = 0; j < header.size(); ++j) {
    Column col;
    col.name = header[j];
    col.missing.resize(n_rows, false);
    bool all_numeric = true;
    std::vector<double> nums(n_rows, 0.0);
    for (std::size_t i = 0; i < n_rows; ++i) {
      if (detail::is_missing_token(raw[j][i])) {
        col.missing[i] = true;
        continue;
      }
      const auto v = detail::parse_double(raw[j][i]);
      if (!v) {
        all_numeric = false;
        break;
      }
      nums[i] = *v;
    }
    col.numeric = all_numeric;
    if (all_numeric) {
      col.num = std::move(nums);
    } else {
      col.str = std::move(raw[j]);
      for (std::size_t i = 0; i < n_rows; ++i)
        col.missing[i] = detail::is_missing_token(col.str[i]);
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

struct IngestReport {
  std::size_t rows_in = 0;
  std::size_t rows_dropped = 0;   // missing value in a used column
  std::size_t rows_kept = 0;
  bool normalization_forced = false;
  int rows_rescaled = 0;
  int zero_rows = 0;              // rows that went through the zero transform
  int zero_replacements = 0;
};

struct IngestedData {
  DataTable table;            // used columns only, incomplete rows dropped
  CompositionMatrix response; // normalized and zero-transformed
  IngestReport report;
};

// Loads a CSV, drops rows with missing values in any used column, then
// normalizes and zero-transforms the response block.
inline IngestedData ingest_csv(const std::string& path,
                               const std::vector<std::string>& response_cols,
                               const std::vector<std::string>& covariate_cols = {}) {
  require(response_cols.size() >= 2, "NoResponseColumns",
          "need at least 2 response columns, got " + std::to_string(response_cols.size()));
  const DataTable full = read_csv(path);

  std::vector<const Column*> used;
  for (const auto& name : response_cols) {
    const Column& c = full.at(name);
    require(c.numeric, "NoResponseColumns", "response column '" + name + "' is not numeric");
    used.push_back(&c);
  }
  for (const auto& name : covariate_cols) used.push_back(&full.at(name));

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < full.n_rows; ++i) {
    bool complete = true;
    for (const Column* c : used)
      if (c->missing[i]) complete = false;
    if (complete) keep.push_back(i);
  }

  IngestReport report;
  report.rows_in = full.n_rows;
  report.rows_kept = keep.size();
  report.rows_dropped = full.n_rows - keep.size();
  require(!keep.empty(), "AllRowsDropped", "'" + path + "' has no complete rows");

  DataTable table;
  table.n_rows = keep.size();
  for (const Column* src : used) {
    if (table.find(src->name)) continue;  // column used on both sides
    Column col;
    col.name = src->name;
    col.numeric = src->numeric;
    col.missing.assign(keep.size(), false);
    for (std::size_t i : keep) {
      if (src->numeric)
        col.num.push_back(src->num[i]);
      else
        col.str.push_back(src->str[i]);
    }
    table.columns.push_back(std::move(col));
  }

  Eigen::MatrixXd raw(keep.size(), response_cols.size());
  for (std::size_t j = 0; j < response_cols.size(); ++j) {
    const Column& c = table.at(response_cols[j]);
    for (std::size_t i = 0; i < keep.size(); ++i) raw(static_cast<Eigen::Index>(i),
                                                      static_cast<Eigen::Index>(j)) = c.num[i];
  }

  NormalizeReport norm;
  CompositionMatrix comp = validate_and_normalize(raw, response_cols, &norm);
  ZeroTransformReport zeros;
  comp = transform_zeros(comp, &zeros);

  report.normalization_forced = norm.normalization_forced;
  report.rows_rescaled = norm.rows_rescaled;
  report.zero_rows = zeros.rows_with_zeros;
  report.zero_replacements = zeros.zero_entries;
  return IngestedData{std::move(table), std::move(comp), report};
}

}  // namespace dirreg

#endif  // DIRREG_DATA_HPP
