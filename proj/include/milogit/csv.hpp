#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "milogit/config.hpp"
#include "milogit/dataset.hpp"

namespace milogit {

// Column roles for a CSV table.  Schema files use the flat key-value grammar:
//   missing = NA          # optional; the missing-cell token, case-sensitive
//   outcome = y
//   x1 = x1a x1b          # first covariate block, ordered
//   x2 = x2a              # second covariate block
//   z  = z1 z2            # always-observed model covariates
//   w  = w1               # always-observed surrogate columns (not in the model)
//   ignore = note         # columns to drop
// Every CSV header column must be assigned exactly one role.
struct Schema {
  std::string missing_token = "NA";
  std::vector<std::string> outcome, x1, x2, z, w, ignore;
};

inline Schema schema_from_kv(const KvConfig& kv) {
  Schema s;
  for (const auto& key : kv.keys()) {
    if (key != "missing" && key != "outcome" && key != "x1" && key != "x2" &&
        key != "z" && key != "w" && key != "ignore")
      throw error("bad_schema", "unknown schema key '" + key + "'");
  }
  s.missing_token = kv.get_or("missing", "NA");
  s.outcome = kv.list("outcome");
  s.x1 = kv.list("x1");
  s.x2 = kv.list("x2");
  s.z = kv.list_or("z");
  s.w = kv.list_or("w");
  s.ignore = kv.list_or("ignore");
  if (s.outcome.size() != 1)
    throw error("bad_schema", "schema needs exactly one outcome column");
  if (s.x1.empty() || s.x2.empty())
    throw error("bad_schema", "schema needs at least one column in each of x1 and x2");
  return s;
}

inline Schema load_schema(const std::string& path) {
  return schema_from_kv(parse_kv_file(path));
}

namespace detail {

// RFC-4180-style parse: quoted fields with "" escapes, embedded separators and
// line breaks inside quotes, LF or CRLF row ends.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       const std::string& origin) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false, field_started = false;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty())
          throw error("bad_csv", origin + ": stray quote inside unquoted field");
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = false;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // handled by \n
        end_row();
        break;
      case '\n':
        end_row();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw error("bad_csv", origin + ": unterminated quoted field");
  if (!field.empty() || field_started || !row.empty()) end_row();
  if (rows.empty()) throw error("bad_csv", origin + ": empty file");
  return rows;
}

inline void write_field(std::ostream& out, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    out << f;
    return;
  }
  out << '"';
  for (char c : f) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace detail

inline Dataset dataset_from_rows(const std::vector<std::vector<std::string>>& rows,
                                 const Schema& schema, const std::string& origin) {
  const auto& header = rows.front();
  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!col_of.emplace(header[j], j).second)
      throw error("bad_csv", origin + ": duplicate column '" + header[j] + "'");
  }
  std::unordered_map<std::string, char> role;
  auto assign = [&](const std::vector<std::string>& names, char r) {
    for (const auto& nm : names) {
      if (!col_of.count(nm))
        throw error("bad_schema", origin + ": schema column '" + nm + "' not in CSV header");
      if (role.count(nm))
        throw error("bad_schema", "column '" + nm + "' assigned more than one role");
      role[nm] = r;
    }
  };
  assign(schema.outcome, 'y');
  assign(schema.x1, '1');
  assign(schema.x2, '2');
  assign(schema.z, 'z');
  assign(schema.w, 'w');
  assign(schema.ignore, '-');
  for (const auto& nm : header)
    if (!role.count(nm))
      throw error("bad_schema", "CSV column '" + nm + "' has no role in the schema");

  DatasetBuilder b(schema.outcome[0], schema.x1, schema.x2, schema.z, schema.w);
  std::vector<std::optional<std::string>> x1(schema.x1.size()), x2(schema.x2.size());
  std::vector<std::string> z(schema.z.size()), w(schema.w.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw error("bad_csv", origin + ": record " + std::to_string(r) + " has " +
                                 std::to_string(row.size()) + " fields, header has " +
                                 std::to_string(header.size()));
    auto cell = [&](const std::string& nm) -> const std::string& {
      return row[col_of.at(nm)];
    };
    auto opt_cell = [&](const std::string& nm) -> std::optional<std::string> {
      const std::string& v = cell(nm);
      if (v == schema.missing_token) return std::nullopt;
      return v;
    };
    const std::string& ytok = cell(schema.outcome[0]);
    if (ytok == schema.missing_token)
      throw error("bad_outcome",
                  origin + ": record " + std::to_string(r) + ": outcome is missing");
    for (std::size_t j = 0; j < schema.x1.size(); ++j) x1[j] = opt_cell(schema.x1[j]);
    for (std::size_t j = 0; j < schema.x2.size(); ++j) x2[j] = opt_cell(schema.x2[j]);
    for (std::size_t j = 0; j < schema.z.size(); ++j) {
      z[j] = cell(schema.z[j]);
      if (z[j] == schema.missing_token)
        throw error("bad_record", origin + ": record " + std::to_string(r) +
                                      ": z column '" + schema.z[j] + "' is missing");
    }
    for (std::size_t j = 0; j < schema.w.size(); ++j) {
      w[j] = cell(schema.w[j]);
      if (w[j] == schema.missing_token)
        throw error("bad_record", origin + ": record " + std::to_string(r) +
                                      ": w column '" + schema.w[j] + "' is missing");
    }
    b.add_record(ytok, x1, x2, z, w);
  }
  return b.build();
}

inline Dataset load_csv(const std::string& path, const Schema& schema) {
  return dataset_from_rows(detail::parse_csv(read_file(path), path), schema, path);
}

// Writes in schema-declared order: outcome, x1, x2, z, w.  Ignored columns
// are not retained by load_csv and so are not written back.
inline void write_csv(std::ostream& out, const Dataset& ds, const Schema& schema) {
  std::vector<std::string> header;
  header.push_back(schema.outcome[0]);
  for (const auto& nm : schema.x1) header.push_back(nm);
  for (const auto& nm : schema.x2) header.push_back(nm);
  for (const auto& nm : schema.z) header.push_back(nm);
  for (const auto& nm : schema.w) header.push_back(nm);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    detail::write_field(out, header[j]);
  }
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    detail::write_field(out, ds.y(i) ? "1" : "0");
    for (int j = 0; j < ds.s(); ++j) {
      out << ',';
      const Column& c = ds.x1_col(j);
      detail::write_field(out, ds.x1_present(i) ? c.token_of(c.code(i)) : schema.missing_token);
    }
    for (int j = 0; j < ds.p2(); ++j) {
      out << ',';
      const Column& c = ds.x2_col(j);
      detail::write_field(out, ds.x2_present(i) ? c.token_of(c.code(i)) : schema.missing_token);
    }
    for (int j = 0; j < ds.q(); ++j) {
      out << ',';
      const Column& c = ds.z_col(j);
      detail::write_field(out, c.token_of(c.code(i)));
    }
    for (int j = 0; j < ds.w_count(); ++j) {
      out << ',';
      const Column& c = ds.w_col(j);
      detail::write_field(out, c.token_of(c.code(i)));
    }
    out << '\n';
  }
}

}  // namespace milogit
