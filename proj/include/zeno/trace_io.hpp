#pragma once

// On-disk formats: trace CSVs (fixed five-column schema), generic tables and
// key = value summaries.  All writes go through a temp file + rename so a
// crash never leaves a half-written artifact behind.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "trace.hpp"

namespace zeno {

inline constexpr const char* kTraceCsvHeader =
    "delta_hz,through,drop,condition,trial_id";

namespace detail {

inline std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void atomic_write(const std::filesystem::path& file,
                         const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path dir = file.has_parent_path() ? file.parent_path() : ".";
  fs::path tmp = dir / (file.filename().string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
    os << contents;
    if (!os.flush())
      throw std::runtime_error("failed writing: " + tmp.string());
  }
  fs::rename(tmp, file);
}

inline bool trimmed_empty(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double schema_double(const std::string& s, int row,
                            const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw SchemaError("row " + std::to_string(row) + ", column '" + column +
                          "': malformed number '" + s + "'",
                      row, column);
  return v;
}

}  // namespace detail

inline void write_trace_csv(const std::filesystem::path& file,
                            const ScanTrace& trace) {
  trace.validate();
  std::ostringstream os;
  os << kTraceCsvHeader << "\n";
  const char* cond = to_string(trace.condition);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << detail::csv_double(trace.detuning_hz[i]) << ','
       << detail::csv_double(trace.through[i]) << ','
       << detail::csv_double(trace.drop[i]) << ',' << cond << ','
       << trace.trial_id << "\n";
  }
  detail::atomic_write(file, os.str());
}

inline ScanTrace read_trace_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw SchemaError("cannot open trace: " + file.string(), 0, "");
  std::string line;
  if (!std::getline(is, line))
    throw SchemaError("empty trace file: " + file.string(), 0, "");
  {
    auto hdr = detail::split_csv_row(line);
    std::string joined;
    for (std::size_t i = 0; i < hdr.size(); ++i)
      joined += (i ? "," : "") + hdr[i];
    if (joined != kTraceCsvHeader)
      throw SchemaError("row 1: header must be '" +
                            std::string(kTraceCsvHeader) + "', got '" + joined +
                            "'",
                        1, "");
  }
  ScanTrace t;
  bool first = true;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trimmed_empty(line)) continue;
    const auto f = detail::split_csv_row(line);
    if (f.size() != 5)
      throw SchemaError("row " + std::to_string(row) + ": expected 5 fields, got " +
                            std::to_string(f.size()),
                        row, "");
    t.detuning_hz.push_back(detail::schema_double(f[0], row, "delta_hz"));
    t.through.push_back(detail::schema_double(f[1], row, "through"));
    t.drop.push_back(detail::schema_double(f[2], row, "drop"));
    Condition cond;
    try {
      cond = condition_from_string(f[3]);
    } catch (const std::invalid_argument&) {
      throw SchemaError("row " + std::to_string(row) +
                            ", column 'condition': unknown tag '" + f[3] + "'",
                        row, "condition");
    }
    const double tid = detail::schema_double(f[4], row, "trial_id");
    if (first) {
      t.condition = cond;
      t.trial_id = static_cast<int>(tid);
      first = false;
    } else if (cond != t.condition) {
      throw SchemaError("row " + std::to_string(row) +
                            ", column 'condition': tag changes mid-file",
                        row, "condition");
    }
  }
  if (t.detuning_hz.empty())
    throw SchemaError("trace has a header but no rows: " + file.string(), 1, "");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("invalid trace data: ") + e.what(), 2, "");
  }
  return t;
}

// Generic numeric table with a free-form header row.
inline void write_table_csv(const std::filesystem::path& file,
                            const std::string& header,
                            const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  os << header << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      os << (i ? "," : "") << detail::csv_double(r[i]);
    os << "\n";
  }
  detail::atomic_write(file, os.str());
}

// key = value report, one entry per line, in the given order.
inline void write_keyvalue(
    const std::filesystem::path& file,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream os;
  for (const auto& [k, v] : entries) os << k << " = " << v << "\n";
  detail::atomic_write(file, os.str());
}

}  // namespace zeno
