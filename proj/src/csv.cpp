#include "zeus/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zeus/common.hpp"

namespace zeus {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& path) {
  const char* s = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw IoError("'" + path + "': cannot parse number '" + cell + "'");
  return v;
}

long parse_int(const std::string& cell, const std::string& path) {
  const char* s = cell.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw IoError("'" + path + "': cannot parse integer '" + cell + "'");
  return v;
}

// handles trailing \r and skips a final empty line
std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  if (static_cast<int>(header.size()) != m.cols())
    throw UsageError("csv header width does not match the matrix");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (size_t j = 0; j < header.size(); ++j)
    out << (j != 0 ? "," : "") << header[j];
  out << '\n';
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j != 0 ? "," : "") << fmt(m(i, j));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

CsvTable read_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw IoError("'" + path + "' is empty");
  CsvTable table;
  table.header = split_line(lines[0]);
  const int cols = static_cast<int>(table.header.size());
  table.values.resize(static_cast<int>(lines.size()) - 1, cols);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_line(lines[i]);
    if (static_cast<int>(cells.size()) != cols)
      throw IoError("'" + path + "': row " + std::to_string(i) +
                    " has the wrong number of cells");
    for (int j = 0; j < cols; ++j)
      table.values(static_cast<int>(i) - 1, j) = parse_double(cells[j], path);
  }
  return table;
}

std::string provenance_name(Provenance p) {
  return p == Provenance::gaussian ? "gaussian" : "transformed";
}

Provenance provenance_from_name(const std::string& name) {
  if (name == "gaussian") return Provenance::gaussian;
  if (name == "transformed") return Provenance::transformed;
  throw UsageError("unknown provenance '" + name + "'");
}

void write_dataset(const std::string& csv_path, const std::string& meta_path,
                   const Dataset& ds) {
  if (static_cast<int>(ds.labels.size()) != ds.x.rows())
    throw UsageError("dataset labels do not match the row count");
  if (static_cast<int>(ds.column_kinds.size()) != ds.x.cols())
    throw UsageError("dataset column kinds do not match the column count");

  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + csv_path + "' for writing");
  for (int j = 0; j < ds.x.cols(); ++j) out << "c" << j << ",";
  out << "label\n";
  for (int i = 0; i < ds.x.rows(); ++i) {
    for (int j = 0; j < ds.x.cols(); ++j) out << fmt(ds.x(i, j)) << ",";
    out << ds.labels[i] << '\n';
  }
  if (!out) throw IoError("failed writing '" + csv_path + "'");

  json meta;
  meta["column_kinds"] = ds.column_kinds;
  meta["k"] = ds.k;
  meta["provenance"] = provenance_name(ds.provenance);
  meta["seed"] = ds.seed;
  std::ofstream mo(meta_path, std::ios::trunc);
  if (!mo) throw IoError("cannot open '" + meta_path + "' for writing");
  mo << meta.dump(2) << '\n';
  if (!mo) throw IoError("failed writing '" + meta_path + "'");
}

Dataset read_dataset(const std::string& csv_path, const std::string& meta_path) {
  const auto lines = read_lines(csv_path);
  if (lines.empty()) throw IoError("'" + csv_path + "' is empty");
  const auto header = split_line(lines[0]);
  if (header.empty() || header.back() != "label")
    throw IoError("'" + csv_path + "': expected a trailing 'label' column");
  const int d = static_cast<int>(header.size()) - 1;

  Dataset ds;
  ds.x.resize(static_cast<int>(lines.size()) - 1, d);
  ds.labels.resize(lines.size() - 1);
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_line(lines[i]);
    if (static_cast<int>(cells.size()) != d + 1)
      throw IoError("'" + csv_path + "': row " + std::to_string(i) +
                    " has the wrong number of cells");
    for (int j = 0; j < d; ++j)
      ds.x(static_cast<int>(i) - 1, j) = parse_double(cells[j], csv_path);
    ds.labels[i - 1] = static_cast<int>(parse_int(cells[d], csv_path));
  }

  std::ifstream mi(meta_path);
  if (!mi) throw IoError("cannot open '" + meta_path + "'");
  json meta;
  try {
    mi >> meta;
    ds.column_kinds = meta.at("column_kinds").get<std::vector<int>>();
    ds.k = meta.at("k").get<int>();
    ds.provenance = provenance_from_name(meta.at("provenance").get<std::string>());
    ds.seed = meta.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw IoError("'" + meta_path + "' is not a valid dataset sidecar: " + e.what());
  }
  if (static_cast<int>(ds.column_kinds.size()) != d)
    throw UsageError("'" + meta_path + "' column kinds do not match the csv width");
  if (ds.k < 1) throw UsageError("'" + meta_path + "' has a non-positive k");
  for (int label : ds.labels)
    if (label < 0 || label >= ds.k)
      throw UsageError("'" + csv_path + "' has labels outside [0, k)");
  return ds;
}

void write_hard_assignment(const std::string& path,
                           const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "row_index,label\n";
  for (size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_soft_assignment(const std::string& path, const Eigen::MatrixXd& soft) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "row_index";
  for (int j = 0; j < soft.cols(); ++j) out << ",p_" << j;
  out << '\n';
  for (int i = 0; i < soft.rows(); ++i) {
    out << i;
    for (int j = 0; j < soft.cols(); ++j) out << ',' << fmt(soft(i, j));
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

AssignmentFile read_assignment(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw IoError("'" + path + "' is empty");
  const auto header = split_line(lines[0]);
  if (header.empty() || header[0] != "row_index")
    throw IoError("'" + path + "' is not an assignment file");

  AssignmentFile out;
  const int n = static_cast<int>(lines.size()) - 1;
  if (header.size() == 2 && header[1] == "label") {
    out.soft = false;
    out.labels.resize(n);
  } else if (header.size() >= 2 && header[1] == "p_0") {
    out.soft = true;
    out.probs.resize(n, static_cast<int>(header.size()) - 1);
    out.labels.resize(n);
  } else {
    throw IoError("'" + path + "' is not an assignment file");
  }

  for (int i = 0; i < n; ++i) {
    const auto cells = split_line(lines[i + 1]);
    if (cells.size() != header.size())
      throw IoError("'" + path + "': row " + std::to_string(i + 1) +
                    " has the wrong number of cells");
    if (parse_int(cells[0], path) != i)
      throw IoError("'" + path + "': row indices must be 0..n-1 in order");
    if (!out.soft) {
      out.labels[i] = static_cast<int>(parse_int(cells[1], path));
    } else {
      int arg = 0;
      for (int j = 0; j < out.probs.cols(); ++j) {
        out.probs(i, j) = parse_double(cells[j + 1], path);
        if (out.probs(i, j) > out.probs(i, arg)) arg = j;
      }
      out.labels[i] = arg;
    }
  }
  return out;
}

}  // namespace zeus
