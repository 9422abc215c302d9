#include "gamlss/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gamlss/error.hpp"

namespace gamlss {

SchemaSpec SchemaSpec::hedonic() {
  SchemaSpec s;
  auto add = [&s](const std::string& name, VarKind kind,
                  std::vector<double> levels = {}) {
    s.variables.push_back({name, kind, std::move(levels)});
  };
  add("UP", VarKind::PositiveReal);
  add("AR", VarKind::PositiveReal);
  add("FR", VarKind::PositiveReal);
  add("LAT", VarKind::Real);
  add("LON", VarKind::Real);
  add("UC", VarKind::Discrete, {3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0});
  {
    std::vector<double> st;
    for (int v = 1; v <= 18; ++v) st.push_back(v);
    add("ST", VarKind::Discrete, std::move(st));
  }
  for (const char* b : {"TO", "PA", "SI", "VN", "SZ"}) {
    add(b, VarKind::Binary, {0.0, 1.0});
  }
  add("STR", VarKind::ThreeLevel, {0.0, 1.0, 2.0});
  add("NI", VarKind::ThreeLevel, {0.0, 1.0, 2.0});
  add("YR", VarKind::ThreeLevel, {2005.0, 2006.0, 2007.0});
  s.optional_passthrough = {"NB"};
  return s;
}

const VariableSpec* SchemaSpec::find(const std::string& name) const {
  for (const VariableSpec& v : variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

bool Dataset::has(const std::string& name) const {
  return index_.count(name) > 0;
}

const Vector& Dataset::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw SchemaError("column '" + name + "' not found in dataset");
  }
  return columns[it->second];
}

void Dataset::set_column(const std::string& name, Vector values) {
  if (values.size() != n) {
    throw SchemaError("column '" + name + "' has length " +
                      std::to_string(values.size()) + ", dataset has " +
                      std::to_string(n) + " rows");
  }
  auto it = index_.find(name);
  if (it != index_.end()) {
    columns[it->second] = std::move(values);
    return;
  }
  index_.emplace(name, columns.size());
  names.push_back(name);
  columns.push_back(std::move(values));
}

namespace {

bool is_missing_cell(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" ||
         cell == "nan" || cell == "?";
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Minimal CSV line split: commas separate fields, double quotes group and
// pair up as an escaped quote inside quoted fields.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool parse_number(const std::string& cell, double* out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') return false;
  *out = v;
  return true;
}

void check_kind(const VariableSpec& spec, double v, Index row) {
  const std::string where =
      "column '" + spec.name + "', row " + std::to_string(row + 1);
  if (!std::isfinite(v)) throw SchemaError(where + ": value is not finite");
  switch (spec.kind) {
    case VarKind::Real:
      return;
    case VarKind::PositiveReal:
      if (!(v > 0.0)) {
        throw SchemaError(where + ": expected a positive value, got " +
                          std::to_string(v));
      }
      return;
    case VarKind::Discrete:
    case VarKind::Binary:
    case VarKind::ThreeLevel:
      for (double lv : spec.levels) {
        if (v == lv) return;
      }
      throw SchemaError(where + ": value " + std::to_string(v) +
                        " is not an allowed level");
  }
}

} // namespace

void validate_schema(const Dataset& ds, const SchemaSpec& schema) {
  for (const VariableSpec& spec : schema.variables) {
    if (!ds.has(spec.name)) {
      throw SchemaError("required column '" + spec.name + "' is missing");
    }
    const Vector& col = ds.column(spec.name);
    for (Index i = 0; i < col.size(); ++i) check_kind(spec, col[i], i);
  }
}

Dataset load_csv(const std::string& path, const SchemaSpec& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t ncol = header.size();

  for (const VariableSpec& spec : schema.variables) {
    if (std::find(header.begin(), header.end(), spec.name) == header.end()) {
      throw SchemaError("required column '" + spec.name + "' is missing from '" +
                        path + "'");
    }
  }

  std::vector<std::vector<std::string>> cells(ncol);
  Index dropped = 0;
  std::size_t file_row = 1;
  while (std::getline(in, line)) {
    ++file_row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row = split_csv_line(line);
    if (row.size() != ncol) {
      throw SchemaError("row " + std::to_string(file_row) + " has " +
                        std::to_string(row.size()) + " fields, header has " +
                        std::to_string(ncol));
    }
    bool missing = false;
    for (const std::string& cell : row) {
      if (is_missing_cell(cell)) {
        missing = true;
        break;
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t c = 0; c < ncol; ++c) cells[c].push_back(std::move(row[c]));
  }

  Dataset ds;
  ds.provenance = path;
  ds.dropped_rows = dropped;
  ds.n = cells.empty() ? 0 : static_cast<Index>(cells[0].size());

  for (std::size_t c = 0; c < ncol; ++c) {
    const std::string& name = header[c];
    const bool required = schema.find(name) != nullptr;
    Vector col(ds.n);
    bool numeric = true;
    for (Index i = 0; i < ds.n; ++i) {
      double v;
      if (!parse_number(cells[c][static_cast<std::size_t>(i)], &v)) {
        if (required) {
          throw SchemaError("column '" + name + "', row " + std::to_string(i + 1) +
                            ": cannot parse '" +
                            cells[c][static_cast<std::size_t>(i)] +
                            "' as a number");
        }
        numeric = false;
        break;
      }
      col[i] = v;
    }
    if (numeric) {
      ds.set_column(name, std::move(col));
    } else {
      ds.text_names.push_back(name);
      ds.text_columns.push_back(std::move(cells[c]));
    }
  }

  validate_schema(ds, schema);
  return ds;
}

void write_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open file '" + path + "' for writing");
  // header: numeric columns in order, then text columns
  for (std::size_t c = 0; c < ds.names.size(); ++c) {
    if (c) out << ',';
    out << ds.names[c];
  }
  for (const std::string& name : ds.text_names) out << ',' << name;
  out << '\n';
  char buf[40];
  for (Index i = 0; i < ds.n; ++i) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
      if (c) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", ds.columns[c][i]);
      out << buf;
    }
    for (const auto& tc : ds.text_columns) {
      out << ',' << tc[static_cast<std::size_t>(i)];
    }
    out << '\n';
  }
  if (!out) throw SchemaError("failed writing '" + path + "'");
}

Dataset derive_variables(const Dataset& ds) {
  for (const char* need : {"YR", "STR", "NI", "AR", "ST", "UP", "FR", "VN"}) {
    if (!ds.has(need)) {
      throw SchemaError("derive_variables: required column '" +
                        std::string(need) + "' is missing");
    }
  }
  Dataset out = ds;
  const Index n = ds.n;
  auto indicator = [n](const Vector& src, double level) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = src[i] == level ? 1.0 : 0.0;
    return v;
  };
  out.set_column("YR06", indicator(ds.column("YR"), 2006.0));
  out.set_column("YR07", indicator(ds.column("YR"), 2007.0));
  out.set_column("STR1", indicator(ds.column("STR"), 1.0));
  out.set_column("STR2", indicator(ds.column("STR"), 2.0));
  out.set_column("NIO", indicator(ds.column("NI"), 1.0));
  out.set_column("NIT", indicator(ds.column("NI"), 2.0));

  auto safe_log = [n](const Vector& src, const char* name) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      if (!(src[i] > 0.0)) {
        throw std::domain_error("derive_variables: " + std::string(name) +
                                " must be positive (row " + std::to_string(i + 1) +
                                " is " + std::to_string(src[i]) + ")");
      }
      v[i] = std::log(src[i]);
    }
    return v;
  };
  out.set_column("log(AR)", safe_log(ds.column("AR"), "AR"));
  out.set_column("log(ST)", safe_log(ds.column("ST"), "ST"));
  out.set_column("log(UP)", safe_log(ds.column("UP"), "UP"));

  const Vector& fr = ds.column("FR");
  const Vector& vn = ds.column("VN");
  Vector frvn(n), logfrvn(n);
  for (Index i = 0; i < n; ++i) {
    if (!(fr[i] > 0.0)) {
      throw std::domain_error("derive_variables: FR must be positive (row " +
                              std::to_string(i + 1) + " is " +
                              std::to_string(fr[i]) + ")");
    }
    frvn[i] = fr[i] * vn[i];
    // The interaction is zero for lots outside valuable neighborhoods; the
    // log is clamped at 1 so the term vanishes instead of diverging.
    logfrvn[i] = std::log(std::max(frvn[i], 1.0));
  }
  out.set_column("FRVN", std::move(frvn));
  out.set_column("log(FRVN)", std::move(logfrvn));
  return out;
}

std::vector<SummaryRow> describe(const Dataset& ds,
                                 const std::vector<std::string>& variables) {
  if (variables.empty()) {
    throw std::invalid_argument("describe: no variables selected");
  }
  std::vector<SummaryRow> rows;
  rows.reserve(variables.size());
  for (const std::string& name : variables) {
    const Vector& col = ds.column(name);
    if (col.size() == 0) {
      throw std::invalid_argument("describe: column '" + name + "' is empty");
    }
    SummaryRow r;
    r.name = name;
    r.mean = col.mean();
    r.min = col.minCoeff();
    r.max = col.maxCoeff();
    r.range = r.max - r.min;
    std::vector<double> sorted(col.data(), col.data() + col.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    r.median = m % 2 == 1 ? sorted[m / 2]
                          : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (m > 1) {
      const double ss = (col.array() - r.mean).square().sum();
      r.sd = std::sqrt(ss / static_cast<double>(m - 1));
    } else {
      r.sd = 0.0;
    }
    rows.push_back(r);
  }
  return rows;
}

} // namespace gamlss
