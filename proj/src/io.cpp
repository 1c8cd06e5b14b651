#include "detlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detlab/error.hpp"

namespace detlab::io {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::string header_json(const TorusGrid& g, const char* kind, bool psd) {
  std::string s = "{\n  \"header\": {\"schema_version\": " + std::to_string(kSchemaVersion) +
                  ", \"n\": " + std::to_string(g.dim()) + ", \"m\": " + std::to_string(g.points_per_axis()) +
                  ", \"field_kind\": \"" + kind + "\", \"psd_flag\": " + (psd ? "true" : "false") + "},\n";
  return s;
}

void append_number(std::string& out, double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::Io, "cannot serialize a non-finite field value");
  out += format_double(v);
}

template <class Emit>
std::string with_values(std::string head, std::size_t count, Emit emit) {
  head += "  \"values\": [";
  for (std::size_t i = 0; i < count; ++i) {
    head += (i == 0 ? "\n    " : ",\n    ");
    emit(head, i);
  }
  head += "\n  ]\n}\n";
  return head;
}

double number_at(const json& j) {
  if (!j.is_number()) throw Error(ErrorCode::Parse, "field value is not a number");
  return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string serialize_field(const ScalarField& f) {
  return with_values(header_json(f.grid, "scalar", false), f.values.size(),
                     [&](std::string& out, std::size_t i) { append_number(out, f.values[i]); });
}

std::string serialize_field(const VectorField& f) {
  const int n = f.grid.dim();
  return with_values(header_json(f.grid, "vector", false), f.grid.size(), [&](std::string& out, std::size_t i) {
    out += "[";
    for (int c = 0; c < n; ++c) {
      if (c) out += ", ";
      append_number(out, f.at(i, c));
    }
    out += "]";
  });
}

std::string serialize_field(const MatrixField& f) {
  return with_values(header_json(f.grid, "matrix", f.psd_flag), f.values.size(), [&](std::string& out, std::size_t i) {
    out += "[";
    bool first = true;
    for (double v : f.values[i].packed()) {
      if (!first) out += ", ";
      first = false;
      append_number(out, v);
    }
    out += "]";
  });
}

AnyField parse_field(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("field container is not valid JSON: ") + e.what());
  }
  if (!doc.contains("header") || !doc.contains("values")) {
    throw Error(ErrorCode::Parse, "field container needs 'header' and 'values'");
  }
  const json& h = doc["header"];
  for (const char* key : {"schema_version", "n", "m", "field_kind", "psd_flag"}) {
    if (!h.contains(key)) throw Error(ErrorCode::Parse, std::string("header is missing '") + key + "'");
  }
  if (h["schema_version"].get<int>() != kSchemaVersion) {
    throw Error(ErrorCode::Parse, "unsupported schema_version " + h["schema_version"].dump());
  }
  const TorusGrid grid = [&] {
    try {
      return TorusGrid(h["n"].get<int>(), h["m"].get<int>());
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, std::string("bad grid in header: ") + e.what());
    }
  }();
  const std::string kind = h["field_kind"].get<std::string>();
  const json& vals = doc["values"];
  if (!vals.is_array() || vals.size() != grid.size()) {
    throw Error(ErrorCode::Parse, "values array length does not match m^n");
  }
  const int n = grid.dim();

  if (kind == "scalar") {
    ScalarField f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = number_at(vals[i]);
    return f;
  }
  if (kind == "vector") {
    VectorField f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!vals[i].is_array() || static_cast<int>(vals[i].size()) != n) throw Error(ErrorCode::Parse, "bad vector entry");
      for (int c = 0; c < n; ++c) f.at(i, c) = number_at(vals[i][c]);
    }
    return f;
  }
  if (kind == "matrix") {
    MatrixField f(grid, SymMatrix(n), h["psd_flag"].get<bool>());
    const std::size_t len = SymMatrix::packed_size_for(n);
    std::vector<double> packed(len);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!vals[i].is_array() || vals[i].size() != len) throw Error(ErrorCode::Parse, "bad matrix entry");
      for (std::size_t c = 0; c < len; ++c) packed[c] = number_at(vals[i][c]);
      f.values[i] = SymMatrix::from_packed(n, packed);
    }
    return f;
  }
  throw Error(ErrorCode::Parse, "unknown field_kind '" + kind + "'");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AnyField read_field(const std::filesystem::path& path) { return parse_field(read_text(path)); }

MatrixField read_matrix_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* m = std::get_if<MatrixField>(&f)) return std::move(*m);
  throw Error(ErrorCode::Parse, path.string() + " does not hold a matrix field");
}

ScalarField read_scalar_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
  throw Error(ErrorCode::Parse, path.string() + " does not hold a scalar field");
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& part : split(text, ',')) {
    if (part.empty()) continue;
    const auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dots));
        const int hi = std::stoi(part.substr(dots + 2));
        if (hi < lo) throw Error(ErrorCode::Parse, "empty index range '" + part + "'");
        for (int k = lo; k <= hi; ++k) out.push_back(k);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad index list entry '" + part + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::Parse, "index list '" + text + "' is empty");
  return out;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& part : split(text, ',')) {
    if (part.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad number '" + part + "'");
    }
  }
  return out;
}

SequenceSpec parse_sequence_spec(const std::string& text, const std::filesystem::path& base_dir) {
  const auto kv = parse_key_values(text);
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  SequenceSpec spec;
  if (!get("family")) throw Error(ErrorCode::Parse, "sequence spec needs 'family'");
  spec.family = family_from_string(*get("family"));
  if (auto* v = get("n")) spec.n = std::stoi(*v);
  if (auto* v = get("m")) spec.m = std::stoi(*v);
  if (auto* v = get("k_range")) spec.k_range = parse_index_list(*v);
  if (auto* v = get("center")) spec.center = parse_real_list(*v);
  if (auto* v = get("mollify_eps")) spec.mollify_eps = parse_real_list(*v);
  if (auto* v = get("base_field")) {
    std::filesystem::path p(*v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.base_path = *v;
    spec.base = read_matrix_field(p);
  }
  if (spec.family == Family::Counterexample && spec.center.empty()) spec.center.assign(spec.n, 0.5);
  return spec;
}

std::string serialize_sequence_spec(const SequenceSpec& spec) {
  std::string s = "family = " + to_string(spec.family) + "\n";
  s += "n = " + std::to_string(spec.n) + "\n";
  s += "m = " + std::to_string(spec.m) + "\n";
  s += "k_range = ";
  for (std::size_t i = 0; i < spec.k_range.size(); ++i) s += (i ? "," : "") + std::to_string(spec.k_range[i]);
  s += "\n";
  auto list = [](const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
    return out;
  };
  if (!spec.center.empty()) s += "center = " + list(spec.center) + "\n";
  if (!spec.mollify_eps.empty()) s += "mollify_eps = " + list(spec.mollify_eps) + "\n";
  if (!spec.base_path.empty()) s += "base_field = " + spec.base_path + "\n";
  return s;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw Error(ErrorCode::InvalidArgument, "CSV row length differs from header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ",";
      out += cells[i];
    }
    out += "\n";
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

std::string ma_summary_json(const MAResult& r) {
  json j;
  j["n"] = r.S.dim();
  j["S_packed"] = std::vector<double>(r.S.packed().begin(), r.S.packed().end());
  j["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
  j["residual_inf"] = r.residual_inf;
  j["residual_l2"] = r.residual_l2;
  j["newton_iters"] = r.newton_iters;
  j["linear_iters"] = r.linear_iters;
  j["min_hessian_eig"] = r.min_hessian_eig;
  j["regularized"] = r.regularized;
  j["max_compatibility_defect"] = r.max_compatibility_defect;
  return j.dump(2) + "\n";
}

}  // namespace detlab::io
