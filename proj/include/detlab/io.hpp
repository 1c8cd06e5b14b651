#pragma once

// Text formats: the field container (JSON document with a header object and
// a row-major values array, doubles printed with 17 significant digits),
// flat key-value sequence specs and CSV tables.

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "detlab/generators.hpp"
#include "detlab/monge_ampere.hpp"
#include "detlab/torus.hpp"

namespace detlab::io {

inline constexpr int kSchemaVersion = 1;

/// %.17g: round-trips every finite double.
std::string format_double(double v);

using AnyField = std::variant<ScalarField, VectorField, MatrixField>;

std::string serialize_field(const ScalarField& f);
std::string serialize_field(const VectorField& f);
std::string serialize_field(const MatrixField& f);
AnyField parse_field(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

template <class Field>
void write_field(const std::filesystem::path& path, const Field& f) {
  write_text(path, serialize_field(f));
}
AnyField read_field(const std::filesystem::path& path);
MatrixField read_matrix_field(const std::filesystem::path& path);
ScalarField read_scalar_field(const std::filesystem::path& path);

/// `key = value` lines; '#' starts a comment. Throws Parse on malformed lines.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// "1..5" or "1,2,4" (ranges may be mixed: "1..3,8").
std::vector<int> parse_index_list(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);

/// Relative base_field paths resolve against base_dir.
SequenceSpec parse_sequence_spec(const std::string& text, const std::filesystem::path& base_dir = {});
std::string serialize_sequence_spec(const SequenceSpec& spec);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  /// Cells must match the header length; numbers go through format_double.
  void add_row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t rows() const noexcept { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// S entries, lambda, residuals and iteration counts of a solve.
std::string ma_summary_json(const MAResult& r);

}  // namespace detlab::io
