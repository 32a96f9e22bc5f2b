#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mather/types.hpp"

namespace mather::cli {

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

/// Declared columns of one CSV file. A column named "x" stands for the
/// grid coordinates: "x" in one dimension, "x", "y" in two.
struct Schema {
  std::string file;
  std::vector<std::string> columns;
  std::string description;
};

const std::vector<Schema>& result_schemas();
const std::vector<Schema>& plot_schemas();
const Schema* find_schema(const std::string& file);
std::vector<std::string> expand_columns(const Schema& s, int d);

/// 17 significant digits, round-trip exact.
std::string format_number(double v);

/// RFC-4180 table: CRLF line ends, fields quoted only when they need it.
class CsvTable {
 public:
  using Cell = std::variant<long long, double, std::string>;

  /// Columns come from the schema registry.
  explicit CsvTable(const std::string& file, int d = 1);

  void add(const std::vector<Cell>& row);
  int columns() const { return static_cast<int>(columns_.size()); }
  OutputFile file() const;

 private:
  std::string name_;
  std::vector<std::string> columns_;
  std::string body_;
};

OutputFile json_file(const std::string& name, const nlohmann::json& j);

std::string sha256_hex(std::string_view bytes);

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;
  double number(std::size_t row, int col) const;
};

/// Thrown on malformed CSV or a header that differs from the declared schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

CsvData parse_csv(const std::string& text, const std::string& file);

/// Header, row widths and numeric fields of `file` against its schema.
/// Returns an empty string when it conforms, else the reason.
std::string schema_violation(const std::filesystem::path& dir, const std::string& file);

struct PlotContext {
  std::vector<Vec> sites;  // concentration sites for the marginal sweep
  double site_radius = 0.1;
};

/// Plot-ready tables under plots/ derived from whichever result files exist in `dir`.
/// Throws SchemaError if a derived table violates its declared property.
std::vector<OutputFile> emit_plot_data(const std::filesystem::path& dir, const PlotContext& ctx);

/// README.md describing the columns of every listed file.
OutputFile generated_readme(const std::vector<std::string>& files);

}  // namespace mather::cli
