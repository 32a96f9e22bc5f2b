#include "mather/cli/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "mather/grid.hpp"

namespace mather::cli {

const std::vector<Schema>& result_schemas() {
  static const std::vector<Schema> s = {
      {"marginal.csv", {"beta", "x", "mu"}, "Gibbs marginal mu_beta = psi psi* h^d (normalized) per grid node, one block per beta."},
      {"viscous.csv", {"beta", "x", "u_beta", "v_beta"}, "u_beta = -(1/beta) log psi*, v_beta = -(1/beta) log psi, both shifted to min 0."},
      {"ukam.csv", {"x", "u_minus", "u_plus", "gap"}, "Conjugate weak-KAM pair on the grid and the gap u_minus - u_plus."},
      {"mather.csv", {"node", "x"}, "Grid nodes where the gap is within the Mather tolerance."},
      {"convergence.csv", {"beta", "err_c", "err_u"}, "|log(rho)/beta - c| and sup|u_beta - u_minus| per beta."},
      {"ubeta.csv", {"beta", "x", "u_beta"}, "Viscous solution u_beta on the weak-KAM grid per beta."},
      {"identity.csv", {"n", "det_map", "det_hess", "rel_err"}, "det(Y_1 -> Y_n) against prefactor times the block-tridiagonal Hessian determinant, one row per random system."},
      {"thouless.csv", {"n", "running_avg", "lyapunov_sum"}, "(1/n) log det of the n-point Hessian and the finite-time QR Lyapunov sum along the same orbit."},
      {"laplace.csv", {"beta", "lhs", "rhs", "rel_err"}, "Laplace method: scaled integral against exp(-beta h_N) det(A'')^(-1/2), both times exp(beta h_N)."},
      {"detconv.csv", {"N", "disc", "continuous", "err"}, "N-step discretized determinant against the continuous Jacobi determinant."},
      {"wells.csv", {"hbar", "well_id", "mass"}, "Ground-state mass inside each well per hbar."},
  };
  return s;
}

const std::vector<Schema>& plot_schemas() {
  static const std::vector<Schema> s = {
      {"plots/concentration_vs_beta.csv", {"beta", "site", "mass"}, "Marginal mass within the site radius of each configured site, per beta."},
      {"plots/ubeta_vs_uminus.csv", {"beta", "x", "u_beta", "u_minus"}, "Viscous solution against the weak-KAM solution on the same grid."},
      {"plots/thouless.csv", {"n", "avg", "target"}, "Running Thouless average; target is the final Lyapunov sum."},
      {"plots/detconv.csv", {"N", "value", "reference", "abs_err"}, "Discretized determinant convergence; abs_err strictly decreasing."},
      {"plots/well_masses.csv", {"hbar", "well_id", "mass"}, "Per-well ground-state mass against hbar."},
  };
  return s;
}

namespace {

const std::map<std::string, std::string>& json_descriptions() {
  static const std::map<std::string, std::string> d = {
      {"manifest.json", "Config echo, code version, wall time per stage, SHA-256 of every output, assertion report."},
      {"flat.json", "V = 0 baselines: Hessian determinant, Perron root, critical values, Lyapunov exponents."},
      {"spectrum.json", "Per beta: rho, lambda = -log rho, log rho, eigen residuals, iterations."},
      {"critical.json", "Critical value c, fixed-point residuals, cycle period, partition bound per horizon."},
      {"fredholm.json", "Fredholm determinants at K and 2K, their change, the extrapolated limit, closed-form check."},
      {"thouless.json", "Fixed-point Thouless value and the minimizing-orbit comparison with the Lyapunov sum."},
      {"ground.json", "Per hbar: ground energy E0, grid size, eigen residual, harmonic estimate."},
      {"properties.json", "Property kit: Schur identity, subadditivity, tridiagonal inverse bound, box Gaussian bound."},
  };
  return d;
}

}  // namespace

const Schema* find_schema(const std::string& file) {
  for (const auto* list : {&result_schemas(), &plot_schemas()})
    for (const auto& s : *list)
      if (s.file == file) return &s;
  return nullptr;
}

std::vector<std::string> expand_columns(const Schema& s, int d) {
  std::vector<std::string> out;
  for (const auto& c : s.columns) {
    out.push_back(c);
    if (c == "x" && d == 2) out.push_back("y");
  }
  return out;
}

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

namespace {

std::string csv_field(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\r\n";
}

}  // namespace

CsvTable::CsvTable(const std::string& file, int d) : name_(file) {
  const Schema* s = find_schema(file);
  if (!s) throw std::logic_error("no schema declared for " + file);
  columns_ = expand_columns(*s, d);
}

void CsvTable::add(const std::vector<Cell>& row) {
  if (static_cast<int>(row.size()) != columns()) throw std::logic_error("row width differs from schema of " + name_);
  std::vector<std::string> fields;
  for (const auto& c : row) {
    if (const auto* i = std::get_if<long long>(&c))
      fields.push_back(std::to_string(*i));
    else if (const auto* v = std::get_if<double>(&c))
      fields.push_back(format_number(*v));
    else
      fields.push_back(std::get<std::string>(c));
  }
  body_ += join_row(fields);
}

OutputFile CsvTable::file() const { return {name_, join_row(columns_) + body_}; }

OutputFile json_file(const std::string& name, const nlohmann::json& j) { return {name, j.dump(2) + "\n"}; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int CsvData::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("missing column " + name);
  return static_cast<int>(it - header.begin());
}

double CsvData::number(std::size_t row, int col) const {
  const std::string& f = rows.at(row).at(col);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size()) {
    if (f == "inf") return HUGE_VAL;
    if (f == "-inf") return -HUGE_VAL;
    if (f == "nan") return std::nan("");
    throw SchemaError(fmt::format("field '{}' is not a number", f));
  }
  return v;
}

CsvData parse_csv(const std::string& text, const std::string& file) {
  CsvData out;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, in_quotes = false, any = false;
  std::size_t i = 0;
  auto end_record = [&] {
    record.push_back(field);
    if (out.header.empty() && out.rows.empty() && !any)
      out.header = record;
    else
      out.rows.push_back(record);
    any = true;
    record.clear();
    field.clear();
    quoted = false;
  };
  while (i < text.size()) {
    const char c = text[i];
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
      ++i;
      continue;
    }
    if (c == '"' && field.empty() && !quoted) {
      in_quotes = quoted = true;
    } else if (c == ',') {
      record.push_back(field);
      field.clear();
      quoted = false;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n' || c == '\r') {
      throw SchemaError(file + ": line break is not CRLF");
    } else {
      field += c;
    }
    ++i;
  }
  if (in_quotes) throw SchemaError(file + ": unterminated quoted field");
  if (!field.empty() || !record.empty()) throw SchemaError(file + ": last record lacks CRLF");
  if (out.header.empty()) throw SchemaError(file + ": empty file");
  return out;
}

std::string schema_violation(const std::filesystem::path& dir, const std::string& file) {
  const Schema* s = find_schema(file);
  if (!s) return "no declared schema";
  std::ifstream in(dir / file, std::ios::binary);
  if (!in) return "file missing";
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const CsvData data = parse_csv(buf.str(), file);
    if (data.header != expand_columns(*s, 1) && data.header != expand_columns(*s, 2)) {
      std::string got;
      for (const auto& h : data.header) got += (got.empty() ? "" : ",") + h;
      return "header is (" + got + ")";
    }
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      if (data.rows[r].size() != data.header.size()) return fmt::format("row {} has {} fields", r + 1, data.rows[r].size());
      for (std::size_t c = 0; c < data.header.size(); ++c) data.number(r, static_cast<int>(c));
    }
  } catch (const SchemaError& e) {
    return e.what();
  }
  return {};
}

namespace {

bool read_csv(const std::filesystem::path& dir, const std::string& file, CsvData& out) {
  std::ifstream in(dir / file, std::ios::binary);
  if (!in) return false;
  std::stringstream buf;
  buf << in.rdbuf();
  if (const std::string why = schema_violation(dir, file); !why.empty())
    throw SchemaError(fmt::format("schema mismatch in {}: {}", file, why));
  out = parse_csv(buf.str(), file);
  return true;
}

int grid_dim(const CsvData& data) { return std::find(data.header.begin(), data.header.end(), "y") != data.header.end() ? 2 : 1; }

}  // namespace

std::vector<OutputFile> emit_plot_data(const std::filesystem::path& dir, const PlotContext& ctx) {
  std::vector<OutputFile> out;
  CsvData data;

  if (read_csv(dir, "marginal.csv", data)) {
    const int d = grid_dim(data);
    const int beta = data.column("beta"), mu = data.column("mu"), x = data.column("x");
    std::vector<double> betas;
    std::vector<std::vector<double>> mass;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      const double b = data.number(r, beta);
      if (betas.empty() || betas.back() != b) {
        betas.push_back(b);
        mass.emplace_back(ctx.sites.size(), 0.0);
      }
      Vec p(d);
      for (int a = 0; a < d; ++a) p[a] = data.number(r, x + a);
      for (std::size_t s = 0; s < ctx.sites.size(); ++s)
        if (ctx.sites[s].size() == d && torus_distance(p, ctx.sites[s]) <= ctx.site_radius + 1e-12)
          mass.back()[s] += data.number(r, mu);
    }
    CsvTable t("plots/concentration_vs_beta.csv");
    for (std::size_t b = 0; b < betas.size(); ++b)
      for (std::size_t s = 0; s < ctx.sites.size(); ++s)
        t.add({betas[b], static_cast<long long>(s), mass[b][s]});
    out.push_back(t.file());
  }

  CsvData ukam;
  if (read_csv(dir, "ubeta.csv", data) && read_csv(dir, "ukam.csv", ukam)) {
    const int d = grid_dim(data);
    const std::size_t nodes = ukam.rows.size();
    if (nodes == 0 || data.rows.size() % nodes != 0)
      throw SchemaError("schema mismatch in ubeta.csv: row count is not a multiple of the ukam.csv grid");
    CsvTable t("plots/ubeta_vs_uminus.csv", d);
    const int um = ukam.column("u_minus"), ub = data.column("u_beta");
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      std::vector<CsvTable::Cell> row = {data.number(r, 0)};
      for (int a = 0; a < d; ++a) row.push_back(data.number(r, 1 + a));
      row.push_back(data.number(r, ub));
      row.push_back(ukam.number(r % nodes, um));
      t.add(row);
    }
    out.push_back(t.file());
  }

  if (read_csv(dir, "thouless.csv", data) && !data.rows.empty()) {
    const double target = data.number(data.rows.size() - 1, data.column("lyapunov_sum"));
    CsvTable t("plots/thouless.csv");
    for (std::size_t r = 0; r < data.rows.size(); ++r)
      t.add({static_cast<long long>(data.number(r, 0)), data.number(r, data.column("running_avg")), target});
    out.push_back(t.file());
  }

  if (read_csv(dir, "detconv.csv", data)) {
    CsvTable t("plots/detconv.csv");
    double prev = HUGE_VAL;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
      const double err = data.number(r, data.column("err"));
      if (!(err < prev))
        throw SchemaError(fmt::format("plots/detconv.csv: abs_err is not strictly decreasing at row {}", r + 1));
      prev = err;
      t.add({static_cast<long long>(data.number(r, 0)), data.number(r, data.column("disc")),
             data.number(r, data.column("continuous")), err});
    }
    out.push_back(t.file());
  }

  if (read_csv(dir, "wells.csv", data)) {
    CsvTable t("plots/well_masses.csv");
    for (std::size_t r = 0; r < data.rows.size(); ++r)
      t.add({data.number(r, 0), static_cast<long long>(data.number(r, 1)), data.number(r, 2)});
    out.push_back(t.file());
  }
  return out;
}

OutputFile generated_readme(const std::vector<std::string>& files) {
  std::string text = "# Output files\n\nGenerated by mather-zero. CSV files follow RFC 4180 (CRLF line ends, '.' decimal, "
                     "17 significant digits). A column named x is the grid coordinate; two-dimensional runs add y.\n\n";
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) {
    if (const Schema* s = find_schema(f)) {
      std::string cols;
      for (const auto& c : s->columns) cols += (cols.empty() ? "" : ", ") + c;
      text += fmt::format("## {}\n\nColumns: {}\n\n{}\n\n", f, cols, s->description);
    } else if (const auto it = json_descriptions().find(f); it != json_descriptions().end()) {
      text += fmt::format("## {}\n\n{}\n\n", f, it->second);
    }
  }
  return {"README.md", text};
}

}  // namespace mather::cli
