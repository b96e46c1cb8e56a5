#include "npqr/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "npqr/errors.hpp"

namespace npqr {

namespace {

// RFC-4180 reader: quoted fields, "" escapes, CRLF or LF records.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw config_error("empty file: " + path);

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  size_t i = 0;
  const size_t len = text.size();
  while (i < len) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < len && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      ++i;
    } else if (c == '"') {
      in_quotes = true;
      ++i;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      ++i;
    } else if (c == '\r' || c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(row));
      row.clear();
      if (c == '\r' && i + 1 < len && text[i + 1] == '\n') ++i;
      ++i;
    } else {
      field.push_back(c);
      ++i;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  if (in_quotes) throw config_error(path + ": unterminated quoted field");
  if (records.empty()) throw config_error("empty file: " + path);
  return records;
}

double parse_double_cell(const std::string& cell, size_t row, const std::string& col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  // tolerate surrounding spaces, nothing else
  while (first < last && *first == ' ') ++first;
  while (last > first && *(last - 1) == ' ') --last;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || first == last) {
    std::ostringstream os;
    os << "cannot parse numeric value '" << cell << "' at row " << row
       << ", column '" << col << "'";
    throw config_error(os.str());
  }
  return value;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

void ModelSpec::validate() const {
  if (outcome_name.empty()) throw config_error("model: outcome column not set");
  if (treatment_name.empty()) throw config_error("model: treatment column not set");
  std::set<std::string> seen{outcome_name, treatment_name};
  if (seen.size() != 2) throw config_error("model: outcome and treatment must differ");
  for (const auto& t : control_terms) {
    if (t.name == treatment_name) {
      throw config_error("model: treatment '" + t.name + "' cannot appear among controls");
    }
    if (!seen.insert(t.name).second) {
      throw config_error("model: duplicate column '" + t.name + "'");
    }
  }
}

void Dataset::validate() const {
  if (n < 2) throw config_error("dataset must have at least 2 observations");
  if (outcome.n_elem != n || treatment.n_elem != n) {
    throw config_error("dataset: column lengths disagree");
  }
  if (arma::unique(treatment).eval().n_elem < 2) {
    throw config_error("dataset: treatment must take at least 2 distinct values");
  }
  for (const auto& c : controls) {
    const arma::uword len = (c.kind == ControlKind::numeric) ? c.numeric.n_elem : c.codes.n_elem;
    if (len != n) throw config_error("dataset: column lengths disagree for '" + c.name + "'");
    if (c.kind == ControlKind::factor) {
      for (arma::uword i = 0; i < n; ++i) {
        if (c.codes(i) >= c.levels.size()) {
          throw config_error("dataset: factor code out of range in '" + c.name + "'");
        }
      }
    }
  }
}

Dataset load_csv(const std::string& path, const ModelSpec& model_spec) {
  model_spec.validate();
  const auto records = read_csv_records(path);
  const auto& header = records[0];

  std::unordered_map<std::string, size_t> col_index;
  for (size_t j = 0; j < header.size(); ++j) col_index.emplace(header[j], j);

  const auto find_col = [&](const std::string& name) -> size_t {
    const auto it = col_index.find(name);
    if (it == col_index.end()) throw config_error("column '" + name + "' not found in " + path);
    return it->second;
  };

  const size_t n = records.size() - 1;
  if (n < 2) throw config_error(path + ": need at least 2 data rows");
  for (size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      std::ostringstream os;
      os << path << ": row " << r << " has " << records[r].size()
         << " fields, header has " << header.size();
      throw config_error(os.str());
    }
  }

  Dataset ds;
  ds.n = n;

  const auto read_numeric = [&](const std::string& name) {
    const size_t j = find_col(name);
    arma::vec v(n);
    for (size_t r = 1; r < records.size(); ++r) v(r - 1) = parse_double_cell(records[r][j], r, name);
    return v;
  };

  ds.outcome = read_numeric(model_spec.outcome_name);
  ds.treatment = read_numeric(model_spec.treatment_name);

  for (const auto& term : model_spec.control_terms) {
    ControlColumn col;
    col.name = term.name;
    col.kind = term.kind;
    if (term.kind == ControlKind::numeric) {
      col.numeric = read_numeric(term.name);
    } else {
      const size_t j = find_col(term.name);
      std::vector<std::string> raw(n);
      for (size_t r = 1; r < records.size(); ++r) {
        if (records[r][j].empty()) {
          std::ostringstream os;
          os << "missing value at row " << r << ", column '" << term.name << "'";
          throw config_error(os.str());
        }
        raw[r - 1] = records[r][j];
      }
      if (!term.levels.empty()) {
        col.levels = term.levels;
      } else {
        std::set<std::string> s(raw.begin(), raw.end());
        col.levels.assign(s.begin(), s.end());
      }
      std::unordered_map<std::string, arma::uword> code;
      for (size_t k = 0; k < col.levels.size(); ++k) code.emplace(col.levels[k], k);
      col.codes.set_size(n);
      for (size_t i = 0; i < n; ++i) {
        const auto it = code.find(raw[i]);
        if (it == code.end()) {
          throw config_error("factor '" + term.name + "': observed value '" + raw[i] +
                             "' is not in the declared level set");
        }
        col.codes(i) = it->second;
      }
    }
    ds.controls.push_back(std::move(col));
  }

  ds.validate();
  return ds;
}

void write_csv(const std::string& path, const Dataset& dataset, const ModelSpec& model_spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write file: " + path);
  out << csv_quote(model_spec.outcome_name) << "," << csv_quote(model_spec.treatment_name);
  for (const auto& c : dataset.controls) out << "," << csv_quote(c.name);
  out << "\n";
  for (arma::uword i = 0; i < dataset.n; ++i) {
    out << format_double(dataset.outcome(i)) << "," << format_double(dataset.treatment(i));
    for (const auto& c : dataset.controls) {
      out << ",";
      if (c.kind == ControlKind::numeric) out << format_double(c.numeric(i));
      else out << csv_quote(c.levels[c.codes(i)]);
    }
    out << "\n";
  }
}

ExpandedControls expand_factors(const Dataset& dataset, const ModelSpec& model_spec) {
  ExpandedControls ex;
  arma::uword ncols = 0;
  for (const auto& c : dataset.controls) {
    if (c.kind == ControlKind::numeric) {
      ++ncols;
    } else {
      if (c.levels.size() < 2) {
        throw config_error("factor '" + c.name + "' has a single level");
      }
      ncols += c.levels.size() - 1;
    }
  }
  (void)model_spec;
  ex.values.set_size(dataset.n, ncols);
  ex.names.reserve(ncols);
  arma::uword j = 0;
  for (const auto& c : dataset.controls) {
    if (c.kind == ControlKind::numeric) {
      ex.values.col(j) = c.numeric;
      ex.names.push_back(c.name);
      ++j;
    } else {
      // drop the first (reference) level
      for (size_t lev = 1; lev < c.levels.size(); ++lev) {
        for (arma::uword i = 0; i < dataset.n; ++i) {
          ex.values(i, j) = (c.codes(i) == lev) ? 1.0 : 0.0;
        }
        ex.names.push_back(c.name + "=" + c.levels[lev]);
        ++j;
      }
    }
  }
  return ex;
}

DesignMatrix build_design(const Dataset& dataset, const ModelSpec& model_spec,
                          const BasisSpec& basis_spec) {
  dataset.validate();
  model_spec.validate();

  const bool indicator = std::holds_alternative<IndicatorSpec>(basis_spec);
  bool intercept = false;
  switch (model_spec.intercept) {
    case InterceptMode::on: intercept = true; break;
    case InterceptMode::off: intercept = false; break;
    case InterceptMode::automatic:
      intercept = !model_spec.control_terms.empty() && !indicator;
      break;
  }

  const ExpandedControls ex = model_spec.control_terms.empty()
                                  ? ExpandedControls{arma::mat(dataset.n, 0), {}}
                                  : expand_factors(dataset, model_spec);

  const arma::uword m_w = basis_dim(basis_spec);
  const arma::uword m = m_w + ex.values.n_cols + (intercept ? 1 : 0);
  if (m >= dataset.n) {
    std::ostringstream os;
    os << "design has " << m << " columns but only " << dataset.n << " rows";
    throw numeric_error(os.str());
  }

  DesignMatrix design;
  design.values.set_size(dataset.n, m);
  design.split = m_w;
  design.intercept = intercept;
  for (arma::uword i = 0; i < dataset.n; ++i) {
    design.values(i, arma::span(0, m_w - 1)) = eval_basis(basis_spec, dataset.treatment(i), 0).t();
  }
  if (ex.values.n_cols > 0) {
    design.values.cols(m_w, m_w + ex.values.n_cols - 1) = ex.values;
  }
  if (intercept) design.values.col(m - 1).ones();

  design.column_names = basis_col_names(basis_spec, model_spec.treatment_name);
  design.column_names.insert(design.column_names.end(), ex.names.begin(), ex.names.end());
  if (intercept) design.column_names.push_back("(Intercept)");

  // Rank check: thin QR first, then column-pivoted QR of the m x m factor.
  arma::mat Q1, R1;
  if (!arma::qr_econ(Q1, R1, design.values)) {
    throw numeric_error("design rank check: QR factorization failed");
  }
  arma::mat Q2, R2;
  arma::uvec piv;
  if (!arma::qr(Q2, R2, piv, R1, "vector")) {
    throw numeric_error("design rank check: pivoted QR failed");
  }
  const double tol = 1e-10 * std::abs(R2(0, 0));
  arma::uword rank = 0;
  for (arma::uword j = 0; j < m; ++j) {
    if (std::abs(R2(j, j)) > tol) ++rank;
    else break;
  }
  if (rank < m) {
    std::ostringstream os;
    os << "design matrix is rank deficient (rank " << rank << " of " << m
       << "); dependent columns:";
    for (arma::uword j = rank; j < m; ++j) os << " '" << design.column_names[piv(j)] << "'";
    throw numeric_error(os.str());
  }

  return design;
}

arma::vec distinct_treatment_values(const Dataset& dataset) {
  return arma::unique(dataset.treatment);
}

}  // namespace npqr
