#pragma once

#include <armadillo>
#include <optional>
#include <string>
#include <vector>

#include "npqr/basis.hpp"

namespace npqr {

enum class ControlKind { numeric, factor };

struct ControlTerm {
  std::string name;
  ControlKind kind = ControlKind::numeric;
  // Declared level set (ordering defines the reference level). Empty means
  // infer sorted distinct observed strings.
  std::vector<std::string> levels;
};

enum class InterceptMode { automatic, on, off };

struct ModelSpec {
  std::string outcome_name;
  std::string treatment_name;
  std::vector<ControlTerm> control_terms;
  InterceptMode intercept = InterceptMode::automatic;

  void validate() const;
};

// One ingested control column. Factors are stored as codes into `levels`.
struct ControlColumn {
  std::string name;
  ControlKind kind = ControlKind::numeric;
  arma::vec numeric;                 // numeric columns
  std::vector<std::string> levels;   // factor columns
  arma::uvec codes;
};

struct Dataset {
  arma::uword n = 0;
  arma::vec outcome;
  arma::vec treatment;
  std::vector<ControlColumn> controls;

  void validate() const;  // n >= 2, >= 2 distinct treatment values
};

/// Read the columns named by model_spec from an RFC-4180 CSV file with a
/// header row. Every cell of a used column must parse (numeric) or be
/// non-empty (factor); anything else is an error naming the row and column.
Dataset load_csv(const std::string& path, const ModelSpec& model_spec);

/// Write the used columns back out; numeric cells use %.17g so a reload
/// reproduces the doubles bit-for-bit.
void write_csv(const std::string& path, const Dataset& dataset, const ModelSpec& model_spec);

struct ExpandedControls {
  arma::mat values;  // n x (#expanded columns)
  std::vector<std::string> names;
};

/// One-hot expansion, dropping each factor's first (reference) level.
ExpandedControls expand_factors(const Dataset& dataset, const ModelSpec& model_spec);

struct DesignMatrix {
  arma::mat values;                       // n x m
  std::vector<std::string> column_names;  // size m
  arma::uword split = 0;                  // m_w: columns [0, split) are the basis block
  bool intercept = false;

  arma::uword n() const { return values.n_rows; }
  arma::uword m() const { return values.n_cols; }
};

/// Assemble rows (Z(w_i)', v_i')' with expanded controls and the optional
/// intercept appended after the basis block. Performs the pivoted-QR rank
/// check (relative pivot tolerance 1e-10) and the m < n estimability check.
DesignMatrix build_design(const Dataset& dataset, const ModelSpec& model_spec,
                          const BasisSpec& basis_spec);

/// Sorted distinct treatment values ("var.unique").
arma::vec distinct_treatment_values(const Dataset& dataset);

}  // namespace npqr
