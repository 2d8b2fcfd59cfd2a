#ifndef QDAA_MODEL_HPP
#define QDAA_MODEL_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdaa/geometry.hpp"

namespace qdaa {

/// One monomial of a multi-affine polynomial: coefficient times a product of
/// distinct variables (degree at most one per variable).
struct MultiAffineTerm {
  double coefficient = 0.0;
  std::vector<int> vars;  // strictly increasing variable indices

  bool operator==(const MultiAffineTerm&) const = default;
};

/// Right-hand side of an autonomous ODE system dx/dt = f(x) with f affine in
/// each coordinate. Immutable after construction; evaluation is allocation
/// free through eval_into, so a single field can be shared by any number of
/// concurrent integrations.
class MultiAffineField {
 public:
  MultiAffineField() = default;
  MultiAffineField(int dimension, std::vector<std::vector<MultiAffineTerm>> equations);

  int dimension() const { return n_; }
  const std::vector<std::vector<MultiAffineTerm>>& equations() const { return equations_; }

  void eval_into(const Vec& x, Vec& out) const;
  Vec operator()(const Vec& x) const {
    Vec out(n_);
    eval_into(x, out);
    return out;
  }

  bool operator==(const MultiAffineField& other) const {
    return n_ == other.n_ && equations_ == other.equations_;
  }

 private:
  int n_ = 0;
  std::vector<std::vector<MultiAffineTerm>> equations_;
  // flattened copy walked by eval_into
  std::vector<int> eq_term_begin_;
  std::vector<double> coeffs_;
  std::vector<int> term_var_begin_;
  std::vector<int> vars_flat_;
};

inline Vec eval_field(const MultiAffineField& field, const Vec& x) { return field(x); }

/// Field of the time-reversed system: every coefficient negated.
MultiAffineField negate_field(const MultiAffineField& field);

/// A biochemical dynamical system: field, threshold partition and the initial
/// set of rectangles (stored both expanded and as the per-axis index box it
/// came from). Immutable after construction.
struct BiochemicalSystem {
  std::string name;
  std::vector<std::string> variables;
  MultiAffineField field;
  Partition partition;
  std::vector<RectIndex> initial;  // sorted, duplicate free
  std::vector<int> init_lo, init_hi;  // inclusive rectangle-index box per axis

  int dimension() const { return field.dimension(); }
  int variable_index(const std::string& name) const;  // -1 when unknown
  void validate() const;

  bool operator==(const BiochemicalSystem& other) const {
    return variables == other.variables && field == other.field && partition == other.partition &&
           initial == other.initial;
  }
};

/// Builds the expanded initial rectangle list from an inclusive index box.
std::vector<RectIndex> expand_init_box(const std::vector<int>& lo, const std::vector<int>& hi);

/// Parse failure with 1-based source position.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses a model document. Plain-text grammar (var/eq/thresholds/init/const
/// lines) or the JSON equivalent when the document starts with '{'.
BiochemicalSystem parse_model(const std::string& text);

/// Canonical text form; parse_model(print_model(s)) == s.
std::string print_model(const BiochemicalSystem& system);

/// FNV-1a over the canonical text form, as fixed-width hex.
std::string model_hash(const BiochemicalSystem& system);

/// Benchmark models. "oscillatory" and "enzyme" are self-contained; "ecoli"
/// needs rate constants k1..k7 and k9 (k8 does not occur in the equations)
/// plus optionally Hin, the proton concentration folded into k6.
BiochemicalSystem builtin_model(const std::string& name,
                                const std::map<std::string, double>& constants = {});

}  // namespace qdaa

#endif  // QDAA_MODEL_HPP
