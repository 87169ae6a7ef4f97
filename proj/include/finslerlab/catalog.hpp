#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "finslerlab/metric.hpp"
#include "finslerlab/scfield.hpp"

namespace finslerlab {

/// Raised for unknown catalog names and rejected parameter overrides.
class CatalogError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A closed-form expectation for one tensor component (zero-based indices), or for a scalar
/// such as a leading minor (index = {m}).
struct ExpectedComponent {
  std::vector<int> index;
  std::string text;
  Expr expr;
};

/// A field expected to satisfy `condition`; it passes when any alternative does.
struct ExpectedField {
  std::string name;
  Condition condition = Condition::SC;
  std::vector<VectorFieldSpec> alternatives;
};

/// Closed form of B^i C_ijk for a fixed probe field B.
struct ExpectedContraction {
  std::string name;
  std::vector<double> B;
  int j = 0;
  int k = 0;
  ExpectedComponent value;
};

struct ExpectedArtifacts {
  std::vector<ExpectedComponent> g;
  bool g_complete = false;  ///< unlisted g_ij (i <= j) vanish
  std::vector<ExpectedComponent> C;
  bool C_complete = false;  ///< unlisted C_ijk (i <= j <= k) vanish
  std::vector<ExpectedComponent> minors;
  std::vector<ExpectedField> fields;
  std::vector<ExpectedContraction> contractions;
  /// Reference forms that differ from the stored components off the slice y1 = 1 and agree
  /// with them on it.
  std::vector<ExpectedComponent> y1_slice_forms;
  bool trace_free = false;  ///< C_i = 0 everywhere
  std::optional<int> sc_dimension;
  std::vector<std::string> notes;
};

struct Builtin {
  std::string name;
  MetricSpec spec;
  ExpectedArtifacts expected;
};

using Overrides = std::map<std::string, std::string>;

struct CatalogEntry {
  std::string name;
  std::string description;
  std::map<std::string, std::string> defaults;
};

std::vector<CatalogEntry> catalog_list();
bool is_builtin(const std::string& name);

/// Throws CatalogError for an unknown name, an unknown override key or an invalid value.
Builtin builtin(const std::string& name, const Overrides& overrides = {});

/// E = y_n^2 + x_n^2 H(x^a, y^a) for an (n-1)-dimensional energy H.
MetricSpec tachibana_lift(const MetricSpec& H);
/// Fields attached to a lifted metric: (0,..,0,f) for SC and (0,..,0,+-x_n) for C.
std::vector<ExpectedField> tachibana_fields(int n, const std::map<std::string, double>& params);

/// F2 is an expression in `u`, F3 an expression in x and `u`, the others in x only.
struct GeneralForm4DParams {
  std::array<double, 7> A{0, 0, 0, 0, 1, 2, 0};
  std::array<std::string, 8> F{"x1", "u", "u", "0", "1", "0", "1", "1"};
};

/// Energy of the general four-dimensional family with its expected SC field.
Builtin general_form_4d(const GeneralForm4DParams& p);

struct VerificationEntry {
  std::string name;
  std::string kind;  ///< component, minor, field, check
  double max_deviation = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct VerificationReport {
  std::string example;
  double tol = 0.0;
  int points = 0;
  std::vector<VerificationEntry> entries;
  bool passed = false;
};

/// Compares every expected artifact against the computed tensors at 50 sample points drawn
/// with seed 0, and runs the expected field checks.
VerificationReport verify_example(const std::string& name, double tol, const Overrides& overrides = {});
VerificationReport verify_builtin(const Builtin& b, double tol);

}  // namespace finslerlab
