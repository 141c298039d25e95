#pragma once

// Game instance data model: dynamics, noise, per-team stage costs and
// information structure specifications, plus the JSON instance format.

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mqigame/core.hpp"

namespace mqi {

using json = nlohmann::ordered_json;

/// Stage cost of one team.
///
/// Time indexing is explicit: `M[t-1]` holds M(t) for t = 1..N, while
/// `R[t]` and `V[t]` hold R(t), V(t) for t = 0..N-1. The initial-state
/// weight M(0) is zero unless `M0` is set.
struct StageCost {
  std::vector<Matrix> M;
  std::vector<Matrix> R;
  std::vector<Matrix> V;
  std::optional<Matrix> M0;

  StageCost negated() const {
    StageCost out;
    for (const auto& m : M) out.M.push_back(-m);
    for (const auto& r : R) out.R.push_back(-r);
    for (const auto& v : V) out.V.push_back(-v);
    if (M0) out.M0 = -*M0;
    return out;
  }

  friend bool operator==(const StageCost& a, const StageCost& b) {
    if (a.M0.has_value() != b.M0.has_value()) return false;
    if (a.M0 && !detail::same(*a.M0, *b.M0)) return false;
    return detail::same(a.M, b.M) && detail::same(a.R, b.R) &&
           detail::same(a.V, b.V);
  }
};

enum class StructureKind {
  full_information,  // "FI"
  delayed_sharing,   // "1SDIS"
  decentralized,     // "DP1"
  explicit_mask,     // "explicit"
};

struct StructureSpec {
  StructureKind kind = StructureKind::full_information;
  std::vector<int> own;  // state coordinates, for delayed_sharing / decentralized
  BoolMatrix mask;       // for explicit_mask

  static StructureSpec full_information() { return {}; }
  static StructureSpec delayed_sharing(std::vector<int> own) {
    return {StructureKind::delayed_sharing, std::move(own), {}};
  }
  static StructureSpec decentralized(std::vector<int> own) {
    return {StructureKind::decentralized, std::move(own), {}};
  }
  static StructureSpec explicit_mask(BoolMatrix mask) {
    return {StructureKind::explicit_mask, {}, std::move(mask)};
  }

  friend bool operator==(const StructureSpec& a, const StructureSpec& b) {
    if (a.kind != b.kind || a.own != b.own) return false;
    if (a.mask.rows() != b.mask.rows() || a.mask.cols() != b.mask.cols())
      return false;
    return a.mask.size() == 0 || a.mask == b.mask;
  }
};

struct ProblemInstance {
  int n = 0;
  int m1 = 0;
  int m2 = 0;
  int N = 0;
  Matrix A, B1, B2;
  Matrix Sigma0;
  std::vector<Matrix> SigmaT;  // Σ_w(0..N-1)
  bool zero_sum = false;
  StageCost cost1, cost2;
  StructureSpec structure1, structure2;

  const StageCost& cost(Team t) const {
    return t == Team::one ? cost1 : cost2;
  }
  const StructureSpec& structure(Team t) const {
    return t == Team::one ? structure1 : structure2;
  }
  int inputs(Team t) const { return t == Team::one ? m1 : m2; }

  friend bool operator==(const ProblemInstance& a, const ProblemInstance& b) {
    using detail::same;
    return a.n == b.n && a.m1 == b.m1 && a.m2 == b.m2 && a.N == b.N &&
           same(a.A, b.A) && same(a.B1, b.B1) && same(a.B2, b.B2) &&
           same(a.Sigma0, b.Sigma0) && same(a.SigmaT, b.SigmaT) &&
           a.zero_sum == b.zero_sum && a.cost1 == b.cost1 &&
           a.cost2 == b.cost2 && a.structure1 == b.structure1 &&
           a.structure2 == b.structure2;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string joined() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v;
    }
    return out;
  }
};

namespace detail {

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline bool is_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  const double scale = 1.0 + max_abs(m);
  return max_abs(m - m.transpose()) <= 1e-12 * scale;
}

class Checker {
 public:
  explicit Checker(ValidationReport& r) : report_(r) {}

  void fail(std::string msg) { report_.violations.push_back(std::move(msg)); }

  bool shape(const Matrix& m, const std::string& name, Index rows, Index cols,
             const std::string& rows_from, const std::string& cols_from) {
    if (m.rows() == rows && m.cols() == cols) return true;
    std::ostringstream os;
    os << "dimension mismatch: " << name << " is " << shape_str(m)
       << " but expected " << rows << "x" << cols;
    if (m.rows() != rows) os << " (rows from " << rows_from << ")";
    if (m.cols() != cols) os << " (cols from " << cols_from << ")";
    fail(os.str());
    return false;
  }

  void symmetric(const Matrix& m, const std::string& name) {
    if (!is_symmetric(m)) fail(name + " is not symmetric");
  }

  void positive_definite(const Matrix& m, const std::string& name) {
    if (!is_symmetric(m)) {
      fail(name + " is not symmetric");
      return;
    }
    const double lo = min_eigenvalue(m);
    const double hi = max_eigenvalue(m);
    if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
      std::ostringstream os;
      os << "covariance " << name
         << " is not positive definite (min eigenvalue " << lo << ")";
      fail(os.str());
    }
  }

 private:
  ValidationReport& report_;
};

inline void check_cost(Checker& c, const ProblemInstance& p,
                       const StageCost& cost, const std::string& name) {
  const auto count = [&](const std::vector<Matrix>& list,
                         const std::string& field) {
    if (static_cast<int>(list.size()) == p.N) return true;
    c.fail(name + "." + field + " has " + std::to_string(list.size()) +
           " entries, expected N=" + std::to_string(p.N));
    return false;
  };
  if (count(cost.M, "M"))
    for (int t = 1; t <= p.N; ++t) {
      const auto label = name + ".M(" + std::to_string(t) + ")";
      if (c.shape(cost.M[t - 1], label, p.n, p.n, "n", "n"))
        c.symmetric(cost.M[t - 1], label);
    }
  if (count(cost.R, "R"))
    for (int t = 0; t < p.N; ++t) {
      const auto label = name + ".R(" + std::to_string(t) + ")";
      if (c.shape(cost.R[t], label, p.m1, p.m1, "m1", "m1"))
        c.symmetric(cost.R[t], label);
    }
  if (count(cost.V, "V"))
    for (int t = 0; t < p.N; ++t) {
      const auto label = name + ".V(" + std::to_string(t) + ")";
      if (c.shape(cost.V[t], label, p.m2, p.m2, "m2", "m2"))
        c.symmetric(cost.V[t], label);
    }
  if (cost.M0) {
    const auto label = name + ".M0";
    if (c.shape(*cost.M0, label, p.n, p.n, "n", "n"))
      c.symmetric(*cost.M0, label);
  }
}

inline void check_structure(Checker& c, const ProblemInstance& p,
                            const StructureSpec& s, int m,
                            const std::string& name) {
  switch (s.kind) {
    case StructureKind::full_information:
      return;
    case StructureKind::delayed_sharing:
    case StructureKind::decentralized: {
      if (s.own.empty()) c.fail(name + ".own must not be empty");
      for (int k : s.own)
        if (k < 0 || k >= p.n)
          c.fail(name + ".own contains coordinate " + std::to_string(k) +
                 " outside 0.." + std::to_string(p.n - 1));
      return;
    }
    case StructureKind::explicit_mask: {
      const Index rows = Index(m) * p.N;
      const Index cols = Index(p.n) * (p.N + 1);
      if (s.mask.rows() != rows || s.mask.cols() != cols)
        c.fail("dimension mismatch: " + name + ".mask is " +
               std::to_string(s.mask.rows()) + "x" +
               std::to_string(s.mask.cols()) + " but expected " +
               std::to_string(rows) + "x" + std::to_string(cols) +
               " (m*N x n*(N+1))");
      return;
    }
  }
}

}  // namespace detail

/// Lists every violated invariant; an empty report means the instance is valid.
inline ValidationReport validate(const ProblemInstance& p) {
  ValidationReport report;
  detail::Checker c(report);
  if (p.N < 1) c.fail("horizon must be >= 1");
  if (p.n < 1) c.fail("state dimension n must be >= 1");
  if (p.m1 < 1) c.fail("input dimension m1 must be >= 1");
  if (p.m2 < 1) c.fail("input dimension m2 must be >= 1");
  if (!report.ok()) return report;

  c.shape(p.A, "A", p.n, p.n, "n", "n");
  c.shape(p.B1, "B1", p.n, p.m1, "A", "m1");
  c.shape(p.B2, "B2", p.n, p.m2, "A", "m2");
  if (c.shape(p.Sigma0, "Sigma0", p.n, p.n, "A", "A"))
    c.positive_definite(p.Sigma0, "Sigma0");
  if (static_cast<int>(p.SigmaT.size()) != p.N) {
    c.fail("SigmaT has " + std::to_string(p.SigmaT.size()) +
           " entries, expected N=" + std::to_string(p.N));
  } else {
    for (int t = 0; t < p.N; ++t) {
      const auto label = "SigmaT(" + std::to_string(t) + ")";
      if (c.shape(p.SigmaT[t], label, p.n, p.n, "A", "A"))
        c.positive_definite(p.SigmaT[t], label);
    }
  }
  detail::check_cost(c, p, p.cost1, "cost1");
  detail::check_cost(c, p, p.cost2, "cost2");
  if (p.zero_sum && !(p.cost2 == p.cost1.negated()))
    c.fail("zero_sum instance has cost2 that is not the negation of cost1");
  detail::check_structure(c, p, p.structure1, p.m1, "structure1");
  detail::check_structure(c, p, p.structure2, p.m2, "structure2");
  return report;
}

// ---------------------------------------------------------------------------
// JSON instance format
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_matrix_json(const json& j) {
  if (j.is_number()) return true;
  if (!j.is_array() || j.empty()) return false;
  for (const auto& row : j) {
    if (!row.is_array()) return false;
    for (const auto& x : row)
      if (!x.is_number()) return false;
  }
  return true;
}

inline Matrix matrix_from_json(const json& j, const std::string& name) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!is_matrix_json(j))
    throw ValidationError("schema violation: field '" + name +
                          "' is not a matrix (nested array of numbers)");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[i].size()) != cols)
      throw ValidationError("schema violation: field '" + name +
                            "' has ragged rows");
    for (Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

// A single matrix is broadcast to `count` copies; a list is taken as is.
inline std::vector<Matrix> matrix_list_from_json(const json& j,
                                                 const std::string& name,
                                                 int count) {
  if (is_matrix_json(j))
    return std::vector<Matrix>(static_cast<std::size_t>(std::max(count, 0)),
                               matrix_from_json(j, name));
  if (!j.is_array())
    throw ValidationError("schema violation: field '" + name +
                          "' must be a matrix or a list of matrices");
  std::vector<Matrix> out;
  for (std::size_t t = 0; t < j.size(); ++t)
    out.push_back(matrix_from_json(j[t], name + "[" + std::to_string(t) + "]"));
  return out;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json mask_to_json(const BoolMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline BoolMatrix mask_from_json(const json& j, const std::string& name) {
  const Matrix m = matrix_from_json(j, name);
  for (Index i = 0; i < m.size(); ++i)
    if (m.data()[i] != 0.0 && m.data()[i] != 1.0)
      throw ValidationError("schema violation: field '" + name +
                            "' must contain only 0/1 entries");
  return m.array() != 0.0;
}

inline json matrix_list_to_json(const std::vector<Matrix>& list) {
  const bool uniform =
      !list.empty() && std::all_of(list.begin(), list.end(), [&](const auto& m) {
        return same(m, list[0]);
      });
  if (uniform) return matrix_to_json(list[0]);
  json out = json::array();
  for (const auto& m : list) out.push_back(matrix_to_json(m));
  return out;
}

inline void reject_unknown(const json& obj, const std::set<std::string>& known,
                           const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw ValidationError("schema violation: unknown field '" + key +
                            "' in " + where);
}

inline const json& require(const json& obj, const std::string& key,
                           const std::string& where) {
  if (!obj.contains(key))
    throw ValidationError("schema violation: missing field '" + key +
                          "' in " + where);
  return obj.at(key);
}

inline int int_field(const json& obj, const std::string& key) {
  const json& v = require(obj, key, "instance");
  if (!v.is_number_integer())
    throw ValidationError("schema violation: field '" + key +
                          "' must be an integer");
  return v.get<int>();
}

inline StageCost cost_from_json(const json& j, const std::string& name, int N) {
  if (!j.is_object())
    throw ValidationError("schema violation: field '" + name +
                          "' must be an object");
  reject_unknown(j, {"M", "R", "V", "M0"}, name);
  StageCost c;
  c.M = matrix_list_from_json(require(j, "M", name), name + ".M", N);
  c.R = matrix_list_from_json(require(j, "R", name), name + ".R", N);
  c.V = matrix_list_from_json(require(j, "V", name), name + ".V", N);
  if (j.contains("M0")) c.M0 = matrix_from_json(j.at("M0"), name + ".M0");
  return c;
}

inline json cost_to_json(const StageCost& c) {
  json j = json::object();
  j["M"] = matrix_list_to_json(c.M);
  j["R"] = matrix_list_to_json(c.R);
  j["V"] = matrix_list_to_json(c.V);
  if (c.M0) j["M0"] = matrix_to_json(*c.M0);
  return j;
}

inline StructureSpec structure_from_json(const json& j,
                                         const std::string& name) {
  if (j.is_string()) {
    if (j.get<std::string>() == "FI") return StructureSpec::full_information();
    throw ValidationError("schema violation: field '" + name +
                          "' has unknown structure '" + j.get<std::string>() +
                          "'");
  }
  if (!j.is_object())
    throw ValidationError("schema violation: field '" + name +
                          "' must be \"FI\" or an object");
  const std::string kind = require(j, "kind", name).get<std::string>();
  const auto own = [&] {
    reject_unknown(j, {"kind", "own"}, name);
    return require(j, "own", name).get<std::vector<int>>();
  };
  if (kind == "FI") {
    reject_unknown(j, {"kind"}, name);
    return StructureSpec::full_information();
  }
  if (kind == "1SDIS") return StructureSpec::delayed_sharing(own());
  if (kind == "DP1") return StructureSpec::decentralized(own());
  if (kind == "explicit") {
    reject_unknown(j, {"kind", "mask"}, name);
    return StructureSpec::explicit_mask(
        mask_from_json(require(j, "mask", name), name + ".mask"));
  }
  throw ValidationError("schema violation: field '" + name +
                        "' has unknown kind '" + kind + "'");
}

inline json structure_to_json(const StructureSpec& s) {
  switch (s.kind) {
    case StructureKind::full_information:
      return "FI";
    case StructureKind::delayed_sharing:
      return json{{"kind", "1SDIS"}, {"own", s.own}};
    case StructureKind::decentralized:
      return json{{"kind", "DP1"}, {"own", s.own}};
    case StructureKind::explicit_mask:
      return json{{"kind", "explicit"}, {"mask", mask_to_json(s.mask)}};
  }
  return nullptr;
}

}  // namespace detail

/// Parses and validates a JSON instance document. Throws ValidationError.
inline ProblemInstance parse_instance(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw ValidationError("schema violation: instance must be a JSON object");
  detail::reject_unknown(doc,
                         {"n", "m1", "m2", "N", "A", "B1", "B2", "Sigma0",
                          "SigmaT", "zero_sum", "cost1", "cost2", "structure1",
                          "structure2"},
                         "instance");
  ProblemInstance p;
  try {
    p.n = detail::int_field(doc, "n");
    p.m1 = detail::int_field(doc, "m1");
    p.m2 = detail::int_field(doc, "m2");
    p.N = detail::int_field(doc, "N");
    using detail::require;
    p.A = detail::matrix_from_json(require(doc, "A", "instance"), "A");
    p.B1 = detail::matrix_from_json(require(doc, "B1", "instance"), "B1");
    p.B2 = detail::matrix_from_json(require(doc, "B2", "instance"), "B2");
    p.Sigma0 =
        detail::matrix_from_json(require(doc, "Sigma0", "instance"), "Sigma0");
    p.SigmaT = detail::matrix_list_from_json(require(doc, "SigmaT", "instance"),
                                             "SigmaT", p.N);
    p.zero_sum = doc.value("zero_sum", false);
    p.cost1 = detail::cost_from_json(require(doc, "cost1", "instance"), "cost1",
                                     p.N);
    if (doc.contains("cost2")) {
      p.cost2 = detail::cost_from_json(doc.at("cost2"), "cost2", p.N);
    } else if (p.zero_sum) {
      p.cost2 = p.cost1.negated();
    } else {
      throw ValidationError(
          "schema violation: missing field 'cost2' in instance (required "
          "unless zero_sum is true)");
    }
    p.structure1 = detail::structure_from_json(
        require(doc, "structure1", "instance"), "structure1");
    p.structure2 = detail::structure_from_json(
        require(doc, "structure2", "instance"), "structure2");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("schema violation: ") + e.what());
  }
  const auto report = validate(p);
  if (!report.ok()) throw ValidationError(report.joined());
  return p;
}

inline json instance_to_json(const ProblemInstance& p) {
  json j = json::object();
  j["n"] = p.n;
  j["m1"] = p.m1;
  j["m2"] = p.m2;
  j["N"] = p.N;
  j["A"] = detail::matrix_to_json(p.A);
  j["B1"] = detail::matrix_to_json(p.B1);
  j["B2"] = detail::matrix_to_json(p.B2);
  j["Sigma0"] = detail::matrix_to_json(p.Sigma0);
  j["SigmaT"] = detail::matrix_list_to_json(p.SigmaT);
  j["zero_sum"] = p.zero_sum;
  j["cost1"] = detail::cost_to_json(p.cost1);
  if (!p.zero_sum) j["cost2"] = detail::cost_to_json(p.cost2);
  j["structure1"] = detail::structure_to_json(p.structure1);
  j["structure2"] = detail::structure_to_json(p.structure2);
  return j;
}

inline std::string serialize_instance(const ProblemInstance& p) {
  return instance_to_json(p).dump(2);
}

}  // namespace mqi
