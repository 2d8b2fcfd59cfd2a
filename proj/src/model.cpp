#include "qdaa/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qdaa {

MultiAffineField::MultiAffineField(int dimension, std::vector<std::vector<MultiAffineTerm>> equations)
    : n_(dimension), equations_(std::move(equations)) {
  if (n_ <= 0) throw std::invalid_argument("field dimension must be positive");
  if (static_cast<int>(equations_.size()) != n_)
    throw std::invalid_argument("field needs exactly one equation per variable");
  for (auto& eq : equations_) {
    for (auto& term : eq) {
      std::sort(term.vars.begin(), term.vars.end());
      if (std::adjacent_find(term.vars.begin(), term.vars.end()) != term.vars.end())
        throw std::invalid_argument("non-multi-affine term: repeated variable in one product");
      for (int v : term.vars)
        if (v < 0 || v >= n_) throw std::invalid_argument("term references variable out of range");
    }
  }
  eq_term_begin_.reserve(n_ + 1);
  eq_term_begin_.push_back(0);
  for (const auto& eq : equations_) {
    for (const auto& term : eq) {
      coeffs_.push_back(term.coefficient);
      term_var_begin_.push_back(static_cast<int>(vars_flat_.size()));
      vars_flat_.insert(vars_flat_.end(), term.vars.begin(), term.vars.end());
    }
    eq_term_begin_.push_back(static_cast<int>(coeffs_.size()));
  }
  term_var_begin_.push_back(static_cast<int>(vars_flat_.size()));
}

void MultiAffineField::eval_into(const Vec& x, Vec& out) const {
  out.resize(n_);
  const double* xp = x.data();
  for (int i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (int t = eq_term_begin_[i]; t < eq_term_begin_[i + 1]; ++t) {
      double prod = coeffs_[t];
      for (int v = term_var_begin_[t]; v < term_var_begin_[t + 1]; ++v) prod *= xp[vars_flat_[v]];
      sum += prod;
    }
    out[i] = sum;
  }
}

MultiAffineField negate_field(const MultiAffineField& field) {
  auto equations = field.equations();
  for (auto& eq : equations)
    for (auto& term : eq) term.coefficient = -term.coefficient;
  return MultiAffineField(field.dimension(), std::move(equations));
}

int BiochemicalSystem::variable_index(const std::string& varname) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i] == varname) return static_cast<int>(i);
  return -1;
}

void BiochemicalSystem::validate() const {
  partition.validate();
  if (partition.dimension() != field.dimension())
    throw std::invalid_argument("partition and field dimension mismatch");
  if (static_cast<int>(variables.size()) != field.dimension())
    throw std::invalid_argument("variable names and field dimension mismatch");
  if (initial.empty()) throw std::invalid_argument("empty initial set");
  for (const RectIndex& rect : initial)
    if (!valid_rect(rect, partition)) throw std::invalid_argument("initial rectangle index out of range");
}

std::vector<RectIndex> expand_init_box(const std::vector<int>& lo, const std::vector<int>& hi) {
  const int n = static_cast<int>(lo.size());
  std::vector<RectIndex> rects;
  RectIndex cur{lo};
  while (true) {
    rects.push_back(cur);
    int ax = n - 1;
    for (; ax >= 0; --ax) {
      if (++cur.idx[ax] <= hi[ax]) break;
      cur.idx[ax] = lo[ax];
    }
    if (ax < 0) break;
  }
  std::sort(rects.begin(), rects.end());
  return rects;
}

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct LineScanner {
  const std::string& text;
  std::size_t pos = 0;
  int line = 0;

  bool next(std::string& out) {
    if (pos >= text.size()) return false;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    out = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    return true;
  }
};

struct TokenCursor {
  std::string_view s;
  int line;
  std::size_t pos = 0;

  int column() const { return static_cast<int>(pos) + 1; }

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= s.size() || s[pos] == '#';
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c)) throw ParseError(line, column(), std::string("expected '") + c + "' " + what);
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
    if (pos == start) throw ParseError(line, column(), "expected a name");
    return std::string(s.substr(start, pos - start));
  }

  double number() {
    skip_ws();
    if (pos < s.size() && s[pos] == '+') ++pos;  // from_chars rejects leading '+'
    const char* begin = s.data() + pos;
    const char* end = s.data() + s.size();
    double value = 0.0;
    auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc{}) throw ParseError(line, column(), "expected a number");
    pos += static_cast<std::size_t>(res.ptr - begin);
    return value;
  }

  bool looks_like_number() {
    skip_ws();
    if (pos >= s.size()) return false;
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return true;
    if ((c == '+' || c == '-') && pos + 1 < s.size()) {
      char d = s[pos + 1];
      return std::isdigit(static_cast<unsigned char>(d)) || d == '.';
    }
    return false;
  }
};

struct ModelDraft {
  std::vector<std::string> vars;
  std::map<std::string, double> consts;
  std::map<std::string, std::vector<MultiAffineTerm>> equations;
  std::map<std::string, std::vector<double>> thresholds;
  std::map<std::string, std::pair<double, double>> init;
  std::string name;

  int var_index(const std::string& v) const {
    auto it = std::find(vars.begin(), vars.end(), v);
    return it == vars.end() ? -1 : static_cast<int>(it - vars.begin());
  }
};

// term := [sign] factor ('*' factor)*, factor := number | const-name | var-name.
// Numeric and constant factors multiply into the coefficient.
MultiAffineTerm parse_term(TokenCursor& cur, const ModelDraft& draft, double sign) {
  MultiAffineTerm term;
  term.coefficient = sign;
  bool first = true;
  while (true) {
    if (!first) {
      if (!cur.consume('*')) break;
    }
    if (cur.looks_like_number()) {
      term.coefficient *= cur.number();
    } else {
      const int col = cur.column();
      std::string factor = cur.identifier();
      if (auto it = draft.consts.find(factor); it != draft.consts.end()) {
        term.coefficient *= it->second;
      } else {
        int vi = draft.var_index(factor);
        if (vi < 0) throw ParseError(cur.line, col, "unknown variable or constant '" + factor + "'");
        if (std::find(term.vars.begin(), term.vars.end(), vi) != term.vars.end())
          throw ParseError(cur.line, col, "non-multi-affine term: variable '" + factor + "' repeated in one product");
        term.vars.push_back(vi);
      }
    }
    first = false;
  }
  if (first) throw ParseError(cur.line, cur.column(), "empty term");
  std::sort(term.vars.begin(), term.vars.end());
  return term;
}

std::vector<MultiAffineTerm> parse_term_list(TokenCursor& cur, const ModelDraft& draft) {
  std::vector<MultiAffineTerm> terms;
  double sign = 1.0;
  if (cur.consume('-')) sign = -1.0;
  else cur.consume('+');
  terms.push_back(parse_term(cur, draft, sign));
  while (!cur.at_end()) {
    if (cur.consume('+')) sign = 1.0;
    else if (cur.consume('-')) sign = -1.0;
    else throw ParseError(cur.line, cur.column(), "expected '+' or '-' between terms");
    terms.push_back(parse_term(cur, draft, sign));
  }
  return terms;
}

BiochemicalSystem finish_draft(ModelDraft& draft) {
  if (draft.vars.empty()) throw ParseError(1, 1, "no variables declared");
  const int n = static_cast<int>(draft.vars.size());

  std::vector<std::vector<MultiAffineTerm>> equations(n);
  for (auto& [var, terms] : draft.equations) equations[draft.var_index(var)] = std::move(terms);

  Partition partition;
  partition.thresholds.resize(n);
  for (int i = 0; i < n; ++i) {
    auto it = draft.thresholds.find(draft.vars[i]);
    if (it == draft.thresholds.end())
      throw ParseError(1, 1, "missing thresholds for variable '" + draft.vars[i] + "'");
    partition.thresholds[i] = it->second;
  }
  partition.validate();

  std::vector<int> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    auto it = draft.init.find(draft.vars[i]);
    if (it == draft.init.end()) throw ParseError(1, 1, "missing init for variable '" + draft.vars[i] + "'");
    const auto& t = partition.thresholds[i];
    auto find_threshold = [&](double v) {
      for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] == v) return static_cast<int>(k);
      throw ParseError(1, 1, "init bound " + format_double(v) + " of variable '" + draft.vars[i] +
                               "' is not a threshold");
    };
    const int a = find_threshold(it->second.first);
    const int b = find_threshold(it->second.second);
    if (a >= b)
      throw ParseError(1, 1, "init interval of variable '" + draft.vars[i] + "' is empty");
    lo[i] = a;
    hi[i] = b - 1;  // inclusive rectangle range
  }

  BiochemicalSystem system;
  system.name = draft.name;
  system.variables = draft.vars;
  system.field = MultiAffineField(n, std::move(equations));
  system.partition = std::move(partition);
  system.init_lo = lo;
  system.init_hi = hi;
  system.initial = expand_init_box(lo, hi);
  system.validate();
  return system;
}

BiochemicalSystem parse_model_text(const std::string& text) {
  ModelDraft draft;
  LineScanner scanner{text};
  std::string raw;
  while (scanner.next(raw)) {
    TokenCursor cur{raw, scanner.line};
    if (cur.at_end()) continue;
    const int key_col = cur.column();
    std::string keyword = cur.identifier();
    if (keyword == "model") {
      draft.name = cur.identifier();
    } else if (keyword == "var") {
      std::string v = cur.identifier();
      if (draft.var_index(v) >= 0 || draft.consts.count(v))
        throw ParseError(cur.line, key_col, "duplicate name '" + v + "'");
      draft.vars.push_back(v);
    } else if (keyword == "const") {
      std::string v = cur.identifier();
      cur.expect('=', "after constant name");
      if (draft.var_index(v) >= 0 || draft.consts.count(v))
        throw ParseError(cur.line, key_col, "duplicate name '" + v + "'");
      draft.consts[v] = cur.number();
    } else if (keyword == "eq") {
      std::string v = cur.identifier();
      if (draft.var_index(v) < 0) throw ParseError(cur.line, key_col, "equation for unknown variable '" + v + "'");
      if (draft.equations.count(v)) throw ParseError(cur.line, key_col, "duplicate equation for '" + v + "'");
      cur.expect('=', "after variable name");
      draft.equations[v] = parse_term_list(cur, draft);
    } else if (keyword == "thresholds") {
      std::string v = cur.identifier();
      if (draft.var_index(v) < 0) throw ParseError(cur.line, key_col, "thresholds for unknown variable '" + v + "'");
      cur.expect('=', "after variable name");
      std::vector<double> values;
      while (!cur.at_end()) values.push_back(cur.number());
      if (values.size() < 2) throw ParseError(cur.line, cur.column(), "need at least 2 thresholds");
      for (std::size_t k = 0; k + 1 < values.size(); ++k)
        if (!(values[k] < values[k + 1]))
          throw ParseError(cur.line, key_col, "thresholds of '" + v + "' not strictly increasing");
      draft.thresholds[v] = std::move(values);
    } else if (keyword == "init") {
      std::string v = cur.identifier();
      if (draft.var_index(v) < 0) throw ParseError(cur.line, key_col, "init for unknown variable '" + v + "'");
      cur.expect('=', "after variable name");
      cur.expect('[', "to open the interval");
      double a = cur.number();
      cur.expect(',', "between interval bounds");
      double b = cur.number();
      cur.expect(']', "to close the interval");
      draft.init[v] = {a, b};
    } else {
      throw ParseError(cur.line, key_col, "unknown directive '" + keyword + "'");
    }
    if (!cur.at_end()) throw ParseError(cur.line, cur.column(), "trailing input");
  }
  return finish_draft(draft);
}

BiochemicalSystem parse_model_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, 1, std::string("invalid JSON: ") + e.what());
  }
  ModelDraft draft;
  try {
    draft.name = doc.value("name", "");
    draft.vars = doc.at("variables").get<std::vector<std::string>>();
    if (doc.contains("constants"))
      draft.consts = doc.at("constants").get<std::map<std::string, double>>();
    for (auto& [var, terms] : doc.at("equations").items()) {
      if (draft.var_index(var) < 0) throw ParseError(1, 1, "equation for unknown variable '" + var + "'");
      std::vector<MultiAffineTerm> list;
      for (const auto& entry : terms) {
        MultiAffineTerm term;
        term.coefficient = entry.at(0).get<double>();
        for (const auto& factor : entry.at(1)) {
          std::string fname = factor.get<std::string>();
          if (auto it = draft.consts.find(fname); it != draft.consts.end()) {
            term.coefficient *= it->second;
            continue;
          }
          int vi = draft.var_index(fname);
          if (vi < 0) throw ParseError(1, 1, "unknown variable or constant '" + fname + "'");
          if (std::find(term.vars.begin(), term.vars.end(), vi) != term.vars.end())
            throw ParseError(1, 1, "non-multi-affine term: variable '" + fname + "' repeated in one product");
          term.vars.push_back(vi);
        }
        std::sort(term.vars.begin(), term.vars.end());
        list.push_back(std::move(term));
      }
      draft.equations[var] = std::move(list);
    }
    for (auto& [var, values] : doc.at("thresholds").items()) {
      if (draft.var_index(var) < 0) throw ParseError(1, 1, "thresholds for unknown variable '" + var + "'");
      draft.thresholds[var] = values.get<std::vector<double>>();
      const auto& t = draft.thresholds[var];
      if (t.size() < 2) throw ParseError(1, 1, "need at least 2 thresholds for '" + var + "'");
      for (std::size_t k = 0; k + 1 < t.size(); ++k)
        if (!(t[k] < t[k + 1])) throw ParseError(1, 1, "thresholds of '" + var + "' not strictly increasing");
    }
    for (auto& [var, iv] : doc.at("init").items()) {
      if (draft.var_index(var) < 0) throw ParseError(1, 1, "init for unknown variable '" + var + "'");
      draft.init[var] = {iv.at(0).get<double>(), iv.at(1).get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, 1, std::string("malformed model JSON: ") + e.what());
  }
  return finish_draft(draft);
}

}  // namespace

BiochemicalSystem parse_model(const std::string& text) {
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    if (c == '{') return parse_model_json(text);
    break;
  }
  return parse_model_text(text);
}

std::string print_model(const BiochemicalSystem& system) {
  std::ostringstream out;
  if (!system.name.empty()) out << "model " << system.name << "\n";
  for (const auto& v : system.variables) out << "var " << v << "\n";
  out << "\n";
  for (int i = 0; i < system.dimension(); ++i) {
    const auto& eq = system.field.equations()[i];
    if (eq.empty()) continue;  // constant species
    out << "eq " << system.variables[i] << " =";
    for (std::size_t t = 0; t < eq.size(); ++t) {
      const auto& term = eq[t];
      double c = term.coefficient;
      if (t == 0) {
        out << (c < 0 ? " -" : " ");
      } else {
        out << (c < 0 ? " - " : " + ");
      }
      out << format_double(std::abs(c));
      for (int v : term.vars) out << "*" << system.variables[v];
    }
    out << "\n";
  }
  out << "\n";
  for (int i = 0; i < system.dimension(); ++i) {
    out << "thresholds " << system.variables[i] << " =";
    for (double t : system.partition.thresholds[i]) out << " " << format_double(t);
    out << "\n";
  }
  out << "\n";
  for (int i = 0; i < system.dimension(); ++i) {
    const auto& t = system.partition.thresholds[i];
    out << "init " << system.variables[i] << " = [" << format_double(t[system.init_lo[i]]) << ", "
        << format_double(t[system.init_hi[i] + 1]) << "]\n";
  }
  return out.str();
}

std::string model_hash(const BiochemicalSystem& system) {
  const std::string text = print_model(system);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

BiochemicalSystem make_oscillatory() {
  const std::string doc =
      "model oscillatory\n"
      "var X\n"
      "var Y\n"
      "eq X = 5*X - 1*X*Y\n"
      "eq Y = 0.4*X*Y - 5.4*Y\n"
      "thresholds X = 0 1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17 18 19 20 21 22 23 24 25 26 27 28 29 30\n"
      "thresholds Y = 0 1 2 3 4 5 6 7 8 9 10 11 12\n"
      "init X = [20, 21]\n"
      "init Y = [5, 6]\n";
  return parse_model(doc);
}

BiochemicalSystem make_enzyme() {
  // dE and dES carry the ES production/consumption twice; kept exactly in
  // that published form. The conservation sums E+ES and S+ES+P still cancel
  // term by term.
  const std::string doc =
      "model enzyme\n"
      "var S\n"
      "var E\n"
      "var ES\n"
      "var P\n"
      "eq S = -0.01*S*E + 1*ES\n"
      "eq E = 1*ES - 0.01*S*E + 1*ES\n"
      "eq ES = -1*ES + 0.01*E*S - 1*ES\n"
      "eq P = 1*ES\n"
      "thresholds S = 0.01 5 10 15 25 50 60 85 95 100\n"
      "thresholds E = 0.01 5 10 15 25 50 60 85 95 100\n"
      "thresholds ES = 0.01 5 10 15 25 50 60 85 95 100\n"
      "thresholds P = 0.01 5 10 15 25 50 60 85 95 100\n"
      "init S = [25, 50]\n"
      "init E = [95, 100]\n"
      "init ES = [0.01, 5]\n"
      "init P = [0.01, 10]\n";
  return parse_model(doc);
}

BiochemicalSystem make_ecoli(const std::map<std::string, double>& constants) {
  static const char* required[] = {"k1", "k2", "k3", "k4", "k5", "k6", "k7", "k9"};
  std::string missing;
  for (const char* k : required)
    if (!constants.count(k)) missing += missing.empty() ? k : std::string(", ") + k;
  if (!missing.empty())
    throw std::invalid_argument(
        "ecoli model needs user-supplied rate constants (missing: " + missing +
        "); pass them via a constants file");
  for (const auto& [k, v] : constants) {
    static const std::set<std::string> known = {"k1", "k2", "k3", "k4", "k5",
                                                "k6", "k7", "k8", "k9", "Hin", "Hex"};
    if (!known.count(k)) throw std::invalid_argument("unknown ecoli constant '" + k + "'");
    (void)v;
  }
  auto get = [&](const std::string& k, double fallback) {
    auto it = constants.find(k);
    return it == constants.end() ? fallback : it->second;
  };
  // Hin carries no thresholds, so it folds into the NH3in <-> NH4in
  // conversion rate. Hex does not occur in the equations at all.
  const double hin = get("Hin", 1.0);
  std::ostringstream doc;
  doc << "model ecoli\n"
      << "var NH3ex\nvar NH4ex\nvar AmtB\nvar AmtB_NH3\nvar AmtB_NH4\nvar NH3in\nvar NH4in\n"
      << "const k1 = " << format_double(get("k1", 0)) << "\n"
      << "const k2 = " << format_double(get("k2", 0)) << "\n"
      << "const k3 = " << format_double(get("k3", 0)) << "\n"
      << "const k4 = " << format_double(get("k4", 0)) << "\n"
      << "const k5 = " << format_double(get("k5", 0)) << "\n"
      << "const k6h = " << format_double(get("k6", 0) * hin) << "\n"
      << "const k7 = " << format_double(get("k7", 0)) << "\n"
      << "const k9 = " << format_double(get("k9", 0)) << "\n"
      << "eq AmtB = -k1*AmtB*NH4ex + k2*AmtB_NH4 + k4*AmtB_NH3\n"
      << "eq AmtB_NH3 = k3*AmtB_NH4 - k4*AmtB_NH3\n"
      << "eq AmtB_NH4 = k1*AmtB*NH4ex - k2*AmtB_NH4 - k3*AmtB_NH4\n"
      << "eq NH3in = k4*AmtB_NH3 - k6h*NH3in + k7*NH4in + k9*NH3ex\n"
      << "eq NH4in = k6h*NH3in - k5*NH4in - k7*NH4in\n"
      << "thresholds NH3ex = 0 28e-9 29e-9 1e-5\n"
      << "thresholds NH4ex = 0 49e-7 5e-6 1e-5\n"
      << "thresholds AmtB = 0 1e-12 1e-10 5e-6 9.9e-6 1e-5\n"
      << "thresholds AmtB_NH3 = 0 1e-7 1e-5\n"
      << "thresholds AmtB_NH4 = 0 1e-7 1e-5\n"
      // published NH4in list carries 1e-6 out of order; sorted here
      << "thresholds NH3in = 0 1e-8 1e-7 1e-6 11e-7 1e-5 1e-4 1e-3\n"
      << "thresholds NH4in = 0 1e-8 1e-7 1e-6 2e-6 2.1e-6 1e-5 1e-4 1e-3\n"
      << "init NH3ex = [28e-9, 29e-9]\n"
      << "init NH4ex = [49e-7, 5e-6]\n"
      << "init AmtB = [0, 1e-5]\n"
      << "init AmtB_NH3 = [0, 1e-5]\n"
      << "init AmtB_NH4 = [0, 1e-5]\n"
      << "init NH3in = [1e-6, 11e-7]\n"
      << "init NH4in = [2e-6, 2.1e-6]\n";
  return parse_model(doc.str());
}

}  // namespace

BiochemicalSystem builtin_model(const std::string& name, const std::map<std::string, double>& constants) {
  if (name == "oscillatory") return make_oscillatory();
  if (name == "enzyme") return make_enzyme();
  if (name == "ecoli") return make_ecoli(constants);
  throw std::invalid_argument("unknown builtin model '" + name + "' (expected oscillatory, enzyme or ecoli)");
}

}  // namespace qdaa
