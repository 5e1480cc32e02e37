#include "regulab/instance.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "regulab/errors.hpp"

namespace regulab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Walks a JSON value while remembering where it is, so every error names the
// instance and the dotted field path.
class Reader {
 public:
  Reader(const json& j, std::string id, std::string path)
      : j_(j), id_(std::move(id)), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = path_.empty() ? "" : "field '" + path_ + "': ";
    throw SchemaError("instance '" + id_ + "': " + where + what);
  }

  const json& raw() const { return j_; }

  void object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) child_path_fail(it.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Reader at(const char* key) const {
    if (!j_.contains(key)) child_path_fail(key, "missing required field");
    return Reader(j_.at(key), id_, join(key));
  }

  Reader at(size_t i) const {
    return Reader(j_.at(i), id_, path_ + "[" + std::to_string(i) + "]");
  }

  size_t array_size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }

  // Numbers, or the strings "inf" / "-inf".
  double extended() const {
    if (j_.is_string()) {
      const auto s = j_.get<std::string>();
      if (s == "inf") return kInf;
      if (s == "-inf") return -kInf;
      fail("expected a number, \"inf\" or \"-inf\"");
    }
    return number();
  }

  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    const auto v = j_.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      fail("integer out of range");
    }
    return static_cast<int>(v);
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  Vector vector(bool allow_inf = false) const {
    const size_t n = array_size();
    Vector v(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
      v(static_cast<Eigen::Index>(i)) = allow_inf ? at(i).extended() : at(i).number();
    }
    return v;
  }

  Matrix matrix() const {
    const size_t rows = array_size();
    if (rows == 0) fail("matrix needs at least one row");
    size_t cols = 0;
    Matrix M;
    for (size_t r = 0; r < rows; ++r) {
      const Vector row = at(r).vector();
      if (r == 0) {
        cols = static_cast<size_t>(row.size());
        if (cols == 0) fail("matrix rows must be nonempty");
        M.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      } else if (static_cast<size_t>(row.size()) != cols) {
        at(r).fail("ragged matrix row");
      }
      M.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return M;
  }

 private:
  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  [[noreturn]] void child_path_fail(const std::string& key,
                                    const std::string& what) const {
    Reader(j_, id_, join(key)).fail(what);
  }

  const json& j_;
  std::string id_;
  std::string path_;
};

FunctionSpec read_function(const Reader& r) {
  r.object({"input_dim", "components"});
  FunctionSpec f;
  f.input_dim = r.at("input_dim").integer();
  if (f.input_dim <= 0) r.at("input_dim").fail("must be positive");
  const Reader comps = r.at("components");
  const size_t m = comps.array_size();
  if (m == 0) comps.fail("needs at least one component");
  for (size_t c = 0; c < m; ++c) {
    const Reader terms = comps.at(c);
    std::vector<Term> list;
    for (size_t t = 0; t < terms.array_size(); ++t) {
      const Reader tr = terms.at(t);
      tr.object({"coef", "powers", "fn", "var"});
      Term term;
      term.coef = tr.at("coef").number();
      if (tr.has("powers")) {
        const Reader p = tr.at("powers");
        std::vector<int> powers;
        for (size_t i = 0; i < p.array_size(); ++i) {
          const int e = p.at(i).integer();
          if (e < 0) p.at(i).fail("negative power");
          powers.push_back(e);
        }
        if (static_cast<int>(powers.size()) != f.input_dim) {
          p.fail("length differs from input_dim");
        }
        term.powers = std::move(powers);
      }
      if (tr.has("fn")) term.fn = tr.at("fn").string();
      if (tr.has("var")) term.var = tr.at("var").integer();
      try {
        FunctionSpec probe{f.input_dim, {{term}}};
        probe.validate();
      } catch (const SchemaError& e) {
        tr.fail(e.what());
      }
      list.push_back(std::move(term));
    }
    f.components.push_back(std::move(list));
  }
  return f;
}

MappingSpec read_mapping(const Reader& r) {
  if (!r.raw().is_object()) r.fail("expected an object");
  MappingSpec m;
  m.type = r.at("type").string();
  if (m.type == "linear") {
    r.object({"type", "A"});
    m.A = r.at("A").matrix();
  } else if (m.type == "polyhedral_graph") {
    r.object({"type", "A", "B", "c"});
    m.A = r.at("A").matrix();
    m.B = r.at("B").matrix();
    m.c = r.at("c").vector();
    if (m.A.rows() != m.B.rows() || m.A.rows() != m.c.size()) {
      r.fail("A, B and c must have the same number of rows");
    }
  } else if (m.type == "normal_cone_box") {
    r.object({"type", "lower", "upper"});
    m.lower = r.at("lower").vector(true);
    m.upper = r.at("upper").vector(true);
    if (m.lower.size() == 0 || m.lower.size() != m.upper.size()) {
      r.fail("lower and upper must be nonempty and of equal length");
    }
    for (Eigen::Index i = 0; i < m.lower.size(); ++i) {
      if (m.lower(i) == kInf || m.upper(i) == -kInf || m.lower(i) > m.upper(i)) {
        r.fail("box bounds out of order at coordinate " + std::to_string(i));
      }
    }
  } else if (m.type == "smooth") {
    r.object({"type", "function"});
    m.function = read_function(r.at("function"));
  } else if (m.type == "sampled_graph") {
    r.object({"type", "pairs"});
    const Reader pairs = r.at("pairs");
    const size_t n = pairs.array_size();
    if (n == 0) pairs.fail("needs at least one pair");
    for (size_t i = 0; i < n; ++i) {
      const Reader p = pairs.at(i);
      p.object({"x", "y"});
      Vector x = p.at("x").vector();
      Vector y = p.at("y").vector();
      if (!m.pairs.empty() && (x.size() != m.pairs.front().first.size() ||
                               y.size() != m.pairs.front().second.size())) {
        p.fail("pair dimensions differ from the first pair");
      }
      if (x.size() == 0 || y.size() == 0) p.fail("empty vector");
      m.pairs.emplace_back(std::move(x), std::move(y));
    }
  } else if (m.type == "sum") {
    r.object({"type", "base", "function"});
    m.base = std::make_shared<MappingSpec>(read_mapping(r.at("base")));
    m.function = read_function(r.at("function"));
    if (m.function->input_dim != m.base->domain_dim() ||
        m.function->output_dim() != m.base->range_dim()) {
      r.at("function").fail("dimensions differ from the base mapping");
    }
  } else if (m.type == "zero") {
    r.object({"type", "n", "m"});
    m.n = r.at("n").integer();
    m.m = r.at("m").integer();
    if (m.n <= 0 || m.m <= 0) r.fail("n and m must be positive");
  } else {
    r.at("type").fail("unknown mapping type \"" + m.type + "\"");
  }
  return m;
}

EstimatorSpec read_estimator(const Reader& r) {
  r.object({"delta", "mu", "residual_cap", "resolution", "refinement_levels"});
  EstimatorSpec e;
  if (r.has("delta")) e.delta = r.at("delta").positive();
  if (r.has("mu")) e.mu = r.at("mu").positive();
  if (r.has("residual_cap")) e.residual_cap = r.at("residual_cap").positive();
  if (r.has("resolution")) {
    e.resolution = r.at("resolution").integer();
    if (*e.resolution < 5) r.at("resolution").fail("must be at least 5");
  }
  if (r.has("refinement_levels")) {
    e.refinement_levels = r.at("refinement_levels").integer();
    if (*e.refinement_levels < 1) r.at("refinement_levels").fail("must be at least 1");
  }
  return e;
}

ParamsSpec read_params(const Reader& r) {
  r.object({"tau", "gamma", "eta", "alpha", "zstar_count", "x0", "tol",
            "max_iter", "reference", "expected", "tolerance", "expect_holds"});
  ParamsSpec p;
  if (r.has("tau")) p.tau = r.at("tau").positive();
  if (r.has("gamma")) p.gamma = r.at("gamma").positive();
  if (r.has("eta")) p.eta = r.at("eta").number();
  if (r.has("alpha")) p.alpha = r.at("alpha").number();
  if (r.has("zstar_count")) p.zstar_count = r.at("zstar_count").integer();
  if (r.has("x0")) p.x0 = r.at("x0").vector();
  if (r.has("tol")) p.tol = r.at("tol").positive();
  if (r.has("max_iter")) p.max_iter = r.at("max_iter").integer();
  if (r.has("reference")) p.reference = r.at("reference").vector();
  if (r.has("expected")) p.expected = r.at("expected").number();
  if (r.has("tolerance")) p.tolerance = r.at("tolerance").positive();
  if (r.has("expect_holds")) p.expect_holds = r.at("expect_holds").boolean();
  return p;
}

std::string id_of(const json& j) {
  if (j.is_object() && j.contains("id") && j.at("id").is_string()) {
    return j.at("id").get<std::string>();
  }
  return "";
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v(i);
    if (x == kInf) {
      a.push_back("inf");
    } else if (x == -kInf) {
      a.push_back("-inf");
    } else {
      a.push_back(x);
    }
  }
  return a;
}

json mat_json(const Matrix& M) {
  json a = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) a.push_back(vec_json(M.row(r).transpose()));
  return a;
}

json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(origin + ": malformed JSON: " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path + ": cannot open instance file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Checks the envelope and returns the raw instance array.
const json& envelope(const json& doc, const std::string& origin) {
  if (!doc.is_object()) throw SchemaError(origin + ": top level must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "schema" && it.key() != "instances") {
      throw SchemaError(origin + ": unknown top-level field '" + it.key() + "'");
    }
  }
  if (!doc.contains("schema") || !doc.at("schema").is_number_integer() ||
      doc.at("schema").get<int>() != kSchemaVersion) {
    throw SchemaError(origin + ": field 'schema' must be the integer " +
                      std::to_string(kSchemaVersion));
  }
  if (!doc.contains("instances") || !doc.at("instances").is_array()) {
    throw SchemaError(origin + ": field 'instances' must be an array");
  }
  const json& list = doc.at("instances");
  std::set<std::string> seen;
  for (const auto& j : list) {
    const std::string id = id_of(j);
    if (id.empty()) continue;
    if (!seen.insert(id).second) {
      throw SchemaError(origin + ": duplicate instance id '" + id + "'");
    }
  }
  return list;
}

std::vector<BatchEntry> entries_from(const json& doc, const std::string& origin) {
  std::vector<BatchEntry> out;
  for (const auto& j : envelope(doc, origin)) {
    BatchEntry e;
    e.id = id_of(j);
    if (j.is_object() && j.contains("task") && j.at("task").is_string()) {
      e.task = j.at("task").get<std::string>();
    }
    try {
      e.instance = parse_instance(j);
    } catch (const Error& err) {
      e.error = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

int MappingSpec::domain_dim() const {
  if (type == "linear") return static_cast<int>(A.cols());
  if (type == "polyhedral_graph") return static_cast<int>(A.cols());
  if (type == "normal_cone_box") return static_cast<int>(lower.size());
  if (type == "smooth") return function->input_dim;
  if (type == "sampled_graph") return static_cast<int>(pairs.front().first.size());
  if (type == "sum") return base->domain_dim();
  return n;
}

int MappingSpec::range_dim() const {
  if (type == "linear") return static_cast<int>(A.rows());
  if (type == "polyhedral_graph") return static_cast<int>(B.cols());
  if (type == "normal_cone_box") return static_cast<int>(lower.size());
  if (type == "smooth") return function->output_dim();
  if (type == "sampled_graph") return static_cast<int>(pairs.front().second.size());
  if (type == "sum") return base->range_dim();
  return m;
}

const EstimatorSpec& ExperimentInstance::est() const {
  static const EstimatorSpec empty;
  return estimator ? *estimator : empty;
}

const ParamsSpec& ExperimentInstance::par() const {
  static const ParamsSpec empty;
  return params ? *params : empty;
}

ModulusQuery ExperimentInstance::modulus_query() const {
  ModulusQuery query;
  query.q = q;
  query.xbar = xbar;
  query.ybar = ybar;
  query.delta = est().delta.value_or(0.5);
  query.mu = est().mu;
  query.residual_cap = est().residual_cap;
  query.resolution = est().resolution.value_or(21);
  query.refinement_levels = est().refinement_levels.value_or(1);
  return query;
}

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks = {
      "estimate-rg", "estimate-lip",       "verify-lg", "check-slope",
      "check-coderivative", "newton", "duality"};
  return tasks;
}

ExperimentInstance parse_instance(const json& j) {
  const std::string id = id_of(j);
  const Reader r(j, id.empty() ? "?" : id, "");
  r.object({"id", "task", "mapping", "perturbation", "base_point", "q",
            "estimator", "params"});
  ExperimentInstance inst;
  inst.id = r.at("id").string();
  if (inst.id.empty()) r.at("id").fail("must be nonempty");
  inst.task = r.at("task").string();
  bool known = false;
  for (const auto& t : known_tasks()) known = known || t == inst.task;
  if (!known) r.at("task").fail("unknown task \"" + inst.task + "\"");

  inst.mapping = read_mapping(r.at("mapping"));
  if (r.has("perturbation")) inst.perturbation = read_function(r.at("perturbation"));

  const Reader bp = r.at("base_point");
  bp.object({"x", "y"});
  inst.xbar = bp.at("x").vector();
  inst.ybar = bp.at("y").vector();
  inst.q = r.at("q").positive();
  if (r.has("estimator")) inst.estimator = read_estimator(r.at("estimator"));
  if (r.has("params")) inst.params = read_params(r.at("params"));

  const int n = inst.mapping.domain_dim();
  const int m = inst.mapping.range_dim();
  if (inst.xbar.size() != n) bp.at("x").fail("length differs from the mapping domain");
  if (inst.ybar.size() != m) bp.at("y").fail("length differs from the mapping range");
  if (inst.perturbation &&
      (inst.perturbation->input_dim != n || inst.perturbation->output_dim() != m)) {
    r.at("perturbation").fail("dimensions differ from the mapping");
  }
  const ParamsSpec& p = inst.par();
  if (p.x0 && p.x0->size() != n) r.at("params").at("x0").fail("dimension");
  if (p.reference && p.reference->size() != n) {
    r.at("params").at("reference").fail("dimension");
  }
  return inst;
}

std::vector<ExperimentInstance> parse_instance_file(const std::string& path) {
  std::vector<ExperimentInstance> out;
  for (auto& e : entries_from(parse_text(read_file(path), path), path)) {
    if (!e.instance) throw SchemaError(e.error);
    out.push_back(std::move(*e.instance));
  }
  return out;
}

std::vector<BatchEntry> parse_batch_file(const std::string& path) {
  return entries_from(parse_text(read_file(path), path), path);
}

std::vector<BatchEntry> parse_batch_text(const std::string& text) {
  return entries_from(parse_text(text, "<text>"), "<text>");
}

json to_json(const FunctionSpec& f) {
  json comps = json::array();
  for (const auto& terms : f.components) {
    json list = json::array();
    for (const auto& t : terms) {
      json term;
      term["coef"] = t.coef;
      if (t.powers) term["powers"] = *t.powers;
      if (t.fn) term["fn"] = *t.fn;
      if (t.var) term["var"] = *t.var;
      list.push_back(std::move(term));
    }
    comps.push_back(std::move(list));
  }
  return json{{"input_dim", f.input_dim}, {"components", std::move(comps)}};
}

json to_json(const MappingSpec& m) {
  json j;
  j["type"] = m.type;
  if (m.type == "linear") {
    j["A"] = mat_json(m.A);
  } else if (m.type == "polyhedral_graph") {
    j["A"] = mat_json(m.A);
    j["B"] = mat_json(m.B);
    j["c"] = vec_json(m.c);
  } else if (m.type == "normal_cone_box") {
    j["lower"] = vec_json(m.lower);
    j["upper"] = vec_json(m.upper);
  } else if (m.type == "smooth") {
    j["function"] = to_json(*m.function);
  } else if (m.type == "sampled_graph") {
    json pairs = json::array();
    for (const auto& [x, y] : m.pairs) {
      pairs.push_back(json{{"x", vec_json(x)}, {"y", vec_json(y)}});
    }
    j["pairs"] = std::move(pairs);
  } else if (m.type == "sum") {
    j["base"] = to_json(*m.base);
    j["function"] = to_json(*m.function);
  } else {
    j["n"] = m.n;
    j["m"] = m.m;
  }
  return j;
}

json to_json(const ExperimentInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["task"] = inst.task;
  j["mapping"] = to_json(inst.mapping);
  if (inst.perturbation) j["perturbation"] = to_json(*inst.perturbation);
  j["base_point"] = json{{"x", vec_json(inst.xbar)}, {"y", vec_json(inst.ybar)}};
  j["q"] = inst.q;
  if (inst.estimator) {
    const auto& e = *inst.estimator;
    json o = json::object();
    if (e.delta) o["delta"] = *e.delta;
    if (e.mu) o["mu"] = *e.mu;
    if (e.residual_cap) o["residual_cap"] = *e.residual_cap;
    if (e.resolution) o["resolution"] = *e.resolution;
    if (e.refinement_levels) o["refinement_levels"] = *e.refinement_levels;
    j["estimator"] = std::move(o);
  }
  if (inst.params) {
    const auto& p = *inst.params;
    json o = json::object();
    if (p.tau) o["tau"] = *p.tau;
    if (p.gamma) o["gamma"] = *p.gamma;
    if (p.eta) o["eta"] = *p.eta;
    if (p.alpha) o["alpha"] = *p.alpha;
    if (p.zstar_count) o["zstar_count"] = *p.zstar_count;
    if (p.x0) o["x0"] = vec_json(*p.x0);
    if (p.tol) o["tol"] = *p.tol;
    if (p.max_iter) o["max_iter"] = *p.max_iter;
    if (p.reference) o["reference"] = vec_json(*p.reference);
    if (p.expected) o["expected"] = *p.expected;
    if (p.tolerance) o["tolerance"] = *p.tolerance;
    if (p.expect_holds) o["expect_holds"] = *p.expect_holds;
    j["params"] = std::move(o);
  }
  return j;
}

std::string serialize_instances(const std::vector<ExperimentInstance>& list) {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["instances"] = json::array();
  for (const auto& inst : list) doc["instances"].push_back(to_json(inst));
  return doc.dump(2) + "\n";
}

SetValuedMap build_mapping(const MappingSpec& spec) {
  if (spec.type == "linear") return SetValuedMap::linear(spec.A);
  if (spec.type == "polyhedral_graph") {
    return SetValuedMap::polyhedral(spec.A, spec.B, spec.c);
  }
  if (spec.type == "normal_cone_box") {
    return SetValuedMap::normal_cone_box(spec.lower, spec.upper);
  }
  if (spec.type == "smooth") return SetValuedMap::smooth(build_function(*spec.function));
  if (spec.type == "sampled_graph") return SetValuedMap::sampled(spec.pairs);
  if (spec.type == "sum") {
    return sum_with_function(build_mapping(*spec.base), build_function(*spec.function));
  }
  if (spec.type == "zero") return SetValuedMap::zero(spec.n, spec.m);
  throw SchemaError("unknown mapping type \"" + spec.type + "\"");
}

}  // namespace regulab
