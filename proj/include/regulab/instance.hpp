#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "regulab/expression.hpp"
#include "regulab/mappings.hpp"
#include "regulab/moduli.hpp"

namespace regulab {

inline constexpr int kSchemaVersion = 1;

/// Serialized SetValuedMap. Only the fields of `type` are meaningful.
struct MappingSpec {
  std::string type;  // linear | polyhedral_graph | normal_cone_box | smooth |
                     // sampled_graph | sum | zero
  Matrix A;
  Matrix B;
  Vector c;
  Vector lower;
  Vector upper;
  std::optional<FunctionSpec> function;
  std::vector<std::pair<Vector, Vector>> pairs;
  std::shared_ptr<MappingSpec> base;
  int n = 0;
  int m = 0;

  int domain_dim() const;
  int range_dim() const;
};

struct EstimatorSpec {
  std::optional<double> delta;
  std::optional<double> mu;
  std::optional<double> residual_cap;
  std::optional<int> resolution;
  std::optional<int> refinement_levels;
};

/// Task-specific knobs; each task reads the ones it understands.
struct ParamsSpec {
  std::optional<double> tau;
  std::optional<double> gamma;
  std::optional<double> eta;
  std::optional<double> alpha;
  std::optional<int> zstar_count;
  std::optional<Vector> x0;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<Vector> reference;
  std::optional<double> expected;
  std::optional<double> tolerance;
  std::optional<bool> expect_holds;
};

struct ExperimentInstance {
  std::string id;
  std::string task;
  MappingSpec mapping;
  std::optional<FunctionSpec> perturbation;
  Vector xbar;
  Vector ybar;
  double q = 1.0;
  std::optional<EstimatorSpec> estimator;
  std::optional<ParamsSpec> params;

  const EstimatorSpec& est() const;
  const ParamsSpec& par() const;

  /// ModulusQuery with the defaults filled in (delta 0.5, mu = delta,
  /// resolution 21, one refinement level).
  ModulusQuery modulus_query() const;
};

const std::vector<std::string>& known_tasks();

/// Strict parse of one instance object; throws SchemaError naming the field.
ExperimentInstance parse_instance(const nlohmann::json& j);

/// Parses a whole batch file, rejecting any schema violation or duplicate id.
std::vector<ExperimentInstance> parse_instance_file(const std::string& path);

/// Batch file with per-instance failures kept apart. File-level problems
/// (unreadable, bad JSON, wrong version, duplicate ids) still throw.
struct BatchEntry {
  std::string id;    // may be empty when the entry has no usable id
  std::string task;  // as written, when it is a string
  std::optional<ExperimentInstance> instance;
  std::string error;
};
std::vector<BatchEntry> parse_batch_file(const std::string& path);
std::vector<BatchEntry> parse_batch_text(const std::string& text);

nlohmann::json to_json(const MappingSpec& m);
nlohmann::json to_json(const FunctionSpec& f);
nlohmann::json to_json(const ExperimentInstance& inst);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string serialize_instances(const std::vector<ExperimentInstance>& list);

SetValuedMap build_mapping(const MappingSpec& spec);

}  // namespace regulab
