/* Copyright 2026 The ynano Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ynano/complexity.hpp"
#include "ynano/graph.hpp"

namespace ynano {

/// A network document whose integer fields may be `$slot` placeholders and
/// whose node lines may end in an `@name` tag (a repeatable stage or an
/// optional FCA site). `from`/`concat` ids refer to prototype node order and
/// are remapped when stages repeat or sites are dropped.
struct PrototypeSpec {
  struct Line {
    int line_no = 0;
    std::vector<std::string> tokens;
    std::string tag;
    bool is_node = false;
  };
  std::vector<Line> lines;
  int node_count = 0;

  static PrototypeSpec parse(std::string_view text);
};

/// One searchable dimension. Values are the candidate settings in declared
/// order: slot values, 0/1 for site presence, or the repeat counts.
struct Dimension {
  enum class Kind { slot, fca_site, repeat };
  Kind kind = Kind::slot;
  std::string name;
  std::vector<int> values;
};

/// Lines: `slot <name> values <v1,v2,...>`, `fca_site <name> optional`,
/// `repeat <stage> min <a> max <b>`.
struct DesignSpace {
  std::vector<Dimension> dims;

  static DesignSpace parse(std::string_view text);
  /// Number of points, saturating at UINT64_MAX.
  uint64_t size() const;
};

/// Index into each dimension's value list.
using DesignPoint = std::vector<int>;

/// Checks that every placeholder and tag in `proto` is declared in `space`
/// (and vice versa) and that the first point expands to a valid network.
void check_design_space(const PrototypeSpec& proto, const DesignSpace& space);

std::vector<int> point_values(const DesignSpace& space, const DesignPoint& point);
std::string describe_point(const DesignSpace& space, const DesignPoint& point);
NetworkSpec expand(const PrototypeSpec& proto, const DesignSpace& space, const DesignPoint& point);

/// Categorical sampling weights per dimension and a generation counter.
struct Generator {
  std::vector<std::vector<double>> weights;
  uint64_t generation = 0;

  static Generator uniform(const DesignSpace& space);
};

DesignPoint sample_point(const Generator& g, uint64_t seed, const DesignSpace& space);
NetworkSpec generate(const Generator& g, uint64_t seed, const PrototypeSpec& proto, const DesignSpace& space);

/// u = scale * log10(score^kappa / (params_M^beta * ops_B^gamma)).
struct Coefficients {
  double kappa = 2.0;
  double beta = 0.5;
  double gamma = 0.5;
  double scale = 20.0;
};

/// -infinity when score is 0.
double performance(double score, int64_t params, int64_t ops, const Coefficients& coeffs = {});

/// Accuracy stand-in: any pure function of the network. Throwing marks the
/// candidate infeasible.
using Evaluator = std::function<double(const NetworkSpec&)>;

/// Deterministic synthetic accuracy proxy: saturating in parameters and
/// operations with a small bonus per FCA node. Range [0.01, 0.99].
double proxy_score(const NetworkSpec& spec);

struct Candidate {
  NetworkSpec spec;
  DesignPoint point;
  std::vector<int> values;
  int64_t ops = 0;
  int64_t params = 0;
  double score = 0.0;
  double u_value = 0.0;
  bool feasible = false;
  std::string error;
};

Candidate evaluate(const NetworkSpec& spec, const Evaluator& evaluator, const Coefficients& coeffs = {});

/// Ranking order: higher u first, then lexicographically smaller slot values.
bool ranks_before(const Candidate& a, const Candidate& b);

struct ExploreOptions {
  int population = 8;     // mu
  int offspring = 8;      // lambda
  double mutation_rate = 0.1;
  Coefficients coeffs;
  int deployed_bits = 8;
  int max_stale_generations = 64;  // generations without a new evaluation before stopping
};

struct HistoryEntry {
  int generation = 0;
  uint64_t seed = 0;
  Candidate candidate;
};

struct ExploreResult {
  std::optional<Candidate> best;
  std::optional<Candidate> best_infeasible;
  std::vector<HistoryEntry> history;              // one entry per evaluation
  std::vector<double> best_u_by_generation;       // -inf until something feasible
  int evaluations = 0;
};

/// Elitist (mu + lambda) search. `budget` counts distinct evaluated points.
ExploreResult explore(const PrototypeSpec& proto, const DesignSpace& space, const ConstraintSet& constraints,
                      const Evaluator& evaluator, int budget, uint64_t seed, const ExploreOptions& options = {});

struct SearchResult {
  std::optional<Candidate> best;
  std::optional<Candidate> best_infeasible;
  uint64_t evaluated = 0;
};

/// Exhaustive constrained argmax. Refuses spaces larger than `max_points`.
SearchResult brute_force_search(const PrototypeSpec& proto, const DesignSpace& space,
                                const ConstraintSet& constraints, const Evaluator& evaluator,
                                const ExploreOptions& options = {}, uint64_t max_points = uint64_t{1} << 16);

/// `gen seed feasible ops params score u slots...`
std::string format_history_line(const DesignSpace& space, const HistoryEntry& entry);

}  // namespace ynano
