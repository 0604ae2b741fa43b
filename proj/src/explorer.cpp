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

#include "ynano/explorer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace ynano {

namespace {

const std::set<std::string_view> kNodeKinds = {"conv", "pep", "ep", "fca", "upsample", "concat", "maxpool", "detect"};
const std::set<std::string_view> kOtherKinds = {"input", "classes", "anchors", "from"};

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

bool parse_int(std::string_view s, int& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t generation, uint64_t index) {
  return splitmix64(seed ^ splitmix64((generation << 20) ^ index));
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_categorical(std::mt19937_64& rng, const std::vector<double>& weights, int exclude = -1) {
  double total = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (static_cast<int>(i) != exclude) total += weights[i];
  }
  double r = unit(rng) * total;
  int last = -1;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (static_cast<int>(i) == exclude) continue;
    last = static_cast<int>(i);
    if (r < weights[i]) return last;
    r -= weights[i];
  }
  return last;
}

const Dimension* find_dim(const DesignSpace& space, std::string_view name, Dimension::Kind kind) {
  for (const auto& d : space.dims) {
    if (d.kind == kind && d.name == name) return &d;
  }
  return nullptr;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

PrototypeSpec PrototypeSpec::parse(std::string_view text) {
  PrototypeSpec proto;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    auto toks = split_ws(raw);
    if (toks.empty()) continue;
    Line line;
    line.line_no = line_no;
    if (toks.back().front() == '@') {
      line.tag = toks.back().substr(1);
      toks.pop_back();
      if (line.tag.empty()) throw ParseError(line_no, "empty @tag");
    }
    if (toks.empty()) throw ParseError(line_no, "tag without a node");
    const std::string& kw = toks[0];
    line.is_node = kNodeKinds.count(kw) > 0;
    if (!line.is_node && !kOtherKinds.count(kw)) throw ParseError(line_no, "unknown node kind '" + kw + "'");
    if (!line.is_node && !line.tag.empty()) throw ParseError(line_no, "only node lines can carry a tag");
    if (kw == "from" || kw == "concat") {
      int ref = 0;
      if (toks.size() != 2 || !parse_int(toks[1], ref) || ref < 0 || ref >= proto.node_count) {
        throw ParseError(line_no, "'" + kw + "' must reference an earlier prototype node by number");
      }
    }
    if (line.is_node) ++proto.node_count;
    line.tokens = std::move(toks);
    proto.lines.push_back(std::move(line));
  }
  if (proto.node_count == 0) throw ParseError(line_no, "no nodes");
  return proto;
}

DesignSpace DesignSpace::parse(std::string_view text) {
  DesignSpace space;
  std::set<std::string> names;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto toks = split_ws(raw);
    if (toks.empty()) continue;
    Dimension dim;
    if (toks[0] == "slot") {
      if (toks.size() < 4 || toks[2] != "values") throw ParseError(line_no, "expected 'slot <name> values <v1,v2,...>'");
      dim.kind = Dimension::Kind::slot;
      std::string joined;
      for (size_t i = 3; i < toks.size(); ++i) joined += toks[i];
      std::istringstream vs(joined);
      for (std::string v; std::getline(vs, v, ',');) {
        int x = 0;
        if (!parse_int(v, x)) throw ParseError(line_no, "malformed integer '" + v + "'");
        if (std::find(dim.values.begin(), dim.values.end(), x) != dim.values.end()) {
          throw ParseError(line_no, "duplicate value " + v);
        }
        dim.values.push_back(x);
      }
      if (dim.values.empty()) throw ParseError(line_no, "slot has no values");
    } else if (toks[0] == "fca_site") {
      if (toks.size() != 3 || toks[2] != "optional") throw ParseError(line_no, "expected 'fca_site <name> optional'");
      dim.kind = Dimension::Kind::fca_site;
      dim.values = {0, 1};
    } else if (toks[0] == "repeat") {
      int lo = 0, hi = 0;
      if (toks.size() != 6 || toks[2] != "min" || toks[4] != "max" || !parse_int(toks[3], lo) ||
          !parse_int(toks[5], hi)) {
        throw ParseError(line_no, "expected 'repeat <stage> min <a> max <b>'");
      }
      if (lo < 0 || hi < lo) throw ParseError(line_no, "repeat bounds must satisfy 0 <= min <= max");
      dim.kind = Dimension::Kind::repeat;
      for (int v = lo; v <= hi; ++v) dim.values.push_back(v);
    } else {
      throw ParseError(line_no, "unknown design-space entry '" + toks[0] + "'");
    }
    dim.name = toks[1];
    if (!names.insert(dim.name).second) throw ParseError(line_no, "duplicate name '" + dim.name + "'");
    space.dims.push_back(std::move(dim));
  }
  return space;
}

uint64_t DesignSpace::size() const {
  uint64_t n = 1;
  for (const auto& d : dims) {
    const auto k = static_cast<uint64_t>(d.values.size());
    if (k != 0 && n > std::numeric_limits<uint64_t>::max() / k) return std::numeric_limits<uint64_t>::max();
    n *= k;
  }
  return n;
}

std::vector<int> point_values(const DesignSpace& space, const DesignPoint& point) {
  if (point.size() != space.dims.size()) throw ConfigError("design point has the wrong number of dimensions");
  std::vector<int> v;
  v.reserve(point.size());
  for (size_t d = 0; d < point.size(); ++d) v.push_back(space.dims[d].values.at(static_cast<size_t>(point[d])));
  return v;
}

std::string describe_point(const DesignSpace& space, const DesignPoint& point) {
  const auto values = point_values(space, point);
  std::string out;
  for (size_t d = 0; d < values.size(); ++d) {
    if (d) out += ' ';
    out += space.dims[d].name + "=" + std::to_string(values[d]);
  }
  return out;
}

NetworkSpec expand(const PrototypeSpec& proto, const DesignSpace& space, const DesignPoint& point) {
  const auto values = point_values(space, point);
  std::map<std::string, int> slot, site, repeat;
  for (size_t d = 0; d < values.size(); ++d) {
    const auto& dim = space.dims[d];
    switch (dim.kind) {
      case Dimension::Kind::slot: slot[dim.name] = values[d]; break;
      case Dimension::Kind::fca_site: site[dim.name] = values[d]; break;
      case Dimension::Kind::repeat: repeat[dim.name] = values[d]; break;
    }
  }

  std::ostringstream text;
  std::vector<int> mapped(static_cast<size_t>(proto.node_count), kNetworkInput);
  int proto_idx = 0;
  int current = kNetworkInput;  // id feeding the next emitted node
  int next_id = 0;

  for (const auto& line : proto.lines) {
    std::vector<std::string> toks = line.tokens;
    for (auto& t : toks) {
      if (t.size() > 1 && t[0] == '$') {
        auto it = slot.find(t.substr(1));
        if (it == slot.end()) throw ConfigError("line " + std::to_string(line.line_no) + ": unknown slot '" + t + "'");
        t = std::to_string(it->second);
      }
    }
    if (toks[0] == "from") {
      current = mapped[static_cast<size_t>(std::stoi(toks[1]))];
      continue;
    }
    if (!line.is_node) {
      for (size_t i = 0; i < toks.size(); ++i) text << (i ? " " : "") << toks[i];
      text << '\n';
      continue;
    }

    int count = 1;
    if (!line.tag.empty()) {
      if (auto it = repeat.find(line.tag); it != repeat.end()) {
        count = it->second;
      } else if (auto is = site.find(line.tag); is != site.end()) {
        count = is->second;
      } else {
        throw ConfigError("line " + std::to_string(line.line_no) + ": tag '@" + line.tag + "' is not declared");
      }
    }
    if (toks[0] == "concat") toks[1] = std::to_string(mapped[static_cast<size_t>(std::stoi(toks[1]))]);

    // A dropped node passes its input through.
    for (int r = 0; r < count; ++r) {
      if (next_id > 0 && current != next_id - 1) text << "from " << current << '\n';
      for (size_t i = 0; i < toks.size(); ++i) text << (i ? " " : "") << toks[i];
      text << '\n';
      current = next_id++;
    }
    if (current == kNetworkInput) {
      throw ConfigError("line " + std::to_string(line.line_no) + ": the first node cannot be dropped");
    }
    mapped[static_cast<size_t>(proto_idx++)] = current;
  }
  try {
    return parse_network_spec(text.str());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("expanded prototype is invalid: ") + e.what());
  }
}

void check_design_space(const PrototypeSpec& proto, const DesignSpace& space) {
  std::set<std::string> used_slots, used_tags;
  for (const auto& line : proto.lines) {
    for (const auto& t : line.tokens) {
      if (t.size() > 1 && t[0] == '$') {
        if (!find_dim(space, t.substr(1), Dimension::Kind::slot)) {
          throw ConfigError("line " + std::to_string(line.line_no) + ": slot '" + t + "' is not declared");
        }
        used_slots.insert(t.substr(1));
      }
    }
    if (!line.tag.empty()) {
      const Dimension* site = find_dim(space, line.tag, Dimension::Kind::fca_site);
      if (!site && !find_dim(space, line.tag, Dimension::Kind::repeat)) {
        throw ConfigError("line " + std::to_string(line.line_no) + ": tag '@" + line.tag + "' is not declared");
      }
      if (site && line.tokens[0] != "fca") {
        throw ConfigError("line " + std::to_string(line.line_no) + ": fca_site tag on a non-fca node");
      }
      used_tags.insert(line.tag);
    }
  }
  for (const auto& d : space.dims) {
    const bool used = d.kind == Dimension::Kind::slot ? used_slots.count(d.name) > 0 : used_tags.count(d.name) > 0;
    if (!used) throw ConfigError("design-space entry '" + d.name + "' is not used by the prototype");
  }
  DesignPoint first(space.dims.size(), 0);
  infer_shapes(expand(proto, space, first));
}

Generator Generator::uniform(const DesignSpace& space) {
  Generator g;
  for (const auto& d : space.dims) g.weights.emplace_back(d.values.size(), 1.0);
  return g;
}

DesignPoint sample_point(const Generator& g, uint64_t seed, const DesignSpace& space) {
  if (g.weights.size() != space.dims.size()) throw ConfigError("generator does not match the design space");
  std::mt19937_64 rng(derive_seed(seed, g.generation, 0x5EED));
  DesignPoint p;
  p.reserve(space.dims.size());
  for (const auto& w : g.weights) p.push_back(sample_categorical(rng, w));
  return p;
}

NetworkSpec generate(const Generator& g, uint64_t seed, const PrototypeSpec& proto, const DesignSpace& space) {
  return expand(proto, space, sample_point(g, seed, space));
}

double performance(double score, int64_t params, int64_t ops, const Coefficients& c) {
  if (!(score > 0.0)) return -std::numeric_limits<double>::infinity();
  const double pm = static_cast<double>(params) / 1e6;
  const double ob = static_cast<double>(ops) / 1e9;
  return c.scale * (c.kappa * std::log10(score) - c.beta * std::log10(pm) - c.gamma * std::log10(ob));
}

double proxy_score(const NetworkSpec& spec) {
  const OpsReport r = count_network(spec);
  int fca = 0;
  for (const auto& n : spec.nodes) fca += std::holds_alternative<FcaConfig>(n.op) ? 1 : 0;
  const double pm = static_cast<double>(r.total_params) / 1e6;
  const double ob = static_cast<double>(r.total_ops) / 1e9;
  const double s = 0.35 + 0.30 * (1.0 - std::exp(-pm / 1.5)) + 0.25 * (1.0 - std::exp(-ob / 2.0)) +
                   0.02 * std::min(fca, 3);
  return std::clamp(s, 0.01, 0.99);
}

Candidate evaluate(const NetworkSpec& spec, const Evaluator& evaluator, const Coefficients& coeffs) {
  Candidate c;
  c.spec = spec;
  try {
    const OpsReport r = count_network(spec);
    c.ops = r.total_ops;
    c.params = r.total_params;
  } catch (const std::exception& e) {
    c.error = e.what();
    c.u_value = -std::numeric_limits<double>::infinity();
    return c;
  }
  try {
    c.score = evaluator(spec);
    if (!(c.score >= 0.0 && c.score <= 1.0)) throw ConfigError("evaluator score outside [0, 1]");
  } catch (const std::exception& e) {
    c.error = std::string("evaluator failed: ") + e.what();
    c.score = 0.0;
  }
  c.u_value = performance(c.score, std::max<int64_t>(c.params, 1), std::max<int64_t>(c.ops, 1), coeffs);
  return c;
}

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.u_value != b.u_value) return a.u_value > b.u_value;
  return a.values < b.values;
}

namespace {

Candidate evaluate_point(const PrototypeSpec& proto, const DesignSpace& space, const DesignPoint& point,
                         const ConstraintSet& constraints, const Evaluator& evaluator, const ExploreOptions& options) {
  Candidate c;
  try {
    c = evaluate(expand(proto, space, point), evaluator, options.coeffs);
  } catch (const std::exception& e) {
    c.error = e.what();
    c.u_value = -std::numeric_limits<double>::infinity();
  }
  c.point = point;
  c.values = point_values(space, point);
  if (c.error.empty()) {
    OpsReport r;
    r.total_ops = c.ops;
    r.total_params = c.params;
    c.feasible = check_constraints(r, c.score, constraints, options.deployed_bits);
  }
  return c;
}

DesignPoint mutate(const DesignPoint& parent, const Generator& g, const DesignSpace& space, double rate,
                   uint64_t seed) {
  std::mt19937_64 rng(seed);
  DesignPoint child = parent;
  bool changed = false;
  std::vector<size_t> mutable_dims;
  for (size_t d = 0; d < space.dims.size(); ++d) {
    if (space.dims[d].values.size() < 2) continue;
    mutable_dims.push_back(d);
    if (unit(rng) < rate) {
      child[d] = sample_categorical(rng, g.weights[d], child[d]);
      changed = true;
    }
  }
  if (!changed && !mutable_dims.empty()) {
    const size_t d = mutable_dims[static_cast<size_t>(rng() % mutable_dims.size())];
    child[d] = sample_categorical(rng, g.weights[d], child[d]);
  }
  return child;
}

}  // namespace

ExploreResult explore(const PrototypeSpec& proto, const DesignSpace& space, const ConstraintSet& constraints,
                      const Evaluator& evaluator, int budget, uint64_t seed, const ExploreOptions& options) {
  if (options.population < 1 || options.offspring < 1) throw ConfigError("population and offspring must be positive");
  if (budget < options.population) throw ConfigError("budget must be at least the population size");

  ExploreResult result;
  Generator g = Generator::uniform(space);
  std::map<DesignPoint, Candidate> cache;
  std::vector<Candidate> population;

  auto consider = [&](const DesignPoint& p, int gen, uint64_t s, std::vector<Candidate>& fresh) {
    if (cache.count(p)) return;
    Candidate c = evaluate_point(proto, space, p, constraints, evaluator, options);
    ++result.evaluations;
    result.history.push_back({gen, s, c});
    if (c.feasible) {
      fresh.push_back(c);
    } else if (!result.best_infeasible || ranks_before(c, *result.best_infeasible)) {
      result.best_infeasible = c;
    }
    cache.emplace(p, std::move(c));
  };

  auto select = [&](std::vector<Candidate>& fresh) {
    for (auto& c : fresh) population.push_back(std::move(c));
    fresh.clear();
    std::stable_sort(population.begin(), population.end(), ranks_before);
    if (static_cast<int>(population.size()) > options.population) population.resize(static_cast<size_t>(options.population));
    result.best_u_by_generation.push_back(population.empty() ? -std::numeric_limits<double>::infinity()
                                                             : population.front().u_value);
  };

  auto update_generator = [&] {
    for (size_t d = 0; d < g.weights.size(); ++d) {
      std::fill(g.weights[d].begin(), g.weights[d].end(), 1.0);
      for (const auto& c : population) g.weights[d][static_cast<size_t>(c.point[d])] += 2.0;
    }
    ++g.generation;
  };

  std::vector<Candidate> fresh;
  for (int i = 0; i < options.population && result.evaluations < budget; ++i) {
    const uint64_t s = derive_seed(seed, 0, static_cast<uint64_t>(i));
    consider(sample_point(g, s, space), 0, s, fresh);
  }
  select(fresh);
  update_generator();

  int stale = 0;
  for (int gen = 1; result.evaluations < budget && stale < options.max_stale_generations; ++gen) {
    const int before = result.evaluations;
    for (int j = 0; j < options.offspring && result.evaluations < budget; ++j) {
      const uint64_t s = derive_seed(seed, static_cast<uint64_t>(gen), static_cast<uint64_t>(j));
      DesignPoint child;
      if (population.empty()) {
        child = sample_point(g, s, space);
      } else {
        const auto& parent = population[static_cast<size_t>(splitmix64(s) % population.size())];
        child = mutate(parent.point, g, space, options.mutation_rate, s);
      }
      consider(child, gen, s, fresh);
    }
    select(fresh);
    update_generator();
    stale = result.evaluations == before ? stale + 1 : 0;
  }

  if (!population.empty()) result.best = population.front();
  return result;
}

SearchResult brute_force_search(const PrototypeSpec& proto, const DesignSpace& space, const ConstraintSet& constraints,
                                const Evaluator& evaluator, const ExploreOptions& options, uint64_t max_points) {
  const uint64_t n = space.size();
  if (n > max_points) {
    throw ConfigError("design space has " + std::to_string(n) + " points; exhaustive search is limited to " +
                      std::to_string(max_points));
  }
  SearchResult result;
  DesignPoint p(space.dims.size(), 0);
  for (uint64_t i = 0; i < n; ++i) {
    Candidate c = evaluate_point(proto, space, p, constraints, evaluator, options);
    ++result.evaluated;
    auto& slot = c.feasible ? result.best : result.best_infeasible;
    if (!slot || ranks_before(c, *slot)) slot = std::move(c);
    // odometer, last dimension fastest
    for (size_t d = space.dims.size(); d-- > 0;) {
      if (++p[d] < static_cast<int>(space.dims[d].values.size())) break;
      p[d] = 0;
    }
  }
  return result;
}

std::string format_history_line(const DesignSpace& space, const HistoryEntry& e) {
  const Candidate& c = e.candidate;
  std::ostringstream os;
  os << e.generation << ' ' << e.seed << ' ' << (c.feasible ? 1 : 0) << ' ' << c.ops << ' ' << c.params << ' '
     << format_double(c.score) << ' ' << format_double(c.u_value) << ' ' << describe_point(space, c.point);
  return os.str();
}

}  // namespace ynano
