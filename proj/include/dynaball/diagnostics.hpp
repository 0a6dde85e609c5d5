#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynaball/core.hpp"
#include "dynaball/errors.hpp"
#include "dynaball/models.hpp"

namespace dynaball {

// ---- pair visibility ----

struct VisibilityReport {
  BinId i = 0, j = 0;
  std::uint64_t count = 0;    // rounds t <= horizon where {i,j} lies in some edge of E_t
  std::uint64_t horizon = 0;
  double bound = 0.0;         // model-certified ceiling
  bool within_bound = false;
};

inline std::vector<VisibilityReport> pair_visibility(const DynamicModel& model,
                                                     Round horizon,
                                                     const std::vector<std::pair<BinId, BinId>>& pairs) {
  if (horizon < 1 || horizon > model.horizon())
    throw ConfigError("pair visibility: horizon outside 1..model horizon");
  std::vector<VisibilityReport> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    if (i == j) throw ConfigError("pair visibility: need two distinct bins");
    if (i >= model.n() || j >= model.n())
      throw ConfigError("pair visibility: bin id out of range");
    VisibilityReport rep;
    rep.i = i;
    rep.j = j;
    rep.horizon = horizon;
    rep.bound = model.visibility_bound();
    for (Round t = 1; t <= horizon; ++t)
      if (model.pair_visible(t, i, j)) ++rep.count;
    rep.within_bound = static_cast<double>(rep.count) <= rep.bound;
    out.push_back(rep);
  }
  return out;
}

inline std::string visibility_csv(const std::vector<VisibilityReport>& reports) {
  std::string out = "i,j,count,bound,within_bound\n";
  char line[128];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%u,%u,%llu,%.6g,%d\n", r.i, r.j,
                  static_cast<unsigned long long>(r.count), r.bound, r.within_bound ? 1 : 0);
    out += line;
  }
  return out;
}

// ---- replayed trace index ----

// Everything the combinatorial instruments need, rebuilt exactly from the
// trace: per-ball heights and choices, final loads, and the unique ball
// sitting at each (bin, height) cell.
struct TraceIndex {
  std::vector<std::uint32_t> heights;               // [ball-1]
  std::vector<DChoice> choices;                     // [ball-1]
  std::vector<std::vector<std::uint32_t>> balls_at; // [bin][height] -> ball id
  LoadState final_loads;
};

inline TraceIndex index_trace(const AllocationTrace& trace) {
  TraceIndex idx;
  idx.final_loads = LoadState(trace.n);
  idx.balls_at.resize(trace.n);
  idx.heights.reserve(trace.records.size());
  idx.choices.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (r.destination >= trace.n) throw ContractError("trace index: destination out of range");
    auto& column = idx.balls_at[r.destination];
    if (column.size() != r.height)
      throw ContractError("trace index: height inconsistent with replay");
    column.push_back(r.ball);
    idx.heights.push_back(r.height);
    idx.choices.push_back(r.choice);
    apply_placement(idx.final_loads, r.destination);
  }
  return idx;
}

// ---- conflict graphs ----

struct ConflictGraph {
  enum class Mode { ball, bin };
  Mode mode = Mode::ball;
  std::uint32_t n = 0;            // bins behind the trace
  std::uint32_t vertex_count = 0; // balls (ball mode) or bins (bin mode)
  // ball mode: the d-choice of each ball, vertex v = ball v+1
  std::vector<DChoice> choices;
  // bin mode: one multigraph edge per ball, endpoints are bins
  std::vector<std::pair<BinId, BinId>> selected_edges;
};

// Ball mode: vertices are the balls, adjacent iff their d-choices share a
// bin. Bin mode (2-choice traces only): vertices are the bins, edge multiset
// = the multiset of 2-element choices the balls made.
inline ConflictGraph build_conflict_graph(const AllocationTrace& trace, ConflictGraph::Mode mode) {
  ConflictGraph cg;
  cg.mode = mode;
  cg.n = trace.n;
  if (mode == ConflictGraph::Mode::ball) {
    cg.vertex_count = static_cast<std::uint32_t>(trace.records.size());
    cg.choices.reserve(trace.records.size());
    for (const auto& r : trace.records) cg.choices.push_back(r.choice);
  } else {
    if (trace.d != 2)
      throw ConfigError("bin-mode conflict graph needs a 2-choice trace, got d = " +
                        std::to_string(trace.d));
    cg.vertex_count = trace.n;
    cg.selected_edges.reserve(trace.records.size());
    for (const auto& r : trace.records) {
      if (r.choice.size() != 2) throw ContractError("bin-mode conflict graph: malformed choice");
      cg.selected_edges.emplace_back(r.choice[0], r.choice[1]);
    }
  }
  return cg;
}

// Direct adjacency predicate, used by the enumeration oracles in tests.
// Vertices are 1-based ball ids in ball mode, bin ids in bin mode.
inline bool conflict_adjacent(const ConflictGraph& cg, std::uint32_t u, std::uint32_t v) {
  if (cg.mode == ConflictGraph::Mode::ball) {
    if (u < 1 || v < 1 || u > cg.vertex_count || v > cg.vertex_count)
      throw ContractError("conflict_adjacent: ball id out of range");
    if (u == v) return false;
    const auto& a = cg.choices[u - 1];
    const auto& b = cg.choices[v - 1];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) return true;
      a[i] < b[j] ? ++i : ++j;
    }
    return false;
  }
  if (u >= cg.vertex_count || v >= cg.vertex_count)
    throw ContractError("conflict_adjacent: bin id out of range");
  for (const auto& [x, y] : cg.selected_edges)
    if ((x == u && y == v) || (x == v && y == u)) return true;
  return false;
}

namespace detail {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::uint32_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

struct ConflictComponent {
  std::vector<std::uint32_t> vertices;  // sorted; ball ids (1-based) or bin ids
};

// Components of the conflict graph induced on the vertices that qualify at
// threshold c: in ball mode a ball qualifies when every bin of its d-choice
// carries at least c balls; in bin mode a bin qualifies when its own load
// does. Singleton components count.
inline std::vector<ConflictComponent> c_loaded_components(const ConflictGraph& cg,
                                                          const LoadState& loads,
                                                          std::uint32_t c) {
  if (loads.n() != cg.n) throw ContractError("c_loaded_components: loads/bin count mismatch");
  const auto nv = cg.vertex_count;
  std::vector<bool> qualifies(nv, false);
  detail::UnionFind uf(nv);

  if (cg.mode == ConflictGraph::Mode::ball) {
    for (std::uint32_t v = 0; v < nv; ++v) {
      bool ok = true;
      for (auto b : cg.choices[v]) ok = ok && loads.loads[b] >= c;
      qualifies[v] = ok;
    }
    // balls sharing a bin are adjacent: union everything inside each bin's
    // bucket of qualifying balls
    std::vector<std::uint32_t> last_in_bin(cg.n, nv);
    for (std::uint32_t v = 0; v < nv; ++v) {
      if (!qualifies[v]) continue;
      for (auto b : cg.choices[v]) {
        if (last_in_bin[b] != nv) uf.unite(v, last_in_bin[b]);
        last_in_bin[b] = v;
      }
    }
  } else {
    for (std::uint32_t v = 0; v < nv; ++v) qualifies[v] = loads.loads[v] >= c;
    for (const auto& [x, y] : cg.selected_edges)
      if (qualifies[x] && qualifies[y]) uf.unite(x, y);
  }

  std::map<std::uint32_t, ConflictComponent> by_root;
  for (std::uint32_t v = 0; v < nv; ++v)
    if (qualifies[v]) by_root[uf.find(v)].vertices.push_back(v);
  std::vector<ConflictComponent> out;
  out.reserve(by_root.size());
  for (auto& [root, comp] : by_root) {
    std::sort(comp.vertices.begin(), comp.vertices.end());
    if (cg.mode == ConflictGraph::Mode::ball)
      for (auto& v : comp.vertices) v += 1;  // report 1-based ball ids
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.vertices.front() < b.vertices.front();
  });
  return out;
}

// Multigraph edge surplus of one bin-mode component: (#edges inside) -
// (#vertices - 1). Every surplus edge closes a cycle; doubled pairs count.
inline std::uint64_t cycle_producing_edge_count(const ConflictGraph& cg,
                                                const ConflictComponent& component) {
  if (cg.mode != ConflictGraph::Mode::bin)
    throw ContractError("cycle_producing_edge_count: bin-mode component required");
  if (component.vertices.empty())
    throw ContractError("cycle_producing_edge_count: empty component");
  std::vector<bool> inside(cg.vertex_count, false);
  for (auto v : component.vertices) {
    if (v >= cg.vertex_count) throw ContractError("cycle_producing_edge_count: bad vertex");
    inside[v] = true;
  }
  std::uint64_t edges = 0;
  detail::UnionFind uf(cg.vertex_count);
  for (const auto& [x, y] : cg.selected_edges)
    if (inside[x] && inside[y]) {
      ++edges;
      uf.unite(x, y);
    }
  const auto root = uf.find(component.vertices.front());
  for (auto v : component.vertices)
    if (uf.find(v) != root)
      throw ContractError("cycle_producing_edge_count: component not connected");
  return edges - (component.vertices.size() - 1);
}

inline std::string components_csv(const std::vector<ConflictComponent>& components,
                                  const ConflictGraph& cg, const LoadState& loads) {
  std::string out = "component_id,size,cycle_edges,min_load\n";
  char line[128];
  for (std::size_t id = 0; id < components.size(); ++id) {
    const auto& comp = components[id];
    long long cycle_edges = -1;
    if (cg.mode == ConflictGraph::Mode::bin)
      cycle_edges = static_cast<long long>(cycle_producing_edge_count(cg, comp));
    std::uint32_t min_load = std::numeric_limits<std::uint32_t>::max();
    for (auto v : comp.vertices) {
      if (cg.mode == ConflictGraph::Mode::bin) {
        min_load = std::min(min_load, loads.loads[v]);
      } else {
        for (auto b : cg.choices[v - 1]) min_load = std::min(min_load, loads.loads[b]);
      }
    }
    std::snprintf(line, sizeof line, "%zu,%zu,%lld,%u\n", id, comp.vertices.size(), cycle_edges,
                  min_load);
    out += line;
  }
  return out;
}

// ---- witness trees ----

enum class WitnessColor { none, blue, red };

struct WitnessNode {
  std::uint32_t ball = 0;   // ball behind the node; 0 for the graph-mode root
  DChoice choice;           // the ball's d-choice (empty for the graph-mode root)
  BinId bin = 0;            // graph mode: the bin this node stands for
  std::uint32_t height = 0; // ball height (hyper) / entry height (graph)
  WitnessColor color = WitnessColor::none;
  bool repeated = false;    // graph mode: this bin appeared earlier in the tree
  std::vector<std::size_t> children;  // indices into WitnessTree::nodes
};

struct WitnessTree {
  enum class Mode { hyper, graph };
  Mode mode = Mode::hyper;
  std::uint32_t root_ball = 0;  // hyper mode
  BinId root_bin = 0;           // graph mode
  std::uint32_t c = 0;
  std::vector<WitnessNode> nodes;  // preorder, nodes[0] is the root
  std::uint64_t red_count = 0;
  std::uint64_t repetition_count = 0;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

struct HyperWitnessBuilder {
  const TraceIndex& idx;
  std::uint32_t c;
  WitnessTree tree;
  std::vector<bool> in_union;  // bins covered by previously visited d-choices

  HyperWitnessBuilder(const TraceIndex& i, std::uint32_t n, std::uint32_t c_)
      : idx(i), c(c_), in_union(n, false) {}

  // Visits `ball` depth-first: colors it against the union of all d-choices
  // seen so far, then (root or blue only) expands each not-yet-seen bin by
  // the balls sitting at heights c..height-1 in that bin.
  std::size_t visit(std::uint32_t ball, bool is_root) {
    const auto& choice = idx.choices[ball - 1];
    const auto height = idx.heights[ball - 1];

    std::uint32_t overlap = 0;
    for (auto b : choice) overlap += in_union[b] ? 1 : 0;
    WitnessColor color = WitnessColor::none;
    if (!is_root) {
      if (overlap == 0)
        throw ContractError("witness tree: node shares no bin with its predecessors");
      color = overlap == 1 ? WitnessColor::blue : WitnessColor::red;
      if (color == WitnessColor::red) ++tree.red_count;
    }

    std::vector<BinId> fresh;
    for (auto b : choice) {
      if (!in_union[b]) fresh.push_back(b);
      in_union[b] = true;
    }

    const std::size_t self = tree.nodes.size();
    tree.nodes.push_back({ball, choice, 0, height, color, false, {}});

    if (is_root || color == WitnessColor::blue) {
      for (auto b : fresh) {
        if (height > c && idx.balls_at[b].size() < height)
          throw ContractError("witness tree: trace has no ball at a required height");
        for (std::uint32_t h = height; h-- > c;) {
          const std::uint32_t child = idx.balls_at[b][h];
          const auto child_index = visit(child, false);
          tree.nodes[self].children.push_back(child_index);
        }
      }
    }
    return self;
  }
};

}  // namespace detail

// The recursive witness structure behind a heavily loaded d-choice: from the
// root ball, every bin of its choice is explained by the balls stacked at
// heights c..height-1 beneath it, and each explaining ball is expanded the
// same way through its fresh bins as long as it touches the story in exactly
// one bin (blue). Nodes touching it in two or more bins are kept as red
// leaves.
inline WitnessTree witness_tree_hyper(const AllocationTrace& trace, std::uint32_t root_ball,
                                      std::uint32_t c) {
  const auto idx = index_trace(trace);
  if (root_ball < 1 || root_ball > idx.heights.size())
    throw ContractError("witness tree: no such ball");
  if (idx.heights[root_ball - 1] < c)
    throw ContractError("witness tree: root's minimum choice load is below c");
  detail::HyperWitnessBuilder builder(idx, trace.n, c);
  builder.tree.mode = WitnessTree::Mode::hyper;
  builder.tree.root_ball = root_ball;
  builder.tree.c = c;
  builder.visit(root_ball, true);
  return builder.tree;
}

// Graph (2-choice) version: nodes are bins; the bin entered at height h is
// explained by the balls at heights c..h-1 inside it, each contributing its
// alternative endpoint as a child. A bin repeating in the tree is flagged
// and not expanded again.
inline WitnessTree witness_tree_graph(const AllocationTrace& trace, BinId root_bin,
                                      std::uint32_t c) {
  if (trace.d != 2) throw ConfigError("graph witness tree needs a 2-choice trace");
  const auto idx = index_trace(trace);
  if (root_bin >= trace.n) throw ContractError("witness tree: bin out of range");
  const auto root_load = idx.final_loads.loads[root_bin];
  if (root_load < c) throw ContractError("witness tree: root bin load below c");

  WitnessTree tree;
  tree.mode = WitnessTree::Mode::graph;
  tree.root_bin = root_bin;
  tree.c = c;
  std::vector<bool> visited(trace.n, false);

  struct Builder {
    const TraceIndex& idx;
    std::uint32_t c;
    WitnessTree& tree;
    std::vector<bool>& visited;

    std::size_t visit(BinId bin, std::uint32_t entered_height, std::uint32_t ball,
                      const DChoice& choice) {
      const bool repeat = visited[bin];
      visited[bin] = true;
      const std::size_t self = tree.nodes.size();
      tree.nodes.push_back({ball, choice, bin, entered_height, WitnessColor::none, repeat, {}});
      if (repeat) {
        ++tree.repetition_count;
        return self;
      }
      if (entered_height > c && idx.balls_at[bin].size() < entered_height)
        throw ContractError("witness tree: trace has no ball at a required height");
      for (std::uint32_t h = entered_height; h-- > c;) {
        const auto child_ball = idx.balls_at[bin][h];
        const auto& child_choice = idx.choices[child_ball - 1];
        const BinId alt = child_choice[0] == bin ? child_choice[1] : child_choice[0];
        const auto child_index = visit(alt, h, child_ball, child_choice);
        tree.nodes[self].children.push_back(child_index);
      }
      return self;
    }
  } builder{idx, c, tree, visited};

  builder.visit(root_bin, root_load, 0, {});
  return tree;
}

enum class ChildOrdering { as_constructed, ball_ascending };

// Pure recoloring pass over an existing node set: re-walk the tree with the
// requested child ordering and apply the shares-exactly-one-bin rule to each
// non-root node in the new visit order. The node set never changes; only
// colors (and the stored child order) may.
inline WitnessTree blue_red_color(const WitnessTree& tree, ChildOrdering ordering) {
  WitnessTree out = tree;
  if (out.mode != WitnessTree::Mode::hyper || out.nodes.empty()) return out;
  std::uint32_t max_bin = 0;
  for (const auto& node : out.nodes)
    for (auto b : node.choice) max_bin = std::max(max_bin, b);
  std::vector<bool> in_union(max_bin + 1, false);
  out.red_count = 0;

  struct Walker {
    WitnessTree& t;
    std::vector<bool>& in_union;
    ChildOrdering ordering;

    void visit(std::size_t index, bool is_root) {
      auto& node = t.nodes[index];
      std::uint32_t overlap = 0;
      for (auto b : node.choice) overlap += in_union[b] ? 1 : 0;
      if (!is_root) {
        if (overlap == 0)
          throw ContractError("blue_red_color: node shares no bin with its predecessors");
        node.color = overlap == 1 ? WitnessColor::blue : WitnessColor::red;
        if (node.color == WitnessColor::red) ++t.red_count;
      }
      for (auto b : node.choice) in_union[b] = true;
      if (ordering == ChildOrdering::ball_ascending)
        std::sort(node.children.begin(), node.children.end(),
                  [&](std::size_t a, std::size_t b) { return t.nodes[a].ball < t.nodes[b].ball; });
      for (auto child : node.children) visit(child, false);
    }
  } walker{out, in_union, ordering};

  walker.visit(0, true);
  return out;
}

inline nlohmann::json witness_json(const WitnessTree& tree) {
  const auto color_name = [](WitnessColor c) {
    switch (c) {
      case WitnessColor::blue: return "blue";
      case WitnessColor::red: return "red";
      default: return "none";
    }
  };
  std::function<nlohmann::json(std::size_t)> emit = [&](std::size_t index) {
    const auto& node = tree.nodes[index];
    nlohmann::json j{{"ball", node.ball},
                     {"height", node.height},
                     {"color", color_name(node.color)}};
    if (tree.mode == WitnessTree::Mode::graph) {
      j["bin"] = node.bin;
      if (node.repeated) j["repeated"] = true;
    }
    if (!node.choice.empty()) j["choice"] = node.choice;
    nlohmann::json kids = nlohmann::json::array();
    for (auto child : node.children) kids.push_back(emit(child));
    if (!kids.empty()) j["children"] = std::move(kids);
    return j;
  };
  nlohmann::json root{{"mode", tree.mode == WitnessTree::Mode::hyper ? "hyper" : "graph"},
                      {"c", tree.c},
                      {"size", tree.size()},
                      {"red_count", tree.red_count},
                      {"repetition_count", tree.repetition_count}};
  if (tree.mode == WitnessTree::Mode::hyper)
    root["root_ball"] = tree.root_ball;
  else
    root["root_bin"] = tree.root_bin;
  root["tree"] = tree.nodes.empty() ? nlohmann::json() : emit(0);
  return root;
}

// ---- ordered tree counts and collision statistics ----

// Number of ordered trees on k vertices: the (k-1)-th Catalan number.
// Exact in 64 bits up to k = 37; beyond that the count is refused rather
// than silently truncated.
inline std::uint64_t ordered_tree_count(std::uint32_t k) {
  if (k < 1) throw ContractError("ordered_tree_count: need k >= 1");
  unsigned __int128 cat = 1;
  for (std::uint32_t i = 1; i < k; ++i) {
    cat = cat * (2 * (2 * static_cast<unsigned __int128>(i) - 1));
    cat /= i + 1;
    if (cat > std::numeric_limits<std::uint64_t>::max())
      throw ConfigError("ordered_tree_count: result exceeds 64 bits for k = " + std::to_string(k));
  }
  return static_cast<std::uint64_t>(cat);
}

// Number of distinct d-choice sets picked by at least k balls.
inline std::uint64_t y_k_statistic(const AllocationTrace& trace, std::uint32_t k) {
  if (k < 1) throw ContractError("y_k_statistic: need k >= 1");
  std::map<DChoice, std::uint32_t> picks;
  for (const auto& r : trace.records) ++picks[r.choice];
  std::uint64_t count = 0;
  for (const auto& [choice, times] : picks)
    if (times >= k) ++count;
  return count;
}

}  // namespace dynaball
