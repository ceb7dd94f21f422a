#include "wavekin/graphs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace wavekin {

// ---------------------------------------------------------------------------
// Histories, interlacings, partitions
// ---------------------------------------------------------------------------

unsigned long long count_histories(int n, int m0) {
  if (n < 0 || m0 < 1) throw ConfigError("count_histories: need n >= 0, m0 >= 1");
  unsigned long long c = 1;
  for (int j = 0; j < n; ++j) c *= static_cast<unsigned long long>(m0 + 2 * j);
  return c;
}

std::vector<InteractionHistory> enumerate_histories(int n, int m0) {
  if (n < 0 || m0 < 1) throw ConfigError("enumerate_histories: need n >= 0, m0 >= 1");
  if (m0 == 1 && n > 8) throw GuardViolation("enumerate_histories: n > 8 refused for m0 = 1");
  if (count_histories(n, m0) > 40000000ULL)
    throw GuardViolation("enumerate_histories: size guard exceeded");
  std::vector<InteractionHistory> out;
  out.reserve(static_cast<std::size_t>(count_histories(n, m0)));
  InteractionHistory h;
  h.n = n;
  h.m0 = m0;
  h.ell.assign(static_cast<std::size_t>(n), 1);
  // lexicographic over (l_1, ..., l_n), l_i in 1..m0+2(n-i)
  while (true) {
    out.push_back(h);
    int i = n - 1;
    for (; i >= 0; --i) {
      int cap = m0 + 2 * (n - 1 - i);
      if (h.ell[static_cast<std::size_t>(i)] < cap) {
        ++h.ell[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) h.ell[static_cast<std::size_t>(j)] = 1;
        break;
      }
    }
    if (i < 0) break;
    if (n == 0) break;
  }
  if (n == 0) out.resize(1);
  return out;
}

std::vector<Interlacing> enumerate_interlacings(int n, int n_prime) {
  if (n < 0 || n_prime < 0) throw ConfigError("enumerate_interlacings: negative sizes");
  if (n + n_prime > 16) throw GuardViolation("enumerate_interlacings: n + n' > 16");
  std::vector<Interlacing> out;
  int N = n + n_prime;
  // iterate subsets of positions holding +1 with popcount n
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    if (__builtin_popcount(mask) != n) continue;
    Interlacing J;
    J.n_plus = n;
    J.n_minus = n_prime;
    J.J.resize(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) J.J[static_cast<std::size_t>(i)] = (mask >> i & 1u) ? 1 : -1;
    out.push_back(std::move(J));
  }
  if (N == 0) {
    Interlacing J;
    out.assign(1, J);
  }
  return out;
}

namespace {

void partitions_rec(std::vector<int>& remaining, ClusterPartition& cur, PartitionKind kind,
                    std::vector<ClusterPartition>& out) {
  if (remaining.empty()) {
    out.push_back(cur);
    return;
  }
  int first = remaining.front();
  std::vector<int> rest(remaining.begin() + 1, remaining.end());
  std::size_t r = rest.size();
  // choose companions of `first` among rest
  std::size_t max_pick = r;
  for (unsigned long long mask = 0; mask < (1ULL << r); ++mask) {
    std::size_t pick = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (pick > max_pick) continue;
    std::size_t bsize = pick + 1;
    if (kind == PartitionKind::PairingsOnly && bsize != 2) continue;
    if (kind == PartitionKind::EvenBlocksOnly && bsize % 2 != 0) continue;
    std::vector<int> block = {first};
    std::vector<int> next;
    for (std::size_t i = 0; i < r; ++i) {
      if (mask >> i & 1ULL)
        block.push_back(rest[i]);
      else
        next.push_back(rest[i]);
    }
    cur.blocks.push_back(std::move(block));
    partitions_rec(next, cur, kind, out);
    cur.blocks.pop_back();
  }
}

}  // namespace

std::vector<ClusterPartition> enumerate_partitions(int n_elements, PartitionKind kind) {
  if (n_elements < 0) throw ConfigError("enumerate_partitions: negative size");
  int cap = kind == PartitionKind::PairingsOnly ? 16 : 12;
  if (n_elements > cap) throw GuardViolation("enumerate_partitions: size guard exceeded");
  std::vector<ClusterPartition> out;
  std::vector<int> elems(static_cast<std::size_t>(n_elements));
  std::iota(elems.begin(), elems.end(), 0);
  ClusterPartition cur;
  if (n_elements == 0) {
    out.push_back(cur);
    return out;
  }
  partitions_rec(elems, cur, kind, out);
  return out;
}

// ---------------------------------------------------------------------------
// Momentum graph construction
// ---------------------------------------------------------------------------

const char* to_string(GraphClass c) {
  switch (c) {
    case GraphClass::Irrelevant: return "irrelevant";
    case GraphClass::HigherOrder: return "higher-order";
    case GraphClass::PartiallyPaired: return "partially-paired";
    case GraphClass::Leading: return "leading";
    case GraphClass::Nested: return "nested";
    case GraphClass::Crossing: return "crossing";
  }
  return "?";
}

std::int8_t MomentumGraph::sigma_v(int v, int e) const {
  if (role[static_cast<std::size_t>(v)] == VertexRole::Cluster) return 1;
  return attached[static_cast<std::size_t>(v)].front() == e ? 1 : -1;
}

namespace {

struct RowEntry {
  int edge;
  int vertex;
};

int add_vertex(MomentumGraph& g, VertexRole r, int tau) {
  g.role.push_back(r);
  g.tau.push_back(tau);
  g.attached.emplace_back();
  return static_cast<int>(g.role.size()) - 1;
}

int add_edge(MomentumGraph& g, int a, int b, std::int8_t par) {
  int e = static_cast<int>(g.edges.size());
  g.edges.push_back({a, b});
  g.parity.push_back(par);
  g.attached[static_cast<std::size_t>(a)].push_back(e);
  g.attached[static_cast<std::size_t>(b)].push_back(e);
  return e;
}

// Builds the two interaction trees (no cluster vertices yet); bottom rows
// (minus then plus, left to right) returned through `bottom`.
MomentumGraph build_tree_part(const Interlacing& J, const InteractionHistory& ellp,
                              const InteractionHistory& ellm, std::vector<RowEntry>& bottom) {
  int n = ellp.n, np = ellm.n, N = n + np;
  if (ellp.m0 != 1 || ellm.m0 != 1)
    throw ConfigError("build_momentum_graph: trees require m0 = 1 histories");
  if (static_cast<int>(J.J.size()) != N || J.n_plus != n || J.n_minus != np)
    throw ConfigError("build_momentum_graph: interlacing inconsistent with histories");
  MomentumGraph g;
  g.n_plus = n;
  g.n_minus = np;
  g.root_vertex = add_vertex(g, VertexRole::Root, N + 2);
  g.top_vertex = add_vertex(g, VertexRole::Fusion, N + 1);
  add_edge(g, g.root_vertex, g.top_vertex, 0);  // e0
  g.fusion_by_level.assign(static_cast<std::size_t>(N + 1), -1);
  g.fusion_by_level[static_cast<std::size_t>(N)] = g.top_vertex;
  g.middle_sign.assign(static_cast<std::size_t>(N), 0);

  std::vector<RowEntry> minus_row, plus_row;
  {
    int u = add_vertex(g, VertexRole::Initial, 0);
    minus_row.push_back({add_edge(g, g.top_vertex, u, -1), u});
    int w = add_vertex(g, VertexRole::Initial, 0);
    plus_row.push_back({add_edge(g, g.top_vertex, w, +1), w});
  }

  int remaining_p = n, remaining_m = np;
  for (int i = N; i >= 1; --i) {
    int sigma = J.J[static_cast<std::size_t>(i - 1)];
    auto& row = sigma > 0 ? plus_row : minus_row;
    const auto& hist = sigma > 0 ? ellp : ellm;
    int j = sigma > 0 ? remaining_p-- : remaining_m--;
    if (j < 1) throw ConfigError("build_momentum_graph: interlacing runs out of fusions");
    int li = hist.ell[static_cast<std::size_t>(j - 1)];
    if (li < 1 || li > static_cast<int>(row.size()))
      throw ConfigError("build_momentum_graph: history index out of range");
    RowEntry sel = row[static_cast<std::size_t>(li - 1)];
    int v = sel.vertex;
    g.role[static_cast<std::size_t>(v)] = VertexRole::Fusion;
    g.tau[static_cast<std::size_t>(v)] = i;
    g.fusion_by_level[static_cast<std::size_t>(i - 1)] = v;
    std::int8_t sp = g.parity[static_cast<std::size_t>(sel.edge)];
    g.middle_sign[static_cast<std::size_t>(i - 1)] = sp;
    std::array<std::int8_t, 3> pars = {-1, sp, +1};
    std::array<RowEntry, 3> kids{};
    for (int c = 0; c < 3; ++c) {
      int u = add_vertex(g, VertexRole::Initial, 0);
      kids[static_cast<std::size_t>(c)] = {add_edge(g, v, u, pars[static_cast<std::size_t>(c)]), u};
    }
    row.erase(row.begin() + (li - 1));
    row.insert(row.begin() + (li - 1), kids.begin(), kids.end());
  }
  if (remaining_p != 0 || remaining_m != 0)
    throw ConfigError("build_momentum_graph: leftover fusions after interlacing walk");

  bottom.clear();
  bottom.insert(bottom.end(), minus_row.begin(), minus_row.end());
  bottom.insert(bottom.end(), plus_row.begin(), plus_row.end());
  for (const auto& b : bottom) {
    g.bottom_vertices.push_back(b.vertex);
    g.bottom_edge.push_back(b.edge);
  }
  return g;
}

void attach_clusters(MomentumGraph& g, const ClusterPartition& S) {
  int nbot = static_cast<int>(g.bottom_vertices.size());
  std::vector<int> block_of(static_cast<std::size_t>(nbot), -1);
  for (std::size_t b = 0; b < S.blocks.size(); ++b) {
    if (S.blocks[b].empty()) throw ConfigError("cluster partition: empty block");
    for (int el : S.blocks[b]) {
      if (el < 0 || el >= nbot || block_of[static_cast<std::size_t>(el)] != -1)
        throw ConfigError("cluster partition: not a partition of the bottom index set");
      block_of[static_cast<std::size_t>(el)] = static_cast<int>(b);
    }
  }
  for (int el = 0; el < nbot; ++el)
    if (block_of[static_cast<std::size_t>(el)] == -1)
      throw ConfigError("cluster partition: element not covered");
  std::vector<int> cluster_vertex(S.blocks.size());
  for (std::size_t b = 0; b < S.blocks.size(); ++b)
    cluster_vertex[b] = add_vertex(g, VertexRole::Cluster, 0);
  // add cluster edges going through initial-time vertices left to right
  for (int pos = 0; pos < nbot; ++pos) {
    int b = block_of[static_cast<std::size_t>(pos)];
    add_edge(g, g.bottom_vertices[static_cast<std::size_t>(pos)],
             cluster_vertex[static_cast<std::size_t>(b)], 0);
  }
  g.S = S;
}

struct UnionFind {
  std::vector<int> up;
  void reset(std::size_t n) {
    up.resize(n);
    std::iota(up.begin(), up.end(), 0);
  }
  int find(int a) {
    while (up[static_cast<std::size_t>(a)] != a) {
      up[static_cast<std::size_t>(a)] = up[static_cast<std::size_t>(up[static_cast<std::size_t>(a)])];
      a = up[static_cast<std::size_t>(a)];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    up[static_cast<std::size_t>(a)] = b;
    return true;
  }
};

}  // namespace

MomentumGraph build_momentum_graph(const ClusterPartition& S, const Interlacing& J,
                                   const InteractionHistory& ell_plus,
                                   const InteractionHistory& ell_minus) {
  std::vector<RowEntry> bottom;
  MomentumGraph g = build_tree_part(J, ell_plus, ell_minus, bottom);
  attach_clusters(g, S);
  return g;
}

MomentumGraph build_main_graph(const ClusterPartition& S, const InteractionHistory& ell) {
  Interlacing J;
  J.n_plus = ell.n;
  J.n_minus = 0;
  J.J.assign(static_cast<std::size_t>(ell.n), 1);
  InteractionHistory none;
  none.n = 0;
  none.m0 = 1;
  return build_momentum_graph(S, J, ell, none);
}

void build_spanning_tree(MomentumGraph& g) {
  std::size_t E = g.edges.size(), V = g.role.size();
  g.in_tree.assign(E, 0);
  UnionFind uf;
  uf.reset(V);
  for (int e = static_cast<int>(E) - 1; e >= 0; --e) {
    if (uf.unite(g.edges[static_cast<std::size_t>(e)][0], g.edges[static_cast<std::size_t>(e)][1]))
      g.in_tree[static_cast<std::size_t>(e)] = 1;
  }
  g.free_edges.clear();
  g.free_slot.assign(E, -1);
  for (std::size_t e = 0; e < E; ++e) {
    if (!g.in_tree[e]) {
      g.free_slot[e] = static_cast<int>(g.free_edges.size());
      g.free_edges.push_back(static_cast<int>(e));
    }
  }
  // orient the tree toward the root
  g.parent_vertex.assign(V, -1);
  g.parent_edge.assign(V, -1);
  std::vector<int> stack = {g.root_vertex};
  std::vector<char> seen(V, 0);
  seen[static_cast<std::size_t>(g.root_vertex)] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int e : g.attached[static_cast<std::size_t>(v)]) {
      if (!g.in_tree[static_cast<std::size_t>(e)]) continue;
      int w = g.edges[static_cast<std::size_t>(e)][0] == v ? g.edges[static_cast<std::size_t>(e)][1]
                                                           : g.edges[static_cast<std::size_t>(e)][0];
      if (seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = 1;
      g.parent_vertex[static_cast<std::size_t>(w)] = v;
      g.parent_edge[static_cast<std::size_t>(w)] = e;
      stack.push_back(w);
    }
  }
}

void resolve_momenta(MomentumGraph& g) {
  if (g.in_tree.empty()) build_spanning_tree(g);
  std::size_t E = g.edges.size(), V = g.role.size();
  std::size_t F = g.free_edges.size();
  if (V > 64) throw GuardViolation("resolve_momenta: vertex count exceeds subtree mask width");
  // descendant masks in the rooted tree
  std::vector<std::uint64_t> desc(V, 0);
  std::vector<int> order;  // root-first BFS order
  order.reserve(V);
  {
    std::vector<int> stack = {g.root_vertex};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (std::size_t w = 0; w < V; ++w)
        if (g.parent_vertex[w] == v) stack.push_back(static_cast<int>(w));
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int v = *it;
    desc[static_cast<std::size_t>(v)] |= 1ULL << v;
    for (std::size_t w = 0; w < V; ++w)
      if (g.parent_vertex[w] == v) desc[static_cast<std::size_t>(v)] |= desc[w];
  }

  g.expansion.assign(E, {});
  for (std::size_t e = 0; e < E; ++e) g.expansion[e].assign(F, 0);
  for (std::size_t f = 0; f < F; ++f)
    g.expansion[static_cast<std::size_t>(g.free_edges[f])][f] = 1;

  for (std::size_t e = 0; e < E; ++e) {
    if (!g.in_tree[e]) continue;
    // oriented (child -> parent): identify the child endpoint
    int a = g.edges[e][0], b = g.edges[e][1];
    int child = (g.parent_edge[static_cast<std::size_t>(a)] == static_cast<int>(e)) ? a : b;
    std::uint64_t P = desc[static_cast<std::size_t>(child)];
    std::int8_t sv = g.sigma_v(child, static_cast<int>(e));
    for (std::size_t f = 0; f < F; ++f) {
      int fe = g.free_edges[f];
      int fa = g.edges[static_cast<std::size_t>(fe)][0], fb = g.edges[static_cast<std::size_t>(fe)][1];
      bool ina = (P >> fa) & 1ULL, inb = (P >> fb) & 1ULL;
      if (ina == inb) continue;
      int inside = ina ? fa : fb;
      g.expansion[e][f] = static_cast<std::int8_t>(-sv * g.sigma_v(inside, fe));
    }
  }

  // Kirchhoff residual must vanish at every non-root vertex
  for (std::size_t v = 0; v < V; ++v) {
    if (static_cast<int>(v) == g.root_vertex) continue;
    std::vector<int> resid(F, 0);
    for (int e : g.attached[v])
      for (std::size_t f = 0; f < F; ++f)
        resid[f] += g.sigma_v(static_cast<int>(v), e) * g.expansion[static_cast<std::size_t>(e)][f];
    for (std::size_t f = 0; f < F; ++f)
      if (resid[f] != 0) throw std::logic_error("resolve_momenta: Kirchhoff residual nonzero");
  }

  // free-edge coefficients are guaranteed +-1 and free edges end at a fusion vertex
  for (int fe : g.free_edges) {
    int a = g.edges[static_cast<std::size_t>(fe)][0], b = g.edges[static_cast<std::size_t>(fe)][1];
    int hi = g.tau[static_cast<std::size_t>(a)] >= g.tau[static_cast<std::size_t>(b)] ? a : b;
    if (g.role[static_cast<std::size_t>(hi)] != VertexRole::Fusion)
      throw std::logic_error("resolve_momenta: free edge does not end at a fusion vertex");
  }

  // degrees: free edges in E_-(v)
  g.degree.assign(V, 0);
  for (std::size_t v = 0; v < V; ++v) {
    if (g.role[v] != VertexRole::Fusion) continue;
    const auto& at = g.attached[v];
    for (std::size_t idx = 1; idx < at.size(); ++idx)
      if (!g.in_tree[static_cast<std::size_t>(at[idx])]) ++g.degree[v];
  }
}

int free_count_bottom_up(const MomentumGraph& g) {
  UnionFind uf;
  uf.reset(g.role.size());
  int free_count = 0;
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    if (!uf.unite(g.edges[e][0], g.edges[e][1])) ++free_count;
  return free_count;
}

ClusterSchemeResult iterative_cluster_scheme(const MomentumGraph& g) {
  ClusterSchemeResult res;
  UnionFind uf;
  std::size_t Et = g.edges.size();
  uf.reset(Et);
  int blocks = 0;
  // initial clustering: bottom tree edges grouped by S
  for (const auto& blk : g.S.blocks) {
    ++blocks;
    for (std::size_t i = 1; i < blk.size(); ++i)
      uf.unite(g.bottom_edge[static_cast<std::size_t>(blk[0])],
               g.bottom_edge[static_cast<std::size_t>(blk[i])]);
  }
  int N = g.N();
  for (int lvl = 1; lvl <= N + 1; ++lvl) {
    int v = g.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
    const auto& at = g.attached[static_cast<std::size_t>(v)];
    std::vector<int> roots;
    for (std::size_t idx = 1; idx < at.size(); ++idx) roots.push_back(uf.find(at[idx]));
    std::sort(roots.begin(), roots.end());
    int distinct = static_cast<int>(std::unique(roots.begin(), roots.end()) - roots.begin());
    int deg = static_cast<int>(at.size() - 1) - distinct;
    res.degrees.push_back(deg);
    blocks -= distinct - 1;
    for (std::size_t idx = 1; idx < at.size(); ++idx) uf.unite(at[0], at[idx]);
    res.cluster_sizes.push_back(blocks);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

namespace {

using PhaseKey = std::vector<std::int8_t>;

PhaseKey canonical(const std::vector<std::int8_t>& coeffs, int* sign_out = nullptr) {
  PhaseKey k(coeffs);
  int sgn = 1;
  for (auto c : k) {
    if (c != 0) {
      if (c < 0) {
        sgn = -1;
        for (auto& x : k) x = static_cast<std::int8_t>(-x);
      }
      break;
    }
  }
  if (sign_out) *sign_out = sgn;
  return k;
}

bool edge_crosses_slice(const MomentumGraph& g, std::size_t e, int m) {
  int a = g.tau[static_cast<std::size_t>(g.edges[e][0])];
  int b = g.tau[static_cast<std::size_t>(g.edges[e][1])];
  int lo = std::min(a, b), hi = std::max(a, b);
  return lo <= m && m < hi;
}

// net (sign -> key) accumulation
using PhaseMap = std::map<PhaseKey, int>;

PhaseMap slice_phase_map(const MomentumGraph& g, int m) {
  PhaseMap acc;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (g.parity[e] == 0) continue;  // e0 and cluster edges carry no line phase
    if (!edge_crosses_slice(g, e, m)) continue;
    acc[canonical(g.expansion[e])] += g.parity[e];
  }
  for (auto it = acc.begin(); it != acc.end();) {
    if (it->second == 0)
      it = acc.erase(it);
    else
      ++it;
  }
  return acc;
}

// Omega_i as a phase map: children with their parities, parent negated.
PhaseMap omega_map(const MomentumGraph& g, int level) {
  PhaseMap acc;
  int v = g.fusion_by_level[static_cast<std::size_t>(level - 1)];
  const auto& at = g.attached[static_cast<std::size_t>(v)];
  acc[canonical(g.expansion[static_cast<std::size_t>(at[0])])] -=
      g.parity[static_cast<std::size_t>(at[0])];
  for (std::size_t i = 1; i < at.size(); ++i)
    acc[canonical(g.expansion[static_cast<std::size_t>(at[i])])] +=
        g.parity[static_cast<std::size_t>(at[i])];
  for (auto it = acc.begin(); it != acc.end();) {
    if (it->second == 0)
      it = acc.erase(it);
    else
      ++it;
  }
  return acc;
}

bool depends_on(const PhaseMap& phase, int slot_a, int slot_b) {
  for (const auto& [key, net] : phase) {
    if (net == 0) continue;
    if (key[static_cast<std::size_t>(slot_a)] != 0 || key[static_cast<std::size_t>(slot_b)] != 0)
      return true;
  }
  return false;
}

PhaseMap subtract(const PhaseMap& a, const PhaseMap& b) {
  PhaseMap out = a;
  for (const auto& [key, net] : b) out[key] -= net;
  for (auto it = out.begin(); it != out.end();) {
    if (it->second == 0)
      it = out.erase(it);
    else
      ++it;
  }
  return out;
}

}  // namespace

std::vector<std::pair<int, std::vector<std::int8_t>>> slice_phase(const MomentumGraph& g, int m) {
  if (!g.resolved()) throw ConfigError("slice_phase: resolve_momenta first");
  std::vector<std::pair<int, std::vector<std::int8_t>>> out;
  for (const auto& [key, net] : slice_phase_map(g, m)) out.emplace_back(net, key);
  return out;
}

ClassifyResult classify(const MomentumGraph& g) {
  if (!g.resolved()) throw ConfigError("classify: resolve_momenta first");
  ClassifyResult res;
  int N = g.N();
  std::size_t F = g.free_edges.size();

  // relevance: every cluster block gauge-balanced, and no interaction vertex
  // fuses a pair of momenta summing identically to zero (Phi1 kills those).
  bool relevant = true;
  for (const auto& blk : g.S.blocks) {
    int s = 0;
    for (int pos : blk) s += g.parity[static_cast<std::size_t>(g.bottom_edge[static_cast<std::size_t>(pos)])];
    if (s != 0) relevant = false;
  }
  if (relevant) {
    for (int lvl = 1; lvl <= N && relevant; ++lvl) {
      int v = g.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
      const auto& at = g.attached[static_cast<std::size_t>(v)];
      for (std::size_t i = 1; i < at.size() && relevant; ++i) {
        for (std::size_t j = i + 1; j < at.size() && relevant; ++j) {
          bool zero = true;
          for (std::size_t f = 0; f < F; ++f) {
            if (g.expansion[static_cast<std::size_t>(at[i])][f] +
                    g.expansion[static_cast<std::size_t>(at[j])][f] !=
                0) {
              zero = false;
              break;
            }
          }
          if (zero) relevant = false;
        }
      }
    }
  }
  res.relevant = relevant;
  res.pairing = g.S.is_pairing();
  if (!relevant) {
    res.cls = GraphClass::Irrelevant;
    return res;
  }
  if (!res.pairing) {
    res.cls = GraphClass::HigherOrder;
    return res;
  }
  bool deg1 = false;
  for (int lvl = 1; lvl <= N; ++lvl)
    if (g.degree[static_cast<std::size_t>(g.fusion_by_level[static_cast<std::size_t>(lvl - 1)])] == 1)
      deg1 = true;
  res.fully_paired = !deg1;
  if (deg1) {
    res.cls = GraphClass::PartiallyPaired;
    return res;
  }

  // slice phases; long slice m: ends in a degree-0 interaction vertex, or m = N
  std::vector<PhaseMap> gamma(static_cast<std::size_t>(N + 1));
  std::vector<bool> is_long(static_cast<std::size_t>(N + 1), false);
  for (int m = 0; m <= N; ++m) {
    gamma[static_cast<std::size_t>(m)] = slice_phase_map(g, m);
    is_long[static_cast<std::size_t>(m)] =
        (m == N) ||
        g.degree[static_cast<std::size_t>(g.fusion_by_level[static_cast<std::size_t>(m)])] == 0;
  }
  res.last_trivial_long_slice = -1;
  for (int m = 0; m <= N; ++m) {
    if (!is_long[static_cast<std::size_t>(m)]) continue;
    if (!gamma[static_cast<std::size_t>(m)].empty()) break;
    res.last_trivial_long_slice = m;
  }

  // X vertices (diagnostics) and the nested/crossing decision, bottom-up
  GraphClass decided = GraphClass::Leading;
  for (int lvl = 1; lvl <= N && decided == GraphClass::Leading; ++lvl) {
    int v = g.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
    if (g.degree[static_cast<std::size_t>(v)] != 2) continue;
    // the two free edges of the double-loop
    int f1 = -1, f2 = -1;
    const auto& at = g.attached[static_cast<std::size_t>(v)];
    for (std::size_t i = 1; i < at.size(); ++i) {
      if (g.in_tree[static_cast<std::size_t>(at[i])]) continue;
      (f1 < 0 ? f1 : f2) = at[i];
    }
    int s1 = g.free_slot[static_cast<std::size_t>(f1)], s2 = g.free_slot[static_cast<std::size_t>(f2)];

    // X vertex: first common vertex of the two tree paths w_i -> v
    auto path_to_v = [&](int start) {
      std::vector<int> path_up;
      int w = start;
      while (w != -1) {
        path_up.push_back(w);
        if (w == v) break;
        w = g.parent_vertex[static_cast<std::size_t>(w)];
      }
      if (path_up.back() != v) {
        // v not an ancestor: go v-side up to the meeting point
        std::vector<char> inup(g.role.size(), 0);
        for (int x : path_up) inup[static_cast<std::size_t>(x)] = 1;
        int u = v;
        std::vector<int> vpath;
        while (!inup[static_cast<std::size_t>(u)]) {
          vpath.push_back(u);
          u = g.parent_vertex[static_cast<std::size_t>(u)];
        }
        // truncate path_up at u, then append v-side path reversed
        std::vector<int> full;
        for (int x : path_up) {
          full.push_back(x);
          if (x == u) break;
        }
        for (auto it = vpath.rbegin(); it != vpath.rend(); ++it) full.push_back(*it);
        return full;
      }
      return path_up;
    };
    int w1 = g.edges[static_cast<std::size_t>(f1)][0] == v ? g.edges[static_cast<std::size_t>(f1)][1]
                                                           : g.edges[static_cast<std::size_t>(f1)][0];
    int w2 = g.edges[static_cast<std::size_t>(f2)][0] == v ? g.edges[static_cast<std::size_t>(f2)][1]
                                                           : g.edges[static_cast<std::size_t>(f2)][0];
    auto p1 = path_to_v(w1);
    auto p2 = path_to_v(w2);
    int xv = -1;
    for (int a : p1) {
      if (std::find(p2.begin(), p2.end(), a) != p2.end()) {
        xv = a;
        break;
      }
    }
    res.x_vertices.push_back({v, xv});

    PhaseMap om = omega_map(g, lvl);
    bool any_dep = false, all_nested = true;
    int worst = -1;
    for (int m = 0; m <= N; ++m) {
      if (!is_long[static_cast<std::size_t>(m)]) continue;
      if (!depends_on(gamma[static_cast<std::size_t>(m)], s1, s2)) continue;
      any_dep = true;
      if (depends_on(subtract(gamma[static_cast<std::size_t>(m)], om), s1, s2)) {
        all_nested = false;
        worst = std::max(worst, m);
      }
    }
    if (any_dep) {
      if (all_nested) {
        decided = GraphClass::Nested;
      } else {
        decided = GraphClass::Crossing;
        res.last_crossing_slice = worst;
      }
    }
  }
  res.cls = decided;
  return res;
}

// ---------------------------------------------------------------------------
// Exhaustive leading-graph count
// ---------------------------------------------------------------------------

namespace {

unsigned long long double_factorial(int n) {  // (n)!! with (-1)!! = 1
  unsigned long long r = 1;
  for (int k = n; k > 1; k -= 2) r *= static_cast<unsigned long long>(k);
  return r;
}

}  // namespace

LeadingCount count_leading(int N, bool main_term_only) {
  if (N < 0) throw ConfigError("count_leading: negative N");
  if (N > 6) throw GuardViolation("count_leading: exhaustive classification guarded at N <= 6");
  LeadingCount out;
  out.bound = 1;
  for (int i = 0; i < N; ++i) out.bound *= 4ULL;
  out.bound *= double_factorial(N - 1);
  if (N % 2 == 1) return out;
  if (N == 0) {
    out.leading = out.fully_paired = 1;
    return out;
  }

  struct Task {
    int n, np;
    Interlacing J;
  };
  std::vector<Task> tasks;
  for (int n = main_term_only ? N : 0; n <= N; ++n) {
    int np = N - n;
    if (main_term_only && np != 0) continue;
    for (auto& J : enumerate_interlacings(n, np)) tasks.push_back({n, np, J});
  }

  std::vector<LeadingCount> partial(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ti = lo; ti < hi; ++ti) {
      const Task& task = tasks[ti];
      LeadingCount acc;
      auto hp = enumerate_histories(task.n, 1);
      auto hm = enumerate_histories(task.np, 1);
      for (const auto& ep : hp) {
        for (const auto& em : hm) {
          std::vector<RowEntry> bottom;
          MomentumGraph skel = build_tree_part(task.J, ep, em, bottom);
          int nbot = static_cast<int>(skel.bottom_vertices.size());
          std::vector<int> minus_pos, plus_pos;
          for (int p = 0; p < nbot; ++p) {
            if (skel.parity[static_cast<std::size_t>(skel.bottom_edge[static_cast<std::size_t>(p)])] < 0)
              minus_pos.push_back(p);
            else
              plus_pos.push_back(p);
          }
          if (minus_pos.size() != plus_pos.size()) continue;  // no gauge-valid pairing
          std::size_t half = minus_pos.size();
          std::vector<int> perm(half);
          std::iota(perm.begin(), perm.end(), 0);
          // scratch union-find over tree edges
          UnionFind uf;
          std::size_t Et = skel.edges.size();
          do {
            uf.reset(Et);
            for (std::size_t i = 0; i < half; ++i)
              uf.unite(skel.bottom_edge[static_cast<std::size_t>(minus_pos[i])],
                       skel.bottom_edge[static_cast<std::size_t>(plus_pos[static_cast<std::size_t>(perm[i])])]);
            bool fully = true;
            for (int lvl = 1; lvl <= N && fully; ++lvl) {
              int v = skel.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
              const auto& at = skel.attached[static_cast<std::size_t>(v)];
              int r1 = uf.find(at[1]);
              int r2 = uf.find(at[2]);
              int deg;
              if (at.size() == 4) {
                int r3 = uf.find(at[3]);
                int distinct = 1 + (r2 != r1 ? 1 : 0) + ((r3 != r1 && r3 != r2) ? 1 : 0);
                deg = 3 - distinct;
              } else {
                deg = r1 == r2 ? 1 : 0;
              }
              if (at.size() == 4 && deg == 1) fully = false;
              uf.unite(at[0], at[1]);
              for (std::size_t idx = 2; idx < at.size(); ++idx) uf.unite(at[0], at[idx]);
            }
            if (!fully) continue;
            // survivor: full build + classify
            ClusterPartition S;
            for (std::size_t i = 0; i < half; ++i)
              S.blocks.push_back({minus_pos[i], plus_pos[static_cast<std::size_t>(perm[i])]});
            std::sort(S.blocks.begin(), S.blocks.end());
            MomentumGraph full_g = skel;
            attach_clusters(full_g, S);
            build_spanning_tree(full_g);
            resolve_momenta(full_g);
            auto cls = classify(full_g);
            if (cls.fully_paired) ++acc.fully_paired;
            if (cls.cls == GraphClass::Leading) ++acc.leading;
          } while (std::next_permutation(perm.begin(), perm.end()));
        }
      }
      partial[ti] = acc;
    }
  });
  for (const auto& p : partial) {
    out.leading += p.leading;
    out.fully_paired += p.fully_paired;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simplex and resolvent identities
// ---------------------------------------------------------------------------

namespace {

// exp of a small complex matrix by scaling and squaring with Taylor series
std::vector<cplx> small_expm(std::vector<cplx> A, std::size_t n) {
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(A[i * n + j]);
    norm = std::max(norm, row);
  }
  int s = 0;
  while (norm > 0.5) {
    norm *= 0.5;
    ++s;
  }
  double scale = std::ldexp(1.0, -s);
  for (auto& v : A) v *= scale;

  std::vector<cplx> E(n * n, cplx{0, 0}), term(n * n, cplx{0, 0}), tmp(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    E[i * n + i] = 1.0;
    term[i * n + i] = 1.0;
  }
  for (int k = 1; k <= 24; ++k) {
    // term <- term * A / k
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc{0, 0};
        for (std::size_t l = 0; l < n; ++l) acc += term[i * n + l] * A[l * n + j];
        tmp[i * n + j] = acc / static_cast<double>(k);
      }
    term.swap(tmp);
    for (std::size_t i = 0; i < n * n; ++i) E[i] += term[i];
  }
  for (int q = 0; q < s; ++q) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        cplx acc{0, 0};
        for (std::size_t l = 0; l < n; ++l) acc += E[i * n + l] * E[l * n + j];
        tmp[i * n + j] = acc;
      }
    E.swap(tmp);
  }
  return E;
}

}  // namespace

cplx simplex_integral(double t, std::span<const cplx> gammas) {
  std::size_t n = gammas.size();
  if (n == 0) throw ConfigError("simplex_integral: empty node list");
  if (n == 1) return std::exp(cplx{0.0, -1.0} * gammas[0] * t);
  if (n > 18) throw GuardViolation("simplex_integral: too many nodes");
  // divided difference of e^{-izt} over the nodes, via the bidiagonal matrix
  std::vector<cplx> A(n * n, cplx{0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    A[i * n + i] = cplx{0.0, -t} * gammas[i];
    if (i + 1 < n) A[i * n + i + 1] = cplx{0.0, -t};
  }
  auto E = small_expm(std::move(A), n);
  // exp(-itJ) applies f(z) = e^{-izt} to the bidiagonal node matrix, so the
  // (0, n-1) entry is the divided difference f[g_0, ..., g_{n-1}] itself.
  cplx dd = E[0 * n + (n - 1)];
  cplx out = dd;
  for (std::size_t k = 0; k + 1 < n; ++k) out *= cplx{0.0, 1.0};
  return out;
}

double verify_interlacing_identity(int n, int n_prime, std::span<const cplx> gamma_plus,
                                   std::span<const cplx> gamma_minus, double t) {
  if (static_cast<int>(gamma_plus.size()) != n + 1 ||
      static_cast<int>(gamma_minus.size()) != n_prime + 1)
    throw ConfigError("verify_interlacing_identity: gamma lists must have n+1 / n'+1 entries");
  if (n + n_prime > 6) throw GuardViolation("verify_interlacing_identity: n + n' > 6");
  for (auto g : gamma_plus)
    if (g.imag() > 1e-12) throw ConfigError("verify_interlacing_identity: Im gamma must be <= 0");
  for (auto g : gamma_minus)
    if (g.imag() > 1e-12) throw ConfigError("verify_interlacing_identity: Im gamma must be <= 0");

  cplx lhs = simplex_integral(t, gamma_plus) * simplex_integral(t, gamma_minus);
  cplx rhs{0, 0};
  for (const auto& J : enumerate_interlacings(n, n_prime)) {
    std::vector<cplx> comb(static_cast<std::size_t>(n + n_prime + 1));
    for (int i = 0; i <= n + n_prime; ++i)
      comb[static_cast<std::size_t>(i)] =
          gamma_plus[static_cast<std::size_t>(J.prefix(i, +1))] +
          gamma_minus[static_cast<std::size_t>(J.prefix(i, -1))];
    rhs += simplex_integral(t, comb);
  }
  return std::abs(lhs - rhs);
}

double verify_resolvent_identity(std::span<const cplx> gammas, const std::vector<int>& A, double t,
                                 int nodes, double margin) {
  std::size_t n = gammas.size();
  if (n == 0 || n > 8) throw GuardViolation("verify_resolvent_identity: |I| outside 1..8");
  if (A.empty()) throw ConfigError("verify_resolvent_identity: A must be non-empty");
  if (margin < 1e-3) throw GuardViolation("verify_resolvent_identity: contour too close to poles");
  std::vector<char> inA(n, 0);
  for (int a : A) {
    if (a < 0 || a >= static_cast<int>(n) || inA[static_cast<std::size_t>(a)])
      throw ConfigError("verify_resolvent_identity: bad subset A");
    inA[static_cast<std::size_t>(a)] = 1;
  }

  cplx lhs = simplex_integral(t, gammas);

  double re_min = 1e300, re_max = -1e300, im_min = 1e300, im_max = -1e300;
  for (auto g : gammas) {
    re_min = std::min(re_min, g.real());
    re_max = std::max(re_max, g.real());
    im_min = std::min(im_min, g.imag());
    im_max = std::max(im_max, g.imag());
  }
  cplx c1{re_min - margin, im_min - margin}, c2{re_max + margin, im_min - margin};
  cplx c3{re_max + margin, im_max + margin}, c4{re_min - margin, im_max + margin};
  std::array<std::pair<cplx, cplx>, 4> sides = {{{c1, c2}, {c2, c3}, {c3, c4}, {c4, c1}}};
  double perim = 0.0;
  for (auto& s : sides) perim += std::abs(s.second - s.first);

  // A' = A^c + {*}; gamma_* = z
  std::vector<cplx> ac;
  for (std::size_t i = 0; i < n; ++i)
    if (!inA[i]) ac.push_back(gammas[i]);
  ac.push_back(cplx{0, 0});  // slot for z

  auto integrand = [&](cplx z) {
    ac.back() = z;
    cplx val = simplex_integral(t, ac);
    for (std::size_t i = 0; i < n; ++i)
      if (inA[i]) val *= cplx{0.0, 1.0} / (z - gammas[i]);
    return val;
  };
  // composite Simpson along each straight side
  cplx integral{0, 0};
  for (auto& s : sides) {
    double len = std::abs(s.second - s.first);
    int m = std::max(16, static_cast<int>(std::ceil(nodes * len / perim)));
    if (m % 2 == 1) ++m;
    cplx dz = (s.second - s.first) / static_cast<double>(m);
    for (int j = 0; j <= m; ++j) {
      double w = (j == 0 || j == m) ? 1.0 / 3.0 : (j % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
      integral += w * integrand(s.first + static_cast<double>(j) * dz) * dz;
    }
  }
  cplx rhs = -integral / kTwoPi;
  return std::abs(lhs - rhs);
}

double omega_vertex(const DispersionRelation& disp, const std::vector<double>& k1,
                    const std::vector<double>& k2, const std::vector<double>& k3, int sigma) {
  std::vector<double> sum(k1.size());
  for (std::size_t i = 0; i < k1.size(); ++i) sum[i] = k1[i] + k2[i] + k3[i];
  return disp.omega(k3) - disp.omega(k1) + sigma * (disp.omega(k2) - disp.omega(sum));
}

// ---------------------------------------------------------------------------
// Dump
// ---------------------------------------------------------------------------

std::string dump_graph(const MomentumGraph& g, const ClassifyResult* cls) {
  std::ostringstream os;
  os << "graph n_plus=" << g.n_plus << " n_minus=" << g.n_minus << "\n";
  const char* roles[] = {"root", "fusion", "initial", "cluster"};
  for (std::size_t v = 0; v < g.role.size(); ++v)
    os << "vertex " << v << " role=" << roles[static_cast<int>(g.role[v])] << " tau=" << g.tau[v]
       << "\n";
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    os << "edge " << e << " {" << g.edges[e][0] << "," << g.edges[e][1]
       << "} parity=" << static_cast<int>(g.parity[e]);
    if (!g.in_tree.empty()) os << (g.in_tree[e] ? " integrated" : " free");
    if (g.resolved()) {
      os << " k=";
      bool any = false;
      for (std::size_t f = 0; f < g.expansion[e].size(); ++f) {
        int c = g.expansion[e][f];
        if (c == 0) continue;
        os << (c > 0 ? "+" : "-") << "f" << f;
        any = true;
      }
      if (!any) os << "0";
    }
    os << "\n";
  }
  os << "free";
  for (int f : g.free_edges) os << " " << f;
  os << "\n";
  os << "clusters";
  for (const auto& b : g.S.blocks) {
    os << " {";
    for (std::size_t i = 0; i < b.size(); ++i) os << (i ? "," : "") << b[i];
    os << "}";
  }
  os << "\n";
  if (cls) {
    os << "class " << to_string(cls->cls) << " m0'=" << cls->last_trivial_long_slice;
    if (cls->cls == GraphClass::Crossing) os << " last_crossing_slice=" << cls->last_crossing_slice;
    for (const auto& xv : cls->x_vertices) os << " X(" << xv[0] << ")=" << xv[1];
    os << "\n";
  }
  return os.str();
}

}  // namespace wavekin
