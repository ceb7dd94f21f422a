#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wavekin/common.hpp"
#include "wavekin/dispersion.hpp"
#include "wavekin/kinetics.hpp"

namespace wavekin {

// ---------------------------------------------------------------------------
// Interaction histories, interlacings, partitions
// ---------------------------------------------------------------------------

// History ell = (l_1, ..., l_n), l_i in {1, ..., m0 + 2(n-i)}: the index of the
// new line formed by fusion i, counting lines of the slice above left to right.
// |G_n| = (2n-1)!! when m0 = 1.
struct InteractionHistory {
  int n = 0;
  int m0 = 1;
  std::vector<int> ell;  // ell[i-1] = l_i, 1-based values
};

unsigned long long count_histories(int n, int m0);
std::vector<InteractionHistory> enumerate_histories(int n, int m0);

// J : {1..n+n'} -> {+1,-1} with n plus entries; J_sigma(i) = prefix counts.
struct Interlacing {
  int n_plus = 0, n_minus = 0;
  std::vector<std::int8_t> J;  // J[i-1] = J(i)

  int prefix(int i, int sigma) const {  // J_sigma(i)
    int c = 0;
    for (int j = 0; j < i; ++j) c += (J[static_cast<std::size_t>(j)] == sigma) ? 1 : 0;
    return c;
  }
};

std::vector<Interlacing> enumerate_interlacings(int n, int n_prime);

struct ClusterPartition {
  std::vector<std::vector<int>> blocks;  // disjoint, 0-based element indices
  bool is_pairing() const {
    for (const auto& b : blocks)
      if (b.size() != 2) return false;
    return true;
  }
};

enum class PartitionKind { All, PairingsOnly, EvenBlocksOnly };
std::vector<ClusterPartition> enumerate_partitions(int n_elements, PartitionKind kind);

// ---------------------------------------------------------------------------
// Momentum graphs
// ---------------------------------------------------------------------------

enum class VertexRole : std::uint8_t { Root, Fusion, Initial, Cluster };

enum class GraphClass : std::uint8_t {
  Irrelevant,
  HigherOrder,
  PartiallyPaired,
  Leading,
  Nested,
  Crossing,
};

const char* to_string(GraphClass c);

struct MomentumGraph {
  int n_plus = 0, n_minus = 0;
  int N() const { return n_plus + n_minus; }

  std::vector<VertexRole> role;          // per vertex
  std::vector<int> tau;                  // time level per vertex
  std::vector<std::array<int, 2>> edges; // endpoints, creation order
  std::vector<std::int8_t> parity;       // line parity per edge (0 on e0 and cluster edges)
  std::vector<std::vector<int>> attached;  // per vertex, edge ids in attach order

  std::vector<int> bottom_vertices;      // initial-time vertices, left to right
  std::vector<int> bottom_edge;          // tree edge above each bottom position
  ClusterPartition S;                    // blocks over bottom positions
  std::vector<int> fusion_by_level;      // fusion_by_level[i-1] = vertex id of v_i, i = 1..N+1
  std::vector<int> middle_sign;          // sigma_{i, l_i} per interaction i = 1..N

  // spanning tree (build_spanning_tree)
  std::vector<char> in_tree;             // per edge
  std::vector<int> parent_vertex;        // oriented toward the root
  std::vector<int> parent_edge;
  std::vector<int> free_edges;           // creation order
  std::vector<int> free_slot;            // per edge: index into free_edges or -1

  // momentum resolution (resolve_momenta): k_e = sum sigma_{e,f} k_f
  std::vector<std::vector<std::int8_t>> expansion;  // per edge, over free slots
  std::vector<int> degree;               // per vertex: free edges in E_-(v)

  int root_vertex = 0;
  int top_vertex = 1;

  std::int8_t sigma_v(int v, int e) const;  // +1 on E_+(v), -1 on E_-(v)
  bool resolved() const { return !expansion.empty(); }
};

// Construction per the iteration scheme: spurious edge e0 first, then the two
// tree root edges, then fusion triplets backwards in time, then cluster edges
// left to right. Main-term graphs use n' = 0 (pass an empty minus history).
MomentumGraph build_momentum_graph(const ClusterPartition& S, const Interlacing& J,
                                   const InteractionHistory& ell_plus,
                                   const InteractionHistory& ell_minus);
MomentumGraph build_main_graph(const ClusterPartition& S, const InteractionHistory& ell);

// Spanning tree: edges added in decreasing creation order, rooted at v_R.
void build_spanning_tree(MomentumGraph& g);

// Integrated-edge momenta as signed sums of free momenta; asserts Kirchhoff
// residual zero at every non-root vertex.
void resolve_momenta(MomentumGraph& g);

// Number of free edges in the alternative bottom-up spanning tree (edges added
// in increasing creation order); spanning-forest invariance check.
int free_count_bottom_up(const MomentumGraph& g);

struct ClusterSchemeResult {
  std::vector<int> degrees;        // per interaction level 1..N+1 (top fusion last)
  std::vector<int> cluster_sizes;  // |S^{(i)}| after each step
};

// Iterative cluster scheme; degrees derived from merge counts.
ClusterSchemeResult iterative_cluster_scheme(const MomentumGraph& g);

struct ClassifyResult {
  GraphClass cls = GraphClass::Irrelevant;
  bool relevant = false;
  bool pairing = false;
  bool fully_paired = false;
  int last_trivial_long_slice = -1;           // m0'
  int last_crossing_slice = -1;               // for crossing graphs
  std::vector<std::array<int, 2>> x_vertices;  // (degree-2 vertex, X vertex)
};

ClassifyResult classify(const MomentumGraph& g);

// Slice phase Re gamma(m) as canonicalized (net sign, momentum expansion) terms.
// Exposed for tests; empty vector = trivial slice.
std::vector<std::pair<int, std::vector<std::int8_t>>> slice_phase(const MomentumGraph& g, int m);

struct LeadingCount {
  long long leading = 0;
  long long fully_paired = 0;
  unsigned long long bound = 0;  // 4^N (N-1)!!
};

// Exhaustive count over (n, n', J, ell, ell') x gauge-valid pairings.
// Guarded at N <= 6 (factorial growth); odd N returns zeros.
LeadingCount count_leading(int N, bool main_term_only = false);

// ---------------------------------------------------------------------------
// Time-simplex and resolvent identities
// ---------------------------------------------------------------------------

// int over the simplex {s >= 0, sum s_i = t} of prod e^{-i gamma_i s_i};
// divided-difference closed form, stable for clustered nodes.
cplx simplex_integral(double t, std::span<const cplx> gammas);

// |LHS - RHS| of the interlacing recombination identity for the two simplex
// factors (gamma_plus has n+1 entries, gamma_minus n'+1).
double verify_interlacing_identity(int n, int n_prime, std::span<const cplx> gamma_plus,
                                   std::span<const cplx> gamma_minus, double t);

// |LHS - RHS| of the simplex-to-resolvent identity, with the contour integral
// over a rectangle around the gammas evaluated by the midpoint rule with at
// least `nodes` nodes. margin must be >= 1e-3.
double verify_resolvent_identity(std::span<const cplx> gammas, const std::vector<int>& A, double t,
                                 int nodes = 2048, double margin = 0.7);

// Omega(k, sigma) = w(k3) - w(k1) + sigma (w(k2) - w(k1+k2+k3))
double omega_vertex(const DispersionRelation& disp, const std::vector<double>& k1,
                    const std::vector<double>& k2, const std::vector<double>& k3, int sigma);

// Structured-text graph dump (one record; golden files under tests/golden).
std::string dump_graph(const MomentumGraph& g, const ClassifyResult* cls = nullptr);

// ---------------------------------------------------------------------------
// Leading-graph sum (graphs_eval.cpp)
// ---------------------------------------------------------------------------

// Enumerates the leading main-term graphs at n = 2m and evaluates each
// amplitude in the lambda -> 0 time-rescaled form via the kinetics grid
// machinery; returns the sum at momentum k (on the quadrature grid).
// m = 0 returns W(k). Supported m <= 2.
cplx eval_leading_sum(int m, const std::vector<double>& k, double t,
                      const DispersionRelation& disp, const GibbsParams& params,
                      const QuadratureConfig& config);

// The full 16-way motive-insertion sum at a non-special pairing, integrated
// over a finite time horizon: vanishes as the horizon grows because W is a
// stationary solution of the kinetic equation.
cplx stationarity_cancellation_residual(double horizon, const std::vector<double>& k0, int sigma,
                                        const DispersionRelation& disp, const GibbsParams& params,
                                        const QuadratureConfig& config);

}  // namespace wavekin
