#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "wavekin/graphs.hpp"
#include "wavekin/rng.hpp"

using namespace wavekin;

namespace {

InteractionHistory hist(std::vector<int> ell) {
  InteractionHistory h;
  h.n = static_cast<int>(ell.size());
  h.m0 = 1;
  h.ell = std::move(ell);
  return h;
}

ClusterPartition part(std::vector<std::vector<int>> blocks) {
  ClusterPartition S;
  S.blocks = std::move(blocks);
  return S;
}

MomentumGraph built(const ClusterPartition& S, const InteractionHistory& ell) {
  MomentumGraph g = build_main_graph(S, ell);
  build_spanning_tree(g);
  resolve_momenta(g);
  return g;
}

// all two-tree parameter combinations at total order N
struct Combo {
  InteractionHistory ep, em;
  Interlacing J;
};
std::vector<Combo> all_tree_combos(int N) {
  std::vector<Combo> out;
  for (int n = 0; n <= N; ++n) {
    int np = N - n;
    for (const auto& J : enumerate_interlacings(n, np))
      for (const auto& ep : enumerate_histories(n, 1))
        for (const auto& em : enumerate_histories(np, 1)) out.push_back({ep, em, J});
  }
  return out;
}

}  // namespace

TEST_CASE("interaction history enumeration") {
  CHECK(enumerate_histories(1, 1).size() == 1);
  auto h2 = enumerate_histories(2, 1);
  CHECK(h2.size() == 3);
  CHECK(h2[0].ell == std::vector<int>{1, 1});
  CHECK(h2[1].ell == std::vector<int>{2, 1});
  CHECK(h2[2].ell == std::vector<int>{3, 1});
  CHECK(enumerate_histories(4, 1).size() == 105);
  for (int n = 0; n <= 6; ++n) {
    unsigned long long dfact = 1;
    for (int k = 2 * n - 1; k > 1; k -= 2) dfact *= static_cast<unsigned long long>(k);
    CHECK(count_histories(n, 1) == dfact);
    if (n <= 5) CHECK(enumerate_histories(n, 1).size() == dfact);
  }
  CHECK_THROWS_AS(enumerate_histories(9, 1), GuardViolation);
}

TEST_CASE("interlacing enumeration") {
  CHECK(enumerate_interlacings(1, 1).size() == 2);
  auto j30 = enumerate_interlacings(3, 0);
  CHECK(j30.size() == 1);
  CHECK(j30[0].J == std::vector<std::int8_t>{1, 1, 1});
  CHECK(enumerate_interlacings(2, 2).size() == 6);
  CHECK_THROWS_AS(enumerate_interlacings(9, 8), GuardViolation);
  // prefix maps are increasing and onto
  for (const auto& J : enumerate_interlacings(2, 3)) {
    CHECK(J.prefix(5, +1) == 2);
    CHECK(J.prefix(5, -1) == 3);
    for (int i = 1; i <= 5; ++i) CHECK(J.prefix(i, +1) >= J.prefix(i - 1, +1));
  }
}

TEST_CASE("partition enumeration") {
  CHECK(enumerate_partitions(4, PartitionKind::PairingsOnly).size() == 3);
  CHECK(enumerate_partitions(4, PartitionKind::All).size() == 15);
  CHECK(enumerate_partitions(6, PartitionKind::PairingsOnly).size() == 15);
  CHECK(enumerate_partitions(6, PartitionKind::EvenBlocksOnly).size() == 31);
  CHECK_THROWS_AS(enumerate_partitions(13, PartitionKind::All), GuardViolation);
}

TEST_CASE("base diagram n = n' = 0") {
  auto g = built(part({{0, 1}}), hist({}));
  CHECK(g.free_edges.size() == 1);  // 2N+2-|S| = 1
  CHECK(free_count_bottom_up(g) == 1);
  // e0 momentum expansion is empty
  for (std::size_t f = 0; f < g.free_edges.size(); ++f) CHECK(g.expansion[0][f] == 0);
  auto cls = classify(g);
  CHECK(cls.cls == GraphClass::Leading);
  CHECK(cls.relevant);
  CHECK(cls.fully_paired);
}

TEST_CASE("spec worked examples at n = 2") {
  // relevant, fully paired at ell = (3,1). (The pairing {{0,4},{1,3},{2,5}} is
  // gauge-violating for this history under the (-1, sigma, +1) parity order;
  // {{0,4},{1,5},{2,3}} is the matching relevant pairing.)
  auto g1 = built(part({{0, 4}, {1, 5}, {2, 3}}), hist({3, 1}));
  auto c1 = classify(g1);
  CHECK(c1.relevant);
  CHECK(c1.fully_paired);
  CHECK(g1.free_edges.size() == 3);  // 2N+2-|S| = 3

  // higher order (four-cluster)
  auto g2 = built(part({{0, 4}, {1, 2, 3, 5}}), hist({2, 1}));
  auto c2 = classify(g2);
  CHECK(c2.cls == GraphClass::HigherOrder);
  CHECK(c2.relevant);
  CHECK_FALSE(c2.pairing);

  // the paper's leading pairing at ell = (2,1)
  auto g3 = built(part({{0, 4}, {1, 3}, {2, 5}}), hist({2, 1}));
  auto c3 = classify(g3);
  CHECK(c3.cls == GraphClass::Leading);
  auto scheme = iterative_cluster_scheme(g3);
  CHECK(scheme.degrees[0] == 0);
  CHECK(scheme.degrees[1] == 2);

  // history index out of range
  CHECK_THROWS_AS(build_main_graph(part({{0, 4}, {1, 3}, {2, 5}}), hist({4, 1})), ConfigError);
}

TEST_CASE("kirchhoff rules hold under numeric substitution") {
  auto g = built(part({{0, 4}, {1, 3}, {2, 5}}), hist({2, 1}));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int d = 2;
  std::size_t F = g.free_edges.size();
  std::vector<std::vector<double>> kf(F, std::vector<double>(static_cast<std::size_t>(d)));
  for (auto& k : kf)
    for (auto& c : k) c = u(rng);
  auto edge_k = [&](std::size_t e) {
    std::vector<double> k(static_cast<std::size_t>(d), 0.0);
    for (std::size_t f = 0; f < F; ++f)
      for (int c = 0; c < d; ++c)
        k[static_cast<std::size_t>(c)] += g.expansion[e][f] * kf[f][static_cast<std::size_t>(c)];
    return k;
  };
  for (std::size_t v = 0; v < g.role.size(); ++v) {
    if (static_cast<int>(v) == g.root_vertex) continue;
    std::vector<double> resid(static_cast<std::size_t>(d), 0.0);
    for (int e : g.attached[v]) {
      auto k = edge_k(static_cast<std::size_t>(e));
      for (int c = 0; c < d; ++c)
        resid[static_cast<std::size_t>(c)] += g.sigma_v(static_cast<int>(v), e) * k[static_cast<std::size_t>(c)];
    }
    for (double r : resid) CHECK(std::abs(r - std::round(r)) < 1e-12);
  }
}

TEST_CASE("degree-two vertex momentum structure") {
  auto g = built(part({{0, 4}, {1, 3}, {2, 5}}), hist({2, 1}));
  // find the degree-2 interaction vertex and its integrated child
  bool found = false;
  for (int lvl = 1; lvl <= g.N(); ++lvl) {
    int v = g.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
    if (g.degree[static_cast<std::size_t>(v)] != 2) continue;
    found = true;
    const auto& at = g.attached[static_cast<std::size_t>(v)];
    int f1 = -1, f2 = -1, e_int = -1;
    for (std::size_t i = 1; i < at.size(); ++i) {
      if (g.in_tree[static_cast<std::size_t>(at[i])])
        e_int = at[i];
      else
        (f1 < 0 ? f1 : f2) = at[i];
    }
    REQUIRE(e_int >= 0);
    int s1 = g.free_slot[static_cast<std::size_t>(f1)], s2 = g.free_slot[static_cast<std::size_t>(f2)];
    // k_e = -k_f - k_f' + G with G independent of both
    CHECK(g.expansion[static_cast<std::size_t>(e_int)][static_cast<std::size_t>(s1)] == -1);
    CHECK(g.expansion[static_cast<std::size_t>(e_int)][static_cast<std::size_t>(s2)] == -1);
  }
  CHECK(found);
}

TEST_CASE("exhaustive N <= 3: free momentum count, zero edges, pair supports") {
  for (int N = 1; N <= 3; ++N) {
    auto combos = all_tree_combos(N);
    auto parts = enumerate_partitions(2 * N + 2, PartitionKind::All);
    long long n_checked = 0;
    for (const auto& cb : combos) {
      for (const auto& S : parts) {
        MomentumGraph g = build_momentum_graph(S, cb.J, cb.ep, cb.em);
        build_spanning_tree(g);
        resolve_momenta(g);
        ++n_checked;
        // Prop: exactly 2N+2-|S| free momenta, for both tree constructions
        CHECK(static_cast<int>(g.free_edges.size()) == 2 * N + 2 - static_cast<int>(S.blocks.size()));
        CHECK(free_count_bottom_up(g) == static_cast<int>(g.free_edges.size()));
        // scheme degrees match spanning-tree degrees
        auto scheme = iterative_cluster_scheme(g);
        for (int lvl = 1; lvl <= N + 1; ++lvl)
          CHECK(scheme.degrees[static_cast<std::size_t>(lvl - 1)] ==
                g.degree[static_cast<std::size_t>(g.fusion_by_level[static_cast<std::size_t>(lvl - 1)])]);
        // zero-momentum edge (not e0) forces an odd cluster
        bool zero_edge = false;
        for (std::size_t e = 1; e < g.edges.size(); ++e) {
          bool all0 = true;
          for (std::size_t f = 0; f < g.free_edges.size(); ++f)
            if (g.expansion[e][f] != 0) all0 = false;
          if (all0) zero_edge = true;
        }
        if (zero_edge) {
          bool odd = false;
          for (const auto& b : S.blocks) odd |= b.size() % 2 == 1;
          CHECK(odd);
        }
        // Prop 5.5: equal free supports -> both zero or removal makes exactly 2 components
        std::size_t E = g.edges.size();
        for (std::size_t e1 = 1; e1 < E; ++e1) {
          for (std::size_t e2 = e1 + 1; e2 < E; ++e2) {
            bool same_support = true, both_zero = true;
            for (std::size_t f = 0; f < g.free_edges.size(); ++f) {
              if ((g.expansion[e1][f] != 0) != (g.expansion[e2][f] != 0)) same_support = false;
              if (g.expansion[e1][f] != 0 || g.expansion[e2][f] != 0) both_zero = false;
            }
            if (!same_support) continue;
            if (both_zero) continue;
            // removal of e1, e2 must split the graph into exactly two components
            std::vector<int> comp(g.role.size(), -1);
            int ncomp = 0;
            for (std::size_t v0 = 0; v0 < g.role.size(); ++v0) {
              if (comp[v0] != -1) continue;
              std::vector<int> stack = {static_cast<int>(v0)};
              comp[v0] = ncomp;
              while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                for (int e : g.attached[static_cast<std::size_t>(v)]) {
                  if (e == static_cast<int>(e1) || e == static_cast<int>(e2)) continue;
                  int w = g.edges[static_cast<std::size_t>(e)][0] == v
                              ? g.edges[static_cast<std::size_t>(e)][1]
                              : g.edges[static_cast<std::size_t>(e)][0];
                  if (comp[static_cast<std::size_t>(w)] == -1) {
                    comp[static_cast<std::size_t>(w)] = ncomp;
                    stack.push_back(w);
                  }
                }
              }
              ++ncomp;
            }
            CHECK(ncomp == 2);
          }
        }
      }
    }
    CHECK(n_checked > 0);
  }
}

TEST_CASE("relevant fully paired graphs: slice 0 phase cancels, degree counts") {
  int N = 4;
  auto parts = enumerate_partitions(2 * N + 2, PartitionKind::PairingsOnly);
  long long n_fp = 0;
  for (const auto& ell : enumerate_histories(N, 1)) {
    for (const auto& S : parts) {
      auto g = built(S, ell);
      auto cls = classify(g);
      if (!cls.relevant || !cls.fully_paired) continue;
      ++n_fp;
      CHECK(slice_phase(g, 0).empty());
      int n0 = 0, n1 = 0, n2 = 0;
      for (int lvl = 1; lvl <= N; ++lvl) {
        int dgr = g.degree[static_cast<std::size_t>(g.fusion_by_level[static_cast<std::size_t>(lvl - 1)])];
        n0 += dgr == 0;
        n1 += dgr == 1;
        n2 += dgr == 2;
      }
      CHECK(n1 == 0);
      CHECK(n0 == N / 2);
      CHECK(n2 == N / 2);
    }
  }
  CHECK(n_fp > 0);
}

TEST_CASE("cumulative degree bound on random relevant graphs") {
  auto rng = make_stream(2024, 7);
  std::uniform_int_distribution<int> pick_n(0, 3);
  int accepted = 0;
  while (accepted < 1000) {
    int n = pick_n(rng), np = pick_n(rng);
    int N = n + np;
    if (N == 0) continue;
    auto Js = enumerate_interlacings(n, np);
    auto& J = Js[std::uniform_int_distribution<std::size_t>(0, Js.size() - 1)(rng)];
    auto hp = enumerate_histories(n, 1);
    auto hm = enumerate_histories(np, 1);
    auto& ep = hp[std::uniform_int_distribution<std::size_t>(0, hp.size() - 1)(rng)];
    auto& em = hm[std::uniform_int_distribution<std::size_t>(0, hm.size() - 1)(rng)];
    // random partition via random growth string
    int nbot = 2 * N + 2;
    ClusterPartition S;
    std::vector<int> label(static_cast<std::size_t>(nbot));
    int maxl = 0;
    for (int i = 0; i < nbot; ++i) {
      label[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, maxl)(rng);
      maxl = std::max(maxl, label[static_cast<std::size_t>(i)] + 1);
    }
    S.blocks.assign(static_cast<std::size_t>(maxl), {});
    for (int i = 0; i < nbot; ++i) S.blocks[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])].push_back(i);
    MomentumGraph g = build_momentum_graph(S, J, ep, em);
    build_spanning_tree(g);
    resolve_momenta(g);
    auto cls = classify(g);
    if (!cls.relevant) continue;
    ++accepted;
    int r = N + 1 - static_cast<int>(S.blocks.size());
    auto scheme = iterative_cluster_scheme(g);
    int n1 = 0;
    for (int lvl = 1; lvl <= N; ++lvl) n1 += scheme.degrees[static_cast<std::size_t>(lvl - 1)] == 1;
    int n0i = 0;
    for (int i = 1; i <= N; ++i) {
      n0i += scheme.degrees[static_cast<std::size_t>(i - 1)] == 0;
      CHECK(2 * n0i >= i - n1 - r);
    }
    // |S^(i)| recurrence
    int blocks = static_cast<int>(S.blocks.size());
    for (int i = 1; i <= N; ++i) {
      blocks = blocks - 2 + scheme.degrees[static_cast<std::size_t>(i - 1)];
      CHECK(scheme.cluster_sizes[static_cast<std::size_t>(i - 1)] == blocks);
    }
  }
}

TEST_CASE("classification is stable under cluster relabeling") {
  auto parts = enumerate_partitions(2 * 2 + 2, PartitionKind::All);
  for (const auto& ell : enumerate_histories(2, 1)) {
    for (const auto& S : parts) {
      auto a = classify(built(S, ell));
      ClusterPartition Sr;
      Sr.blocks.assign(S.blocks.rbegin(), S.blocks.rend());
      auto b = classify(built(Sr, ell));
      CHECK(a.cls == b.cls);
    }
  }
}

TEST_CASE("classification finds nested and crossing graphs at N = 4") {
  long long counts[6] = {0, 0, 0, 0, 0, 0};
  auto parts = enumerate_partitions(10, PartitionKind::PairingsOnly);
  for (const auto& ell : enumerate_histories(4, 1)) {
    for (const auto& S : parts) {
      auto g = built(S, ell);
      auto cls = classify(g);
      ++counts[static_cast<int>(cls.cls)];
      if (cls.cls == GraphClass::Crossing) CHECK(cls.last_crossing_slice >= 0);
      if (cls.cls == GraphClass::Leading) CHECK(cls.last_trivial_long_slice == 4);
    }
  }
  CHECK(counts[static_cast<int>(GraphClass::Leading)] > 0);
  CHECK(counts[static_cast<int>(GraphClass::Nested)] > 0);
  CHECK(counts[static_cast<int>(GraphClass::Crossing)] > 0);
  CHECK(counts[static_cast<int>(GraphClass::PartiallyPaired)] > 0);
  long long total = 0;
  for (long long c : counts) total += c;
  CHECK(total == 105 * 945);
}

TEST_CASE("leading graph counts and the factorial bound") {
  auto c0 = count_leading(0);
  CHECK(c0.leading == 1);
  auto codd = count_leading(3);
  CHECK(codd.leading == 0);
  auto c2 = count_leading(2);
  CHECK(c2.bound == 16);
  CHECK(c2.leading == 16);  // frozen enumeration result (bound attained)
  auto c2m = count_leading(2, true);
  CHECK(c2m.leading == 6);  // frozen: the six right-leg loss insertions
  auto c4 = count_leading(4);
  CHECK(c4.leading <= static_cast<long long>(c4.bound));
  CHECK(c4.bound == 256 * 3);
  CHECK(c4.leading == 768);        // frozen enumeration result
  CHECK(c4.fully_paired == 7680);  // frozen enumeration result
  CHECK(count_leading(4, true).leading == 228);  // frozen
  CHECK_THROWS_AS(count_leading(8), GuardViolation);
}

namespace {
// nested adaptive Simpson over the simplex, oracle for the closed form
cplx simplex_quad(double t, std::span<const cplx> g) {
  if (g.size() == 1) return std::exp(cplx{0.0, -1.0} * g[0] * t);
  std::function<cplx(double)> f = [&](double s) {
    std::vector<cplx> rest(g.begin() + 1, g.end());
    return std::exp(cplx{0.0, -1.0} * g[0] * s) *
           simplex_quad(t - s, std::span<const cplx>(rest));
  };
  // adaptive Simpson on [0, t]
  std::function<cplx(double, double, cplx, double, int)> rec =
      [&](double lo, double hi, cplx whole, double eps, int depth) -> cplx {
    double mid = 0.5 * (lo + hi);
    auto simp = [&](double a, double b) {
      return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    };
    cplx left = simp(lo, mid), right = simp(mid, hi);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, left, eps / 2, depth - 1) + rec(mid, hi, right, eps / 2, depth - 1);
  };
  auto simp0 = [&](double a, double b) {
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  };
  return rec(0.0, t, simp0(0.0, t), 1e-12, 16);
}
}  // namespace

TEST_CASE("simplex integral: quadrature oracle and degenerate nodes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double t = 1.7;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<cplx> g;
    for (int i = 0; i < 3; ++i) g.push_back(cplx{u(rng), -std::abs(u(rng))});
    cplx closed = simplex_integral(t, g);
    cplx oracle = simplex_quad(t, g);
    CHECK(std::abs(closed - oracle) < 1e-9);
  }
  // equal nodes: simplex volume times the common phase
  std::vector<cplx> eq(4, cplx{0.7, -0.1});
  cplx expect = std::exp(cplx{0.0, -1.0} * eq[0] * t) * std::pow(t, 3) / 6.0;
  CHECK(std::abs(simplex_integral(t, eq) - expect) < 1e-12);
  // single node
  std::vector<cplx> one = {cplx{0.3, 0.0}};
  CHECK(std::abs(simplex_integral(t, one) - std::exp(cplx{0.0, -0.3 * t})) < 1e-14);
}

TEST_CASE("interlacing identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double t = 1.3;
  // n = 0: identity reduces to the same integral on both sides
  {
    std::vector<cplx> gp = {cplx{0.4, -0.2}};
    std::vector<cplx> gm = {cplx{-1.1, -0.5}, cplx{0.7, 0.0}, cplx{0.2, -0.1}};
    CHECK(verify_interlacing_identity(0, 2, gp, gm, t) < 1e-10);
  }
  // random (1,1)
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<cplx> gp = {cplx{u(rng), -std::abs(u(rng))}, cplx{u(rng), -std::abs(u(rng))}};
    std::vector<cplx> gm = {cplx{u(rng), -std::abs(u(rng))}, cplx{u(rng), -std::abs(u(rng))}};
    CHECK(verify_interlacing_identity(1, 1, gp, gm, t) < 1e-8);
  }
  // all gammas equal: counts reduce to binomial identity
  {
    std::vector<cplx> gp(3, cplx{0.5, -0.3});
    std::vector<cplx> gm(3, cplx{0.5, -0.3});
    CHECK(verify_interlacing_identity(2, 2, gp, gm, t) < 1e-10);
  }
  // up to n + n' = 6 with random phases
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<cplx> gp, gm;
    for (int i = 0; i < 4; ++i) gp.push_back(cplx{u(rng), -std::abs(u(rng))});
    for (int i = 0; i < 4; ++i) gm.push_back(cplx{u(rng), -std::abs(u(rng))});
    CHECK(verify_interlacing_identity(3, 3, gp, gm, t) < 1e-8);
  }
  std::vector<cplx> bad = {cplx{0.0, 0.5}};
  std::vector<cplx> ok = {cplx{0.0, 0.0}};
  CHECK_THROWS_AS(verify_interlacing_identity(0, 0, bad, ok, t), ConfigError);
}

TEST_CASE("resolvent identity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double t = 1.1;
  // |I| = 1, A = I: the standard resolvent formula
  {
    std::vector<cplx> g = {cplx{0.8, -0.4}};
    CHECK(verify_resolvent_identity(g, {0}, t) < 1e-8);
  }
  // |I| = 3, |A| = 2, random lower-half-plane gammas
  for (int rep = 0; rep < 4; ++rep) {
    std::vector<cplx> g;
    for (int i = 0; i < 3; ++i) g.push_back(cplx{u(rng), -std::abs(u(rng)) - 0.1});
    CHECK(verify_resolvent_identity(g, {0, 2}, t, 4096) < 1e-6);
  }
  // t = 0: both sides vanish for |I| >= 2
  {
    std::vector<cplx> g = {cplx{0.3, -0.2}, cplx{-0.4, -0.6}};
    CHECK(verify_resolvent_identity(g, {1}, 0.0) < 1e-10);
  }
  std::vector<cplx> g = {cplx{0.0, 0.0}};
  CHECK_THROWS_AS(verify_resolvent_identity(g, {0}, 1.0, 2048, 1e-4), GuardViolation);
}

TEST_CASE("omega vertex identities") {
  auto disp = DispersionRelation::nearest_neighbor(2, 2.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rk = [&] { return std::vector<double>{u(rng), u(rng)}; };
  for (int rep = 0; rep < 20; ++rep) {
    auto k1 = rk(), k2 = rk(), k3 = rk();
    double lhs = omega_vertex(disp, {-k3[0], -k3[1]}, {-k2[0], -k2[1]}, {-k1[0], -k1[1]}, -1);
    double rhs = -omega_vertex(disp, k1, k2, k3, +1);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  // substitution case
  auto a = rk(), b = rk();
  std::vector<double> sum = {2 * a[0] + b[0], 2 * a[1] + b[1]};
  CHECK(omega_vertex(disp, a, b, a, +1) ==
        doctest::Approx(disp.omega(b) - disp.omega(sum)).epsilon(1e-12));
  // constant omega -> 0
  auto flat = DispersionRelation::tabulated(2, 8, std::vector<double>(64, 2.5), false);
  CHECK(omega_vertex(flat, {0.25, 0.5}, {0.125, 0.25}, {0.375, 0.0}, +1) ==
        doctest::Approx(0.0));
}
