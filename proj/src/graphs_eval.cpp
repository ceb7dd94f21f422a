#include <algorithm>
#include <cmath>
#include <numeric>

#include "wavekin/graphs.hpp"

namespace wavekin {

namespace {

// Evaluation plan for one leading main-term graph: one motive per short slice,
// each pinned to the two free momenta of its degree-two vertex. Carriers chain
// motives to an outer slot (or to the root).
struct MotivePlan {
  int slot_a = -1, slot_b = -1;  // free slots owned by the motive
  int ori_a = 1, ori_b = 1;      // orientation flips making joint = a + b + c u
  int w_a = 0, w_b = 0, w_j = 0;  // W multiplicities per evaluation slot
  int ph_a = 0, ph_b = 0, ph_j = 0, ph_u = 0;  // net phase coefficients
  int carrier_slot = -1;         // foreign slot in the joint (root slot allowed)
  int carrier_coeff = 0;         // c in joint = a + b + c * k_carrier
};

struct GraphPlan {
  double sign = 1.0;
  int root_slot = -1;
  int out_ori = 1;       // observable momentum = out_ori * k_{root slot}
  int w_root = 0;        // W(root) powers from pure-root pairs
  std::vector<MotivePlan> motives;
};

bool pure_slot(const std::vector<std::int8_t>& key, int slot) {
  for (std::size_t f = 0; f < key.size(); ++f)
    if (key[f] != 0 && static_cast<int>(f) != slot) return false;
  return key[static_cast<std::size_t>(slot)] != 0;
}

int nonzero_count(const std::vector<std::int8_t>& key) {
  int c = 0;
  for (auto v : key) c += v != 0;
  return c;
}

GraphPlan make_plan(const MomentumGraph& g) {
  int N = g.N();
  if (g.n_minus != 0) throw GuardViolation("leading-sum evaluator: main-term graphs only");
  GraphPlan plan;
  plan.sign = (N / 2) % 2 == 0 ? 1.0 : -1.0;  // (-1)^m from (-i lambda)^{2m}
  for (int s : g.middle_sign) plan.sign *= s;

  // root slot: the unique free edge attached to the top fusion vertex's loop
  for (int fe : g.free_edges) {
    int a = g.edges[static_cast<std::size_t>(fe)][0], b = g.edges[static_cast<std::size_t>(fe)][1];
    if (a == g.top_vertex || b == g.top_vertex)
      plan.root_slot = g.free_slot[static_cast<std::size_t>(fe)];
  }
  if (plan.root_slot < 0) {
    // the root loop closes through a bottom edge; find the slot carried by e2
    const auto& e2 = g.expansion[2];
    for (std::size_t f = 0; f < e2.size(); ++f)
      if (e2[f] != 0) {
        if (plan.root_slot >= 0) throw GuardViolation("leading-sum evaluator: root line not pure");
        plan.root_slot = static_cast<int>(f);
      }
  }
  if (plan.root_slot < 0) throw GuardViolation("leading-sum evaluator: no root momentum");
  {
    const auto& e2 = g.expansion[2];
    if (!pure_slot(e2, plan.root_slot))
      throw GuardViolation("leading-sum evaluator: plus-root line not a pure free momentum");
    plan.out_ori = e2[static_cast<std::size_t>(plan.root_slot)];
  }

  // motives: short slices end in the degree-two vertices
  std::vector<int> short_levels;
  for (int lvl = 1; lvl <= N; ++lvl)
    if (g.degree[static_cast<std::size_t>(g.fusion_by_level[static_cast<std::size_t>(lvl - 1)])] == 2)
      short_levels.push_back(lvl);
  if (static_cast<int>(short_levels.size()) != N / 2)
    throw GuardViolation("leading-sum evaluator: not an alternating leading structure");

  for (int lvl : short_levels) {
    MotivePlan mp;
    int v = g.fusion_by_level[static_cast<std::size_t>(lvl - 1)];
    const auto& at = g.attached[static_cast<std::size_t>(v)];
    for (std::size_t i = 1; i < at.size(); ++i) {
      if (g.in_tree[static_cast<std::size_t>(at[i])]) continue;
      (mp.slot_a < 0 ? mp.slot_a : mp.slot_b) = g.free_slot[static_cast<std::size_t>(at[i])];
    }
    // phase terms of the short slice m = lvl - 1
    auto terms = slice_phase(g, lvl - 1);
    // find the joint combo first
    for (const auto& [net, key] : terms) {
      (void)net;
      if (key[static_cast<std::size_t>(mp.slot_a)] != 0 && key[static_cast<std::size_t>(mp.slot_b)] != 0) {
        mp.ori_a = key[static_cast<std::size_t>(mp.slot_a)];
        mp.ori_b = key[static_cast<std::size_t>(mp.slot_b)];
        for (std::size_t f = 0; f < key.size(); ++f) {
          if (static_cast<int>(f) == mp.slot_a || static_cast<int>(f) == mp.slot_b) continue;
          if (key[f] != 0) {
            if (mp.carrier_slot >= 0)
              throw GuardViolation("leading-sum evaluator: joint combo has two carriers");
            mp.carrier_slot = static_cast<int>(f);
            mp.carrier_coeff = key[f];
          }
        }
        break;
      }
    }
    if (mp.carrier_slot < 0)
      throw GuardViolation("leading-sum evaluator: motive carrier not found");
    // normalize: with a -> ori_a * a, b -> ori_b * b the joint is a + b + c u
    for (const auto& [net, key] : terms) {
      bool has_a = key[static_cast<std::size_t>(mp.slot_a)] != 0;
      bool has_b = key[static_cast<std::size_t>(mp.slot_b)] != 0;
      if (has_a && has_b) {
        mp.ph_j += net;
      } else if (has_a) {
        if (nonzero_count(key) != 1)
          throw GuardViolation("leading-sum evaluator: unexpected mixed phase term");
        mp.ph_a += net;
      } else if (has_b) {
        if (nonzero_count(key) != 1)
          throw GuardViolation("leading-sum evaluator: unexpected mixed phase term");
        mp.ph_b += net;
      } else if (pure_slot(key, mp.carrier_slot)) {
        mp.ph_u += net;
      } else if (nonzero_count(key) == 0) {
        // constant; cannot appear in relevant graphs
        throw GuardViolation("leading-sum evaluator: constant phase term");
      } else {
        throw GuardViolation("leading-sum evaluator: foreign phase term in short slice");
      }
    }
    plan.motives.push_back(mp);
  }

  // W factors: one per pairing block, argument = bottom momentum of the first
  // element; assign to the motive owning its slots (or to the root).
  for (const auto& blk : g.S.blocks) {
    const auto& key =
        g.expansion[static_cast<std::size_t>(g.bottom_edge[static_cast<std::size_t>(blk[0])])];
    if (pure_slot(key, plan.root_slot)) {
      ++plan.w_root;
      continue;
    }
    bool assigned = false;
    for (auto& mp : plan.motives) {
      bool has_a = key[static_cast<std::size_t>(mp.slot_a)] != 0;
      bool has_b = key[static_cast<std::size_t>(mp.slot_b)] != 0;
      if (has_a && has_b) {
        mp.w_j += 1;
        assigned = true;
      } else if (has_a && nonzero_count(key) == 1) {
        mp.w_a += 1;
        assigned = true;
      } else if (has_b && nonzero_count(key) == 1) {
        mp.w_b += 1;
        assigned = true;
      }
      if (assigned) break;
    }
    if (!assigned) throw GuardViolation("leading-sum evaluator: unassignable W factor");
  }
  return plan;
}

// order motives so that a motive whose carrier is another motive's slot comes first
std::vector<int> evaluation_order(const GraphPlan& plan) {
  std::size_t m = plan.motives.size();
  std::vector<int> owner_of_slot;  // motive index owning each slot
  int max_slot = plan.root_slot;
  for (const auto& mp : plan.motives) max_slot = std::max({max_slot, mp.slot_a, mp.slot_b});
  owner_of_slot.assign(static_cast<std::size_t>(max_slot + 1), -1);
  for (std::size_t i = 0; i < m; ++i) {
    owner_of_slot[static_cast<std::size_t>(plan.motives[i].slot_a)] = static_cast<int>(i);
    owner_of_slot[static_cast<std::size_t>(plan.motives[i].slot_b)] = static_cast<int>(i);
  }
  std::vector<int> depth(m, 0), order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    int d = 0, cur = static_cast<int>(i);
    while (true) {
      int carrier_owner = owner_of_slot[static_cast<std::size_t>(plan.motives[static_cast<std::size_t>(cur)].carrier_slot)];
      if (carrier_owner < 0) break;  // carried by the root
      ++d;
      cur = carrier_owner;
      if (d > static_cast<int>(m)) throw GuardViolation("leading-sum evaluator: cyclic carriers");
    }
    depth[i] = d;
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)]; });
  return order;
}

struct LadderAccum {
  std::vector<std::vector<cplx>> acc;  // per rung, per grid node
  explicit LadderAccum(std::size_t rungs, std::size_t n) : acc(rungs, std::vector<cplx>(n, cplx{0, 0})) {}
};

// Kernel of one motive as a function of its carrier value, eps-ladder extrapolated:
// K(u) = int_0^inf ds e^{-eps s} [pure-u phase/weight] * conv(u, s).
std::vector<cplx> motive_kernel(const ConvolutionGrid& grid, const MotivePlan& mp,
                                const QuadratureConfig& cfg,
                                const std::vector<cplx>* weight_a,
                                const std::vector<cplx>* weight_b) {
  std::size_t n = grid.size();
  std::size_t rungs = cfg.eps_ladder.size();
  auto steps = static_cast<std::size_t>(std::llround(cfg.T_max / cfg.dt));
  if (steps % 2 == 1) ++steps;
  LadderAccum lad(rungs, n);

  std::vector<cplx> fa(n), fb(n), fj(n);
  for (std::size_t i = 0; i <= steps; ++i) {
    double s = static_cast<double>(i) * cfg.dt;
    double w_simp = (i == 0 || i == steps) ? cfg.dt / 3.0 : ((i % 2 == 1 ? 4.0 : 2.0) * cfg.dt / 3.0);
    double emin = cfg.eps_ladder.back() * s;
    if (emin > 36.0) break;
    for (std::size_t idx = 0; idx < n; ++idx) {
      double w = grid.W()[idx], om = grid.omega()[idx];
      fa[idx] = std::pow(w, mp.w_a) * std::exp(cplx{0.0, -s * mp.ph_a * om});
      fb[idx] = std::pow(w, mp.w_b) * std::exp(cplx{0.0, -s * mp.ph_b * om});
      fj[idx] = std::pow(w, mp.w_j) * std::exp(cplx{0.0, -s * mp.ph_j * om});
    }
    if (weight_a)
      for (std::size_t idx = 0; idx < n; ++idx) fa[idx] *= (*weight_a)[idx];
    if (weight_b)
      for (std::size_t idx = 0; idx < n; ++idx) fb[idx] *= (*weight_b)[idx];
    auto ta = grid.to_x(fa);
    auto tb = grid.to_x(fb);
    auto tj = grid.reverse(grid.to_x(fj));
    std::vector<cplx> prod(n);
    for (std::size_t idx = 0; idx < n; ++idx) prod[idx] = ta[idx] * tb[idx] * tj[idx];
    auto K = grid.to_k(std::move(prod), +1);  // sum_x prod(x) e^{+i 2 pi x v}
    // pure-carrier phase terms
    for (std::size_t idx = 0; idx < n; ++idx)
      K[idx] *= std::exp(cplx{0.0, -s * mp.ph_u * grid.omega()[idx]});
    for (std::size_t r = 0; r < rungs; ++r) {
      double damp = cfg.eps_ladder[r] * s;
      if (damp > 36.0) continue;
      double f = w_simp * std::exp(-damp);
      auto& a = lad.acc[r];
      for (std::size_t idx = 0; idx < n; ++idx) a[idx] += f * K[idx];
    }
  }
  // linear extrapolation over the 4 smallest rungs, per node
  std::vector<cplx> out(n);
  std::size_t use = std::min<std::size_t>(4, rungs);
  double sx = 0, sxx = 0;
  for (std::size_t r = rungs - use; r < rungs; ++r) {
    sx += cfg.eps_ladder[r];
    sxx += cfg.eps_ladder[r] * cfg.eps_ladder[r];
  }
  double mct = static_cast<double>(use);
  double denom = mct * sxx - sx * sx;
  for (std::size_t idx = 0; idx < n; ++idx) {
    cplx sy{0, 0}, sxy{0, 0};
    for (std::size_t r = rungs - use; r < rungs; ++r) {
      sy += lad.acc[r][idx];
      sxy += cfg.eps_ladder[r] * lad.acc[r][idx];
    }
    cplx slope = (mct * sxy - sx * sy) / denom;
    out[idx] = (sy - slope * sx) / mct;
  }
  return out;
}

// remap a grid function u -> f(c * u)
std::vector<cplx> remap(const ConvolutionGrid& grid, const std::vector<cplx>& f, int coeff) {
  if (coeff == 1) return f;
  return grid.reverse(f);
}

std::vector<cplx> evaluate_graph(const ConvolutionGrid& grid, const MomentumGraph& g, double t,
                                 const QuadratureConfig& cfg) {
  GraphPlan plan = make_plan(g);
  auto order = evaluation_order(plan);
  std::size_t n = grid.size();
  int m = static_cast<int>(plan.motives.size());

  // kernels propagate as slot weights toward the root
  std::vector<std::vector<cplx>> slot_weight;  // per slot index
  int max_slot = plan.root_slot;
  for (const auto& mp : plan.motives) max_slot = std::max({max_slot, mp.slot_a, mp.slot_b});
  slot_weight.assign(static_cast<std::size_t>(max_slot + 1), {});

  std::vector<cplx> root_weight(n, cplx{1.0, 0.0});
  for (int mi : order) {
    const MotivePlan& mp = plan.motives[static_cast<std::size_t>(mi)];
    // orientation flips of the integration variables also flip attached kernels
    std::vector<cplx> wa_store, wb_store;
    const std::vector<cplx>* wa = nullptr;
    const std::vector<cplx>* wb = nullptr;
    if (!slot_weight[static_cast<std::size_t>(mp.slot_a)].empty()) {
      wa_store = remap(grid, slot_weight[static_cast<std::size_t>(mp.slot_a)], mp.ori_a);
      wa = &wa_store;
    }
    if (!slot_weight[static_cast<std::size_t>(mp.slot_b)].empty()) {
      wb_store = remap(grid, slot_weight[static_cast<std::size_t>(mp.slot_b)], mp.ori_b);
      wb = &wb_store;
    }
    auto K = motive_kernel(grid, mp, cfg, wa, wb);
    auto Ku = remap(grid, K, mp.carrier_coeff);
    if (mp.carrier_slot == plan.root_slot) {
      for (std::size_t idx = 0; idx < n; ++idx) root_weight[idx] *= Ku[idx];
    } else {
      auto& tgt = slot_weight[static_cast<std::size_t>(mp.carrier_slot)];
      if (tgt.empty())
        tgt = std::move(Ku);
      else
        for (std::size_t idx = 0; idx < n; ++idx) tgt[idx] *= Ku[idx];
    }
  }

  // assemble: sign * t^m/m! * W(root)^{w_root} * root weight, remapped to the
  // observable orientation
  double tfac = 1.0;
  for (int j = 1; j <= m; ++j) tfac *= t / static_cast<double>(j);
  std::vector<cplx> out(n);
  for (std::size_t idx = 0; idx < n; ++idx)
    out[idx] = plan.sign * tfac * std::pow(grid.W()[idx], plan.w_root) * root_weight[idx];
  return remap(grid, out, plan.out_ori);
}

}  // namespace

cplx eval_leading_sum(int mm, const std::vector<double>& k, double t,
                      const DispersionRelation& disp, const GibbsParams& params,
                      const QuadratureConfig& config) {
  config.validate();
  if (mm < 0 || mm > 2) throw GuardViolation("eval_leading_sum: m must be in {0, 1, 2}");
  ConvolutionGrid grid(disp, params, config.M);
  KineticRate probe;
  probe.grid = grid.lattice();
  std::size_t ki = probe.index_of(k);
  if (mm == 0) return grid.W()[ki];

  int n = 2 * mm;
  auto histories = enumerate_histories(n, 1);
  auto pairings = enumerate_partitions(2 * n + 2, PartitionKind::PairingsOnly);
  std::vector<cplx> acc(grid.size(), cplx{0, 0});
  long long n_leading = 0;
  for (const auto& ell : histories) {
    for (const auto& S : pairings) {
      MomentumGraph g = build_main_graph(S, ell);
      build_spanning_tree(g);
      resolve_momenta(g);
      auto cls = classify(g);
      if (cls.cls != GraphClass::Leading) continue;
      ++n_leading;
      auto amp = evaluate_graph(grid, g, t, config);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += amp[i];
    }
  }
  if (n_leading == 0) throw NonConvergence("eval_leading_sum: no leading graphs enumerated");
  return acc[ki];
}

cplx stationarity_cancellation_residual(double horizon, const std::vector<double>& k0, int sigma,
                                        const DispersionRelation& disp, const GibbsParams& params,
                                        const QuadratureConfig& config) {
  config.validate();
  if (sigma != 1 && sigma != -1) throw ConfigError("stationarity residual: sigma must be +-1");
  ConvolutionGrid grid(disp, params, config.M);
  std::size_t n = grid.size();
  KineticRate probe;
  probe.grid = grid.lattice();
  std::size_t k0i = probe.index_of(k0);
  double W0 = grid.W()[k0i];
  double om0 = grid.omega()[k0i];

  auto steps = static_cast<std::size_t>(std::llround(horizon / config.dt));
  if (steps % 2 == 1) ++steps;
  double dt = horizon / static_cast<double>(steps);

  // sum over the 16 motive insertions at a bulk pairing of carrier momentum k0:
  // for each sign tau in {sigma, -sigma}:
  //   e^{-i s Omega(k, tau)} with weights (-2 W1W2W3 -+ 2 sigma W0W1W2
  //   + 2 W0W1W3 +- 2 sigma W0W2W3) where upper signs apply at tau = sigma.
  cplx acc{0, 0};
  std::vector<cplx> f1(n), f2(n), f3(n);
  for (std::size_t i = 0; i <= steps; ++i) {
    double s = static_cast<double>(i) * dt;
    double w_simp = (i == 0 || i == steps) ? dt / 3.0 : ((i % 2 == 1 ? 4.0 : 2.0) * dt / 3.0);
    cplx term{0, 0};
    for (int tau : {sigma, -sigma}) {
      double up = tau == sigma ? 1.0 : -1.0;
      // Omega(k, tau) = w(k3) - w(k1) + tau (w(k2) - w(k0))
      cplx phase0 = std::exp(cplx{0.0, s * tau * om0});
      auto conv = [&](bool w1, bool w2, bool w3) {
        for (std::size_t idx = 0; idx < n; ++idx) {
          double om = grid.omega()[idx], W = grid.W()[idx];
          f1[idx] = (w1 ? W : 1.0) * std::exp(cplx{0.0, s * om});
          f2[idx] = (w2 ? W : 1.0) * std::exp(cplx{0.0, -s * tau * om});
          f3[idx] = (w3 ? W : 1.0) * std::exp(cplx{0.0, -s * om});
        }
        auto t1 = grid.to_x(f1);
        auto t2 = grid.to_x(f2);
        auto t3 = grid.reverse(grid.to_x(f3));
        // sum_x t1 t2 t3 e^{i 2 pi x k0}: evaluate at k0 directly
        cplx r{0, 0};
        LatticeConfig lat = grid.lattice();
        for (std::size_t idx = 0; idx < n; ++idx) {
          auto x = lat.site(idx);
          double ph = 0.0;
          for (int c = 0; c < lat.d; ++c)
            ph += k0[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
          r += t1[idx] * t2[idx] * t3[idx] * std::exp(cplx{0.0, kTwoPi * ph});
        }
        return r;
      };
      cplx v = -2.0 * conv(true, true, true) + up * 2.0 * sigma * W0 * conv(true, true, false) +
               2.0 * W0 * conv(true, false, true) - up * 2.0 * sigma * W0 * conv(false, true, true);
      term += phase0 * v;
    }
    acc += w_simp * term;
  }
  return acc;
}

}  // namespace wavekin
