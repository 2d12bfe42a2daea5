#include "sbrrm/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

#include "sbrrm/socp_solver.hpp"

namespace sbrrm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PenaltyWeights default_penalties(const SystemConfig& cfg, const RateTable& ue_table,
                                 const AlgoParams& params) {
  // A tenth of the largest per-entry rate coefficient: early iterations can
  // still trade rate against integrality (a level at or above that
  // coefficient freezes the loop at its binary starting point); the
  // escalation supplies the "sufficiently large" end state.
  double w_max = 0.0;
  for (double w : cfg.weights) w_max = std::max(w_max, w);
  const double scale = 0.1 * w_max * ue_table[ue_table.size() - 1].rate_bps_hz;
  PenaltyWeights pen;
  pen.alpha = params.lambda_alpha > 0.0 ? params.lambda_alpha : scale;
  pen.beta = params.lambda_beta > 0.0 ? params.lambda_beta : scale;
  pen.kappa = params.lambda_kappa > 0.0 ? params.lambda_kappa : scale;
  return pen;
}

struct BinaryRef {
  enum Family { alpha, beta, kappa } family;
  int index;
};

// Pulls the relaxed binary values of a solver point into `state`.
void read_binaries(const VariableLayout& lay, const Eigen::VectorXd& x, BinaryState& state) {
  if (lay.off_alpha >= 0)
    for (int i = 0; i < lay.alpha_count(); ++i) state.alpha(i) = x(lay.off_alpha + i);
  for (int i = 0; i < lay.beta_count(); ++i) state.beta(i) = x(lay.off_beta + i);
  if (lay.off_kappa >= 0)
    for (int i = 0; i < lay.kappa_count(); ++i) state.kappa(i) = x(lay.off_kappa + i);
}

std::optional<BinaryRef> most_fractional(const VariableLayout& lay, const BinaryState& state,
                                         double tol) {
  BinaryRef best{BinaryRef::alpha, -1};
  double best_frac = tol;
  auto scan = [&](const Eigen::VectorXd& v, const std::vector<Pin>& pins,
                  BinaryRef::Family family) {
    for (int i = 0; i < v.size(); ++i) {
      if (pins[i] != Pin::free_var) continue;
      const double frac = std::abs(v(i) - std::round(v(i)));
      if (frac > best_frac) {
        best_frac = frac;
        best = {family, i};
      }
    }
  };
  // Family order alpha, beta, kappa; strict improvement keeps the earliest
  // family and lowest index on ties.
  scan(state.alpha, state.alpha_pin, BinaryRef::alpha);
  scan(state.beta, state.beta_pin, BinaryRef::beta);
  scan(state.kappa, state.kappa_pin, BinaryRef::kappa);
  if (best.index < 0) return std::nullopt;
  return best;
}

std::optional<BinaryRef> first_free(const BinaryState& state) {
  for (int i = 0; i < static_cast<int>(state.alpha_pin.size()); ++i)
    if (state.alpha_pin[i] == Pin::free_var) return BinaryRef{BinaryRef::alpha, i};
  for (int i = 0; i < static_cast<int>(state.beta_pin.size()); ++i)
    if (state.beta_pin[i] == Pin::free_var) return BinaryRef{BinaryRef::beta, i};
  for (int i = 0; i < static_cast<int>(state.kappa_pin.size()); ++i)
    if (state.kappa_pin[i] == Pin::free_var) return BinaryRef{BinaryRef::kappa, i};
  return std::nullopt;
}

void pin_entry(BinaryState& state, BinaryRef ref, bool to_one) {
  auto apply = [&](Eigen::VectorXd& v, std::vector<Pin>& pins) {
    pins[ref.index] = to_one ? Pin::one : Pin::zero;
    v(ref.index) = to_one ? 1.0 : 0.0;
  };
  switch (ref.family) {
    case BinaryRef::alpha: apply(state.alpha, state.alpha_pin); break;
    case BinaryRef::beta: apply(state.beta, state.beta_pin); break;
    case BinaryRef::kappa: apply(state.kappa, state.kappa_pin); break;
  }
}

BinaryState pin_state_to_values(const SystemConfig& cfg, int j_ue, int j_sbs,
                                const BinaryState& values) {
  return BinaryState::pin_all(cfg, j_ue, j_sbs, values.alpha, values.beta, values.kappa);
}

struct BnbOutcome {
  RrmStatus status = RrmStatus::failed;
  Eigen::VectorXd x;            // incumbent point (from the clean re-solve)
  double objective = 0.0;
  double bound = 0.0;
  double rel_gap = 0.0;
  int nodes = 0;
  std::string message;
};

/// Best-first branch-and-bound over the binary block of a conic relaxation.
/// Incumbents come from integral nodes (each confirmed by a fixed-binary
/// re-solve) and optionally from a rounding heuristic applied to the root
/// relaxation, which kick-starts pruning.
BnbOutcome branch_and_bound(
    const SystemConfig& cfg, int j_ue, int j_sbs, const VariableLayout& lay,
    const BinaryState& root_state,
    const std::function<conic::ConicProgram(const BinaryState&)>& build,
    const AlgoParams& params,
    const std::function<std::optional<BinaryState>(const BinaryState& root_values)>&
        root_heuristic = {}) {
  struct Node {
    BinaryState state;
    double parent_bound;
    int depth;
    std::int64_t seq;
  };
  struct Order {
    bool operator()(const Node& a, const Node& b) const {
      if (a.parent_bound != b.parent_bound) return a.parent_bound < b.parent_bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Node, std::vector<Node>, Order> open;
  std::int64_t seq = 0;
  open.push({root_state, std::numeric_limits<double>::infinity(), 0, seq++});

  BnbOutcome out;
  double incumbent = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd incumbent_x;
  double pruned_bound_max = -std::numeric_limits<double>::infinity();
  const double int_tol = 1e-6;
  int nodes = 0;
  bool hit_node_limit = false;

  // Node relaxations only feed bounds compared at the BnB gap; they do not
  // need the final-solution accuracy.
  conic::SolverOptions node_opts = params.solver;
  node_opts.gap_tol = std::max(node_opts.gap_tol, 1e-6);

  auto try_incumbent = [&](const BinaryState& pinned) {
    const conic::SolveReport clean = conic::solve(build(pinned), params.solver);
    if (clean.status == conic::SolveStatus::optimal && clean.objective > incumbent) {
      incumbent = clean.objective;
      incumbent_x = clean.x;
    }
  };

  while (!open.empty()) {
    if (nodes >= params.bnb_node_limit) {
      hit_node_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    // Best-first: the popped bound dominates everything left in the queue.
    if (incumbent > -std::numeric_limits<double>::infinity() &&
        node.parent_bound <= incumbent * (1.0 + params.bnb_rel_gap)) {
      pruned_bound_max = std::max(pruned_bound_max, node.parent_bound);
      break;
    }
    ++nodes;
    const conic::ConicProgram program = build(node.state);
    const conic::SolveReport report = conic::solve(program, node_opts);
    if (report.status == conic::SolveStatus::infeasible) continue;
    if (report.status != conic::SolveStatus::optimal) {
      // Unresolved node: keep searching below it without pruning.
      auto ref = first_free(node.state);
      if (!ref) continue;
      for (const bool to_one : {false, true}) {
        Node child{node.state, std::min(node.parent_bound, 1e300), node.depth + 1, seq++};
        pin_entry(child.state, *ref, to_one);
        open.push(std::move(child));
      }
      continue;
    }
    const double bound = report.objective;
    if (incumbent > -std::numeric_limits<double>::infinity() &&
        bound <= incumbent * (1.0 + params.bnb_rel_gap)) {
      pruned_bound_max = std::max(pruned_bound_max, bound);
      continue;
    }
    BinaryState values = node.state;
    read_binaries(lay, report.x, values);
    const auto branch_ref = most_fractional(lay, values, int_tol);
    if (!branch_ref) {
      // Integral node: confirm with a clean fixed-binary solve.
      try_incumbent(pin_state_to_values(cfg, j_ue, j_sbs, values));
      continue;
    }
    if (node.depth == 0 && root_heuristic) {
      if (const auto pinned = root_heuristic(values)) try_incumbent(*pinned);
    }
    for (const bool to_one : {false, true}) {
      Node child{node.state, bound, node.depth + 1, seq++};
      pin_entry(child.state, *branch_ref, to_one);
      open.push(std::move(child));
    }
  }

  double open_bound_max = -std::numeric_limits<double>::infinity();
  if (hit_node_limit) {
    while (!open.empty()) {
      open_bound_max = std::max(open_bound_max, open.top().parent_bound);
      open.pop();
    }
  }
  out.nodes = nodes;
  if (incumbent == -std::numeric_limits<double>::infinity()) {
    if (hit_node_limit) {
      out.status = RrmStatus::node_limit;
      out.message = "node limit reached without incumbent";
    } else {
      out.status = RrmStatus::infeasible;
    }
    return out;
  }
  out.objective = incumbent;
  out.x = incumbent_x;
  out.bound = std::max({incumbent, pruned_bound_max, open_bound_max});
  out.rel_gap = (out.bound - incumbent) / std::max(std::abs(incumbent), 1e-300);
  out.status = hit_node_limit ? RrmStatus::node_limit : RrmStatus::optimal;
  return out;
}

}  // namespace

const char* to_string(RrmStatus status) {
  switch (status) {
    case RrmStatus::optimal: return "optimal";
    case RrmStatus::feasible: return "feasible";
    case RrmStatus::infeasible: return "infeasible";
    case RrmStatus::node_limit: return "node-limit";
    case RrmStatus::failed: return "failed";
  }
  return "unknown";
}

RrmSolution solve_bnc_misocp(const SystemConfig& cfg, const RateTable& ue_table,
                             const RateTable& sbs_table, const ChannelSet& channels,
                             const AlgoParams& params) {
  const auto t0 = Clock::now();
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  const VariableLayout lay =
      VariableLayout::make(VariableLayout::Kind::full, cfg, j_ue, j_sbs);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  auto build = [&](const BinaryState& state) {
    return build_p0_relaxation(cfg, ue_table, sbs_table, channels, big_m, state);
  };
  auto root_heuristic = [&](const BinaryState& values) -> std::optional<BinaryState> {
    RrmVariables relaxed;
    relaxed.alpha = values.alpha;
    relaxed.beta = values.beta;
    relaxed.kappa = values.kappa;
    const RrmSolution rounded = round_and_repair(cfg, ue_table, sbs_table, channels, relaxed,
                                                 params, InitialPointMode::full);
    if (!rounded.succeeded()) return std::nullopt;
    return BinaryState::pin_all(cfg, j_ue, j_sbs, rounded.vars.alpha, rounded.vars.beta,
                                rounded.vars.kappa);
  };
  const BnbOutcome out =
      branch_and_bound(cfg, j_ue, j_sbs, lay, BinaryState::all_free(cfg, j_ue, j_sbs), build,
                       params, root_heuristic);
  RrmSolution sol;
  sol.status = out.status;
  sol.nodes_explored = out.nodes;
  sol.iterations = out.nodes;
  sol.bound = out.bound;
  sol.rel_gap = out.rel_gap;
  sol.message = out.message;
  if (out.status == RrmStatus::optimal || out.status == RrmStatus::node_limit) {
    sol.vars = extract_variables(lay, out.x);
    sol.objective = out.objective;
    sol.access_throughput = access_throughput_bps(cfg, ue_table, sol.vars.alpha);
    sol.backhaul_throughput = backhaul_throughput_bps(cfg, sbs_table, sol.vars.beta);
  }
  sol.wall_time_s = elapsed_s(t0);
  return sol;
}

RrmSolution solve_upper_bound(const SystemConfig& cfg, const RateTable& sbs_table,
                              const ChannelSet& channels, const AlgoParams& params) {
  const auto t0 = Clock::now();
  const int j_sbs = sbs_table.size();
  const VariableLayout lay =
      VariableLayout::make(VariableLayout::Kind::upper_bound, cfg, 1, j_sbs);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  auto build = [&](const BinaryState& state) {
    return build_pub_relaxation(cfg, sbs_table, channels, big_m, state);
  };
  auto root_heuristic = [&](const BinaryState& values) -> std::optional<BinaryState> {
    // Per-cluster argmax of the fractional rate selection.
    BinaryState pinned = BinaryState::all_free(cfg, 1, j_sbs);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(values.beta.size());
    for (int l = 0; l < cfg.num_clusters; ++l) {
      int argmax = 0;
      for (int j = 1; j < j_sbs; ++j)
        if (values.beta(l * j_sbs + j) > values.beta(l * j_sbs + argmax)) argmax = j;
      beta(l * j_sbs + argmax) = 1.0;
    }
    return BinaryState::pin_all(cfg, 1, j_sbs, pinned.alpha, beta, pinned.kappa);
  };
  const BnbOutcome out = branch_and_bound(cfg, 1, j_sbs, lay,
                                          BinaryState::all_free(cfg, 1, j_sbs), build, params,
                                          root_heuristic);
  RrmSolution sol;
  sol.status = out.status;
  sol.nodes_explored = out.nodes;
  sol.iterations = out.nodes;
  sol.bound = out.bound;
  sol.rel_gap = out.rel_gap;
  sol.message = out.message;
  if (out.status == RrmStatus::optimal || out.status == RrmStatus::node_limit) {
    sol.vars = extract_variables(lay, out.x);
    sol.objective = out.objective;
    sol.backhaul_throughput = out.objective;  // the program maximizes bps directly
  }
  sol.wall_time_s = elapsed_s(t0);
  return sol;
}

namespace {

// Random counting-feasible association matrix for one cluster, or failure.
bool sample_kappa(const SystemConfig& cfg, const std::vector<int>& admitted,
                  RandomStream& stream, std::vector<std::uint8_t>& kappa) {
  const int b_count = cfg.sbs_per_cluster;
  const int u_count = cfg.ue_per_cluster;
  kappa.assign(b_count * u_count, 0);
  std::vector<int> colsum(u_count, 0), rowsum(b_count, 0);
  auto link = [&](int b, int u) {
    kappa[b * u_count + u] = 1;
    ++colsum[u];
    ++rowsum[b];
  };
  // Every SBS serves someone.
  std::vector<int> order(b_count);
  for (int b = 0; b < b_count; ++b) order[b] = b;
  for (int b = b_count - 1; b > 0; --b)
    std::swap(order[b], order[stream.uniform_int(b + 1)]);
  for (int b : order) {
    std::vector<int> eligible;
    for (int u : admitted)
      if (colsum[u] < cfg.max_serving_sbs) eligible.push_back(u);
    if (eligible.empty()) return false;
    link(b, eligible[stream.uniform_int(eligible.size())]);
  }
  // Every admitted UE reaches its minimum SBS count.
  for (int u : admitted) {
    while (colsum[u] < cfg.min_serving_sbs) {
      std::vector<int> eligible;
      for (int b = 0; b < b_count; ++b)
        if (!kappa[b * u_count + u] && rowsum[b] < cfg.sbs_max_streams) eligible.push_back(b);
      if (eligible.empty()) return false;
      link(eligible[stream.uniform_int(eligible.size())], u);
    }
  }
  // Optional extra associations.
  for (int b = 0; b < b_count; ++b)
    for (int u : admitted) {
      if (kappa[b * u_count + u] || colsum[u] >= cfg.max_serving_sbs ||
          rowsum[b] >= cfg.sbs_max_streams) {
        continue;
      }
      if (stream.uniform() < 0.3) link(b, u);
    }
  return true;
}

bool row_pinned_zero(const BinaryState& base, int l, int u, int u_count, int j_ue) {
  for (int j = 0; j < j_ue; ++j)
    if (base.alpha_pin[(l * u_count + u) * j_ue + j] != Pin::zero) return false;
  return true;
}

conic::ConicProgram build_fixed(const SystemConfig& cfg, const RateTable& ue_table,
                                const RateTable& sbs_table, const ChannelSet& channels,
                                const BigMConstants& big_m, InitialPointMode mode,
                                const PredesignedBeams* beams, const BinaryState& pinned) {
  if (mode == InitialPointMode::full)
    return build_p0_relaxation(cfg, ue_table, sbs_table, channels, big_m, pinned);
  return build_rnp2_subproblem(cfg, ue_table, sbs_table, channels, *beams, big_m, pinned,
                               PenaltyWeights{});
}

}  // namespace

std::optional<InitialPoint> find_initial_point(const SystemConfig& cfg,
                                               const RateTable& ue_table,
                                               const RateTable& sbs_table,
                                               const ChannelSet& channels,
                                               const AlgoParams& params, InitialPointMode mode,
                                               const PredesignedBeams* beams,
                                               const BinaryState* base_state) {
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  const int u_count = cfg.ue_per_cluster;
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const RandomStream root(params.seed);
  const double budget_ratio = cfg.backhaul_bandwidth_hz / cfg.access_bandwidth_hz;
  const VariableLayout lay = VariableLayout::make(
      mode == InitialPointMode::full ? VariableLayout::Kind::full : VariableLayout::Kind::gains,
      cfg, j_ue, j_sbs);

  // Backhaul rate draws are confined per cluster to the profile achieved by
  // the backhaul-only bound: lowering targets below an achievable profile
  // keeps the multicast side feasible, so these draws never waste a solve on
  // a backhaul-impossible candidate. Access rate draws use a matched-filter
  // power-split estimate; every candidate is still tested through the
  // fixed-binary program.
  std::vector<int> beta_cap(cfg.num_clusters, j_sbs - 1);
  {
    AlgoParams ub_params = params;
    ub_params.seed = RandomStream(params.seed).stream("init.ub").key();
    const RrmSolution ub = solve_upper_bound(cfg, sbs_table, channels, ub_params);
    if (ub.succeeded()) {
      for (int l = 0; l < cfg.num_clusters; ++l) {
        beta_cap[l] = 0;
        for (int j = 0; j < j_sbs; ++j)
          if (std::round(ub.vars.beta(l * j_sbs + j)) == 1.0) beta_cap[l] = j;
      }
    } else if (ub.status == RrmStatus::infeasible) {
      return std::nullopt;  // no backhaul rate assignment is supportable at all
    }
  }
  std::vector<double> ue_sinr_est(cfg.total_ue(), 0.0);
  for (int l = 0; l < cfg.num_clusters; ++l)
    for (int u = 0; u < u_count; ++u) {
      double best_link = 0.0;
      for (int b = 0; b < cfg.sbs_per_cluster; ++b)
        best_link = std::max(
            best_link, channels.h(cfg.sbs_index(l, b), cfg.ue_index(l, u)).squaredNorm());
      ue_sinr_est[cfg.ue_index(l, u)] = cfg.sbs_power_w /
                                        std::max(1, cfg.ue_served_per_cluster) * best_link /
                                        cfg.ue_noise_w;
    }

  std::optional<InitialPoint> best;
  int found = 0;
  int solves = 0;
  for (int attempt = 0; attempt < params.initial_attempt_limit; ++attempt) {
    RandomStream stream = root.stream("init.sample", static_cast<std::uint64_t>(attempt));
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(cfg.total_ue() * j_ue);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(cfg.num_clusters * j_sbs);
    Eigen::VectorXd kappa = Eigen::VectorXd::Zero(cfg.total_sbs() * u_count);
    bool ok = true;
    double objective = 0.0;
    for (int l = 0; l < cfg.num_clusters && ok; ++l) {
      // Admission: a uniform U_served-subset of the selectable UEs.
      std::vector<int> pool;
      for (int u = 0; u < u_count; ++u) {
        if (base_state && row_pinned_zero(*base_state, l, u, u_count, j_ue)) continue;
        pool.push_back(u);
      }
      if (static_cast<int>(pool.size()) < cfg.ue_served_per_cluster) {
        ok = false;
        break;
      }
      for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i)
        std::swap(pool[i], pool[stream.uniform_int(i + 1)]);
      std::vector<int> admitted(pool.begin(), pool.begin() + cfg.ue_served_per_cluster);
      std::sort(admitted.begin(), admitted.end());

      // Rate/backhaul draw over the plausible target sets, resampled until
      // the binary-only budget C13 holds.
      const int beta_top = beta_cap[l];
      bool budget_ok = false;
      for (int draw = 0; draw < 64 && !budget_ok; ++draw) {
        for (int u : admitted)
          for (int j = 0; j < j_ue; ++j) alpha((l * u_count + u) * j_ue + j) = 0.0;
        double access_rate = 0.0;
        double cluster_objective = 0.0;
        for (int u : admitted) {
          int top = 0;
          while (top + 1 < j_ue &&
                 ue_table[top + 1].sinr_target <= ue_sinr_est[cfg.ue_index(l, u)])
            ++top;
          const int j = static_cast<int>(stream.uniform_int(top + 1));
          alpha((l * u_count + u) * j_ue + j) = 1.0;
          access_rate += ue_table[j].rate_bps_hz;
          cluster_objective += cfg.weight(l, u) * ue_table[j].rate_bps_hz;
        }
        const int bj = static_cast<int>(stream.uniform_int(beta_top + 1));
        for (int j = 0; j < j_sbs; ++j) beta(l * j_sbs + j) = 0.0;
        beta(l * j_sbs + bj) = 1.0;
        if (access_rate <= budget_ratio * sbs_table[bj].rate_bps_hz * (1.0 + 1e-12)) {
          budget_ok = true;
          objective += cluster_objective;
        }
      }
      if (!budget_ok) {
        ok = false;
        break;
      }
      std::vector<std::uint8_t> cluster_kappa;
      if (!sample_kappa(cfg, admitted, stream, cluster_kappa)) {
        ok = false;
        break;
      }
      for (int b = 0; b < cfg.sbs_per_cluster; ++b)
        for (int u = 0; u < u_count; ++u)
          kappa((l * cfg.sbs_per_cluster + b) * u_count + u) = cluster_kappa[b * u_count + u];
    }
    if (!ok) continue;
    if (best && objective <= best->objective && found >= params.initial_candidates) continue;

    const BinaryState pinned = BinaryState::pin_all(cfg, j_ue, j_sbs, alpha, beta, kappa);
    ++solves;
    const conic::SolveReport report = conic::solve(
        build_fixed(cfg, ue_table, sbs_table, channels, big_m, mode, beams, pinned),
        params.solver);
    if (std::getenv("SBRRM_DEBUG_INIT")) {
      std::string betas, rates;
      for (int l = 0; l < cfg.num_clusters; ++l)
        for (int j = 0; j < j_sbs; ++j)
          if (beta(l * j_sbs + j) == 1.0) betas += std::to_string(j) + " ";
      for (int i = 0; i < alpha.size(); ++i)
        if (alpha(i) == 1.0) rates += std::to_string(i % j_ue) + " ";
      std::fprintf(stderr, "attempt %d: beta[%s] rates[%s] obj %.4f -> %s (%.2fs, %d it)\n",
                   attempt, betas.c_str(), rates.c_str(), objective,
                   conic::to_string(report.status), report.wall_time_s, report.iterations);
    }
    if (report.status != conic::SolveStatus::optimal) continue;
    ++found;
    if (!best || objective > best->objective) {
      InitialPoint point;
      point.binaries = base_state ? *base_state : BinaryState::all_free(cfg, j_ue, j_sbs);
      point.binaries.alpha = alpha;
      point.binaries.beta = beta;
      point.binaries.kappa = kappa;
      point.vars = extract_variables(lay, report.x);
      point.objective = objective;
      point.attempts_used = attempt + 1;
      point.socp_solves = solves;
      best = std::move(point);
    }
    if (found >= params.initial_candidates) break;
  }
  return best;
}

namespace {

struct Rounded {
  Eigen::VectorXd alpha, beta, kappa;
  std::vector<std::vector<int>> admitted;  // per cluster
  std::vector<int> rate_of_ue;             // per global UE, -1 if unserved
};

// Deterministic association rebuild from preference weights.
bool rebuild_kappa(const SystemConfig& cfg, const std::vector<int>& admitted, int cluster,
                   const Eigen::VectorXd& pref, Eigen::VectorXd& kappa) {
  const int b_count = cfg.sbs_per_cluster;
  const int u_count = cfg.ue_per_cluster;
  auto kidx = [&](int b, int u) { return (cluster * b_count + b) * u_count + u; };
  auto weight = [&](int b, int u) { return pref(kidx(b, u)); };
  for (int b = 0; b < b_count; ++b)
    for (int u = 0; u < u_count; ++u) kappa(kidx(b, u)) = 0.0;
  std::vector<int> colsum(u_count, 0), rowsum(b_count, 0);

  // Minimum serving set per admitted UE, strongest preferences first.
  std::vector<int> order = admitted;
  std::sort(order.begin(), order.end(), [&](int a, int b2) {
    double ma = 0.0, mb = 0.0;
    for (int b = 0; b < b_count; ++b) {
      ma = std::max(ma, weight(b, a));
      mb = std::max(mb, weight(b, b2));
    }
    if (ma != mb) return ma > mb;
    return a < b2;
  });
  for (int u : order) {
    std::vector<int> rows(b_count);
    for (int b = 0; b < b_count; ++b) rows[b] = b;
    std::sort(rows.begin(), rows.end(), [&](int a, int b2) {
      if (weight(a, u) != weight(b2, u)) return weight(a, u) > weight(b2, u);
      return a < b2;
    });
    int placed = 0;
    for (int b : rows) {
      if (placed == cfg.min_serving_sbs) break;
      if (rowsum[b] >= cfg.sbs_max_streams) continue;
      kappa(kidx(b, u)) = 1.0;
      ++rowsum[b];
      ++colsum[u];
      ++placed;
    }
    if (placed < cfg.min_serving_sbs) return false;
  }
  // Cover SBSs that ended up idle.
  for (int b = 0; b < b_count; ++b) {
    if (rowsum[b] > 0) continue;
    int pick = -1;
    for (int u : admitted) {
      if (colsum[u] >= cfg.max_serving_sbs) continue;
      if (pick < 0 || weight(b, u) > weight(b, pick)) pick = u;
    }
    if (pick < 0) {
      // All admitted UEs saturated: steal the weakest link of the best UE
      // from a row that can spare one.
      for (int u : admitted)
        if (pick < 0 || weight(b, u) > weight(b, pick)) pick = u;
      if (pick < 0) return false;
      int drop_b = -1;
      for (int b2 = 0; b2 < b_count; ++b2) {
        if (!kappa(kidx(b2, pick)) || rowsum[b2] < 2) continue;
        if (drop_b < 0 || weight(b2, pick) < weight(drop_b, pick)) drop_b = b2;
      }
      if (drop_b < 0) return false;
      kappa(kidx(drop_b, pick)) = 0.0;
      --rowsum[drop_b];
      --colsum[pick];
    }
    kappa(kidx(b, pick)) = 1.0;
    ++rowsum[b];
    ++colsum[pick];
  }
  // Keep any remaining strong fractional associations.
  for (int b = 0; b < b_count; ++b)
    for (int u : admitted) {
      if (kappa(kidx(b, u)) > 0.0 || weight(b, u) < 0.5) continue;
      if (colsum[u] >= cfg.max_serving_sbs || rowsum[b] >= cfg.sbs_max_streams) continue;
      kappa(kidx(b, u)) = 1.0;
      ++rowsum[b];
      ++colsum[u];
    }
  return true;
}

// Clamps the admitted rates down until they fit the backhaul budget of the
// chosen beta (the budget constraint is binary-only, so an unclamped rounding
// would be statically infeasible and no beam could mend it).
void enforce_budget(const SystemConfig& cfg, const RateTable& ue_table,
                    const RateTable& sbs_table, int l, int beta_j, Rounded& r) {
  const int j_ue = ue_table.size();
  const double budget = cfg.backhaul_bandwidth_hz / cfg.access_bandwidth_hz *
                        sbs_table[beta_j].rate_bps_hz;
  auto total = [&] {
    double acc = 0.0;
    for (int u : r.admitted[l]) acc += ue_table[r.rate_of_ue[cfg.ue_index(l, u)]].rate_bps_hz;
    return acc;
  };
  while (total() > budget * (1.0 + 1e-12)) {
    int pick = -1;
    for (int u : r.admitted[l]) {
      const int j = r.rate_of_ue[cfg.ue_index(l, u)];
      if (j <= 0) continue;
      if (pick < 0 || j > r.rate_of_ue[cfg.ue_index(l, pick)]) pick = u;
    }
    if (pick < 0) break;  // everyone already at the lowest rate
    const int ue = cfg.ue_index(l, pick);
    const int j_old = r.rate_of_ue[ue];
    r.alpha((l * cfg.ue_per_cluster + pick) * j_ue + j_old) = 0.0;
    r.alpha((l * cfg.ue_per_cluster + pick) * j_ue + j_old - 1) = 1.0;
    r.rate_of_ue[ue] = j_old - 1;
  }
}

Rounded round_binaries(const SystemConfig& cfg, const RateTable& ue_table,
                       const RateTable& sbs_table, const RrmVariables& relaxed,
                       const BinaryState* base_state) {
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  const int u_count = cfg.ue_per_cluster;
  Rounded r;
  r.alpha = Eigen::VectorXd::Zero(relaxed.alpha.size());
  r.beta = Eigen::VectorXd::Zero(relaxed.beta.size());
  r.kappa = Eigen::VectorXd::Zero(relaxed.kappa.size());
  r.admitted.resize(cfg.num_clusters);
  r.rate_of_ue.assign(cfg.total_ue(), -1);
  for (int l = 0; l < cfg.num_clusters; ++l) {
    std::vector<int> candidates;
    for (int u = 0; u < u_count; ++u) {
      if (base_state && row_pinned_zero(*base_state, l, u, u_count, j_ue)) continue;
      candidates.push_back(u);
    }
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      double ma = 0.0, mb = 0.0;
      for (int j = 0; j < j_ue; ++j) {
        ma += relaxed.alpha((l * u_count + a) * j_ue + j);
        mb += relaxed.alpha((l * u_count + b) * j_ue + j);
      }
      if (ma != mb) return ma > mb;
      return a < b;
    });
    const int take = std::min<int>(cfg.ue_served_per_cluster, candidates.size());
    for (int i = 0; i < take; ++i) {
      const int u = candidates[i];
      int jstar = 0;
      for (int j = 1; j < j_ue; ++j)
        if (relaxed.alpha((l * u_count + u) * j_ue + j) >
            relaxed.alpha((l * u_count + u) * j_ue + jstar))
          jstar = j;
      r.alpha((l * u_count + u) * j_ue + jstar) = 1.0;
      r.admitted[l].push_back(u);
      r.rate_of_ue[cfg.ue_index(l, u)] = jstar;
    }
    std::sort(r.admitted[l].begin(), r.admitted[l].end());
    // Backhaul rate: the relaxation's own argmax (the conic rows already tie
    // the relaxed beta to what the multicast side supports).
    int beta_j = 0;
    for (int j = 1; j < j_sbs; ++j)
      if (relaxed.beta(l * j_sbs + j) > relaxed.beta(l * j_sbs + beta_j)) beta_j = j;
    r.beta(l * j_sbs + beta_j) = 1.0;
    enforce_budget(cfg, ue_table, sbs_table, l, beta_j, r);
    rebuild_kappa(cfg, r.admitted[l], l, relaxed.kappa, r.kappa);
  }
  return r;
}

}  // namespace

RrmSolution round_and_repair(const SystemConfig& cfg, const RateTable& ue_table,
                             const RateTable& sbs_table, const ChannelSet& channels,
                             const RrmVariables& relaxed, const AlgoParams& params,
                             InitialPointMode mode, const PredesignedBeams* beams,
                             const BinaryState* base_state) {
  const auto t0 = Clock::now();
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  const int u_count = cfg.ue_per_cluster;
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const VariableLayout lay = VariableLayout::make(
      mode == InitialPointMode::full ? VariableLayout::Kind::full : VariableLayout::Kind::gains,
      cfg, j_ue, j_sbs);

  RrmSolution sol;
  Rounded rounded = round_binaries(cfg, ue_table, sbs_table, relaxed, base_state);

  // Repair alternates between lowering the most demanding backhaul rate
  // (demotion cannot fix a backhaul-side miss) and the demote/promote swap.
  const int max_rounds = 2 * cfg.sbs_per_cluster;
  for (int round = 0; round <= max_rounds; ++round) {
    const BinaryState pinned =
        BinaryState::pin_all(cfg, j_ue, j_sbs, rounded.alpha, rounded.beta, rounded.kappa);
    const conic::SolveReport report = conic::solve(
        build_fixed(cfg, ue_table, sbs_table, channels, big_m, mode, beams, pinned),
        params.solver);
    if (report.status == conic::SolveStatus::optimal) {
      sol.status = RrmStatus::feasible;
      sol.vars = extract_variables(lay, report.x);
      if (mode == InitialPointMode::gains) expand_gains(cfg, *beams, sol.vars);
      sol.objective = weighted_rate_objective(cfg, ue_table, sol.vars.alpha);
      sol.access_throughput = access_throughput_bps(cfg, ue_table, sol.vars.alpha);
      sol.backhaul_throughput = backhaul_throughput_bps(cfg, sbs_table, sol.vars.beta);
      sol.repair_rounds = round;
      sol.wall_time_s = elapsed_s(t0);
      return sol;
    }
    if (round == max_rounds) break;

    if (round % 2 == 0) {
      // Lower the highest selected backhaul rate by one notch and re-clamp.
      int pick_l = -1, pick_j = -1;
      for (int l = 0; l < cfg.num_clusters; ++l)
        for (int j = 1; j < j_sbs; ++j)
          if (rounded.beta(l * j_sbs + j) == 1.0 && j > pick_j) {
            pick_j = j;
            pick_l = l;
          }
      if (pick_l >= 0) {
        rounded.beta(pick_l * j_sbs + pick_j) = 0.0;
        rounded.beta(pick_l * j_sbs + pick_j - 1) = 1.0;
        enforce_budget(cfg, ue_table, sbs_table, pick_l, pick_j - 1, rounded);
        continue;
      }
      // Every cluster already at the lowest rate: fall through to demotion.
    }

    // Demote the admitted UE with the smallest weighted rate; promote the
    // strongest remaining candidate in the same cluster at the lowest rate.
    int worst_l = -1, worst_u = -1;
    double worst_value = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l)
      for (int u : rounded.admitted[l]) {
        const int j = rounded.rate_of_ue[cfg.ue_index(l, u)];
        const double value = cfg.weight(l, u) * ue_table[j].rate_bps_hz;
        if (value < worst_value) {
          worst_value = value;
          worst_l = l;
          worst_u = u;
        }
      }
    if (worst_l < 0) break;
    int promote = -1;
    double promote_mass = -1.0;
    for (int u = 0; u < u_count; ++u) {
      if (base_state && row_pinned_zero(*base_state, worst_l, u, u_count, j_ue)) continue;
      if (std::find(rounded.admitted[worst_l].begin(), rounded.admitted[worst_l].end(), u) !=
          rounded.admitted[worst_l].end()) {
        continue;
      }
      double mass = 0.0;
      for (int j = 0; j < j_ue; ++j) mass += relaxed.alpha((worst_l * u_count + u) * j_ue + j);
      if (mass > promote_mass) {
        promote_mass = mass;
        promote = u;
      }
    }
    if (promote < 0) continue;  // nothing to swap in; try the other action

    for (int j = 0; j < j_ue; ++j) rounded.alpha((worst_l * u_count + worst_u) * j_ue + j) = 0.0;
    rounded.alpha((worst_l * u_count + promote) * j_ue + 0) = 1.0;
    auto& adm = rounded.admitted[worst_l];
    adm.erase(std::remove(adm.begin(), adm.end(), worst_u), adm.end());
    adm.push_back(promote);
    std::sort(adm.begin(), adm.end());
    rounded.rate_of_ue[cfg.ue_index(worst_l, worst_u)] = -1;
    rounded.rate_of_ue[cfg.ue_index(worst_l, promote)] = 0;
    rebuild_kappa(cfg, adm, worst_l, relaxed.kappa, rounded.kappa);
  }

  sol.status = RrmStatus::failed;
  sol.message = "unrepairable after repair rounds";
  sol.wall_time_s = elapsed_s(t0);
  return sol;
}

namespace {

RrmSolution run_relax_and_penalize(const SystemConfig& cfg, const RateTable& ue_table,
                                   const RateTable& sbs_table, const ChannelSet& channels,
                                   const AlgoParams& params, InitialPointMode mode,
                                   const PredesignedBeams* beams,
                                   const BinaryState* base_state) {
  const auto t0 = Clock::now();
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  const VariableLayout lay = VariableLayout::make(
      mode == InitialPointMode::full ? VariableLayout::Kind::full : VariableLayout::Kind::gains,
      cfg, j_ue, j_sbs);
  const BigMConstants big_m = compute_big_m(channels, cfg);

  RrmSolution sol;
  const auto init =
      find_initial_point(cfg, ue_table, sbs_table, channels, params, mode, beams, base_state);
  if (!init) {
    sol.status = RrmStatus::failed;
    sol.message = "no feasible initial point";
    sol.wall_time_s = elapsed_s(t0);
    return sol;
  }

  PenaltyWeights pen = default_penalties(cfg, ue_table, params);
  const double lambda_cap = pen.alpha * params.lambda_cap_factor;

  BinaryState ref = init->binaries;
  RrmVariables relaxed = init->vars;
  std::vector<IterationTrace> trace;
  {
    IterationTrace it;
    it.iteration = 0;
    it.weighted_rate = init->objective;
    it.surrogate = init->objective;
    it.penalized = init->objective;
    it.binary_mse = 0.0;
    it.lambda_alpha = pen.alpha;
    it.wall_time_s = elapsed_s(t0);
    trace.push_back(it);
  }

  int total_iters = 0;
  bool failed = false;
  bool ties_broken = false;
  double mse = 1.0;
  while (true) {
    double prev_surrogate = -std::numeric_limits<double>::infinity();
    for (int t = 1; t <= params.max_mm_iterations; ++t) {
      conic::ConicProgram program =
          mode == InitialPointMode::full
              ? build_rnp1_subproblem(cfg, ue_table, sbs_table, channels, big_m, ref, pen)
              : build_rnp2_subproblem(cfg, ue_table, sbs_table, channels, *beams, big_m, ref,
                                      pen);
      const conic::SolveReport report = conic::solve(program, params.solver);
      if (report.status != conic::SolveStatus::optimal) {
        failed = true;
        sol.message = std::string("subproblem ") + conic::to_string(report.status);
        break;
      }
      ++total_iters;
      relaxed = extract_variables(lay, report.x);
      BinaryState values = ref;
      values.alpha = relaxed.alpha;
      values.beta = relaxed.beta;
      values.kappa = relaxed.kappa;
      const double rate = weighted_rate_objective(cfg, ue_table, relaxed.alpha);
      const double surrogate = report.objective + penalty_constant(ref, pen);
      const double penalized = rate - exact_penalty(values, pen);
      mse = binary_mse(values);

      IterationTrace it;
      it.iteration = total_iters;
      it.weighted_rate = rate;
      it.surrogate = surrogate;
      it.penalized = penalized;
      it.binary_mse = mse;
      it.lambda_alpha = pen.alpha;
      it.wall_time_s = elapsed_s(t0);
      trace.push_back(it);

      ref.alpha = values.alpha;
      ref.beta = values.beta;
      ref.kappa = values.kappa;
      const bool improvement_stop =
          surrogate - prev_surrogate <=
          params.objective_improvement_tol * std::max(1e-12, std::abs(surrogate));
      prev_surrogate = surrogate;
      if (mse <= params.binary_mse_tol || improvement_stop) break;
    }
    if (failed || mse <= params.binary_mse_tol) break;
    if (pen.alpha * params.lambda_escalation <= lambda_cap) {
      pen.alpha *= params.lambda_escalation;
      pen.beta *= params.lambda_escalation;
      pen.kappa *= params.lambda_escalation;
      continue;
    }
    if (ties_broken) break;
    // Exactly balanced fractional pairs are stationary for the linearized
    // penalty at any weight; one epoch around the deterministic rounding
    // splits them.
    ties_broken = true;
    const Rounded rounded = round_binaries(cfg, ue_table, sbs_table, relaxed, base_state);
    ref.alpha = rounded.alpha;
    ref.beta = rounded.beta;
    ref.kappa = rounded.kappa;
  }

  if (failed) {
    sol.status = RrmStatus::failed;
    sol.trace = std::move(trace);
    sol.iterations = total_iters;
    sol.wall_time_s = elapsed_s(t0);
    return sol;
  }

  sol = round_and_repair(cfg, ue_table, sbs_table, channels, relaxed, params, mode, beams,
                         base_state);
  sol.trace = std::move(trace);
  sol.iterations = total_iters;
  sol.wall_time_s = elapsed_s(t0);
  return sol;
}

}  // namespace

RrmSolution solve_rnp1(const SystemConfig& cfg, const RateTable& ue_table,
                       const RateTable& sbs_table, const ChannelSet& channels,
                       const AlgoParams& params, const BinaryState* base_state) {
  return run_relax_and_penalize(cfg, ue_table, sbs_table, channels, params,
                                InitialPointMode::full, nullptr, base_state);
}

RrmSolution solve_rnp2(const SystemConfig& cfg, const RateTable& ue_table,
                       const RateTable& sbs_table, const ChannelSet& channels,
                       const AlgoParams& params, const PredesignedBeams& beams,
                       const BinaryState* base_state) {
  return run_relax_and_penalize(cfg, ue_table, sbs_table, channels, params,
                                InitialPointMode::gains, &beams, base_state);
}

PredesignedBeams predesign_beams(const SystemConfig& cfg, const RateTable& sbs_table,
                                 const Topology& topology, const ChannelModelParams& chan_params,
                                 const ChannelSet& channels, const AlgoParams& params) {
  const RandomStream root(params.seed);
  std::vector<std::vector<Eigen::VectorXcd>> ub_beams;
  for (int k = 0; k < params.predesign_realizations; ++k) {
    const std::uint64_t draw_seed = root.stream("predesign", static_cast<std::uint64_t>(k)).key();
    const ChannelSet draw = generate_channels(topology, cfg, chan_params, draw_seed);
    const RrmSolution ub = solve_upper_bound(cfg, sbs_table, draw, params);
    if (ub.status == RrmStatus::optimal || ub.status == RrmStatus::node_limit)
      ub_beams.push_back(ub.vars.m);
  }
  if (ub_beams.empty()) {
    // Degenerate fallback: steer at each cluster's strongest SBS channel.
    std::vector<Eigen::VectorXcd> steer(cfg.num_clusters);
    for (int l = 0; l < cfg.num_clusters; ++l) {
      int best_b = cfg.sbs_index(l, 0);
      for (int b = 1; b < cfg.sbs_per_cluster; ++b)
        if (channels.g(cfg.sbs_index(l, b)).norm() > channels.g(best_b).norm())
          best_b = cfg.sbs_index(l, b);
      steer[l] = channels.g(best_b).normalized();
    }
    ub_beams.push_back(std::move(steer));
  }
  return make_predesigned_beams(cfg, channels, design_zf_beams(channels, cfg),
                                design_multicast_beams(ub_beams));
}

std::string trace_to_csv(const std::vector<IterationTrace>& trace) {
  std::ostringstream out;
  out << "iteration,weighted_rate,surrogate,penalized,binary_mse,lambda_alpha,wall_time_s\n";
  out.precision(17);
  for (const IterationTrace& it : trace) {
    out << it.iteration << ',' << it.weighted_rate << ',' << it.surrogate << ','
        << it.penalized << ',' << it.binary_mse << ',' << it.lambda_alpha << ','
        << it.wall_time_s << '\n';
  }
  return out.str();
}

}  // namespace sbrrm
