#include "sbrrm/socp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "sbrrm/linalg.hpp"

namespace sbrrm::conic {
namespace {

struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;
  double rhs = 0.0;  // standard-form right-hand side
};

void sort_and_merge(std::vector<int>& idx, std::vector<double>& val) {
  const std::size_t n = idx.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return idx[a] < idx[b];
  });
  std::vector<int> oi;
  std::vector<double> ov;
  oi.reserve(n);
  ov.reserve(n);
  for (std::size_t k : order) {
    if (!oi.empty() && oi.back() == idx[k]) {
      ov.back() += val[k];
    } else {
      oi.push_back(idx[k]);
      ov.push_back(val[k]);
    }
  }
  idx.clear();
  val.clear();
  for (std::size_t k = 0; k < oi.size(); ++k) {
    if (ov[k] != 0.0) {
      idx.push_back(oi[k]);
      val.push_back(ov[k]);
    }
  }
}

enum class VarKind { kept, fixed, aux };

struct VarState {
  VarKind kind = VarKind::kept;
  int kept_index = -1;
  double fixed_value = 0.0;
  int defining_row = -1;  // for aux: original row index that binds it
};

// Affine expression over kept variables.
struct Affine {
  std::vector<int> idx;
  std::vector<double> val;
  double constant = 0.0;
};

/// Compact standard-form problem
///   min c.y  s.t.  A y = b,  G y + s = h,  s in R+^{n_lp} x SOC(d_1) x ...
struct StdForm {
  int n = 0;
  int n_lp = 0;
  std::vector<SparseRow> a_rows;
  std::vector<SparseRow> g_rows;  // LP rows first, then SOC blocks in order
  std::vector<int> cone_dims;
  Eigen::VectorXd c;
  bool trivially_infeasible = false;
};

struct Translation {
  StdForm std_form;
  std::vector<VarState> vars;  // per original variable
};

Affine to_affine(const std::vector<int>& cols, const std::vector<double>& coeffs,
                 double constant, const std::vector<VarState>& vars,
                 const ConicProgram& program) {
  Affine out;
  out.constant = constant;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const VarState& st = vars[cols[k]];
    const double a = coeffs[k];
    switch (st.kind) {
      case VarKind::kept:
        out.idx.push_back(st.kept_index);
        out.val.push_back(a);
        break;
      case VarKind::fixed:
        out.constant += a * st.fixed_value;
        break;
      case VarKind::aux: {
        // v = (rhs - sum_others) / coeff_v from its defining equality row.
        const LinearRow& row = program.rows[st.defining_row];
        double cv = 0.0;
        for (std::size_t r = 0; r < row.cols.size(); ++r)
          if (row.cols[r] == cols[k]) cv += row.coeffs[r];
        const double inv = a / cv;
        out.constant += inv * row.rhs;
        for (std::size_t r = 0; r < row.cols.size(); ++r) {
          if (row.cols[r] == cols[k]) continue;
          const VarState& st2 = vars[row.cols[r]];
          const double a2 = -inv * row.coeffs[r];
          if (st2.kind == VarKind::kept) {
            out.idx.push_back(st2.kept_index);
            out.val.push_back(a2);
          } else if (st2.kind == VarKind::fixed) {
            out.constant += a2 * st2.fixed_value;
          } else {
            // Chained auxiliaries are not produced by the builder; treat the
            // enclosing variable as kept instead (handled by the caller's
            // eligibility check), so this branch is unreachable.
          }
        }
        break;
      }
    }
  }
  sort_and_merge(out.idx, out.val);
  return out;
}

Translation translate(const ConicProgram& program) {
  Translation tr;
  const int n = program.num_variables;
  tr.vars.assign(n, VarState{});

  // Occurrence counts to find builder auxiliaries.
  std::vector<int> row_count(n, 0), eq_row(n, -1), cone_count(n, 0);
  for (std::size_t r = 0; r < program.rows.size(); ++r) {
    for (int cidx : program.rows[r].cols) {
      row_count[cidx]++;
      if (program.rows[r].sense == RowSense::eq) eq_row[cidx] = static_cast<int>(r);
    }
  }
  for (const SecondOrderCone& cone : program.cones) {
    cone_count[cone.head]++;
    for (int m : cone.members) cone_count[m]++;
  }

  std::vector<bool> row_consumed(program.rows.size(), false);
  std::vector<bool> aux_candidate(n, false);
  for (int i = 0; i < n; ++i) {
    if (program.lower[i] == program.upper[i]) {
      tr.vars[i].kind = VarKind::fixed;
      tr.vars[i].fixed_value = program.lower[i];
      continue;
    }
    const bool free_var = program.lower[i] == -kInf && program.upper[i] == kInf;
    aux_candidate[i] = free_var && program.objective[i] == 0.0 && row_count[i] == 1 &&
                       eq_row[i] >= 0 && cone_count[i] == 1 &&
                       program.rows[eq_row[i]].sense == RowSense::eq;
  }
  // An auxiliary may not be defined through another auxiliary.
  for (int i = 0; i < n; ++i) {
    if (!aux_candidate[i]) continue;
    const LinearRow& row = program.rows[eq_row[i]];
    bool ok = true;
    double cv = 0.0;
    for (std::size_t r = 0; r < row.cols.size(); ++r) {
      if (row.cols[r] == i) {
        cv += row.coeffs[r];
      } else if (aux_candidate[row.cols[r]]) {
        ok = false;
      }
    }
    if (ok && cv != 0.0) {
      tr.vars[i].kind = VarKind::aux;
      tr.vars[i].defining_row = eq_row[i];
      row_consumed[eq_row[i]] = true;
    }
  }
  int kept = 0;
  for (int i = 0; i < n; ++i) {
    if (tr.vars[i].kind == VarKind::kept) tr.vars[i].kept_index = kept++;
  }

  StdForm& sf = tr.std_form;
  sf.n = kept;
  sf.c = Eigen::VectorXd::Zero(kept);
  for (int i = 0; i < n; ++i) {
    if (tr.vars[i].kind == VarKind::kept) {
      sf.c(tr.vars[i].kept_index) = -program.objective[i];  // maximize -> min
    }
  }

  const double ctol = 1e-9;
  std::vector<SparseRow> lp_rows;
  for (std::size_t r = 0; r < program.rows.size(); ++r) {
    if (row_consumed[r]) continue;
    const LinearRow& row = program.rows[r];
    Affine e = to_affine(row.cols, row.coeffs, 0.0, tr.vars, program);
    const double rhs = row.rhs - e.constant;
    if (e.idx.empty()) {
      const double scale = std::max(1.0, std::abs(row.rhs));
      const bool bad = row.sense == RowSense::eq ? std::abs(rhs) > ctol * scale
                                                 : rhs < -ctol * scale;
      if (bad) sf.trivially_infeasible = true;
      continue;
    }
    SparseRow out{e.idx, e.val, rhs};
    if (row.sense == RowSense::eq) {
      sf.a_rows.push_back(std::move(out));
    } else {
      lp_rows.push_back(std::move(out));  // a.y <= rhs  ->  s = rhs - a.y >= 0
    }
  }
  for (int i = 0; i < n; ++i) {
    if (tr.vars[i].kind != VarKind::kept) continue;
    const int k = tr.vars[i].kept_index;
    if (program.upper[i] < kInf) lp_rows.push_back({{k}, {1.0}, program.upper[i]});
    if (program.lower[i] > -kInf) lp_rows.push_back({{k}, {-1.0}, -program.lower[i]});
  }
  sf.n_lp = static_cast<int>(lp_rows.size());
  sf.g_rows = std::move(lp_rows);

  for (const SecondOrderCone& cone : program.cones) {
    std::vector<Affine> slots;
    slots.push_back(to_affine({cone.head}, {1.0}, 0.0, tr.vars, program));
    for (int m : cone.members) slots.push_back(to_affine({m}, {1.0}, 0.0, tr.vars, program));
    bool all_const = true;
    for (const Affine& s : slots) all_const = all_const && s.idx.empty();
    if (all_const) {
      double norm2 = 0.0;
      for (std::size_t k = 1; k < slots.size(); ++k) norm2 += slots[k].constant * slots[k].constant;
      if (std::sqrt(norm2) > slots[0].constant + ctol * std::max(1.0, slots[0].constant))
        sf.trivially_infeasible = true;
      continue;
    }
    // s_slot = h - G y with s = slot expression: G row = -coeffs, h = constant.
    for (Affine& s : slots) {
      SparseRow out{std::move(s.idx), std::move(s.val), s.constant};
      for (double& v : out.val) v = -v;
      sf.g_rows.push_back(std::move(out));
    }
    sf.cone_dims.push_back(static_cast<int>(slots.size()));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Cone scaling state (Nesterov-Todd).
// ---------------------------------------------------------------------------

struct SocScaling {
  int dim = 0;
  int offset = 0;  // start in the s/z vectors
  double eta_sq = 1.0;
  Eigen::VectorXd wbar;  // normalized NT point
};

struct Scalings {
  int n_lp = 0;
  Eigen::VectorXd lp_v;  // s ./ z on the LP cone
  std::vector<SocScaling> socs;
  bool identity = true;

  // lambda = W z
  void apply_w(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
    if (identity) {
      out = z;
      return;
    }
    out.resize(z.size());
    out.head(n_lp) = lp_v.cwiseSqrt().cwiseProduct(z.head(n_lp));
    for (const SocScaling& sc : socs) {
      const auto zk = z.segment(sc.offset, sc.dim);
      const double a = sc.wbar(0);
      const double eta = std::sqrt(sc.eta_sq);
      const double zeta = sc.wbar.tail(sc.dim - 1).dot(zk.tail(sc.dim - 1));
      const double factor = zk(0) + zeta / (1.0 + a);
      out(sc.offset) = eta * (a * zk(0) + zeta);
      out.segment(sc.offset + 1, sc.dim - 1) =
          eta * (zk.tail(sc.dim - 1) + factor * sc.wbar.tail(sc.dim - 1));
    }
  }

  // out = W^2 x
  void apply_w2(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    if (identity) {
      out = x;
      return;
    }
    out.resize(x.size());
    out.head(n_lp) = lp_v.cwiseProduct(x.head(n_lp));
    for (const SocScaling& sc : socs) {
      const auto xk = x.segment(sc.offset, sc.dim);
      const double dot = sc.wbar.dot(xk);
      out(sc.offset) = sc.eta_sq * (2.0 * sc.wbar(0) * dot - xk(0));
      out.segment(sc.offset + 1, sc.dim - 1) =
          sc.eta_sq * (2.0 * dot * sc.wbar.tail(sc.dim - 1) + xk.tail(sc.dim - 1));
    }
  }

  // out = W^-2 x
  void apply_w2inv(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    if (identity) {
      out = x;
      return;
    }
    out.resize(x.size());
    out.head(n_lp) = x.head(n_lp).cwiseQuotient(lp_v);
    for (const SocScaling& sc : socs) {
      const auto xk = x.segment(sc.offset, sc.dim);
      // W^-2 = eta^-2 (2 vbar vbar' - J), vbar = J wbar.
      const double vdot = sc.wbar(0) * xk(0) - sc.wbar.tail(sc.dim - 1).dot(xk.tail(sc.dim - 1));
      out(sc.offset) = (2.0 * vdot * sc.wbar(0) - xk(0)) / sc.eta_sq;
      out.segment(sc.offset + 1, sc.dim - 1) =
          (-2.0 * vdot * sc.wbar.tail(sc.dim - 1) + xk.tail(sc.dim - 1)) / sc.eta_sq;
    }
  }
};

// ---------------------------------------------------------------------------
// The interior-point engine.
// ---------------------------------------------------------------------------

struct EngineSettings {
  double gamma = 0.99;
  double stepmin = 1e-6;
  double stepmax = 0.999;
  double sigmamin = 1e-4;
  double sigmamax = 0.9999;
  double deltastat = 7e-8;
  double linsysacc = 1e-13;
  int nitref = 2;
  double safeguard = 500.0;
  int equil_iters = 3;
  double feastol_inacc = 1e-4;
  double reltol_inacc = 5e-5;
};

class Engine {
 public:
  Engine(StdForm sf, const SolverOptions& opts) : sf_(std::move(sf)), opts_(opts) {
    n_ = sf_.n;
    p_ = static_cast<int>(sf_.a_rows.size());
    m_ = static_cast<int>(sf_.g_rows.size());
    b_.resize(p_);
    for (int r = 0; r < p_; ++r) b_(r) = sf_.a_rows[r].rhs;
    h_.resize(m_);
    for (int r = 0; r < m_; ++r) h_(r) = sf_.g_rows[r].rhs;
    c_ = sf_.c;
    n_cones_ = static_cast<int>(sf_.cone_dims.size());
  }

  SolveStatus run(Eigen::VectorXd& x_out, int& iters, double& dual_res, double& rel_gap);

 private:
  void equilibrate();
  void build_cone_offsets();
  bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z);
  bool factor_kkt();
  bool factor_kkt_with(double delta);
  void solve_kkt(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                 const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                 Eigen::VectorXd& dz, int refine_rounds);
  void mat_a(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  void mat_at(const Eigen::VectorXd& y, Eigen::VectorXd& out) const;
  void mat_g(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  void mat_gt(const Eigen::VectorXd& z, Eigen::VectorXd& out) const;
  void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const;
  double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                     const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                     double dkap) const;
  double conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       Eigen::VectorXd& w) const;
  void conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                      Eigen::VectorXd& v) const;

  StdForm sf_;
  SolverOptions opts_;
  EngineSettings st_;
  int n_ = 0, p_ = 0, m_ = 0, n_cones_ = 0;
  Eigen::VectorXd c_, b_, h_;
  Eigen::VectorXd x_equil_, a_equil_, g_equil_;
  std::vector<int> cone_offsets_;

  Scalings scal_;
  Eigen::MatrixXd hmat_;      // Cholesky factor of G' W^-2 G + delta I
  Eigen::MatrixXd hinv_at_;   // H^{-1} A'
  Eigen::MatrixXd schur_;     // Cholesky factor of A H^{-1} A' + delta I

  // Iterate
  Eigen::VectorXd x_, y_, z_, s_, lambda_;
  double tau_ = 1.0, kap_ = 1.0;
};

void Engine::build_cone_offsets() {
  cone_offsets_.clear();
  int off = sf_.n_lp;
  for (int d : sf_.cone_dims) {
    cone_offsets_.push_back(off);
    off += d;
  }
}

void Engine::equilibrate() {
  x_equil_ = Eigen::VectorXd::Ones(n_);
  a_equil_ = Eigen::VectorXd::Ones(p_);
  g_equil_ = Eigen::VectorXd::Ones(m_);
  auto sqrt_or_one = [](double v) { return v < 1e-6 ? 1.0 : std::sqrt(v); };
  for (int it = 0; it < st_.equil_iters; ++it) {
    Eigen::VectorXd xt = Eigen::VectorXd::Zero(n_), at = Eigen::VectorXd::Zero(p_),
                    gt = Eigen::VectorXd::Zero(m_);
    for (int r = 0; r < p_; ++r) {
      for (std::size_t k = 0; k < sf_.a_rows[r].idx.size(); ++k) {
        const double v = std::abs(sf_.a_rows[r].val[k]);
        at(r) = std::max(at(r), v);
        xt(sf_.a_rows[r].idx[k]) = std::max(xt(sf_.a_rows[r].idx[k]), v);
      }
    }
    for (int r = 0; r < m_; ++r) {
      for (std::size_t k = 0; k < sf_.g_rows[r].idx.size(); ++k) {
        const double v = std::abs(sf_.g_rows[r].val[k]);
        gt(r) = std::max(gt(r), v);
        xt(sf_.g_rows[r].idx[k]) = std::max(xt(sf_.g_rows[r].idx[k]), v);
      }
    }
    // One scale per cone block keeps cones cones.
    for (std::size_t c = 0; c < sf_.cone_dims.size(); ++c) {
      const int off = sf_.n_lp + std::accumulate(sf_.cone_dims.begin(),
                                                 sf_.cone_dims.begin() + c, 0);
      const double total = gt.segment(off, sf_.cone_dims[c]).sum();
      gt.segment(off, sf_.cone_dims[c]).setConstant(total);
    }
    xt = xt.unaryExpr(sqrt_or_one);
    at = at.unaryExpr(sqrt_or_one);
    gt = gt.unaryExpr(sqrt_or_one);
    for (int r = 0; r < p_; ++r)
      for (std::size_t k = 0; k < sf_.a_rows[r].idx.size(); ++k)
        sf_.a_rows[r].val[k] /= at(r) * xt(sf_.a_rows[r].idx[k]);
    for (int r = 0; r < m_; ++r)
      for (std::size_t k = 0; k < sf_.g_rows[r].idx.size(); ++k)
        sf_.g_rows[r].val[k] /= gt(r) * xt(sf_.g_rows[r].idx[k]);
    x_equil_ = x_equil_.cwiseProduct(xt);
    a_equil_ = a_equil_.cwiseProduct(at);
    g_equil_ = g_equil_.cwiseProduct(gt);
  }
  c_ = c_.cwiseQuotient(x_equil_);
  b_ = b_.cwiseQuotient(a_equil_);
  h_ = h_.cwiseQuotient(g_equil_);
}

void Engine::mat_a(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.setZero(p_);
  for (int r = 0; r < p_; ++r) {
    double acc = 0.0;
    const SparseRow& row = sf_.a_rows[r];
    for (std::size_t k = 0; k < row.idx.size(); ++k) acc += row.val[k] * x(row.idx[k]);
    out(r) = acc;
  }
}

void Engine::mat_at(const Eigen::VectorXd& y, Eigen::VectorXd& out) const {
  out.setZero(n_);
  for (int r = 0; r < p_; ++r) {
    const SparseRow& row = sf_.a_rows[r];
    const double v = y(r);
    if (v == 0.0) continue;
    for (std::size_t k = 0; k < row.idx.size(); ++k) out(row.idx[k]) += row.val[k] * v;
  }
}

void Engine::mat_g(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.setZero(m_);
  for (int r = 0; r < m_; ++r) {
    double acc = 0.0;
    const SparseRow& row = sf_.g_rows[r];
    for (std::size_t k = 0; k < row.idx.size(); ++k) acc += row.val[k] * x(row.idx[k]);
    out(r) = acc;
  }
}

void Engine::mat_gt(const Eigen::VectorXd& z, Eigen::VectorXd& out) const {
  out.setZero(n_);
  for (int r = 0; r < m_; ++r) {
    const SparseRow& row = sf_.g_rows[r];
    const double v = z(r);
    if (v == 0.0) continue;
    for (std::size_t k = 0; k < row.idx.size(); ++k) out(row.idx[k]) += row.val[k] * v;
  }
}

bool Engine::update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  scal_.identity = false;
  scal_.n_lp = sf_.n_lp;
  scal_.lp_v = s.head(sf_.n_lp).cwiseQuotient(z.head(sf_.n_lp));
  scal_.socs.assign(n_cones_, SocScaling{});
  for (int ci = 0; ci < n_cones_; ++ci) {
    SocScaling& sc = scal_.socs[ci];
    sc.dim = sf_.cone_dims[ci];
    sc.offset = cone_offsets_[ci];
    const auto sk = s.segment(sc.offset, sc.dim);
    const auto zk = z.segment(sc.offset, sc.dim);
    const double sres = sk(0) * sk(0) - sk.tail(sc.dim - 1).squaredNorm();
    const double zres = zk(0) * zk(0) - zk.tail(sc.dim - 1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0) return false;
    const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
    Eigen::VectorXd sbar = sk / snorm, zbar = zk / znorm;
    sc.eta_sq = snorm / znorm;
    double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    sc.wbar.resize(sc.dim);
    sc.wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
    sc.wbar.tail(sc.dim - 1) =
        (0.5 / gamma) * (sbar.tail(sc.dim - 1) - zbar.tail(sc.dim - 1));
  }
  return true;
}

bool Engine::factor_kkt() {
  for (double delta = st_.deltastat; delta <= st_.deltastat * 1e6; delta *= 100.0) {
    if (factor_kkt_with(delta)) return true;
  }
  return false;
}

bool Engine::factor_kkt_with(double delta) {
  // H = G' W^-2 G + delta I assembled from per-row outer products; every SOC
  // block contributes sign-flipped head and member rows plus one rank-one
  // term 2 (G' J wbar)(G' J wbar)'.
  hmat_.setZero(n_, n_);
  for (int r = 0; r < sf_.n_lp; ++r) {
    const double w = scal_.identity ? 1.0 : 1.0 / scal_.lp_v(r);
    linalg::rank1_update_lower(hmat_, sf_.g_rows[r].idx, sf_.g_rows[r].val, w);
  }
  // Wide rank-one terms go through one dense syrk; narrow ones scatter.
  constexpr int kDenseSupport = 48;
  std::vector<int> support;
  std::vector<double> uval;
  std::vector<int> mark(n_, -1);
  Eigen::MatrixXd wide;
  int n_wide = 0;
  if (!scal_.identity) {
    for (int ci = 0; ci < n_cones_; ++ci) {
      int nnz = 0;
      for (int k = 0; k < sf_.cone_dims[ci]; ++k)
        nnz += static_cast<int>(sf_.g_rows[cone_offsets_[ci] + k].idx.size());
      if (nnz >= kDenseSupport) ++n_wide;
    }
    wide.setZero(n_, n_wide);
  }
  int wide_col = 0;
  for (int ci = 0; ci < n_cones_; ++ci) {
    const int off = cone_offsets_[ci];
    const int dim = sf_.cone_dims[ci];
    const double eta_sq = scal_.identity ? 1.0 : scal_.socs[ci].eta_sq;
    int cone_nnz = 0;
    for (int k = 0; k < dim; ++k) {
      const SparseRow& row = sf_.g_rows[off + k];
      cone_nnz += static_cast<int>(row.idx.size());
      const double sign = (!scal_.identity && k == 0) ? -1.0 : 1.0;
      linalg::rank1_update_lower(hmat_, row.idx, row.val, sign / eta_sq);
    }
    if (scal_.identity) continue;
    // u = sum_k vbar_k * g_k with vbar = J wbar, scaled by sqrt(2) / eta.
    const Eigen::VectorXd& wbar = scal_.socs[ci].wbar;
    const double scale = std::sqrt(2.0 / eta_sq);
    if (cone_nnz >= kDenseSupport) {
      double* col = wide.data() + static_cast<std::ptrdiff_t>(wide_col) * n_;
      for (int k = 0; k < dim; ++k) {
        const double vb = (k == 0 ? wbar(0) : -wbar(k)) * scale;
        const SparseRow& row = sf_.g_rows[off + k];
        for (std::size_t t = 0; t < row.idx.size(); ++t)
          col[row.idx[t]] += vb * row.val[t];
      }
      ++wide_col;
      continue;
    }
    support.clear();
    for (int k = 0; k < dim; ++k) {
      const SparseRow& row = sf_.g_rows[off + k];
      for (std::size_t t = 0; t < row.idx.size(); ++t) {
        if (mark[row.idx[t]] < 0) {
          mark[row.idx[t]] = 0;
          support.push_back(row.idx[t]);
        }
      }
    }
    std::sort(support.begin(), support.end());
    for (std::size_t t = 0; t < support.size(); ++t) mark[support[t]] = static_cast<int>(t);
    uval.assign(support.size(), 0.0);
    for (int k = 0; k < dim; ++k) {
      const double vb = k == 0 ? wbar(0) : -wbar(k);
      const SparseRow& row = sf_.g_rows[off + k];
      for (std::size_t t = 0; t < row.idx.size(); ++t)
        uval[mark[row.idx[t]]] += vb * row.val[t];
    }
    linalg::rank1_update_lower(hmat_, support, uval, 2.0 / eta_sq);
    for (int idx : support) mark[idx] = -1;
  }
  if (wide_col > 0) linalg::syrk_lower_update(hmat_, wide.leftCols(wide_col));
  hmat_.diagonal().array() += delta;
  if (!linalg::cholesky_in_place(hmat_)) return false;

  if (p_ > 0) {
    hinv_at_.resize(n_, p_);
    Eigen::VectorXd col(n_);
    for (int r = 0; r < p_; ++r) {
      col.setZero();
      const SparseRow& row = sf_.a_rows[r];
      for (std::size_t k = 0; k < row.idx.size(); ++k) col(row.idx[k]) = row.val[k];
      linalg::cholesky_solve_in_place(hmat_, col);
      hinv_at_.col(r) = col;
    }
    schur_.resize(p_, p_);
    for (int i = 0; i < p_; ++i) {
      for (int j = 0; j <= i; ++j) {
        double acc = 0.0;
        const SparseRow& row = sf_.a_rows[i];
        for (std::size_t k = 0; k < row.idx.size(); ++k)
          acc += row.val[k] * hinv_at_(row.idx[k], j);
        schur_(i, j) = acc;
      }
      schur_(i, i) += delta;
    }
    if (!linalg::cholesky_in_place(schur_)) return false;
  }
  return true;
}

void Engine::solve_kkt(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                       const Eigen::VectorXd& bz, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                       Eigen::VectorXd& dz, int refine_rounds) {
  Eigen::VectorXd w2bz, rtil(n_), tmp_m(m_), tmp_n(n_), tmp_p(p_);
  auto solve_once = [&](const Eigen::VectorXd& fx, const Eigen::VectorXd& fy,
                        const Eigen::VectorXd& fz, Eigen::VectorXd& ox, Eigen::VectorXd& oy,
                        Eigen::VectorXd& oz) {
    scal_.apply_w2inv(fz, w2bz);
    mat_gt(w2bz, rtil);
    rtil += fx;
    ox = rtil;
    linalg::cholesky_solve_in_place(hmat_, ox);
    if (p_ > 0) {
      mat_a(ox, tmp_p);
      tmp_p -= fy;
      linalg::cholesky_solve_in_place(schur_, tmp_p);
      oy = tmp_p;
      // dx = H^-1 (rtil - A' dy)
      mat_at(oy, tmp_n);
      ox = rtil - tmp_n;
      linalg::cholesky_solve_in_place(hmat_, ox);
    } else {
      oy.resize(0);
    }
    mat_g(ox, tmp_m);
    tmp_m -= fz;
    scal_.apply_w2inv(tmp_m, oz);
  };
  solve_once(bx, by, bz, dx, dy, dz);

  Eigen::VectorXd ex(n_), ey(p_), ez(m_), w2dz;
  Eigen::VectorXd rx2(n_), ry2(p_), rz2(m_);
  double prev_err = std::numeric_limits<double>::max();
  for (int round = 0; round < refine_rounds; ++round) {
    // Residuals of the unregularized KKT system.
    mat_gt(dz, ex);
    if (p_ > 0) {
      mat_at(dy, tmp_n);
      ex += tmp_n;
    }
    ex = bx - ex;
    if (p_ > 0) {
      mat_a(dx, ey);
      ey = by - ey;
    }
    mat_g(dx, tmp_m);
    scal_.apply_w2(dz, w2dz);
    ez = bz - tmp_m + w2dz;
    const double err = std::max({ex.lpNorm<Eigen::Infinity>(),
                                 p_ > 0 ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                 ez.lpNorm<Eigen::Infinity>()});
    const double thresh =
        st_.linsysacc *
        (1.0 + std::max({bx.lpNorm<Eigen::Infinity>(),
                         p_ > 0 ? by.lpNorm<Eigen::Infinity>() : 0.0,
                         bz.lpNorm<Eigen::Infinity>()}));
    if (opts_.verbosity > 1)
      std::printf("    refine %d: err %.3e (ex %.2e ey %.2e ez %.2e)\n", round, err,
                  ex.lpNorm<Eigen::Infinity>(), p_ > 0 ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                  ez.lpNorm<Eigen::Infinity>());
    if (err < thresh || err >= prev_err) break;
    prev_err = err;
    solve_once(ex, ey, ez, rx2, ry2, rz2);
    dx += rx2;
    if (p_ > 0) dy += ry2;
    dz += rz2;
  }
}

void Engine::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const {
  double alpha = -st_.gamma;
  for (int i = 0; i < sf_.n_lp; ++i) alpha = std::max(alpha, -r(i));
  for (int ci = 0; ci < n_cones_; ++ci) {
    const int off = cone_offsets_[ci];
    const double cres = r(off) - r.segment(off + 1, sf_.cone_dims[ci] - 1).norm();
    alpha = std::max(alpha, -cres);
  }
  s = r;
  alpha += 1.0;
  for (int i = 0; i < sf_.n_lp; ++i) s(i) += alpha;
  for (int ci = 0; ci < n_cones_; ++ci) s(cone_offsets_[ci]) += alpha;
}

double Engine::conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                             Eigen::VectorXd& w) const {
  w.resize(m_);
  w.head(sf_.n_lp) = u.head(sf_.n_lp).cwiseProduct(v.head(sf_.n_lp));
  double mu = w.head(sf_.n_lp).lpNorm<1>();
  for (int ci = 0; ci < n_cones_; ++ci) {
    const int off = cone_offsets_[ci];
    const int dim = sf_.cone_dims[ci];
    w(off) = u.segment(off, dim).dot(v.segment(off, dim));
    mu += std::abs(w(off));
    w.segment(off + 1, dim - 1) =
        u(off) * v.segment(off + 1, dim - 1) + v(off) * u.segment(off + 1, dim - 1);
  }
  return mu;
}

void Engine::conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                            Eigen::VectorXd& v) const {
  v.resize(m_);
  v.head(sf_.n_lp) = w.head(sf_.n_lp).cwiseQuotient(u.head(sf_.n_lp));
  for (int ci = 0; ci < n_cones_; ++ci) {
    const int off = cone_offsets_[ci];
    const int dim = sf_.cone_dims[ci];
    const double u0 = u(off), w0 = w(off);
    const double rho = u0 * u0 - u.segment(off + 1, dim - 1).squaredNorm();
    const double zeta = u.segment(off + 1, dim - 1).dot(w.segment(off + 1, dim - 1));
    const double factor = (zeta / u0 - w0) / rho;
    v(off) = (u0 * w0 - zeta) / rho;
    v.segment(off + 1, dim - 1) =
        factor * u.segment(off + 1, dim - 1) + w.segment(off + 1, dim - 1) / u0;
  }
}

double Engine::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                           const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                           double dkap) const {
  double alpha = 10.0;
  if (sf_.n_lp > 0) {
    const double rhomin = (ds.head(sf_.n_lp).cwiseQuotient(lambda.head(sf_.n_lp))).minCoeff();
    const double sigmamin = (dz.head(sf_.n_lp).cwiseQuotient(lambda.head(sf_.n_lp))).minCoeff();
    const double worst = std::min(rhomin, sigmamin);
    alpha = worst < 0.0 ? 1.0 / (-worst) : 1e13;
  }
  if (-tau / dtau > 0.0) alpha = std::min(alpha, -tau / dtau);
  if (-kap / dkap > 0.0) alpha = std::min(alpha, -kap / dkap);
  for (int ci = 0; ci < n_cones_; ++ci) {
    const int off = cone_offsets_[ci];
    const int dim = sf_.cone_dims[ci];
    const double lk_sq =
        lambda(off) * lambda(off) - lambda.segment(off + 1, dim - 1).squaredNorm();
    if (lk_sq <= 0.0) continue;
    const double lknorm = std::sqrt(lk_sq);
    Eigen::VectorXd lkbar = lambda.segment(off, dim) / lknorm;
    const double lkbar_ds =
        lkbar(0) * ds(off) - lkbar.tail(dim - 1).dot(ds.segment(off + 1, dim - 1));
    const double lkbar_dz =
        lkbar(0) * dz(off) - lkbar.tail(dim - 1).dot(dz.segment(off + 1, dim - 1));
    auto cone_rate = [&](const Eigen::VectorXd& d, double lkbar_d) {
      const double factor = (lkbar_d + d(off)) / (lkbar(0) + 1.0);
      Eigen::VectorXd tail =
          (d.segment(off + 1, dim - 1) - factor * lkbar.tail(dim - 1)) / lknorm;
      return tail.norm() - lkbar_d / lknorm;
    };
    const double step = std::max({0.0, cone_rate(ds, lkbar_ds), cone_rate(dz, lkbar_dz)});
    if (step > 0.0) alpha = std::min(alpha, 1.0 / step);
  }
  return std::clamp(alpha, st_.stepmin, st_.stepmax);
}

SolveStatus Engine::run(Eigen::VectorXd& x_out, int& iters, double& dual_res,
                        double& rel_gap) {
  equilibrate();
  build_cone_offsets();
  iters = 0;
  dual_res = 0.0;
  rel_gap = 0.0;
  x_out = Eigen::VectorXd::Zero(n_);

  if (m_ == 0) {
    // No inequalities: least-norm feasible point of the affine subspace; the
    // objective must vanish on the null space, otherwise unbounded.
    if (p_ == 0) {
      if (c_.lpNorm<Eigen::Infinity>() > 0.0) return SolveStatus::unbounded;
      return SolveStatus::optimal;
    }
    scal_.identity = true;
    scal_.n_lp = 0;
    if (!factor_kkt()) return SolveStatus::numerical_failure;  // H = delta I
    Eigen::VectorXd dx(n_), dy(p_), dz(m_), tmp(n_);
    solve_kkt(Eigen::VectorXd::Zero(n_), b_, Eigen::VectorXd::Zero(0), dx, dy, dz,
              st_.nitref);
    Eigen::VectorXd cx(n_), cy(p_);
    solve_kkt(c_, Eigen::VectorXd::Zero(p_), Eigen::VectorXd::Zero(0), cx, cy, dz,
              st_.nitref);
    mat_at(cy, tmp);
    tmp = c_ - tmp;  // projection of c onto null(A), up to regularization
    if (tmp.lpNorm<Eigen::Infinity>() > 1e-7 * (1.0 + c_.lpNorm<Eigen::Infinity>()))
      return SolveStatus::unbounded;
    Eigen::VectorXd resid(p_);
    mat_a(dx, resid);
    resid -= b_;
    if (resid.lpNorm<Eigen::Infinity>() > opts_.feasibility_tol * (1.0 + b_.norm()))
      return SolveStatus::infeasible;
    x_out = dx.cwiseQuotient(x_equil_);
    return SolveStatus::optimal;
  }

  scal_.identity = true;
  scal_.n_lp = sf_.n_lp;
  if (!factor_kkt()) return SolveStatus::numerical_failure;

  Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_), dx2(n_), dy2(p_), dz2(m_);
  solve_kkt(Eigen::VectorXd::Zero(n_), b_, h_, dx1, dy1, dz1, st_.nitref);
  x_ = dx1;
  bring_to_cone(-dz1, s_);
  solve_kkt(-c_, Eigen::VectorXd::Zero(p_), Eigen::VectorXd::Zero(m_), dx2, dy2, dz2,
            st_.nitref);
  y_ = dy2;
  bring_to_cone(dz2, z_);
  tau_ = 1.0;
  kap_ = 1.0;

  const double resx0 = std::max(1.0, c_.norm());
  const double resy0 = std::max(1.0, b_.norm());
  const double resz0 = std::max(1.0, h_.norm());
  const double cone_degree = static_cast<double>(sf_.n_lp + n_cones_) + 1.0;

  Eigen::VectorXd rx(n_), ry(p_), rz(m_), tmp_n(n_), tmp_m(m_), tmp_p(p_);
  Eigen::VectorXd w_dz(m_), ds_by_w(m_), ds1(m_), ds2(m_), dsfin(m_);
  lambda_ = z_;

  struct Best {
    Eigen::VectorXd x;
    double tau = 1.0;
    double pres = std::numeric_limits<double>::max();
    double dres = std::numeric_limits<double>::max();
    double gap = std::numeric_limits<double>::max();
    double relgap = std::numeric_limits<double>::max();
    bool set = false;
  } best;

  double pres_prev = std::numeric_limits<double>::max();
  SolveStatus status = SolveStatus::iteration_limit;
  const int max_iters = std::max(1, opts_.max_iterations);

  for (int iter = 0; iter <= max_iters; ++iter) {
    iters = iter;
    // Residuals.
    mat_gt(z_, rx);
    if (p_ > 0) {
      mat_at(y_, tmp_n);
      rx += tmp_n;
    }
    rx = -rx;
    const double hresx = rx.norm();
    rx -= tau_ * c_;
    double hresy = 0.0;
    if (p_ > 0) {
      mat_a(x_, ry);
      hresy = ry.norm();
      ry -= tau_ * b_;
    }
    mat_g(x_, rz);
    rz += s_;
    const double hresz = rz.norm();
    rz -= tau_ * h_;
    const double cx = c_.dot(x_);
    const double by = p_ > 0 ? b_.dot(y_) : 0.0;
    const double hz = h_.dot(z_);
    const double rt = kap_ + cx + by + hz;

    const double nx = x_.norm(), ny = p_ > 0 ? y_.norm() : 0.0, nz = z_.norm(),
                 ns = s_.norm();
    const double gap = s_.dot(z_);
    const double mu = (gap + kap_ * tau_) / cone_degree;
    const double pcost = cx / tau_;
    const double dcost = -(hz + by) / tau_;
    std::optional<double> relgap;
    if (pcost < 0.0) relgap = gap / (-pcost);
    else if (dcost > 0.0) relgap = gap / dcost;
    const double nry = p_ > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
    const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
    const double pres = std::max(nry, nrz) / tau_;
    const double dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / tau_;
    std::optional<double> pinfres, dinfres;
    if ((hz + by) / std::max(ny + nz, 1.0) < -opts_.gap_tol)
      pinfres = hresx / std::max(ny + nz, 1.0);
    if (cx / std::max(nx, 1.0) < -opts_.gap_tol)
      dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));

    if (opts_.verbosity > 0) {
      std::printf("it %2d  pcost %+.6e  gap %.3e  pres %.3e  dres %.3e  k/t %.3e\n", iter,
                  pcost, gap, pres, dres, kap_ / tau_);
    }

    dual_res = dres;
    rel_gap = relgap.value_or(gap / std::max(1.0, std::abs(pcost)));

    auto check_exit = [&](double feastol, double reltol) -> std::optional<SolveStatus> {
      if ((-cx > 0.0 || -by - hz >= -reltol) && pres < feastol && dres < feastol &&
          (gap < reltol || (relgap && *relgap < reltol))) {
        return SolveStatus::optimal;
      }
      if (dinfres && *dinfres < feastol && tau_ < kap_) return SolveStatus::unbounded;
      if (((pinfres && *pinfres < feastol) && tau_ < kap_) ||
          (tau_ < feastol && kap_ < feastol && pinfres && *pinfres < feastol)) {
        return SolveStatus::infeasible;
      }
      return std::nullopt;
    };
    // Status when the iteration cannot continue: grade what was achieved.
    auto terminal_status = [&]() -> SolveStatus {
      if (auto exit = check_exit(opts_.feasibility_tol, opts_.gap_tol)) return *exit;
      if (check_exit(st_.feastol_inacc, st_.reltol_inacc))
        return SolveStatus::iteration_limit;
      return SolveStatus::numerical_failure;
    };

    // Diverging iterate: fall back to the best one seen and stop. Relative
    // jumps far below the feasibility tolerance are noise, not divergence.
    if (iter > 0 &&
        ((pres > st_.safeguard * pres_prev && pres > opts_.feasibility_tol) || gap < 0.0)) {
      status = SolveStatus::numerical_failure;
      if (best.set && best.pres < st_.feastol_inacc && best.dres < st_.feastol_inacc &&
          best.relgap < st_.reltol_inacc) {
        status = SolveStatus::iteration_limit;
      }
      x_out = best.set ? best.x : x_ / tau_;
      x_out = x_out.cwiseQuotient(x_equil_);
      return status;
    }
    pres_prev = pres;

    if (auto exit = check_exit(opts_.feasibility_tol, opts_.gap_tol)) {
      status = *exit;
      break;
    }
    if (iter == max_iters) {
      status = SolveStatus::iteration_limit;
      break;
    }
    if (std::isnan(pcost)) {
      status = SolveStatus::numerical_failure;
      break;
    }

    if (!best.set || (gap > 0.0 && gap < best.gap && pres < best.pres)) {
      best.x = x_ / tau_;
      best.tau = tau_;
      best.pres = pres;
      best.dres = dres;
      best.gap = gap;
      best.relgap = relgap.value_or(best.relgap);
      best.set = true;
    }

    if (!update_scalings(s_, z_)) {
      // Grazing the cone boundary at tiny mu: nudge strictly inside and retry.
      const double shift = 1e-12 * (s_.lpNorm<Eigen::Infinity>() + z_.lpNorm<Eigen::Infinity>() + 1.0);
      for (int i = 0; i < sf_.n_lp; ++i) {
        s_(i) += shift;
        z_(i) += shift;
      }
      for (int ci = 0; ci < n_cones_; ++ci) {
        s_(cone_offsets_[ci]) += shift;
        z_(cone_offsets_[ci]) += shift;
      }
      if (!update_scalings(s_, z_)) {
        status = terminal_status();
        break;
      }
    }
    lambda_.resize(m_);
    scal_.apply_w(z_, lambda_);
    if (!factor_kkt()) {
      status = terminal_status();
      break;
    }

    // First solve: static right-hand side [-c; b; h].
    solve_kkt(-c_, b_, h_, dx1, dy1, dz1, st_.nitref);

    // Affine (predictor) direction.
    Eigen::VectorXd bz_aff = s_ - rz;
    solve_kkt(rx, p_ > 0 ? Eigen::VectorXd(-ry) : Eigen::VectorXd(), bz_aff, dx2, dy2, dz2,
              st_.nitref);
    const double dtau_denom =
        kap_ / tau_ - c_.dot(dx1) - (p_ > 0 ? b_.dot(dy1) : 0.0) - h_.dot(dz1);
    const double dtauaff =
        (rt - kap_ + c_.dot(dx2) + (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) / dtau_denom;
    dz2 += dtauaff * dz1;
    scal_.apply_w(dz2, w_dz);
    ds_by_w = -w_dz - lambda_;
    const double dkapaff = -kap_ - kap_ / tau_ * dtauaff;
    const double step_aff = line_search(lambda_, ds_by_w, w_dz, tau_, dtauaff, kap_, dkapaff);
    const double sigma =
        std::clamp(std::pow(1.0 - step_aff, 3.0), st_.sigmamin, st_.sigmamax);

    // Combined (corrector) direction.
    conic_product(lambda_, lambda_, ds1);
    conic_product(ds_by_w, w_dz, ds2);
    const double sigmamu = sigma * mu;
    ds1.head(sf_.n_lp) += ds2.head(sf_.n_lp);
    ds1.head(sf_.n_lp).array() -= sigmamu;
    for (int ci = 0; ci < n_cones_; ++ci) {
      const int off = cone_offsets_[ci];
      ds1(off) -= sigmamu;
      ds1.segment(off, sf_.cone_dims[ci]) += ds2.segment(off, sf_.cone_dims[ci]);
    }
    conic_division(lambda_, ds1, ds_by_w);
    scal_.apply_w(ds_by_w, ds1);
    const double one_minus_sigma = 1.0 - sigma;
    Eigen::VectorXd bz_comb = -one_minus_sigma * rz + ds1;
    solve_kkt(one_minus_sigma * rx, p_ > 0 ? Eigen::VectorXd(-one_minus_sigma * ry)
                                           : Eigen::VectorXd(),
              bz_comb, dx2, dy2, dz2, st_.nitref);
    const double bkap = kap_ * tau_ + dkapaff * dtauaff - sigmamu;
    const double dtau = (one_minus_sigma * rt - bkap / tau_ + c_.dot(dx2) +
                         (p_ > 0 ? b_.dot(dy2) : 0.0) + h_.dot(dz2)) /
                        dtau_denom;
    dx2 += dtau * dx1;
    if (p_ > 0) dy2 += dtau * dy1;
    dz2 += dtau * dz1;
    scal_.apply_w(dz2, w_dz);
    ds_by_w = -(ds_by_w + w_dz);
    const double dkap = -(bkap + kap_ * dtau) / tau_;
    double step = st_.gamma * line_search(lambda_, ds_by_w, w_dz, tau_, dtau, kap_, dkap);
    scal_.apply_w(ds_by_w, dsfin);

    // The SOC line search is approximate near the boundary; back off until
    // the updated point is strictly inside every cone.
    for (int attempt = 0; attempt < 8; ++attempt) {
      bool inside = tau_ + step * dtau > 0.0 && kap_ + step * dkap > 0.0;
      for (int i = 0; i < sf_.n_lp && inside; ++i)
        inside = s_(i) + step * dsfin(i) > 0.0 && z_(i) + step * dz2(i) > 0.0;
      for (int ci = 0; ci < n_cones_ && inside; ++ci) {
        const int off = cone_offsets_[ci];
        const int dim = sf_.cone_dims[ci];
        const auto snew = (s_.segment(off, dim) + step * dsfin.segment(off, dim)).eval();
        const auto znew = (z_.segment(off, dim) + step * dz2.segment(off, dim)).eval();
        inside = snew(0) > snew.tail(dim - 1).norm() && znew(0) > znew.tail(dim - 1).norm();
      }
      if (inside) break;
      step *= 0.5;
    }

    x_ += step * dx2;
    if (p_ > 0) y_ += step * dy2;
    z_ += step * dz2;
    s_ += step * dsfin;
    kap_ += step * dkap;
    tau_ += step * dtau;
  }

  x_out = x_ / tau_;
  if (status != SolveStatus::optimal && best.set &&
      !(status == SolveStatus::infeasible || status == SolveStatus::unbounded)) {
    x_out = best.x;
  }
  if (!x_out.allFinite()) x_out.setZero();
  x_out = x_out.cwiseQuotient(x_equil_);
  return status;
}

}  // namespace

SolveReport solve(const ConicProgram& program, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  program.validate();
  Translation tr = translate(program);

  SolveReport report;
  report.x = Eigen::VectorXd::Zero(program.num_variables);

  auto finish = [&](SolveStatus status) {
    report.status = status;
    // Recover fixed and auxiliary variables in original indexing.
    for (int i = 0; i < program.num_variables; ++i) {
      const VarState& st = tr.vars[i];
      if (st.kind == VarKind::fixed) report.x(i) = st.fixed_value;
    }
    for (int i = 0; i < program.num_variables; ++i) {
      const VarState& st = tr.vars[i];
      if (st.kind != VarKind::aux) continue;
      const LinearRow& row = program.rows[st.defining_row];
      double cv = 0.0, acc = row.rhs;
      for (std::size_t k = 0; k < row.cols.size(); ++k) {
        if (row.cols[k] == i) cv += row.coeffs[k];
        else acc -= row.coeffs[k] * report.x(row.cols[k]);
      }
      report.x(i) = acc / cv;
    }
    report.objective = 0.0;
    for (int i = 0; i < program.num_variables; ++i)
      report.objective += program.objective[i] * report.x(i);
    const Residuals res = compute_residuals(program, report.x);
    report.primal_residual = res.max();
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  };

  if (tr.std_form.trivially_infeasible) return finish(SolveStatus::infeasible);
  if (tr.std_form.n == 0) return finish(SolveStatus::optimal);

  Engine engine(std::move(tr.std_form), opts);
  Eigen::VectorXd x_std;
  int iters = 0;
  double dres = 0.0, relgap = 0.0;
  const SolveStatus status = engine.run(x_std, iters, dres, relgap);
  report.iterations = iters;
  report.dual_residual = dres;
  report.duality_gap = relgap;
  for (int i = 0; i < program.num_variables; ++i) {
    if (tr.vars[i].kind == VarKind::kept) report.x(i) = x_std(tr.vars[i].kept_index);
  }
  return finish(status);
}

}  // namespace sbrrm::conic
