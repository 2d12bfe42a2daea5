#include "sbrrm/formulation.hpp"

#include <cmath>
#include <stdexcept>

namespace sbrrm {

using conic::LinExpr;
using conic::ProgramBuilder;
using conic::RowSense;

VariableLayout VariableLayout::make(Kind kind, const SystemConfig& cfg, int j_ue, int j_sbs) {
  VariableLayout lay;
  lay.kind = kind;
  lay.L = cfg.num_clusters;
  lay.B = cfg.sbs_per_cluster;
  lay.U = cfg.ue_per_cluster;
  lay.J_ue = j_ue;
  lay.J_sbs = j_sbs;
  lay.N_m = cfg.mbs_antennas();
  lay.N_s = cfg.sbs_antennas();
  int off = 0;
  switch (kind) {
    case Kind::full:
      lay.off_m = off;
      off += 2 * lay.L * lay.N_m;
      lay.off_w = off;
      off += 2 * lay.L * lay.B * lay.U * lay.N_s;
      lay.off_p = off;
      off += lay.L * lay.B * lay.U;
      lay.off_kappa = off;
      off += lay.L * lay.B * lay.U;
      lay.off_alpha = off;
      off += lay.L * lay.U * lay.J_ue;
      lay.off_beta = off;
      off += lay.L * lay.J_sbs;
      break;
    case Kind::upper_bound:
      lay.off_m = off;
      off += 2 * lay.L * lay.N_m;
      lay.off_beta = off;
      off += lay.L * lay.J_sbs;
      break;
    case Kind::gains:
      lay.off_t = off;
      off += 2 * lay.L;
      lay.off_v = off;
      off += 2 * lay.L * lay.B * lay.U;
      lay.off_p = off;
      off += lay.L * lay.B * lay.U;
      lay.off_kappa = off;
      off += lay.L * lay.B * lay.U;
      lay.off_alpha = off;
      off += lay.L * lay.U * lay.J_ue;
      lay.off_beta = off;
      off += lay.L * lay.J_sbs;
      break;
  }
  lay.total = off;
  return lay;
}

BigMConstants compute_big_m(const ChannelSet& channels, const SystemConfig& cfg) {
  BigMConstants out;
  out.q_ue.resize(cfg.total_ue());
  out.q_sbs.resize(cfg.total_sbs());
  for (int ue = 0; ue < cfg.total_ue(); ++ue) {
    double acc = 0.0;
    for (int b = 0; b < cfg.total_sbs(); ++b) acc += channels.h(b, ue).squaredNorm();
    out.q_ue(ue) = std::sqrt(cfg.sbs_power_w * acc + cfg.ue_noise_w);
  }
  for (int b = 0; b < cfg.total_sbs(); ++b) {
    out.q_sbs(b) = std::sqrt(cfg.mbs_power_w * channels.g(b).squaredNorm() + cfg.sbs_noise_w);
  }
  return out;
}

BinaryState BinaryState::all_free(const SystemConfig& cfg, int j_ue, int j_sbs) {
  BinaryState s;
  s.alpha = Eigen::VectorXd::Zero(cfg.total_ue() * j_ue);
  s.beta = Eigen::VectorXd::Zero(cfg.num_clusters * j_sbs);
  s.kappa = Eigen::VectorXd::Zero(cfg.total_sbs() * cfg.ue_per_cluster);
  s.alpha_pin.assign(s.alpha.size(), Pin::free_var);
  s.beta_pin.assign(s.beta.size(), Pin::free_var);
  s.kappa_pin.assign(s.kappa.size(), Pin::free_var);
  return s;
}

BinaryState BinaryState::pin_all(const SystemConfig& cfg, int j_ue, int j_sbs,
                                 const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                 const Eigen::VectorXd& kappa) {
  BinaryState s = all_free(cfg, j_ue, j_sbs);
  s.alpha = alpha;
  s.beta = beta;
  s.kappa = kappa;
  auto pin = [](Eigen::VectorXd& v, std::vector<Pin>& mask) {
    for (int i = 0; i < v.size(); ++i) {
      v(i) = std::round(v(i));
      mask[i] = v(i) > 0.5 ? Pin::one : Pin::zero;
    }
  };
  pin(s.alpha, s.alpha_pin);
  pin(s.beta, s.beta_pin);
  pin(s.kappa, s.kappa_pin);
  return s;
}

namespace {

std::string idx2(const char* base, int a, int b) {
  return std::string(base) + std::to_string(a) + "_" + std::to_string(b);
}
std::string idx3(const char* base, int a, int b, int c) {
  return std::string(base) + std::to_string(a) + "_" + std::to_string(b) + "_" +
         std::to_string(c);
}

void apply_pin(ProgramBuilder& pb, int var, Pin pin) {
  switch (pin) {
    case Pin::free_var: pb.set_bounds(var, 0.0, 1.0); break;
    case Pin::zero: pb.set_bounds(var, 0.0, 0.0); break;
    case Pin::one: pb.set_bounds(var, 1.0, 1.0); break;
  }
}

// Re{a^H x} and Im{a^H x} contributions of a complex vector variable block.
template <typename ReIdx, typename ImIdx>
void add_re_inner(LinExpr& e, const Eigen::VectorXcd& a, double scale, ReIdx re, ImIdx im) {
  for (int i = 0; i < a.size(); ++i) {
    e.add(re(i), scale * a(i).real());
    e.add(im(i), scale * a(i).imag());
  }
}
template <typename ReIdx, typename ImIdx>
void add_im_inner(LinExpr& e, const Eigen::VectorXcd& a, double scale, ReIdx re, ImIdx im) {
  for (int i = 0; i < a.size(); ++i) {
    e.add(re(i), -scale * a(i).imag());
    e.add(im(i), scale * a(i).real());
  }
}

// Re/Im of (coef * z) for a complex scalar variable z given by (re, im) ids.
void add_re_product(LinExpr& e, std::complex<double> coef, double scale, int re, int im) {
  e.add(re, scale * coef.real());
  e.add(im, -scale * coef.imag());
}
void add_im_product(LinExpr& e, std::complex<double> coef, double scale, int re, int im) {
  e.add(re, scale * coef.imag());
  e.add(im, scale * coef.real());
}

void declare_binary_block(ProgramBuilder& pb, const VariableLayout& lay,
                          const BinaryState& state) {
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u)
        apply_pin(pb, lay.kappa_var(l, b, u),
                  state.kappa_pin[(l * lay.B + b) * lay.U + u]);
  for (int l = 0; l < lay.L; ++l)
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j)
        apply_pin(pb, lay.alpha_var(l, u, j), state.alpha_pin[(l * lay.U + u) * lay.J_ue + j]);
  for (int l = 0; l < lay.L; ++l)
    for (int j = 0; j < lay.J_sbs; ++j)
      apply_pin(pb, lay.beta_var(l, j), state.beta_pin[l * lay.J_sbs + j]);
}

// Counting, budget and power-linking rows shared by the full and gain-only
// programs (C2, C7-C10, C12-C14, C18-C19; C17 lives in the p bounds).
void add_shared_rows(ProgramBuilder& pb, const VariableLayout& lay, const SystemConfig& cfg,
                     const RateTable& ue_table, const RateTable& sbs_table) {
  for (int l = 0; l < lay.L; ++l) {
    for (int u = 0; u < lay.U; ++u) {
      LinExpr c2;
      for (int j = 0; j < lay.J_ue; ++j) c2.add(lay.alpha_var(l, u, j), 1.0);
      pb.add_row(c2, RowSense::le, 1.0, idx2("C2_", l, u));
    }
    for (int b = 0; b < lay.B; ++b) {
      LinExpr c7, c8;
      for (int u = 0; u < lay.U; ++u) {
        c7.add(lay.kappa_var(l, b, u), 1.0);
        c8.add(lay.kappa_var(l, b, u), -1.0);
      }
      pb.add_row(c7, RowSense::le, cfg.sbs_max_streams, idx2("C7_", l, b));
      pb.add_row(c8, RowSense::le, -1.0, idx2("C8_", l, b));
    }
    for (int u = 0; u < lay.U; ++u) {
      LinExpr c9, c10;
      for (int b = 0; b < lay.B; ++b) {
        c9.add(lay.kappa_var(l, b, u), 1.0);
        c10.add(lay.kappa_var(l, b, u), -1.0);
      }
      for (int j = 0; j < lay.J_ue; ++j) {
        c9.add(lay.alpha_var(l, u, j), -static_cast<double>(cfg.max_serving_sbs));
        c10.add(lay.alpha_var(l, u, j), static_cast<double>(cfg.min_serving_sbs));
      }
      pb.add_row(c9, RowSense::le, 0.0, idx2("C9_", l, u));
      pb.add_row(c10, RowSense::le, 0.0, idx2("C10_", l, u));
    }
    LinExpr c12;
    for (int j = 0; j < lay.J_sbs; ++j) c12.add(lay.beta_var(l, j), 1.0);
    pb.add_row(c12, RowSense::eq, 1.0, idx2("C12_", l, 0));

    // Backhaul budget, stated per unit of access bandwidth.
    LinExpr c13;
    const double ratio = cfg.backhaul_bandwidth_hz / cfg.access_bandwidth_hz;
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j)
        c13.add(lay.alpha_var(l, u, j), ue_table[j].rate_bps_hz);
    for (int j = 0; j < lay.J_sbs; ++j)
      c13.add(lay.beta_var(l, j), -ratio * sbs_table[j].rate_bps_hz);
    pb.add_row(c13, RowSense::le, 0.0, idx2("C13_", l, 0));

    LinExpr c14;
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j) c14.add(lay.alpha_var(l, u, j), 1.0);
    pb.add_row(c14, RowSense::eq, cfg.ue_served_per_cluster, idx2("C14_", l, 0));

    for (int b = 0; b < lay.B; ++b) {
      LinExpr c18;
      for (int u = 0; u < lay.U; ++u) c18.add(lay.p_var(l, b, u), 1.0);
      pb.add_row(c18, RowSense::le, cfg.sbs_power_w, idx2("C18_", l, b));
      for (int u = 0; u < lay.U; ++u) {
        LinExpr c19;
        c19.add(lay.p_var(l, b, u), 1.0);
        c19.add(lay.kappa_var(l, b, u), -cfg.sbs_power_w);
        pb.add_row(c19, RowSense::le, 0.0, idx3("C19_", l, b, u));
      }
    }
  }
}

void add_objective_and_penalties(ProgramBuilder& pb, const VariableLayout& lay,
                                 const SystemConfig& cfg, const RateTable& ue_table,
                                 const BinaryState& reference,
                                 const PenaltyWeights* penalties) {
  for (int l = 0; l < lay.L; ++l)
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j)
        pb.set_objective(lay.alpha_var(l, u, j), cfg.weight(l, u) * ue_table[j].rate_bps_hz);
  if (penalties == nullptr) return;
  // Linearized penalty - lambda * x * (1 - 2 ref); the constant part is added
  // back by penalty_constant().
  for (int i = 0; i < reference.alpha.size(); ++i)
    pb.add_objective(lay.off_alpha + i, -penalties->alpha * (1.0 - 2.0 * reference.alpha(i)));
  for (int i = 0; i < reference.beta.size(); ++i)
    pb.add_objective(lay.off_beta + i, -penalties->beta * (1.0 - 2.0 * reference.beta(i)));
  for (int i = 0; i < reference.kappa.size(); ++i)
    pb.add_objective(lay.off_kappa + i, -penalties->kappa * (1.0 - 2.0 * reference.kappa(i)));
}

conic::ConicProgram build_full_program(const SystemConfig& cfg, const RateTable& ue_table,
                                       const RateTable& sbs_table, const ChannelSet& channels,
                                       const BigMConstants& big_m, const BinaryState& state,
                                       const PenaltyWeights* penalties) {
  const VariableLayout lay =
      VariableLayout::make(VariableLayout::Kind::full, cfg, ue_table.size(), sbs_table.size());
  const double sigma_ue = std::sqrt(cfg.ue_noise_w);
  const double sigma_sbs = std::sqrt(cfg.sbs_noise_w);

  ProgramBuilder pb;
  for (int l = 0; l < lay.L; ++l) {
    for (int a = 0; a < lay.N_m; ++a) pb.add_variable(idx2("m_re", l, a));
    for (int a = 0; a < lay.N_m; ++a) pb.add_variable(idx2("m_im", l, a));
  }
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) {
        for (int a = 0; a < lay.N_s; ++a) pb.add_variable(idx3("w_re", l, b, u) + "_" + std::to_string(a));
        for (int a = 0; a < lay.N_s; ++a) pb.add_variable(idx3("w_im", l, b, u) + "_" + std::to_string(a));
      }
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) pb.add_variable(idx3("p", l, b, u), 0.0);
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) pb.add_variable(idx3("kappa", l, b, u));
  for (int l = 0; l < lay.L; ++l)
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j) pb.add_variable(idx3("alpha", l, u, j));
  for (int l = 0; l < lay.L; ++l)
    for (int j = 0; j < lay.J_sbs; ++j) pb.add_variable(idx2("beta", l, j));
  pb.seal_decision_variables();

  declare_binary_block(pb, lay, state);
  add_objective_and_penalties(pb, lay, cfg, ue_table, state, penalties);
  add_shared_rows(pb, lay, cfg, ue_table, sbs_table);

  // MBS power cone: || vec(M) || <= sqrt(P_MBS).
  {
    std::vector<LinExpr> members;
    LinExpr head(std::sqrt(cfg.mbs_power_w));
    for (int l = 0; l < lay.L; ++l)
      for (int a = 0; a < lay.N_m; ++a) {
        LinExpr re, im;
        re.add(lay.m_re(l, a), 1.0);
        im.add(lay.m_im(l, a), 1.0);
        members.push_back(re);
        members.push_back(im);
      }
    pb.add_cone(head, members, "C3");
  }

  // Beam-power linking cone per (l, b, u): ||[w, (kappa-p)/2]|| <= (kappa+p)/2,
  // the rotated-cone form of ||w||^2 <= kappa * p.
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) {
        LinExpr head;
        head.add(lay.kappa_var(l, b, u), 0.5);
        head.add(lay.p_var(l, b, u), 0.5);
        std::vector<LinExpr> members;
        for (int a = 0; a < lay.N_s; ++a) {
          LinExpr re, im;
          re.add(lay.w_re(l, b, u, a), 1.0);
          im.add(lay.w_im(l, b, u, a), 1.0);
          members.push_back(re);
          members.push_back(im);
        }
        LinExpr diff;
        diff.add(lay.kappa_var(l, b, u), 0.5);
        diff.add(lay.p_var(l, b, u), -0.5);
        members.push_back(diff);
        pb.add_cone(head, members, idx3("C20_", l, b, u));
      }

  // Access SINR cones and rows, noise-normalized (channel / sigma_ue).
  for (int l = 0; l < lay.L; ++l) {
    for (int u = 0; u < lay.U; ++u) {
      const int ue = cfg.ue_index(l, u);
      LinExpr signal_re, signal_im;
      for (int b = 0; b < lay.B; ++b) {
        const Eigen::VectorXcd h = channels.h(cfg.sbs_index(l, b), ue) / sigma_ue;
        add_re_inner(signal_re, h, 1.0,
                     [&](int a) { return lay.w_re(l, b, u, a); },
                     [&](int a) { return lay.w_im(l, b, u, a); });
        add_im_inner(signal_im, h, 1.0,
                     [&](int a) { return lay.w_re(l, b, u, a); },
                     [&](int a) { return lay.w_im(l, b, u, a); });
      }
      pb.add_row(signal_im, RowSense::eq, 0.0, idx2("C25_", l, u));

      std::vector<LinExpr> interference;
      for (int lp = 0; lp < lay.L; ++lp)
        for (int up = 0; up < lay.U; ++up) {
          LinExpr re, im;
          for (int bp = 0; bp < lay.B; ++bp) {
            const Eigen::VectorXcd h = channels.h(cfg.sbs_index(lp, bp), ue) / sigma_ue;
            add_re_inner(re, h, 1.0,
                         [&](int a) { return lay.w_re(lp, bp, up, a); },
                         [&](int a) { return lay.w_im(lp, bp, up, a); });
            add_im_inner(im, h, 1.0,
                         [&](int a) { return lay.w_re(lp, bp, up, a); },
                         [&](int a) { return lay.w_im(lp, bp, up, a); });
          }
          interference.push_back(re);
          interference.push_back(im);
        }
      interference.push_back(LinExpr(1.0));  // unit noise after scaling

      const double q_u = big_m.q_ue(ue) / sigma_ue;
      for (int j = 0; j < lay.J_ue; ++j) {
        const double gamma = ue_table[j].sinr_target;
        LinExpr head = signal_re;
        for (double& c : head.coeffs) c *= std::sqrt(1.0 + 1.0 / gamma);
        head.constant = q_u;
        head.add(lay.alpha_var(l, u, j), -q_u);
        pb.add_cone(head, interference, idx3("C23_", l, u, j));

        LinExpr c24;
        c24.add(lay.alpha_var(l, u, j), std::sqrt(gamma));
        for (std::size_t k = 0; k < signal_re.cols.size(); ++k)
          c24.add(signal_re.cols[k], -signal_re.coeffs[k]);
        pb.add_row(c24, RowSense::le, 0.0, idx3("C24_", l, u, j));
      }
    }
  }

  // Backhaul SINR cones and rows (channel / sigma_sbs).
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      const Eigen::VectorXcd g = channels.g(sbs) / sigma_sbs;
      std::vector<LinExpr> received;
      for (int lp = 0; lp < lay.L; ++lp) {
        LinExpr re, im;
        add_re_inner(re, g, 1.0, [&](int a) { return lay.m_re(lp, a); },
                     [&](int a) { return lay.m_im(lp, a); });
        add_im_inner(im, g, 1.0, [&](int a) { return lay.m_re(lp, a); },
                     [&](int a) { return lay.m_im(lp, a); });
        received.push_back(re);
        received.push_back(im);
      }
      received.push_back(LinExpr(1.0));

      LinExpr own_re;
      add_re_inner(own_re, g, 1.0, [&](int a) { return lay.m_re(l, a); },
                   [&](int a) { return lay.m_im(l, a); });
      const double q_b = big_m.q_sbs(sbs) / sigma_sbs;
      for (int j = 0; j < lay.J_sbs; ++j) {
        const double gamma = sbs_table[j].sinr_target;
        LinExpr head = own_re;
        for (double& c : head.coeffs) c *= std::sqrt(1.0 + 1.0 / gamma);
        head.constant = q_b;
        head.add(lay.beta_var(l, j), -q_b);
        pb.add_cone(head, received, idx3("C26_", l, b, j));

        LinExpr c27;
        c27.add(lay.beta_var(l, j), std::sqrt(gamma));
        for (std::size_t k = 0; k < own_re.cols.size(); ++k)
          c27.add(own_re.cols[k], -own_re.coeffs[k]);
        pb.add_row(c27, RowSense::le, 0.0, idx3("C27_", l, b, j));
      }
    }

  return pb.build();
}

}  // namespace

conic::ConicProgram build_p0_relaxation(const SystemConfig& cfg, const RateTable& ue_table,
                                        const RateTable& sbs_table, const ChannelSet& channels,
                                        const BigMConstants& big_m, const BinaryState& state) {
  return build_full_program(cfg, ue_table, sbs_table, channels, big_m, state, nullptr);
}

conic::ConicProgram build_rnp1_subproblem(const SystemConfig& cfg, const RateTable& ue_table,
                                          const RateTable& sbs_table, const ChannelSet& channels,
                                          const BigMConstants& big_m, const BinaryState& reference,
                                          const PenaltyWeights& penalties) {
  return build_full_program(cfg, ue_table, sbs_table, channels, big_m, reference, &penalties);
}

conic::ConicProgram build_pub_relaxation(const SystemConfig& cfg, const RateTable& sbs_table,
                                         const ChannelSet& channels, const BigMConstants& big_m,
                                         const BinaryState& state) {
  const VariableLayout lay = VariableLayout::make(VariableLayout::Kind::upper_bound, cfg,
                                                  /*j_ue=*/1, sbs_table.size());
  const double sigma_sbs = std::sqrt(cfg.sbs_noise_w);
  ProgramBuilder pb;
  for (int l = 0; l < lay.L; ++l) {
    for (int a = 0; a < lay.N_m; ++a) pb.add_variable(idx2("m_re", l, a));
    for (int a = 0; a < lay.N_m; ++a) pb.add_variable(idx2("m_im", l, a));
  }
  for (int l = 0; l < lay.L; ++l)
    for (int j = 0; j < lay.J_sbs; ++j) pb.add_variable(idx2("beta", l, j));
  pb.seal_decision_variables();

  for (int l = 0; l < lay.L; ++l)
    for (int j = 0; j < lay.J_sbs; ++j) {
      const int var = lay.beta_var(l, j);
      apply_pin(pb, var, state.beta_pin[l * lay.J_sbs + j]);
      pb.set_objective(var, cfg.backhaul_bandwidth_hz * sbs_table[j].rate_bps_hz);
    }
  for (int l = 0; l < lay.L; ++l) {
    LinExpr c12;
    for (int j = 0; j < lay.J_sbs; ++j) c12.add(lay.beta_var(l, j), 1.0);
    pb.add_row(c12, RowSense::eq, 1.0, idx2("C12_", l, 0));
  }
  {
    std::vector<LinExpr> members;
    LinExpr head(std::sqrt(cfg.mbs_power_w));
    for (int l = 0; l < lay.L; ++l)
      for (int a = 0; a < lay.N_m; ++a) {
        LinExpr re, im;
        re.add(lay.m_re(l, a), 1.0);
        im.add(lay.m_im(l, a), 1.0);
        members.push_back(re);
        members.push_back(im);
      }
    pb.add_cone(head, members, "C3");
  }
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      const Eigen::VectorXcd g = channels.g(sbs) / sigma_sbs;
      std::vector<LinExpr> received;
      for (int lp = 0; lp < lay.L; ++lp) {
        LinExpr re, im;
        add_re_inner(re, g, 1.0, [&](int a) { return lay.m_re(lp, a); },
                     [&](int a) { return lay.m_im(lp, a); });
        add_im_inner(im, g, 1.0, [&](int a) { return lay.m_re(lp, a); },
                     [&](int a) { return lay.m_im(lp, a); });
        received.push_back(re);
        received.push_back(im);
      }
      received.push_back(LinExpr(1.0));
      LinExpr own_re;
      add_re_inner(own_re, g, 1.0, [&](int a) { return lay.m_re(l, a); },
                   [&](int a) { return lay.m_im(l, a); });
      const double q_b = big_m.q_sbs(sbs) / sigma_sbs;
      for (int j = 0; j < lay.J_sbs; ++j) {
        const double gamma = sbs_table[j].sinr_target;
        LinExpr head = own_re;
        for (double& c : head.coeffs) c *= std::sqrt(1.0 + 1.0 / gamma);
        head.constant = q_b;
        head.add(lay.beta_var(l, j), -q_b);
        pb.add_cone(head, received, idx3("C26_", l, b, j));
        LinExpr c27;
        c27.add(lay.beta_var(l, j), std::sqrt(gamma));
        for (std::size_t k = 0; k < own_re.cols.size(); ++k)
          c27.add(own_re.cols[k], -own_re.coeffs[k]);
        pb.add_row(c27, RowSense::le, 0.0, idx3("C27_", l, b, j));
      }
    }
  return pb.build();
}

conic::ConicProgram build_rnp2_subproblem(const SystemConfig& cfg, const RateTable& ue_table,
                                          const RateTable& sbs_table, const ChannelSet& channels,
                                          const PredesignedBeams& beams, const BigMConstants& big_m,
                                          const BinaryState& reference,
                                          const PenaltyWeights& penalties) {
  (void)channels;
  const VariableLayout lay =
      VariableLayout::make(VariableLayout::Kind::gains, cfg, ue_table.size(), sbs_table.size());
  const double sigma_ue = std::sqrt(cfg.ue_noise_w);
  const double sigma_sbs = std::sqrt(cfg.sbs_noise_w);

  ProgramBuilder pb;
  for (int l = 0; l < lay.L; ++l) {
    pb.add_variable(idx2("t_re", l, 0));
    pb.add_variable(idx2("t_im", l, 0));
  }
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) {
        pb.add_variable(idx3("v_re", l, b, u));
        pb.add_variable(idx3("v_im", l, b, u));
      }
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) pb.add_variable(idx3("p", l, b, u), 0.0);
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) pb.add_variable(idx3("kappa", l, b, u));
  for (int l = 0; l < lay.L; ++l)
    for (int u = 0; u < lay.U; ++u)
      for (int j = 0; j < lay.J_ue; ++j) pb.add_variable(idx3("alpha", l, u, j));
  for (int l = 0; l < lay.L; ++l)
    for (int j = 0; j < lay.J_sbs; ++j) pb.add_variable(idx2("beta", l, j));
  pb.seal_decision_variables();

  declare_binary_block(pb, lay, reference);
  add_objective_and_penalties(pb, lay, cfg, ue_table, reference, &penalties);
  add_shared_rows(pb, lay, cfg, ue_table, sbs_table);

  // L1: MBS power over the multicast gains.
  {
    std::vector<LinExpr> members;
    LinExpr head(std::sqrt(cfg.mbs_power_w));
    for (int l = 0; l < lay.L; ++l) {
      LinExpr re, im;
      re.add(lay.t_re(l), 1.0);
      im.add(lay.t_im(l), 1.0);
      members.push_back(re);
      members.push_back(im);
    }
    pb.add_cone(head, members, "L1");
  }
  // L2: gain form of the power-linking cone (|v| = ||w|| for unit beams).
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b)
      for (int u = 0; u < lay.U; ++u) {
        LinExpr head;
        head.add(lay.kappa_var(l, b, u), 0.5);
        head.add(lay.p_var(l, b, u), 0.5);
        std::vector<LinExpr> members;
        LinExpr re, im, diff;
        re.add(lay.v_re(l, b, u), 1.0);
        im.add(lay.v_im(l, b, u), 1.0);
        diff.add(lay.kappa_var(l, b, u), 0.5);
        diff.add(lay.p_var(l, b, u), -0.5);
        members.push_back(re);
        members.push_back(im);
        members.push_back(diff);
        pb.add_cone(head, members, idx3("L2_", l, b, u));
      }

  // Access side, L3-L5.
  for (int l = 0; l < lay.L; ++l)
    for (int u = 0; u < lay.U; ++u) {
      const int ue = cfg.ue_index(l, u);
      LinExpr signal_re, signal_im;
      for (int b = 0; b < lay.B; ++b) {
        const std::complex<double> c = beams.c(cfg.sbs_index(l, b), u) / sigma_ue;
        add_re_product(signal_re, c, 1.0, lay.v_re(l, b, u), lay.v_im(l, b, u));
        add_im_product(signal_im, c, 1.0, lay.v_re(l, b, u), lay.v_im(l, b, u));
      }
      pb.add_row(signal_im, RowSense::eq, 0.0, idx2("L5_", l, u));

      std::vector<LinExpr> interference;
      for (int lp = 0; lp < lay.L; ++lp)
        for (int up = 0; up < lay.U; ++up) {
          LinExpr re, im;
          for (int bp = 0; bp < lay.B; ++bp) {
            const int col = (lp * lay.B + bp) * lay.U + up;
            const std::complex<double> d = beams.access(ue, col) / sigma_ue;
            add_re_product(re, d, 1.0, lay.v_re(lp, bp, up), lay.v_im(lp, bp, up));
            add_im_product(im, d, 1.0, lay.v_re(lp, bp, up), lay.v_im(lp, bp, up));
          }
          interference.push_back(re);
          interference.push_back(im);
        }
      interference.push_back(LinExpr(1.0));

      const double q_u = big_m.q_ue(ue) / sigma_ue;
      for (int j = 0; j < lay.J_ue; ++j) {
        const double gamma = ue_table[j].sinr_target;
        LinExpr head = signal_re;
        for (double& c : head.coeffs) c *= std::sqrt(1.0 + 1.0 / gamma);
        head.constant = q_u;
        head.add(lay.alpha_var(l, u, j), -q_u);
        pb.add_cone(head, interference, idx3("L3_", l, u, j));
        LinExpr l4;
        l4.add(lay.alpha_var(l, u, j), std::sqrt(gamma));
        for (std::size_t k = 0; k < signal_re.cols.size(); ++k)
          l4.add(signal_re.cols[k], -signal_re.coeffs[k]);
        pb.add_row(l4, RowSense::le, 0.0, idx3("L4_", l, u, j));
      }
    }

  // Backhaul side, L6-L7.
  for (int l = 0; l < lay.L; ++l)
    for (int b = 0; b < lay.B; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      std::vector<LinExpr> received;
      for (int lp = 0; lp < lay.L; ++lp) {
        const std::complex<double> ghat = beams.backhaul(sbs, lp) / sigma_sbs;
        LinExpr re, im;
        add_re_product(re, ghat, 1.0, lay.t_re(lp), lay.t_im(lp));
        add_im_product(im, ghat, 1.0, lay.t_re(lp), lay.t_im(lp));
        received.push_back(re);
        received.push_back(im);
      }
      received.push_back(LinExpr(1.0));
      LinExpr own_re;
      add_re_product(own_re, beams.backhaul(sbs, l) / sigma_sbs, 1.0, lay.t_re(l),
                     lay.t_im(l));
      const double q_b = big_m.q_sbs(sbs) / sigma_sbs;
      for (int j = 0; j < lay.J_sbs; ++j) {
        const double gamma = sbs_table[j].sinr_target;
        LinExpr head = own_re;
        for (double& c : head.coeffs) c *= std::sqrt(1.0 + 1.0 / gamma);
        head.constant = q_b;
        head.add(lay.beta_var(l, j), -q_b);
        pb.add_cone(head, received, idx3("L6_", l, b, j));
        LinExpr l7;
        l7.add(lay.beta_var(l, j), std::sqrt(gamma));
        for (std::size_t k = 0; k < own_re.cols.size(); ++k)
          l7.add(own_re.cols[k], -own_re.coeffs[k]);
        pb.add_row(l7, RowSense::le, 0.0, idx3("L7_", l, b, j));
      }
    }
  return pb.build();
}

std::vector<std::vector<Eigen::VectorXcd>> design_zf_beams(const ChannelSet& channels,
                                                           const SystemConfig& cfg,
                                                           double regularization) {
  std::vector<std::vector<Eigen::VectorXcd>> w_hat(cfg.total_sbs());
  for (int l = 0; l < cfg.num_clusters; ++l)
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      const int n = cfg.sbs_antennas();
      const int u_count = cfg.ue_per_cluster;
      Eigen::MatrixXcd h(n, u_count);
      for (int u = 0; u < u_count; ++u) h.col(u) = channels.h(sbs, cfg.ue_index(l, u));
      const double eps = regularization * h.squaredNorm();
      Eigen::MatrixXcd gram = h.adjoint() * h;
      gram.diagonal().array() += std::complex<double>(std::max(eps, 1e-300), 0.0);
      // Directions proportional to H (H^H H + eps I)^-1 e_u.
      const Eigen::MatrixXcd pinv = h * gram.ldlt().solve(Eigen::MatrixXcd::Identity(u_count, u_count));
      w_hat[sbs].resize(u_count);
      for (int u = 0; u < u_count; ++u) {
        Eigen::VectorXcd dir = pinv.col(u);
        const double nrm = dir.norm();
        if (nrm < 1e-30) {
          dir = Eigen::VectorXcd::Zero(n);
          dir(0) = 1.0;
        } else {
          dir /= nrm;
        }
        w_hat[sbs][u] = dir;
      }
    }
  return w_hat;
}

std::vector<Eigen::VectorXcd> design_multicast_beams(
    const std::vector<std::vector<Eigen::VectorXcd>>& ub_solutions) {
  if (ub_solutions.empty()) throw std::invalid_argument("multicast predesign: empty list");
  const std::size_t n_clusters = ub_solutions.front().size();
  std::vector<Eigen::VectorXcd> out(n_clusters);
  for (std::size_t l = 0; l < n_clusters; ++l) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(ub_solutions.front()[l].size());
    for (const auto& realization : ub_solutions) {
      if (realization.size() != n_clusters || realization[l].size() != acc.size())
        throw std::invalid_argument("multicast predesign: inconsistent dimensions");
      Eigen::VectorXcd m = realization[l];
      const double nrm = m.norm();
      if (nrm < 1e-30) continue;
      m /= nrm;
      const std::complex<double> first = m(0);
      if (std::abs(first) > 1e-12) m *= std::conj(first) / std::abs(first);
      acc += m;
    }
    acc /= static_cast<double>(ub_solutions.size());
    const double nrm = acc.norm();
    if (nrm < 1e-6) throw std::runtime_error("multicast predesign: degenerate average");
    out[l] = acc / nrm;
  }
  return out;
}

PredesignedBeams make_predesigned_beams(const SystemConfig& cfg, const ChannelSet& channels,
                                        std::vector<std::vector<Eigen::VectorXcd>> w_hat,
                                        std::vector<Eigen::VectorXcd> m_hat) {
  PredesignedBeams beams;
  for (auto& per_sbs : w_hat)
    for (Eigen::VectorXcd& w : per_sbs) w /= w.norm();
  for (Eigen::VectorXcd& m : m_hat) m /= m.norm();
  beams.w_hat = std::move(w_hat);
  beams.m_hat = std::move(m_hat);
  const int total_sbs = cfg.total_sbs();
  const int u_count = cfg.ue_per_cluster;
  beams.c.resize(total_sbs, u_count);
  beams.backhaul.resize(total_sbs, cfg.num_clusters);
  beams.r.resize(total_sbs);
  beams.access.resize(cfg.total_ue(), total_sbs * u_count);
  for (int l = 0; l < cfg.num_clusters; ++l)
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      for (int u = 0; u < u_count; ++u)
        beams.c(sbs, u) = channels.h(sbs, cfg.ue_index(l, u)).adjoint() * beams.w_hat[sbs][u];
      for (int lp = 0; lp < cfg.num_clusters; ++lp)
        beams.backhaul(sbs, lp) = (channels.g(sbs).adjoint() * beams.m_hat[lp])(0);
      beams.r(sbs) = beams.backhaul(sbs, l).real();
    }
  for (int ue = 0; ue < cfg.total_ue(); ++ue)
    for (int lp = 0; lp < cfg.num_clusters; ++lp)
      for (int bp = 0; bp < cfg.sbs_per_cluster; ++bp) {
        const int sbs = cfg.sbs_index(lp, bp);
        for (int up = 0; up < u_count; ++up)
          beams.access(ue, sbs * u_count + up) =
              channels.h(sbs, ue).adjoint() * beams.w_hat[sbs][up];
      }
  return beams;
}

RrmVariables extract_variables(const VariableLayout& lay, const Eigen::VectorXd& x) {
  RrmVariables out;
  out.alpha.resize(lay.alpha_count());
  out.beta.resize(lay.beta_count());
  if (lay.off_alpha >= 0)
    for (int i = 0; i < lay.alpha_count(); ++i) out.alpha(i) = x(lay.off_alpha + i);
  else
    out.alpha.setZero();
  for (int i = 0; i < lay.beta_count(); ++i) out.beta(i) = x(lay.off_beta + i);
  out.kappa.resize(lay.kappa_count());
  if (lay.off_kappa >= 0)
    for (int i = 0; i < lay.kappa_count(); ++i) out.kappa(i) = x(lay.off_kappa + i);
  else
    out.kappa.setZero();
  if (lay.off_p >= 0) {
    out.p.resize(lay.L * lay.B, lay.U);
    for (int l = 0; l < lay.L; ++l)
      for (int b = 0; b < lay.B; ++b)
        for (int u = 0; u < lay.U; ++u)
          out.p(l * lay.B + b, u) = x(lay.p_var(l, b, u));
  }
  if (lay.off_m >= 0) {
    out.m.resize(lay.L);
    for (int l = 0; l < lay.L; ++l) {
      out.m[l].resize(lay.N_m);
      for (int a = 0; a < lay.N_m; ++a)
        out.m[l](a) = std::complex<double>(x(lay.m_re(l, a)), x(lay.m_im(l, a)));
    }
  }
  if (lay.off_w >= 0) {
    out.w.assign(lay.L * lay.B, Eigen::MatrixXcd(lay.N_s, lay.U));
    for (int l = 0; l < lay.L; ++l)
      for (int b = 0; b < lay.B; ++b)
        for (int u = 0; u < lay.U; ++u)
          for (int a = 0; a < lay.N_s; ++a)
            out.w[l * lay.B + b](a, u) =
                std::complex<double>(x(lay.w_re(l, b, u, a)), x(lay.w_im(l, b, u, a)));
  }
  if (lay.off_t >= 0) {
    out.t.resize(lay.L);
    for (int l = 0; l < lay.L; ++l)
      out.t[l] = std::complex<double>(x(lay.t_re(l)), x(lay.t_im(l)));
  }
  if (lay.off_v >= 0) {
    out.v.resize(lay.L * lay.B, lay.U);
    for (int l = 0; l < lay.L; ++l)
      for (int b = 0; b < lay.B; ++b)
        for (int u = 0; u < lay.U; ++u)
          out.v(l * lay.B + b, u) =
              std::complex<double>(x(lay.v_re(l, b, u)), x(lay.v_im(l, b, u)));
  }
  return out;
}

void expand_gains(const SystemConfig& cfg, const PredesignedBeams& beams, RrmVariables& vars) {
  const int n_s = cfg.sbs_antennas();
  vars.m.resize(cfg.num_clusters);
  for (int l = 0; l < cfg.num_clusters; ++l) vars.m[l] = vars.t[l] * beams.m_hat[l];
  vars.w.assign(cfg.total_sbs(), Eigen::MatrixXcd(n_s, cfg.ue_per_cluster));
  for (int sbs = 0; sbs < cfg.total_sbs(); ++sbs)
    for (int u = 0; u < cfg.ue_per_cluster; ++u)
      vars.w[sbs].col(u) = vars.v(sbs, u) * beams.w_hat[sbs][u];
}

namespace {
double family_exact(const Eigen::VectorXd& x) {
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += x(i) - x(i) * x(i);
  return acc;
}
double family_surrogate(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  // p(x) + q(ref) + grad_q(ref) . (x - ref) with q(x) = -sum x^2.
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i)
    acc += x(i) - ref(i) * ref(i) - 2.0 * ref(i) * (x(i) - ref(i));
  return acc;
}
}  // namespace

double exact_penalty(const BinaryState& values, const PenaltyWeights& penalties) {
  return penalties.alpha * family_exact(values.alpha) +
         penalties.beta * family_exact(values.beta) +
         penalties.kappa * family_exact(values.kappa);
}

double surrogate_penalty(const BinaryState& values, const BinaryState& reference,
                         const PenaltyWeights& penalties) {
  return penalties.alpha * family_surrogate(values.alpha, reference.alpha) +
         penalties.beta * family_surrogate(values.beta, reference.beta) +
         penalties.kappa * family_surrogate(values.kappa, reference.kappa);
}

double penalty_constant(const BinaryState& reference, const PenaltyWeights& penalties) {
  // Terms of the linearized penalty that do not multiply a variable:
  // lambda * sum(ref^2) per family (with sign folded for maximization).
  return -(penalties.alpha * reference.alpha.squaredNorm() +
           penalties.beta * reference.beta.squaredNorm() +
           penalties.kappa * reference.kappa.squaredNorm());
}

double binary_mse(const BinaryState& values) {
  double acc = 0.0;
  int count = 0;
  auto add = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) {
      const double d = v(i) - std::round(v(i));
      acc += d * d;
    }
    count += static_cast<int>(v.size());
  };
  add(values.alpha);
  add(values.beta);
  add(values.kappa);
  return count > 0 ? acc / count : 0.0;
}

double weighted_rate_objective(const SystemConfig& cfg, const RateTable& ue_table,
                               const Eigen::VectorXd& alpha) {
  double acc = 0.0;
  const int j_ue = ue_table.size();
  for (int l = 0; l < cfg.num_clusters; ++l)
    for (int u = 0; u < cfg.ue_per_cluster; ++u)
      for (int j = 0; j < j_ue; ++j)
        acc += cfg.weight(l, u) * alpha((l * cfg.ue_per_cluster + u) * j_ue + j) *
               ue_table[j].rate_bps_hz;
  return acc;
}

double access_throughput_bps(const SystemConfig& cfg, const RateTable& ue_table,
                             const Eigen::VectorXd& alpha) {
  double acc = 0.0;
  const int j_ue = ue_table.size();
  for (int i = 0; i < alpha.size(); ++i) acc += alpha(i) * ue_table[i % j_ue].rate_bps_hz;
  return acc * cfg.access_bandwidth_hz;
}

double backhaul_throughput_bps(const SystemConfig& cfg, const RateTable& sbs_table,
                               const Eigen::VectorXd& beta) {
  double acc = 0.0;
  const int j_sbs = sbs_table.size();
  for (int i = 0; i < beta.size(); ++i) acc += beta(i) * sbs_table[i % j_sbs].rate_bps_hz;
  return acc * cfg.backhaul_bandwidth_hz;
}

}  // namespace sbrrm
