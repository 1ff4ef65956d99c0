#include <algorithm>
#include <cstdlib>
#include <chrono>
#include <cmath>

#include "linevio/est/problem.hpp"
#include "linevio/meas/residuals.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace linevio {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Gradient: return "gradient";
    case Termination::RelativeCostDecrease: return "relative_cost_decrease";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::Diverged: return "diverged";
    case Termination::InvalidInput: return "invalid_input";
  }
  return "unknown";
}

namespace {

int landmark_dim(BlockKind kind) {
  switch (kind) {
    case BlockKind::Point: return 1;
    case BlockKind::NonStructuralLine: return 2;
    case BlockKind::StructuralLine: return 2;
    case BlockKind::OrthonormalLine: return 4;
  }
  return 0;
}

struct Layout {
  std::vector<int> pose_offset;  // per keyframe index, -1 when fixed/unused
  int n_pose = 0;
  // landmark slot per (kind, landmark index)
  std::vector<int> point_slot, ns_slot, s_slot, orth_slot;
  struct LmEntry {
    BlockKind kind;
    int index;
    int offset;
    int dim;
  };
  std::vector<LmEntry> landmarks;
  int n_lm = 0;
};

Layout build_layout(const SlidingWindowProblem& p) {
  Layout layout;
  layout.pose_offset.assign(p.keyframes.size(), -1);
  layout.point_slot.assign(p.points.size(), -1);
  layout.ns_slot.assign(p.ns_lines.size(), -1);
  layout.s_slot.assign(p.s_lines.size(), -1);
  layout.orth_slot.assign(p.orth_lines.size(), -1);

  // A pose is optimized only with at least three observation blocks; below
  // that the 6-DOF increment is rank-deficient and the pose keeps its
  // current value for this solve.
  std::vector<int> kf_blocks(p.keyframes.size(), 0);
  for (const auto& b : p.blocks) {
    const int ti = p.kf_index(b.target_kf);
    if (ti >= 0) ++kf_blocks[static_cast<size_t>(ti)];
    const int ai = p.kf_index(b.anchor_kf);
    if (ai >= 0 && ai != ti) ++kf_blocks[static_cast<size_t>(ai)];
  }
  for (size_t i = 0; i < p.keyframes.size(); ++i) {
    if (!p.keyframes[i].fixed && kf_blocks[i] >= 3) {
      layout.pose_offset[i] = layout.n_pose;
      layout.n_pose += 6;
    }
  }

  auto lm_slot = [&layout](BlockKind kind, int index) -> int* {
    switch (kind) {
      case BlockKind::Point: return &layout.point_slot[static_cast<size_t>(index)];
      case BlockKind::NonStructuralLine:
        return &layout.ns_slot[static_cast<size_t>(index)];
      case BlockKind::StructuralLine:
        return &layout.s_slot[static_cast<size_t>(index)];
      case BlockKind::OrthonormalLine:
        return &layout.orth_slot[static_cast<size_t>(index)];
    }
    return nullptr;
  };
  for (const auto& b : p.blocks) {
    int* slot = lm_slot(b.kind, b.landmark);
    if (slot && *slot < 0) {
      Layout::LmEntry e;
      e.kind = b.kind;
      e.index = b.landmark;
      e.dim = landmark_dim(b.kind);
      e.offset = layout.n_lm;
      *slot = static_cast<int>(layout.landmarks.size());
      layout.landmarks.push_back(e);
      layout.n_lm += e.dim;
    }
  }
  return layout;
}

struct BlockEval {
  Vec2 r = Vec2::Zero();
  Eigen::Matrix<double, 2, 4> j_lm = Eigen::Matrix<double, 2, 4>::Zero();
  Mat26 j_anchor = Mat26::Zero();
  Mat26 j_target = Mat26::Zero();
  int lm_dim = 0;
  bool has_anchor = false;
};

bool evaluate_block(const SlidingWindowProblem& p, const ResidualBlock& b,
                    bool want_jac, BlockEval& out) {
  const int ti = p.kf_index(b.target_kf);
  if (ti < 0) return false;
  const Pose& T_w_t = p.keyframes[static_cast<size_t>(ti)].T_w_c;
  out.lm_dim = landmark_dim(b.kind);

  switch (b.kind) {
    case BlockKind::Point: {
      const int ai = p.kf_index(b.anchor_kf);
      if (ai < 0) return false;
      const Pose& T_w_a = p.keyframes[static_cast<size_t>(ai)].T_w_c;
      PointJacobians jac;
      const auto r = point_residual(p.points[static_cast<size_t>(b.landmark)],
                                    T_w_a, T_w_t, b.obs_uv,
                                    want_jac ? &jac : nullptr);
      if (!r) return false;
      out.r = *r;
      out.has_anchor = true;
      if (want_jac) {
        out.j_lm.col(0) = jac.d_lambda;
        out.j_anchor = jac.d_anchor_pose;
        out.j_target = jac.d_target_pose;
      }
      return true;
    }
    case BlockKind::NonStructuralLine: {
      const int ai = p.kf_index(b.anchor_kf);
      if (ai < 0) return false;
      const Pose& T_w_a = p.keyframes[static_cast<size_t>(ai)].T_w_c;
      NonStructuralJacobians jac;
      const auto r = nonstructural_residual(
          p.ns_lines[static_cast<size_t>(b.landmark)], T_w_a, T_w_t, b.obs_seg,
          want_jac ? &jac : nullptr);
      if (!r) return false;
      out.r = *r;
      out.has_anchor = true;
      if (want_jac) {
        out.j_lm.leftCols<2>() = jac.d_theta_rho;
        out.j_anchor = jac.d_anchor_pose;
        out.j_target = jac.d_target_pose;
      }
      return true;
    }
    case BlockKind::StructuralLine: {
      StructuralJacobians jac;
      const auto r =
          structural_residual(p.s_lines[static_cast<size_t>(b.landmark)], T_w_t,
                              b.obs_seg, want_jac ? &jac : nullptr);
      if (!r) return false;
      out.r = *r;
      if (want_jac) {
        out.j_lm.leftCols<2>() = jac.d_theta_rho;
        out.j_target = jac.d_target_pose;
      }
      return true;
    }
    case BlockKind::OrthonormalLine: {
      OrthonormalJacobians jac;
      const auto r = orthonormal_residual(
          p.orth_lines[static_cast<size_t>(b.landmark)], T_w_t, b.obs_seg,
          want_jac ? &jac : nullptr);
      if (!r) return false;
      out.r = *r;
      if (want_jac) out.j_lm = jac.d_line;
      return true;
    }
  }
  return false;
}

// Total robustified cost; negative when some block is not evaluable.
double total_cost(const SlidingWindowProblem& p, int* offending = nullptr) {
  double cost = 0.0;
  BlockEval ev;
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    if (!evaluate_block(p, p.blocks[i], false, ev)) {
      if (offending) *offending = static_cast<int>(i);
      return -1.0;
    }
    const Vec2 rw = p.blocks[i].sqrt_info * ev.r;
    cost += cauchy_weight(rw.squaredNorm(), p.loss).cost;
  }
  return cost;
}

struct NormalEquations {
  Eigen::MatrixXd h_pp;
  Eigen::VectorXd g_p;
  Eigen::MatrixXd b;  // n_pose x n_lm cross term
  std::vector<Mat4> h_ll;
  std::vector<Vec4> g_l;
  double gradient_inf_norm = 0.0;
};

bool linearize(const SlidingWindowProblem& p, const Layout& layout,
               NormalEquations& eq) {
  eq.h_pp.setZero(layout.n_pose, layout.n_pose);
  eq.g_p.setZero(layout.n_pose);
  eq.b.setZero(layout.n_pose, layout.n_lm);
  eq.h_ll.assign(layout.landmarks.size(), Mat4::Zero());
  eq.g_l.assign(layout.landmarks.size(), Vec4::Zero());

  auto lm_slot_of = [&layout](const ResidualBlock& b) -> int {
    switch (b.kind) {
      case BlockKind::Point: return layout.point_slot[static_cast<size_t>(b.landmark)];
      case BlockKind::NonStructuralLine:
        return layout.ns_slot[static_cast<size_t>(b.landmark)];
      case BlockKind::StructuralLine:
        return layout.s_slot[static_cast<size_t>(b.landmark)];
      case BlockKind::OrthonormalLine:
        return layout.orth_slot[static_cast<size_t>(b.landmark)];
    }
    return -1;
  };

  BlockEval ev;
  for (const auto& blk : p.blocks) {
    if (!evaluate_block(p, blk, true, ev)) return false;
    const Vec2 rw = blk.sqrt_info * ev.r;
    const double w = cauchy_weight(rw.squaredNorm(), p.loss).weight;
    const double sw = std::sqrt(w);
    const Mat2 scale = sw * blk.sqrt_info;
    const Vec2 r_s = sw * rw;

    // Pose Jacobians, merged when anchor == target.
    const int ti = p.kf_index(blk.target_kf);
    const int ai = ev.has_anchor ? p.kf_index(blk.anchor_kf) : -1;
    Mat26 j_pose[2];
    int pose_off[2] = {-1, -1};
    int n_pose_blocks = 0;
    const int t_off = layout.pose_offset[static_cast<size_t>(ti)];
    if (t_off >= 0) {
      j_pose[n_pose_blocks] = scale * ev.j_target;
      pose_off[n_pose_blocks] = t_off;
      ++n_pose_blocks;
    }
    if (ai >= 0) {
      const int a_off = layout.pose_offset[static_cast<size_t>(ai)];
      if (a_off >= 0) {
        if (n_pose_blocks > 0 && pose_off[0] == a_off) {
          j_pose[0] += scale * ev.j_anchor;
        } else {
          j_pose[n_pose_blocks] = scale * ev.j_anchor;
          pose_off[n_pose_blocks] = a_off;
          ++n_pose_blocks;
        }
      }
    }

    const int slot = lm_slot_of(blk);
    const int m = ev.lm_dim;
    Eigen::Matrix<double, 2, 4> j_lm;
    if (slot >= 0) j_lm.leftCols(m) = scale * ev.j_lm.leftCols(m);

    for (int a = 0; a < n_pose_blocks; ++a) {
      eq.g_p.segment<6>(pose_off[a]) += j_pose[a].transpose() * r_s;
      for (int c = a; c < n_pose_blocks; ++c) {
        const Eigen::Matrix<double, 6, 6> h =
            j_pose[a].transpose() * j_pose[c];
        eq.h_pp.block<6, 6>(pose_off[a], pose_off[c]) += h;
        if (c != a) {
          eq.h_pp.block<6, 6>(pose_off[c], pose_off[a]) += h.transpose();
        }
      }
      if (slot >= 0) {
        eq.b.block(pose_off[a], layout.landmarks[static_cast<size_t>(slot)].offset,
                   6, m) += j_pose[a].transpose() * j_lm.leftCols(m);
      }
    }
    if (slot >= 0) {
      eq.h_ll[static_cast<size_t>(slot)].topLeftCorner(m, m) +=
          j_lm.leftCols(m).transpose() * j_lm.leftCols(m);
      eq.g_l[static_cast<size_t>(slot)].head(m) +=
          j_lm.leftCols(m).transpose() * r_s;
    }
  }

  double gmax = eq.g_p.size() > 0 ? eq.g_p.cwiseAbs().maxCoeff() : 0.0;
  for (size_t i = 0; i < layout.landmarks.size(); ++i) {
    const int m = layout.landmarks[i].dim;
    const double g = eq.g_l[i].head(m).cwiseAbs().maxCoeff();
    gmax = std::max(gmax, g);
  }
  eq.gradient_inf_norm = gmax;
  return true;
}

// Solves the damped normal equations. Uses a Schur complement on the
// landmarks when poses are free; plain dense Cholesky otherwise.
// pred_decrease gets the decrease promised by the local quadratic model,
// 0.5 * (lambda * d^T D d - d^T g), used for the gain-ratio test.
bool solve_normal_equations(const Layout& layout, const NormalEquations& eq,
                            double lambda, Eigen::VectorXd& delta_pose,
                            Eigen::VectorXd& delta_lm,
                            double* pred_decrease) {
  const int np = layout.n_pose;
  const int nl = layout.n_lm;
  delta_pose.setZero(np);
  delta_lm.setZero(nl);

  // Global damping scale; the absolute floor keeps near-null directions
  // numerically pinned.
  double max_diag = 0.0;
  for (int i = 0; i < np; ++i) max_diag = std::max(max_diag, eq.h_pp(i, i));
  for (size_t i = 0; i < layout.landmarks.size(); ++i) {
    for (int d = 0; d < layout.landmarks[i].dim; ++d) {
      max_diag = std::max(max_diag, eq.h_ll[i](d, d));
    }
  }
  const double floor = std::max(1e-12, 1e-10 * max_diag);
  auto damp_value = [lambda, floor](double h) {
    return lambda * std::max(h, floor) + floor;
  };
  auto damped = [&damp_value](const Eigen::MatrixXd& h) {
    Eigen::MatrixXd d = h;
    for (int i = 0; i < h.rows(); ++i) {
      d(i, i) += damp_value(h(i, i));
    }
    return d;
  };

  // Model-promised decrease 0.5 * (delta^T (lambda D) delta - g^T delta),
  // valid because (H + lambda D) delta = -g.
  auto finish = [&]() {
    if (pred_decrease) {
      double quad = 0.0, lin = 0.0;
      for (int i = 0; i < np; ++i) {
        quad += damp_value(eq.h_pp(i, i)) * delta_pose(i) * delta_pose(i);
      }
      lin += eq.g_p.dot(delta_pose);
      for (size_t i = 0; i < layout.landmarks.size(); ++i) {
        const auto& lm = layout.landmarks[i];
        for (int d = 0; d < lm.dim; ++d) {
          const double x = delta_lm(lm.offset + d);
          quad += damp_value(eq.h_ll[i](d, d)) * x * x;
        }
        lin += eq.g_l[i].head(lm.dim).dot(delta_lm.segment(lm.offset, lm.dim));
      }
      *pred_decrease = 0.5 * (quad - lin);
    }
    return true;
  };

  if (np > 0 && nl > 0 && std::getenv("LINEVIO_DENSE")) {
    const int n = np + nl;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    h.topLeftCorner(np, np) = eq.h_pp;
    g.head(np) = eq.g_p;
    for (size_t i = 0; i < layout.landmarks.size(); ++i) {
      const auto& lm = layout.landmarks[i];
      h.block(np + lm.offset, np + lm.offset, lm.dim, lm.dim) =
          eq.h_ll[i].topLeftCorner(lm.dim, lm.dim);
      h.block(0, np + lm.offset, np, lm.dim) = eq.b.middleCols(lm.offset, lm.dim);
      h.block(np + lm.offset, 0, lm.dim, np) =
          eq.b.middleCols(lm.offset, lm.dim).transpose();
      g.segment(np + lm.offset, lm.dim) = eq.g_l[i].head(lm.dim);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped(h));
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd delta = ldlt.solve(-g);
    delta_pose = delta.head(np);
    delta_lm = delta.tail(nl);
    return finish();
  }

  if (np > 0 && nl > 0) {
    Eigen::MatrixXd s = damped(eq.h_pp);
    Eigen::VectorXd rhs = -eq.g_p;
    std::vector<Eigen::MatrixXd> dinv(layout.landmarks.size());
    for (size_t i = 0; i < layout.landmarks.size(); ++i) {
      const auto& lm = layout.landmarks[i];
      Eigen::MatrixXd d = damped(eq.h_ll[i].topLeftCorner(lm.dim, lm.dim));
      Eigen::LDLT<Eigen::MatrixXd> ldlt(d);
      if (ldlt.info() != Eigen::Success) return false;
      dinv[i] = ldlt.solve(Eigen::MatrixXd::Identity(lm.dim, lm.dim));
      const Eigen::MatrixXd b_l = eq.b.middleCols(lm.offset, lm.dim);
      const Eigen::MatrixXd w = b_l * dinv[i];
      s -= w * b_l.transpose();
      rhs += w * eq.g_l[i].head(lm.dim);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success) return false;
    delta_pose = ldlt.solve(rhs);
    for (size_t i = 0; i < layout.landmarks.size(); ++i) {
      const auto& lm = layout.landmarks[i];
      const Eigen::MatrixXd b_l = eq.b.middleCols(lm.offset, lm.dim);
      delta_lm.segment(lm.offset, lm.dim) =
          -dinv[i] * (eq.g_l[i].head(lm.dim) + b_l.transpose() * delta_pose);
    }
    return finish();
  }

  if (np > 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped(eq.h_pp));
    if (ldlt.info() != Eigen::Success) return false;
    delta_pose = ldlt.solve(-eq.g_p);
    return finish();
  }

  if (nl > 0) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nl, nl);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nl);
    for (size_t i = 0; i < layout.landmarks.size(); ++i) {
      const auto& lm = layout.landmarks[i];
      h.block(lm.offset, lm.offset, lm.dim, lm.dim) =
          eq.h_ll[i].topLeftCorner(lm.dim, lm.dim);
      g.segment(lm.offset, lm.dim) = eq.g_l[i].head(lm.dim);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped(h));
    if (ldlt.info() != Eigen::Success) return false;
    delta_lm = ldlt.solve(-g);
    return finish();
  }
  return finish();
}

// Inverse depths are projected onto their lower bound rather than rejecting
// the whole joint step; one landmark at its bound must not veto the rest.
void apply_step(const SlidingWindowProblem& base, const Layout& layout,
                const Eigen::VectorXd& delta_pose,
                const Eigen::VectorXd& delta_lm, const SolveOptions& opts,
                SlidingWindowProblem& out) {
  out = base;
  for (size_t i = 0; i < base.keyframes.size(); ++i) {
    const int off = layout.pose_offset[i];
    if (off < 0) continue;
    out.keyframes[i].T_w_c =
        base.keyframes[i].T_w_c.retract(delta_pose.segment<6>(off));
  }
  for (const auto& lm : layout.landmarks) {
    const auto d = delta_lm.segment(lm.offset, lm.dim);
    switch (lm.kind) {
      case BlockKind::Point: {
        auto& pt = out.points[static_cast<size_t>(lm.index)];
        pt.lambda = std::max(pt.lambda + d(0), opts.min_inverse_depth);
        break;
      }
      case BlockKind::NonStructuralLine: {
        auto& l = out.ns_lines[static_cast<size_t>(lm.index)];
        l.theta = wrap_angle(l.theta + d(0));
        l.rho = std::max(l.rho + d(1), opts.min_inverse_depth);
        break;
      }
      case BlockKind::StructuralLine: {
        auto& l = out.s_lines[static_cast<size_t>(lm.index)];
        l.theta = wrap_angle(l.theta + d(0));
        l.rho = std::max(l.rho + d(1), opts.min_inverse_depth);
        break;
      }
      case BlockKind::OrthonormalLine: {
        auto& l = out.orth_lines[static_cast<size_t>(lm.index)];
        l = orthonormal_update(l, Vec4(d(0), d(1), d(2), d(3)));
        break;
      }
    }
  }
}

}  // namespace

SolveReport solve(SlidingWindowProblem& problem, const SolveOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveReport report;

  int offending = -1;
  double cost = total_cost(problem, &offending);
  if (cost < 0.0) {
    report.ok = false;
    report.reason = Termination::InvalidInput;
    report.offending_block = offending;
    report.message = "block " + std::to_string(offending) +
                     " not evaluable at the initial state";
    return report;
  }
  report.initial_cost = cost;
  report.ok = true;
  report.reason = Termination::MaxIterations;

  const Layout layout = build_layout(problem);
  NormalEquations eq;
  Eigen::VectorXd delta_pose, delta_lm;
  SlidingWindowProblem trial;
  double lambda = options.init_lambda;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (!linearize(problem, layout, eq)) {
      report.reason = Termination::Diverged;
      break;
    }
    if (eq.gradient_inf_norm < options.gradient_tol) {
      report.reason = Termination::Gradient;
      break;
    }

    bool accepted = false;
    double rel_decrease = 0.0;
    while (lambda <= options.max_lambda) {
      if (!solve_normal_equations(layout, eq, lambda, delta_pose, delta_lm)) {
        lambda *= options.lambda_up;
        continue;
      }
      apply_step(problem, layout, delta_pose, delta_lm, options, trial);
      const double trial_cost = total_cost(trial, nullptr);
      if (std::getenv("LINEVIO_SOLVER_DEBUG") && lambda > 1e6) {
        const double pred =
            delta_pose.dot(-eq.g_p) +
            [&] {
              double s = 0.0;
              for (size_t i = 0; i < layout.landmarks.size(); ++i) {
                const auto& lm = layout.landmarks[i];
                s += delta_lm.segment(lm.offset, lm.dim)
                         .dot(-eq.g_l[i].head(lm.dim));
              }
              return s;
            }();
        std::fprintf(stderr,
                     "  [lm] lambda=%.3g cost=%.17g trial=%.17g gmax=%.3g "
                     "|dp|=%.3g |dl|=%.3g pred_lin=%.3g\n",
                     lambda, cost, trial_cost, eq.gradient_inf_norm,
                     delta_pose.norm(), delta_lm.norm(), pred);
      }
      if (trial_cost >= 0.0 && trial_cost < cost) {
        rel_decrease = (cost - trial_cost) / std::max(cost, 1e-300);
        problem = std::move(trial);
        trial = SlidingWindowProblem{};
        cost = trial_cost;
        lambda = std::max(lambda * options.lambda_down, 1e-14);
        accepted = true;
        break;
      }
      lambda *= options.lambda_up;
    }
    report.iterations = iter + 1;
    if (!accepted) {
      report.reason = Termination::Diverged;
      break;
    }
    if (rel_decrease < options.rel_cost_tol) {
      report.reason = Termination::RelativeCostDecrease;
      break;
    }
  }

  report.final_cost = cost;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

}  // namespace linevio
