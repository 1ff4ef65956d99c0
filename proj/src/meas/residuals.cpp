#include "linevio/meas/residuals.hpp"

#include <cmath>

namespace linevio {

namespace {

constexpr double kMinDepth = 1e-8;

struct ProjectedLine {
  Vec3 l;
  Vec2 r;
  Mat23 d_r_d_l;  // valid only when requested
};

std::optional<ProjectedLine> project_line_and_distances(const Vec3& p,
                                                        const Vec3& v,
                                                        const Segment2D& obs,
                                                        bool want_jacobian) {
  ProjectedLine out;
  out.l = p.cross(v);
  if (out.l.norm() < 1e-12) return std::nullopt;
  const double h2 = out.l.x() * out.l.x() + out.l.y() * out.l.y();
  if (h2 < 1e-24) return std::nullopt;
  const double h = std::sqrt(h2);
  const double es = obs.s.dot(out.l);
  const double ee = obs.e.dot(out.l);
  out.r << es / h, ee / h;
  if (want_jacobian) {
    const double h3 = h2 * h;
    out.d_r_d_l << obs.s.x() / h - out.l.x() * es / h3,
        obs.s.y() / h - out.l.y() * es / h3, 1.0 / h,
        obs.e.x() / h - out.l.x() * ee / h3,
        obs.e.y() / h - out.l.y() * ee / h3, 1.0 / h;
  }
  return out;
}

}  // namespace

std::optional<Vec3> line_equation(const Vec3& p, const Vec3& v) {
  const Vec3 l = p.cross(v);
  if (l.norm() < 1e-12) return std::nullopt;
  return l;
}

std::optional<double> endpoint_line_distance(const Vec3& x, const Vec3& l) {
  const double h2 = l.x() * l.x() + l.y() * l.y();
  if (h2 < 1e-24) return std::nullopt;
  return x.dot(l) / std::sqrt(h2);
}

std::optional<Vec2> point_residual(const PointLandmark& lm,
                                   const Pose& T_w_anchor,
                                   const Pose& T_w_target, const Vec2& obs,
                                   PointJacobians* jac) {
  if (lm.lambda <= 0.0) return std::nullopt;
  const Vec3 f_a = lm.z / lm.lambda;
  const Vec3 x_w = T_w_anchor * f_a;
  const Mat3 R_t_w = T_w_target.R.transpose();
  const Vec3 x_t = R_t_w * (x_w - T_w_target.p);
  if (x_t.z() <= kMinDepth) return std::nullopt;
  const double iz = 1.0 / x_t.z();
  Vec2 r(x_t.x() * iz - obs.x(), x_t.y() * iz - obs.y());
  if (jac) {
    Mat23 d_r_d_xt;
    d_r_d_xt << iz, 0.0, -x_t.x() * iz * iz, 0.0, iz, -x_t.y() * iz * iz;
    const Mat3 R_ta = R_t_w * T_w_anchor.R;
    jac->d_lambda = d_r_d_xt * (R_ta * (-f_a / lm.lambda));
    jac->d_anchor_pose.leftCols<3>() = d_r_d_xt * R_t_w;
    jac->d_anchor_pose.rightCols<3>() = d_r_d_xt * (-R_ta * skew(f_a));
    jac->d_target_pose.leftCols<3>() = d_r_d_xt * (-R_t_w);
    jac->d_target_pose.rightCols<3>() = d_r_d_xt * skew(x_t);
  }
  return r;
}

std::optional<Vec2> nonstructural_residual(const NonStructuralLine& line,
                                           const Pose& T_w_anchor,
                                           const Pose& T_w_target,
                                           const Segment2D& obs,
                                           NonStructuralJacobians* jac) {
  if (line.rho <= 0.0) return std::nullopt;
  const auto [s_a, v_a] = nonstructural_to_camera_line(line);
  const Mat3 R_t_w = T_w_target.R.transpose();
  const Mat3 R_ta = R_t_w * T_w_anchor.R;
  const Vec3 s_t = R_t_w * (T_w_anchor * s_a - T_w_target.p);
  const Vec3 v_t = R_ta * v_a;
  const auto proj = project_line_and_distances(s_t, v_t, obs, jac != nullptr);
  if (!proj) return std::nullopt;
  if (jac) {
    const Mat3 Vx = skew(v_t);
    const Mat3 Sx = skew(s_t);
    const Vec3 dv_a_dtheta =
        line.frame.R_P_C *
        Vec3(-std::sin(line.theta), std::cos(line.theta), 0.0);
    const Vec3 ds_a_drho = -line.frame.y_axis() / (line.rho * line.rho);
    jac->d_theta_rho.col(0) = proj->d_r_d_l * (Sx * (R_ta * dv_a_dtheta));
    jac->d_theta_rho.col(1) = proj->d_r_d_l * (-Vx * (R_ta * ds_a_drho));
    jac->d_anchor_pose.leftCols<3>() = proj->d_r_d_l * (-Vx * R_t_w);
    jac->d_anchor_pose.rightCols<3>() =
        proj->d_r_d_l * (Vx * R_ta * skew(s_a) - Sx * R_ta * skew(v_a));
    jac->d_target_pose.leftCols<3>() = proj->d_r_d_l * (Vx * R_t_w);
    jac->d_target_pose.rightCols<3>() = proj->d_r_d_l * (-Vx * Sx + Sx * Vx);
  }
  return proj->r;
}

std::optional<Vec2> structural_residual(const StructuralLine& line,
                                        const Pose& T_w_target,
                                        const Segment2D& obs,
                                        StructuralJacobians* jac) {
  if (line.rho <= 0.0) return std::nullopt;
  const auto [p_c, v_c] = structural_to_camera_line(line, T_w_target);
  const auto proj = project_line_and_distances(p_c, v_c, obs, jac != nullptr);
  if (!proj) return std::nullopt;
  if (jac) {
    const Mat3 Vx = skew(v_c);
    const Mat3 Px = skew(p_c);
    const Mat3 R_c_w = T_w_target.R.transpose();
    const Mat3 Q = line.manhattan.R_S_W() * line.R_L_S();
    const double irho = 1.0 / line.rho;
    const Vec3 dlp_dtheta(-std::sin(line.theta) * irho,
                          std::cos(line.theta) * irho, 0.0);
    const Vec3 dlp_drho(-std::cos(line.theta) * irho * irho,
                        -std::sin(line.theta) * irho * irho, 0.0);
    jac->d_theta_rho.col(0) = proj->d_r_d_l * (-Vx * (R_c_w * (Q * dlp_dtheta)));
    jac->d_theta_rho.col(1) = proj->d_r_d_l * (-Vx * (R_c_w * (Q * dlp_drho)));
    jac->d_target_pose.leftCols<3>() = proj->d_r_d_l * (Vx * R_c_w);
    jac->d_target_pose.rightCols<3>() = proj->d_r_d_l * (-Vx * Px + Px * Vx);
  }
  return proj->r;
}

std::optional<Vec2> orthonormal_residual(const OrthonormalLine& line_w,
                                         const Pose& T_w_target,
                                         const Segment2D& obs,
                                         OrthonormalJacobians* jac) {
  const PluckerLine lw = orthonormal_to_plucker(line_w, 1.0);
  const Mat3 R_c_w = T_w_target.R.transpose();
  const Vec3 t_c_w = -(R_c_w * T_w_target.p);
  const Vec3 v_c = R_c_w * lw.v;
  const Vec3 n_c = R_c_w * lw.n + t_c_w.cross(v_c);
  // The projected image line of a Plucker line is its moment vector.
  const double h2 = n_c.x() * n_c.x() + n_c.y() * n_c.y();
  if (n_c.norm() < 1e-12 || h2 < 1e-24) return std::nullopt;
  const double h = std::sqrt(h2);
  const double es = obs.s.dot(n_c);
  const double ee = obs.e.dot(n_c);
  Vec2 r(es / h, ee / h);
  if (jac) {
    const double h3 = h2 * h;
    Mat23 d_r_d_l;
    d_r_d_l << obs.s.x() / h - n_c.x() * es / h3,
        obs.s.y() / h - n_c.y() * es / h3, 1.0 / h,
        obs.e.x() / h - n_c.x() * ee / h3,
        obs.e.y() / h - n_c.y() * ee / h3, 1.0 / h;
    // d l / d (n_w, v_w)
    const Mat3 d_l_d_nw = R_c_w;
    const Mat3 d_l_d_vw = skew(t_c_w) * R_c_w;
    // d (n_w, v_w) / d delta for the right-multiplicative update
    const Vec3 u1 = line_w.U.col(0);
    const Vec3 u2 = line_w.U.col(1);
    const Vec3 u3 = line_w.U.col(2);
    const double w1 = line_w.W(0, 0);
    const double w2 = line_w.W(1, 0);
    Eigen::Matrix<double, 3, 4> dn, dv;
    dn.col(0).setZero();
    dn.col(1) = -w1 * u3;
    dn.col(2) = w1 * u2;
    dn.col(3) = -w2 * u1;
    dv.col(0) = w2 * u3;
    dv.col(1).setZero();
    dv.col(2) = -w2 * u1;
    dv.col(3) = w1 * u2;
    jac->d_line = d_r_d_l * (d_l_d_nw * dn + d_l_d_vw * dv);
  }
  return r;
}

}  // namespace linevio
