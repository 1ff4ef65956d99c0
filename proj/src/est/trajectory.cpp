#include "linevio/est/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

namespace linevio {

bool write_tum(const std::vector<TimedPose>& trajectory,
               const std::string& path) {
  std::ofstream out(path);
  if (!out) return false;
  char buf[256];
  for (const auto& tp : trajectory) {
    const Eigen::Quaterniond q(tp.T_w_c.R);
    std::snprintf(buf, sizeof(buf),
                  "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", tp.t,
                  tp.T_w_c.p.x(), tp.T_w_c.p.y(), tp.T_w_c.p.z(), q.x(), q.y(),
                  q.z(), q.w());
    out << buf;
  }
  return static_cast<bool>(out);
}

std::optional<std::vector<TimedPose>> read_tum(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<TimedPose> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      return std::nullopt;
    }
    TimedPose tp;
    tp.t = t;
    tp.T_w_c.p = Vec3(tx, ty, tz);
    tp.T_w_c.R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    out.push_back(tp);
  }
  return out;
}

std::optional<ApeResult> evaluate_ape(const std::vector<TimedPose>& estimate,
                                      const std::vector<TimedPose>& ground_truth,
                                      bool align, double time_tolerance) {
  std::vector<std::pair<size_t, size_t>> pairs;
  size_t j = 0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    while (j + 1 < ground_truth.size() &&
           std::abs(ground_truth[j + 1].t - estimate[i].t) <=
               std::abs(ground_truth[j].t - estimate[i].t)) {
      ++j;
    }
    if (j < ground_truth.size() &&
        std::abs(ground_truth[j].t - estimate[i].t) <= time_tolerance) {
      pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) return std::nullopt;

  Pose correction;  // applied to the estimate
  if (align && pairs.size() >= 3) {
    Eigen::MatrixXd src(3, pairs.size()), dst(3, pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      src.col(k) = estimate[pairs[k].first].T_w_c.p;
      dst.col(k) = ground_truth[pairs[k].second].T_w_c.p;
    }
    const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
    correction.R = T.topLeftCorner<3, 3>();
    correction.p = T.topRightCorner<3, 1>();
  }

  double trans_sq = 0.0, rot_sq = 0.0;
  for (const auto& [ei, gi] : pairs) {
    const Pose est = correction * estimate[ei].T_w_c;
    const Pose& gt = ground_truth[gi].T_w_c;
    trans_sq += (est.p - gt.p).squaredNorm();
    const double ang = log_so3(gt.R.transpose() * est.R).norm();
    rot_sq += ang * ang;
  }
  const double n = static_cast<double>(pairs.size());
  ApeResult r;
  r.trans_rmse_cm = std::sqrt(trans_sq / n) * 100.0;
  r.rot_rmse_deg = rad2deg(std::sqrt(rot_sq / n));
  r.matched_poses = static_cast<int>(pairs.size());
  return r;
}

}  // namespace linevio
