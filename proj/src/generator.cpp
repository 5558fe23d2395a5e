#include "noisyarm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyarm/rng.hpp"

namespace noisyarm {

namespace {

constexpr double kUpperArm = 0.35;
constexpr double kForearm = 0.30;
constexpr double kHomeX = 0.0;
constexpr double kHomeY = 0.15;
constexpr double kWorkspaceSpan = 0.7;  // usable extent; jitter scales off this

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct CameraView {
  double r00, r01, r10, r11, tx, ty;
  Vec2 apply(Vec2 p) const { return {r00 * p.x + r01 * p.y + tx, r10 * p.x + r11 * p.y + ty}; }
};

CameraView camera_view(std::size_t index) {
  const double angle = -0.12 + 0.62 * static_cast<double>(index);
  const double s = 1.0 / (1.0 + 0.18 * static_cast<double>(index));
  const double c = std::cos(angle), sn = std::sin(angle);
  return {s * c, -s * sn, s * sn, s * c, 0.05 * static_cast<double>(index),
          -0.04 * static_cast<double>(index)};
}

// Elbow-up inverse kinematics for the 2-link arm; returns the elbow point.
// The target is clamped into the reachable annulus first.
Vec2 elbow_for_target(Vec2& target) {
  double d = std::hypot(target.x, target.y);
  const double dmin = std::abs(kUpperArm - kForearm) + 0.03;
  const double dmax = kUpperArm + kForearm - 0.02;
  if (d < 1e-12) {
    target = {dmin, 0.0};
    d = dmin;
  } else if (d < dmin || d > dmax) {
    const double dc = std::clamp(d, dmin, dmax);
    target.x *= dc / d;
    target.y *= dc / d;
    d = dc;
  }
  const double cos_elbow = std::clamp(
      (d * d - kUpperArm * kUpperArm - kForearm * kForearm) / (2.0 * kUpperArm * kForearm), -1.0,
      1.0);
  const double elbow_angle = std::acos(cos_elbow);
  const double shoulder_angle =
      std::atan2(target.y, target.x) -
      std::atan2(kForearm * std::sin(elbow_angle), kUpperArm + kForearm * std::cos(elbow_angle));
  return {kUpperArm * std::cos(shoulder_angle), kUpperArm * std::sin(shoulder_angle)};
}

const Vec2 kMounts[4] = {{-0.08, -0.06}, {0.08, -0.06}, {-0.08, -0.12}, {0.08, -0.12}};
const Vec2 kBase = {0.0, -0.09};

}  // namespace

double min_jerk(double tau) {
  const double t3 = tau * tau * tau;
  return 10.0 * t3 - 15.0 * t3 * tau + 6.0 * t3 * tau * tau;
}

void board_cell_center(int label, double& x, double& y) {
  const int row = label / 3, col = label % 3;
  x = -0.15 + 0.15 * static_cast<double>(col);
  y = 0.20 + 0.15 * static_cast<double>(row);
}

Dataset generate(const GeneratorParams& params) {
  if (params.samples_per_class < 1) throw std::invalid_argument("generate: samples_per_class < 1");
  if (params.keypoints < 2) throw std::invalid_argument("generate: keypoints < 2");
  if (params.keypoints > 11) throw std::invalid_argument("generate: keypoints > 11 unsupported");
  if (params.timesteps < 4) throw std::invalid_argument("generate: timesteps < 4");
  if (params.cameras < 1) throw std::invalid_argument("generate: cameras < 1");

  const std::size_t mounts = params.keypoints >= 8 ? params.keypoints - 7 : 0;
  const std::size_t joints = params.keypoints - 1 - mounts;

  std::vector<std::string> kp_names;
  for (std::size_t m = 0; m < mounts; ++m) kp_names.push_back("m" + std::to_string(m + 1));
  for (std::size_t j = 0; j < joints; ++j) kp_names.push_back("j" + std::to_string(j + 1));
  kp_names.push_back("b");

  std::vector<std::string> channel_names;
  for (std::size_t cam = 0; cam < params.cameras; ++cam) {
    for (const auto& kp : kp_names) {
      channel_names.push_back("cam" + std::to_string(cam + 1) + "." + kp + ".x");
      channel_names.push_back("cam" + std::to_string(cam + 1) + "." + kp + ".y");
    }
  }

  std::vector<CameraView> views;
  for (std::size_t cam = 0; cam < params.cameras; ++cam) views.push_back(camera_view(cam));

  const std::size_t channels = params.cameras * params.keypoints * 2;
  const std::size_t t_count = params.timesteps;
  std::vector<LabeledSample> samples;
  samples.reserve(kNumClasses * params.samples_per_class);

  std::vector<Vec2> keypoints(params.keypoints);
  for (int label = 0; label < kNumClasses; ++label) {
    double cx, cy;
    board_cell_center(label, cx, cy);
    for (std::size_t idx = 0; idx < params.samples_per_class; ++idx) {
      Rng rng(mix_seed(mix_seed(params.seed, static_cast<std::uint64_t>(label)), idx));
      Vec2 target{cx + rng.normal() * params.jitter_std * kWorkspaceSpan,
                  cy + rng.normal() * params.jitter_std * kWorkspaceSpan};
      const double apex =
          std::clamp(0.5 + rng.normal() * params.timing_jitter, 0.25, 0.75);

      std::vector<double> values(channels * t_count);
      for (std::size_t frame = 0; frame < t_count; ++frame) {
        const double tau = static_cast<double>(frame) / static_cast<double>(t_count - 1);
        Vec2 ee;
        if (tau <= apex) {
          const double s = min_jerk(tau / apex);
          ee = {kHomeX + s * (target.x - kHomeX), kHomeY + s * (target.y - kHomeY)};
        } else {
          const double s = min_jerk((tau - apex) / (1.0 - apex));
          ee = {target.x + s * (kHomeX - target.x), target.y + s * (kHomeY - target.y)};
        }
        Vec2 reach = ee;
        const Vec2 elbow = elbow_for_target(reach);
        ee = reach;

        std::size_t k = 0;
        for (std::size_t m = 0; m < mounts; ++m) keypoints[k++] = kMounts[m];
        const double chain = kUpperArm + kForearm;
        for (std::size_t j = 0; j < joints; ++j) {
          const double f =
              joints == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(joints - 1);
          const double len = f * chain;
          if (len <= kUpperArm) {
            const double u = len / kUpperArm;
            keypoints[k++] = {u * elbow.x, u * elbow.y};
          } else {
            const double u = (len - kUpperArm) / kForearm;
            keypoints[k++] = {elbow.x + u * (ee.x - elbow.x), elbow.y + u * (ee.y - elbow.y)};
          }
        }
        keypoints[k++] = kBase;

        std::size_t ch = 0;
        for (std::size_t cam = 0; cam < params.cameras; ++cam) {
          for (std::size_t kp = 0; kp < params.keypoints; ++kp) {
            const Vec2 p = views[cam].apply(keypoints[kp]);
            values[(ch + 0) * t_count + frame] = p.x;
            values[(ch + 1) * t_count + frame] = p.y;
            ch += 2;
          }
        }
      }
      LabeledSample sample;
      sample.series = Series(channels, t_count, std::move(values), channel_names);
      sample.label = label;
      sample.sample_id = "syn_c" + std::to_string(label) + "_s" + std::to_string(idx);
      samples.push_back(std::move(sample));
    }
  }

  Provenance prov;
  prov.kind = Provenance::Kind::synthetic;
  prov.params = params;
  return Dataset(std::move(samples), default_class_names(), std::move(prov));
}

}  // namespace noisyarm
