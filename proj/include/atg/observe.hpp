#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atg/model.hpp"

namespace atg {

/// One raw sensor detection. Visual detections carry projected image-plane
/// coordinates; tactile ones do not.
struct FeatureDetection {
    std::string ftype;
    std::string value;
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();  // object frame, meters
    std::optional<Eigen::Vector2d> image_xy;

    bool is_visual() const { return image_xy.has_value(); }
};

/// Position estimate for one identified feature, refined over repeated
/// observations by a static-state Kalman filter.
struct KalmanTrack {
    std::string ftype;
    std::string value;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
    int n_obs = 0;
};

/// Measurement update with identity dynamics and zero process noise:
/// K = P(P+R)^-1, mean' = mean + K(z - mean), P' = (I-K)P.
inline KalmanTrack kf_update(const KalmanTrack& track, const Eigen::Vector3d& z,
                             const Eigen::Matrix3d& meas_noise) {
    Eigen::Matrix3d s = track.cov + meas_noise;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(s);
    if (!lu.isInvertible()) {
        throw std::runtime_error("kf_update: singular innovation covariance");
    }
    Eigen::Matrix3d gain = track.cov * lu.inverse();
    KalmanTrack out = track;
    out.mean = track.mean + gain * (z - track.mean);
    Eigen::Matrix3d p = (Eigen::Matrix3d::Identity() - gain) * track.cov;
    out.cov = (p + p.transpose()) / 2.0;
    out.n_obs = track.n_obs + 1;
    return out;
}

/// Deterministic total order over detections: visual features left to right
/// (ascending image x), bottom to top (ascending image y, y up), then
/// tactile features by (ftype, value).
inline std::vector<FeatureDetection> order_features(std::vector<FeatureDetection> detections) {
    auto identity = [](const FeatureDetection& d) { return std::tie(d.ftype, d.value); };
    std::sort(detections.begin(), detections.end(),
              [&](const FeatureDetection& a, const FeatureDetection& b) {
                  if (a.is_visual() != b.is_visual()) return a.is_visual();
                  if (a.is_visual()) {
                      const auto& pa = *a.image_xy;
                      const auto& pb = *b.image_xy;
                      if (pa.x() != pb.x()) return pa.x() < pb.x();
                      if (pa.y() != pb.y()) return pa.y() < pb.y();
                  }
                  return identity(a) < identity(b);
              });
    return detections;
}

/// The aspect mapping: string form of the ordered (ftype, value) collection.
inline std::string aspect_key(const std::vector<FeatureDetection>& ordered) {
    if (ordered.empty()) return "∅";
    std::string key;
    for (size_t i = 0; i < ordered.size(); ++i) {
        if (i > 0) key += ';';
        key += ordered[i].ftype;
        key += ':';
        key += ordered[i].value;
    }
    return key;
}

/// Maintains one Kalman track per identified feature and turns a detection
/// list into the current aspect node, keeping the model's feature table in
/// sync. Association is exact (ftype, value) match.
class ObservationPipeline {
  public:
    ObservationPipeline()
        : meas_noise_(1e-4 * Eigen::Matrix3d::Identity()),       // (0.01 m)^2
          initial_cov_(Eigen::Matrix3d::Identity()) {}            // (1.0 m)^2

    ObservationPipeline(const Eigen::Matrix3d& meas_noise, const Eigen::Matrix3d& initial_cov)
        : meas_noise_(meas_noise), initial_cov_(initial_cov) {}

    struct Result {
        std::string key;
        bool novel_node = false;
    };

    /// Updates tracks from the detections, upserts the corresponding model
    /// features, and gets or creates the aspect node. Returns its key.
    Result ingest(AtgModel& model, const std::vector<FeatureDetection>& detections) {
        std::vector<FeatureDetection> ordered = order_features(detections);
        std::vector<int> ids;
        ids.reserve(ordered.size());
        for (const auto& det : ordered) {
            auto tk = std::make_pair(det.ftype, det.value);
            auto it = tracks_.find(tk);
            if (it == tracks_.end()) {
                KalmanTrack fresh;
                fresh.ftype = det.ftype;
                fresh.value = det.value;
                fresh.cov = initial_cov_;
                it = tracks_.emplace(tk, std::move(fresh)).first;
            }
            it->second = kf_update(it->second, det.pos, meas_noise_);
            ids.push_back(model.upsert_feature(det.ftype, det.value, it->second.mean,
                                               it->second.cov));
        }
        Result res;
        res.key = aspect_key(ordered);
        auto [node, novel] = get_or_create_node(model, res.key, ids);
        res.novel_node = novel;
        return res;
    }

    const std::map<std::pair<std::string, std::string>, KalmanTrack>& tracks() const {
        return tracks_;
    }

  private:
    Eigen::Matrix3d meas_noise_;
    Eigen::Matrix3d initial_cov_;
    std::map<std::pair<std::string, std::string>, KalmanTrack> tracks_;
};

}  // namespace atg
