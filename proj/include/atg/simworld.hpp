#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "atg/angles.hpp"
#include "atg/model.hpp"
#include "atg/observe.hpp"

namespace atg::sim {

/// Stand-in for the cube-on-a-table experiment: a mobile base orbiting a
/// tagged cube at fixed radius, a bimanual grasp with force/moment residuals,
/// and noisy tag detections.
///
/// The viewing circle tiles into 8 sectors: 4 face-on sectors where one tag
/// is detectable and 4 corner sectors where two adjacent tags are. A tag
/// drops out once its face turns too oblique, so the two-tag corner window
/// is narrower than the face-on window; sector_half_width is the corner
/// half-width and the face window fills the rest of the quarter turn.
struct SimConfig {
    double orbit_radius = 1.0;        // meters
    double cube_side = 0.29;          // meters
    double sector_half_width = 0.25; // radians, corner-sector half-width
    double act_noise_sigma = 0.02;    // radians, orbit actuation
    double obs_noise_sigma = 0.005;   // meters, feature positions
    double grasp_tol_xy = 0.10;       // meters
    double grasp_tol_z = 0.08;        // meters
    double residual_tol = 1e-6;
    double kappa = 0.25;              // controller gain
    std::uint64_t seed = 0;

    int sector_count() const { return 8; }

    /// Half-width of the face-on window; face and corner widths tile a
    /// quarter turn.
    double face_half_width() const { return kPi / 4.0 - sector_half_width; }

    void validate() const {
        if (orbit_radius <= 0) throw std::invalid_argument("config: orbit_radius must be > 0");
        if (cube_side <= 0) throw std::invalid_argument("config: cube_side must be > 0");
        if (!(sector_half_width > 0.0 && sector_half_width < kPi / 4.0)) {
            throw std::invalid_argument(
                "config: sector_half_width must lie in (0, pi/4) so 8 sectors tile the circle");
        }
        if (act_noise_sigma < 0 || obs_noise_sigma < 0) {
            throw std::invalid_argument("config: noise sigmas must be >= 0");
        }
        if (grasp_tol_xy <= 0 || grasp_tol_z <= 0) {
            throw std::invalid_argument("config: grasp tolerances must be > 0");
        }
        if (residual_tol <= 0) throw std::invalid_argument("config: residual_tol must be > 0");
        if (kappa <= 0) throw std::invalid_argument("config: kappa must be > 0");
    }
};

/// Left/right hand contact forces and contact positions relative to the
/// contact centroid.
struct ContactPair {
    Eigen::Vector3d f_left = Eigen::Vector3d::Zero();
    Eigen::Vector3d f_right = Eigen::Vector3d::Zero();
    Eigen::Vector3d r_left = Eigen::Vector3d::Zero();
    Eigen::Vector3d r_right = Eigen::Vector3d::Zero();
};

/// Ground truth the learner never sees directly.
struct WorldState {
    double azimuth = 0.0;             // [0, 2pi), base position on the orbit circle
    double object_yaw = 0.0;          // radians
    bool held = false;
    double pre_grasp_azimuth = 0.0;   // retreat stance for RELEASE; carried while held
    std::optional<ContactPair> contacts;
};

struct StepResult {
    WorldState state;
    bool noop = false;          // GRASP while held / RELEASE while not held
    bool grasp_failed = false;  // GRASP parameters outside the success region
};

/// Squared force and moment residuals of the net wrench at the contact
/// centroid. A valid grasp drives both to zero.
struct GraspResiduals {
    double force_sq = 0.0;   // N^2
    double moment_sq = 0.0;  // N^2 m^2
};

inline GraspResiduals grasp_residuals(const ContactPair& c) {
    Eigen::Vector3d f = c.f_left + c.f_right;
    Eigen::Vector3d m = c.r_left.cross(c.f_left) + c.r_right.cross(c.f_right);
    return {f.squaredNorm(), m.squaredNorm()};
}

inline bool valid_grasp(const ContactPair& c, double residual_tol) {
    GraspResiduals r = grasp_residuals(c);
    return r.force_sq <= residual_tol && r.moment_sq <= residual_tol;
}

/// Control-basis gradient step: delta_u = kappa * pinv(J) * delta_phi.
inline Eigen::VectorXd controller_step(double delta_phi, const Eigen::MatrixXd& jacobian,
                                       double kappa) {
    Eigen::MatrixXd pinv = jacobian.completeOrthogonalDecomposition().pseudoInverse();
    Eigen::VectorXd dphi =
        delta_phi * Eigen::VectorXd::Ones(std::max<Eigen::Index>(1, jacobian.rows()));
    if (jacobian.rows() == 0) return Eigen::VectorXd::Zero(jacobian.cols());
    return kappa * pinv * dphi;
}

/// Relative viewing angle of the base with respect to the object.
inline double relative_angle(const WorldState& s) {
    return wrap_two_pi(s.azimuth - s.object_yaw);
}

/// Sector of the relative angle: even sectors face-on, odd sectors corner.
inline int sector_index(double beta, const SimConfig& cfg) {
    const double b = wrap_two_pi(beta);
    const int m = static_cast<int>(std::floor(b / (kPi / 2.0) + 0.5));
    const double d = b - m * (kPi / 2.0);  // offset from the nearest face center
    const int face = ((m % 4) + 4) % 4;
    const double face_half = cfg.face_half_width();
    if (d >= -face_half && d < face_half) return 2 * face;
    if (d >= face_half) return (2 * face + 1) % 8;
    return (2 * face + 7) % 8;
}

/// Side face (0..3) whose outward normal is closest to the viewing angle;
/// an exact corner tie is broken counterclockwise.
inline int nearest_face(double beta) {
    int f = static_cast<int>(std::floor(wrap_two_pi(beta) / (kPi / 2.0) + 0.5));
    return ((f % 4) + 4) % 4;
}

inline std::vector<int> faces_in_sector(int k) {
    if (k % 2 == 0) return {k / 2};
    return {((k - 1) / 2) % 4, ((k + 1) / 2) % 4};
}

inline WorldState reset(const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, kTwoPi);
    WorldState s;
    s.azimuth = 0.0;
    s.object_yaw = wrap_two_pi(uni(rng));
    s.held = false;
    return s;
}

namespace detail {

/// Servos the hand offset to the commanded goal by following the gradient of
/// the quadratic placement potential with controller_step.
inline Eigen::Vector3d servo_hand(const Eigen::Vector3d& goal, double kappa) {
    Eigen::Vector3d u(0.3, 0.3, 0.3);  // nominal ready pose offset
    for (int i = 0; i < 2000; ++i) {
        Eigen::Vector3d err = u - goal;
        double phi = 0.5 * err.squaredNorm();
        if (phi < 1e-24) break;
        Eigen::MatrixXd jac = err.transpose();  // d(phi)/du
        u += controller_step(-phi, jac, kappa);
    }
    return u;
}

/// Ideal antipodal contact pair on the grasped face axis: equal and opposite
/// compressive forces through the contact centroid.
inline ContactPair ideal_contacts(int face, double cube_side) {
    const double angle = face * (kPi / 2.0);
    const Eigen::Vector3d lateral(-std::sin(angle), std::cos(angle), 0.0);
    const double squeeze = 5.0;  // newtons
    ContactPair c;
    c.r_left = (cube_side / 2.0) * lateral;
    c.r_right = -(cube_side / 2.0) * lateral;
    c.f_left = -squeeze * lateral;
    c.f_right = squeeze * lateral;
    return c;
}

}  // namespace detail

/// Executes one control program. ORBIT turns the base (carrying the object
/// when held), GRASP servos the hands and on success aligns the base with
/// the nearest face, RELEASE lets go and retreats to the stored stance.
/// GRASP while held and RELEASE while not held are flagged no-ops.
inline StepResult step(const WorldState& state, const ActionKind& kind,
                       const Eigen::VectorXd& rho, const SimConfig& cfg, std::mt19937_64& rng) {
    if (rho.size() != kind.param_dim) {
        throw std::domain_error("step: parameter dimension mismatch");
    }
    StepResult res;
    res.state = state;
    switch (kind.name) {
        case Action::Orbit: {
            double nu = 0.0;
            if (cfg.act_noise_sigma > 0.0) {
                std::normal_distribution<double> noise(0.0, cfg.act_noise_sigma);
                nu = noise(rng);
            }
            const double delta = rho(0) + nu;
            if (state.held) {
                // Object and retreat stance travel with the base.
                res.state.azimuth = wrap_two_pi(state.azimuth + delta);
                res.state.object_yaw = wrap_two_pi(state.object_yaw + delta);
                res.state.pre_grasp_azimuth = wrap_two_pi(state.pre_grasp_azimuth + delta);
                break;
            }
            // The heading/view constraint settles the base at the central
            // viewing stance of whichever sector the displacement reached.
            const double beta = wrap_two_pi(state.azimuth + delta - state.object_yaw);
            const int sector = sector_index(beta, cfg);
            res.state.azimuth = wrap_two_pi(state.object_yaw + sector * (kPi / 4.0));
            break;
        }
        case Action::Grasp: {
            if (state.held) {
                res.noop = true;
                break;
            }
            const Eigen::Vector3d goal = rho;
            detail::servo_hand(goal, cfg.kappa);
            const bool success = std::abs(rho(0)) <= cfg.grasp_tol_xy &&
                                 std::abs(rho(1)) <= cfg.grasp_tol_xy &&
                                 std::abs(rho(2)) <= cfg.grasp_tol_z;
            if (!success) {
                res.grasp_failed = true;
                res.state.contacts.reset();
                break;
            }
            const int face = nearest_face(relative_angle(state));
            res.state.azimuth = wrap_two_pi(state.object_yaw + face * (kPi / 2.0));
            res.state.pre_grasp_azimuth = res.state.azimuth;
            res.state.held = true;
            res.state.contacts = detail::ideal_contacts(face, cfg.cube_side);
            break;
        }
        case Action::Release: {
            if (!state.held) {
                res.noop = true;
                break;
            }
            res.state.held = false;
            res.state.azimuth = state.pre_grasp_azimuth;
            res.state.contacts.reset();
            break;
        }
    }
    return res;
}

namespace detail {

inline std::vector<FeatureDetection> detections_impl(const WorldState& state,
                                                     const SimConfig& cfg, bool noisy,
                                                     std::mt19937_64* rng) {
    std::normal_distribution<double> noise(0.0, cfg.obs_noise_sigma);
    auto jitter = [&]() -> Eigen::Vector3d {
        if (!noisy || cfg.obs_noise_sigma <= 0.0) return Eigen::Vector3d::Zero();
        return {noise(*rng), noise(*rng), noise(*rng)};
    };

    const double az = state.azimuth;
    const Eigen::Vector3d cam_right(-std::sin(az), std::cos(az), 0.0);
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(state.object_yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();

    std::vector<FeatureDetection> dets;
    const int sector = sector_index(relative_angle(state), cfg);
    for (int face : faces_in_sector(sector)) {
        const double fa = face * (kPi / 2.0);
        Eigen::Vector3d center(0.5 * cfg.cube_side * std::cos(fa),
                               0.5 * cfg.cube_side * std::sin(fa), 0.0);
        FeatureDetection d;
        d.ftype = "ARtag";
        d.value = std::to_string(face);
        d.pos = center + jitter();
        const Eigen::Vector3d world = rot * d.pos;
        d.image_xy = Eigen::Vector2d(world.dot(cam_right), world.z());
        dets.push_back(std::move(d));
    }
    if (state.held) {
        FeatureDetection t;
        t.ftype = "tactile";
        t.value = "grasp";
        t.pos = jitter();  // contact centroid sits at the object center
        dets.push_back(std::move(t));
    }
    return dets;
}

}  // namespace detail

/// Currently visible features: one tag face-on, two tags at a corner, plus
/// the tactile contact when the object is held. Top and bottom tags are
/// never visible from orbit height.
inline std::vector<FeatureDetection> visible_detections(const WorldState& state,
                                                        const SimConfig& cfg,
                                                        std::mt19937_64& rng) {
    return detail::detections_impl(state, cfg, true, &rng);
}

/// Noise-free aspect key for the state; the test and ground-truth oracle.
inline std::string true_aspect(const WorldState& state, const SimConfig& cfg) {
    return aspect_key(order_features(detail::detections_impl(state, cfg, false, nullptr)));
}

/// Owns the config, state, and RNG stream for one simulated run.
class World {
  public:
    explicit World(SimConfig cfg) : cfg_(cfg) { cfg_.validate(); }

    void reset(std::uint64_t seed) {
        state_ = atg::sim::reset(cfg_, seed);
        rng_.seed(seed ^ 0x9e3779b97f4a7c15ull);
    }

    StepResult apply(const ActionKind& kind, const Eigen::VectorXd& rho) {
        StepResult res = step(state_, kind, rho, cfg_, rng_);
        state_ = res.state;
        return res;
    }

    std::vector<FeatureDetection> detections() {
        return visible_detections(state_, cfg_, rng_);
    }

    std::string truth() const { return true_aspect(state_, cfg_); }

    const WorldState& state() const { return state_; }
    const SimConfig& config() const { return cfg_; }

  private:
    SimConfig cfg_;
    WorldState state_;
    std::mt19937_64 rng_;
};

}  // namespace atg::sim
