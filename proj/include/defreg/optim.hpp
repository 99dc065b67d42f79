#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "defreg/losses.hpp"
#include "defreg/transform.hpp"
#include "defreg/types.hpp"

namespace defreg {

struct AdamParams {
    double lr = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::ArrayXd m;
    Eigen::ArrayXd v;
    long t = 0;

    static AdamState zeros(std::int64_t n) {
        return {Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Zero(n), 0};
    }
};

// One bias-corrected Adam update in place.
void adam_step(Eigen::ArrayXd& params, const Eigen::ArrayXd& grad, AdamState& state,
               const AdamParams& opts);

enum class TransformKind { ddf, svf, bspline, affine };

// One pyramid level of the schedule, listed coarse to fine (execution
// order); pyramid level indices themselves count 0 = full resolution.
struct LevelSpec {
    int iterations = 100;
    double lr = 0.1;
};

struct RegistrationConfig {
    SimilaritySpec similarity;
    ObjectiveWeights weights;
    TransformKind transform = TransformKind::ddf;
    int svf_steps = 7;
    int control_spacing = 4;
    std::vector<LevelSpec> schedule{{100, 0.1}, {100, 0.1}, {50, 0.1}};
    std::uint64_t seed = 0;
    int threads = 1;
    bool progress = true; // per-iteration lines on stderr
};

struct JacobianStats {
    double min_det = 1.0;
    double frac_nonpositive = 0.0;
};

struct EvalMetrics {
    std::optional<double> dice;
    std::optional<double> tre_mm;
    std::optional<JacobianStats> jacobian;
};

struct RegistrationResult {
    VectorField ddf; // full-resolution displacement
    std::vector<LossReport> history;
    EvalMetrics metrics;
    double seconds = 0.0;
    std::uint64_t seed = 0;
};

// Multi-resolution instance optimization: builds image (and label)
// pyramids by repeated downsample2, optimizes the transform from the
// coarsest level to full resolution, and renders the final displacement.
// Deterministic for a fixed config and thread count.
RegistrationResult register_images(const Volume& fixed, const Volume& moving,
                                   const Volume* fixed_label, const Volume* moving_label,
                                   const RegistrationConfig& config);

JacobianStats jacobian_stats(const VectorField& ddf);

// Dice of two masks after thresholding at 0.5 (ties count as foreground).
double hard_dice(const Volume& label_a, const Volume& label_b);

// Mean landmark error in millimetres: || (p_fixed + u(p_fixed)) - p_moving ||
// scaled by voxel spacing.
double tre_mm(const VectorField& ddf, const std::vector<Point3>& fixed_points,
              const std::vector<Point3>& moving_points);

// Optional-input evaluation; fields are present iff their inputs are.
EvalMetrics evaluate(const VectorField& ddf, const Volume* fixed_label,
                     const Volume* moving_label,
                     const std::vector<Point3>* landmarks_fixed,
                     const std::vector<Point3>* landmarks_moving);

} // namespace defreg
