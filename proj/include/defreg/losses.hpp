#pragma once

#include <optional>

#include "defreg/transform.hpp"
#include "defreg/types.hpp"

namespace defreg {

// Global epsilon constants shared by all losses. Fixed values, documented
// in the README defaults table.
inline constexpr double kVarianceFloor = 1e-5;   // gncc / lncc denominators
inline constexpr double kDiceSmooth = 1e-6;      // dice numerator/denominator
inline constexpr double kProbClip = 1e-7;        // cross-entropy log clip

enum class Similarity { ssd, gncc, lncc, mi };
enum class RegKind { gradient_l2, bending };
enum class LabelLoss { dice, cross_entropy };

struct SimilaritySpec {
    Similarity kind = Similarity::lncc;
    int window = 9; // lncc, odd and >= 3
    int bins = 32;  // mi, >= 4
};

struct ObjectiveWeights {
    double image = 1.0;
    double label = 0.0;
    double reg = 0.0;
    RegKind reg_kind = RegKind::bending;
    LabelLoss label_kind = LabelLoss::dice;
};

// Dissimilarity value together with its derivative w.r.t. the warped image.
struct LossGrad {
    double value = 0.0;
    Volume grad;
};

// Regularizer value together with its derivative w.r.t. the field.
struct RegGrad {
    double value = 0.0;
    VectorField grad;
};

// Mean of squared differences.
LossGrad ssd(const Volume& fixed, const Volume& warped);

// 1 - global normalized cross-correlation (signed).
LossGrad gncc(const Volume& fixed, const Volume& warped);

// 1 - mean local squared correlation over clamped box windows.
LossGrad lncc(const Volume& fixed, const Volume& warped, int window);

// Negated mutual information (nats) from a joint histogram built with a
// linear hat kernel over min-max normalized intensities. The min/max
// normalization bounds are gradient stop-points.
LossGrad mi(const Volume& fixed, const Volume& warped, int bins);

// 1 - soft Dice with smoothing epsilon.
LossGrad dice_loss(const Volume& fixed_label, const Volume& warped_label);

// Binary cross-entropy with probability clipping.
LossGrad cross_entropy(const Volume& fixed_label, const Volume& warped_label);

// Mean squared first differences of the field (diffusion regularizer).
RegGrad gradient_l2(const VectorField& u);

// Mean squared second derivatives over interior voxels.
RegGrad bending_energy(const VectorField& u);

LossGrad similarity_eval(const SimilaritySpec& spec, const Volume& fixed,
                         const Volume& warped);
LossGrad label_eval(LabelLoss kind, const Volume& fixed_label,
                    const Volume& warped_label);
RegGrad regularizer_eval(RegKind kind, const VectorField& u);

// Value-only conveniences.
double ssd_value(const Volume& f, const Volume& w);
double gncc_value(const Volume& f, const Volume& w);
double lncc_value(const Volume& f, const Volume& w, int window);
double mi_value(const Volume& f, const Volume& w, int bins);
double dice_loss_value(const Volume& f, const Volume& w);
double cross_entropy_value(const Volume& f, const Volume& w);
double gradient_l2_value(const VectorField& u);
double bending_energy_value(const VectorField& u);

struct LossReport {
    double total = 0.0;
    double image_term = 0.0;
    double label_term = 0.0;
    double reg_term = 0.0;
};

struct ObjectiveResult {
    LossReport report;
    Eigen::ArrayXd param_grad;
};

// Full objective: warps the moving image (and soft label) by the rendered
// displacement, combines the weighted terms, and chains the gradient back
// to the transform parameters. Terms with zero weight are skipped and
// reported as 0.
ObjectiveResult total_objective(const Volume& fixed, const Volume& moving,
                                const Volume* fixed_label, const Volume* moving_label,
                                const Transform& transform,
                                const ObjectiveWeights& weights,
                                const SimilaritySpec& sim);

} // namespace defreg
