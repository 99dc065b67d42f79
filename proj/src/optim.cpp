#include "defreg/optim.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "defreg/grid.hpp"

namespace defreg {

void adam_step(Eigen::ArrayXd& params, const Eigen::ArrayXd& grad, AdamState& state,
               const AdamParams& opts) {
    if (params.size() != grad.size() || params.size() != state.m.size() ||
        params.size() != state.v.size()) {
        fail(ErrorKind::shape_mismatch, "adam_step: parameter/gradient/state sizes differ");
    }
    state.t += 1;
    state.m = opts.beta1 * state.m + (1.0 - opts.beta1) * grad;
    state.v = opts.beta2 * state.v + (1.0 - opts.beta2) * grad.square();
    const double mc = 1.0 - std::pow(opts.beta1, static_cast<double>(state.t));
    const double vc = 1.0 - std::pow(opts.beta2, static_cast<double>(state.t));
    params -= opts.lr * (state.m / mc) / ((state.v / vc).sqrt() + opts.eps);
}

namespace {

Transform make_zero_transform(TransformKind kind, const Dims3& dims,
                              const Eigen::Vector3d& spacing, int svf_steps,
                              int control_spacing) {
    switch (kind) {
        case TransformKind::ddf:
            return DenseDdf{VectorField::zeros(dims, spacing)};
        case TransformKind::svf:
            return Svf{VectorField::zeros(dims, spacing), svf_steps};
        case TransformKind::bspline:
            return BsplineFfd::zeros(dims, control_spacing, spacing);
        case TransformKind::affine:
            return AffineTransform::identity();
    }
    fail(ErrorKind::config_invalid, "unknown transform kind");
}

// Moves a transform from a coarse grid onto the next finer one.
Transform transfer_transform(const Transform& t, const Dims3& coarse_dims,
                             const Dims3& fine_dims, const Eigen::Vector3d& fine_spacing,
                             int control_spacing) {
    return std::visit(
        [&](const auto& tr) -> Transform {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                VectorField u = upsample_field(tr.u, fine_dims);
                u.spacing = fine_spacing;
                return DenseDdf{std::move(u)};
            } else if constexpr (std::is_same_v<T, Svf>) {
                VectorField v = upsample_field(tr.v, fine_dims);
                v.spacing = fine_spacing;
                return Svf{std::move(v), tr.steps};
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                // Approximate re-fit: render the coarse displacement, lift it
                // to the fine grid, and sample it at the control positions.
                // The optimizer corrects the projection residual.
                VectorField fine = upsample_field(bspline_eval(tr), fine_dims);
                BsplineFfd out = BsplineFfd::zeros(fine_dims, control_spacing, fine_spacing);
                const Dims3 cd = out.coeff_dims;
                for (int z = 0; z < cd.nz; ++z) {
                    for (int y = 0; y < cd.ny; ++y) {
                        for (int x = 0; x < cd.nx; ++x) {
                            const Point3 p((x - 1.0) * control_spacing,
                                           (y - 1.0) * control_spacing,
                                           (z - 1.0) * control_spacing);
                            const Point3 v = sample_field(fine, p);
                            const std::int64_t i = flat_index(cd, x, y, z);
                            for (int c = 0; c < 3; ++c) out.coeffs[c][i] = v[c];
                        }
                    }
                }
                return out;
            } else {
                // Voxel-coordinate affine rescales with the per-axis dim
                // ratio: A'_ij = A_ij * s_i / s_j, t'_i = s_i * t_i.
                const double s[3] = {double(fine_dims.nx) / coarse_dims.nx,
                                     double(fine_dims.ny) / coarse_dims.ny,
                                     double(fine_dims.nz) / coarse_dims.nz};
                AffineTransform out = tr;
                for (int r = 0; r < 3; ++r) {
                    for (int c = 0; c < 3; ++c) out.mat(r, c) = tr.mat(r, c) * s[r] / s[c];
                    out.mat(r, 3) = tr.mat(r, 3) * s[r];
                }
                return out;
            }
        },
        t);
}

Dims3 ddf_dims(const Transform& t) {
    return std::visit(
        [](const auto& tr) -> Dims3 {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, DenseDdf>) {
                return tr.u.dims;
            } else if constexpr (std::is_same_v<T, Svf>) {
                return tr.v.dims;
            } else if constexpr (std::is_same_v<T, BsplineFfd>) {
                return tr.image_dims;
            } else {
                return {};
            }
        },
        t);
}

} // namespace

RegistrationResult register_images(const Volume& fixed, const Volume& moving,
                                   const Volume* fixed_label, const Volume* moving_label,
                                   const RegistrationConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    validate(fixed, "register fixed");
    validate(moving, "register moving");
    require_same_dims(fixed.dims, moving.dims, "register");
    if ((fixed_label == nullptr) != (moving_label == nullptr)) {
        fail(ErrorKind::missing_labels, "register needs both labels or neither");
    }
    if (config.schedule.empty()) {
        fail(ErrorKind::config_invalid, "schedule needs at least one level");
    }
    for (const auto& lv : config.schedule) {
        if (lv.iterations < 1 || lv.lr <= 0.0) {
            fail(ErrorKind::config_invalid, "levels need iterations >= 1 and lr > 0");
        }
    }

    const int levels = static_cast<int>(config.schedule.size());
    // pyramid[0] is full resolution; pyramid[levels-1] is the coarsest.
    std::vector<Volume> pyr_fixed{fixed}, pyr_moving{moving};
    std::vector<Volume> pyr_flbl, pyr_mlbl;
    if (fixed_label) {
        validate_label_range(*fixed_label, "register fixed label");
        validate_label_range(*moving_label, "register moving label");
        require_same_dims(fixed.dims, fixed_label->dims, "register labels");
        require_same_dims(fixed.dims, moving_label->dims, "register labels");
        pyr_flbl.push_back(*fixed_label);
        pyr_mlbl.push_back(*moving_label);
    }
    for (int l = 1; l < levels; ++l) {
        pyr_fixed.push_back(downsample2(pyr_fixed.back()));
        pyr_moving.push_back(downsample2(pyr_moving.back()));
        if (fixed_label) {
            pyr_flbl.push_back(downsample2(pyr_flbl.back()));
            pyr_mlbl.push_back(downsample2(pyr_mlbl.back()));
        }
    }
    const Dims3 coarsest = pyr_fixed.back().dims;
    if (coarsest.nx < 3 || coarsest.ny < 3 || coarsest.nz < 3) {
        fail(ErrorKind::config_invalid,
             "coarsest level " + coarsest.str() + " is below 3 voxels per axis");
    }

    RegistrationResult result;
    result.seed = config.seed;

    Transform transform = make_zero_transform(
        config.transform, coarsest, pyr_fixed.back().spacing, config.svf_steps,
        config.control_spacing);

    for (int idx = 0; idx < levels; ++idx) {
        const int level = levels - 1 - idx; // pyramid index, coarsest first
        const Volume& f = pyr_fixed[static_cast<size_t>(level)];
        const Volume& m = pyr_moving[static_cast<size_t>(level)];
        const Volume* fl = fixed_label ? &pyr_flbl[static_cast<size_t>(level)] : nullptr;
        const Volume* ml = fixed_label ? &pyr_mlbl[static_cast<size_t>(level)] : nullptr;

        if (idx > 0) {
            transform = transfer_transform(transform, pyr_fixed[static_cast<size_t>(level + 1)].dims,
                                           f.dims, f.spacing, config.control_spacing);
        }

        // Moment estimates are grid specific; reset per level.
        AdamState state = AdamState::zeros(param_count(transform));
        AdamParams adam;
        adam.lr = config.schedule[static_cast<size_t>(idx)].lr;
        const int iters = config.schedule[static_cast<size_t>(idx)].iterations;

        Eigen::ArrayXd params = get_params(transform);
        for (int it = 0; it < iters; ++it) {
            const ObjectiveResult obj = total_objective(
                f, m, fl, ml, transform, config.weights, config.similarity);
            adam_step(params, obj.param_grad, state, adam);
            set_params(transform, params);
            result.history.push_back(obj.report);
            if (config.progress) {
                std::fprintf(stderr,
                             "level=%d iter=%d total=%.9g image=%.9g label=%.9g reg=%.9g\n",
                             level, it, obj.report.total, obj.report.image_term,
                             obj.report.label_term, obj.report.reg_term);
            }
        }
    }

    if (!(ddf_dims(transform) == fixed.dims) &&
        (config.transform != TransformKind::affine)) {
        fail(ErrorKind::dims_mismatch, "internal: final level is not full resolution");
    }
    result.ddf = ddf_of(transform, fixed.dims, fixed.spacing);
    result.ddf.spacing = fixed.spacing;

    Volume warped_label;
    const Volume* warped_ptr = nullptr;
    if (moving_label) {
        warped_label = warp(*moving_label, result.ddf);
        warped_ptr = &warped_label;
    }
    result.metrics = evaluate(result.ddf, fixed_label, warped_ptr, nullptr, nullptr);

    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

JacobianStats jacobian_stats(const VectorField& ddf) {
    const Volume det = jacobian_det(ddf);
    JacobianStats stats;
    stats.min_det = det.data.minCoeff();
    stats.frac_nonpositive =
        static_cast<double>((det.data <= 0.0).count()) / static_cast<double>(det.data.size());
    return stats;
}

double hard_dice(const Volume& label_a, const Volume& label_b) {
    require_same_dims(label_a.dims, label_b.dims, "hard_dice");
    // Threshold at 0.5; exact ties count as foreground.
    const auto a = (label_a.data >= 0.5).cast<double>();
    const auto b = (label_b.data >= 0.5).cast<double>();
    const double inter = (a * b).sum();
    const double total = a.sum() + b.sum();
    return total > 0.0 ? 2.0 * inter / total : 1.0;
}

double tre_mm(const VectorField& ddf, const std::vector<Point3>& fixed_points,
              const std::vector<Point3>& moving_points) {
    if (fixed_points.size() != moving_points.size()) {
        fail(ErrorKind::count_mismatch,
             "landmark lists differ in length: " + std::to_string(fixed_points.size()) +
                 " vs " + std::to_string(moving_points.size()));
    }
    if (fixed_points.empty()) {
        fail(ErrorKind::count_mismatch, "landmark lists are empty");
    }
    const Dims3 d = ddf.dims;
    auto in_bounds = [&](const Point3& p) {
        return p.x() >= 0 && p.y() >= 0 && p.z() >= 0 && p.x() <= d.nx - 1 &&
               p.y() <= d.ny - 1 && p.z() <= d.nz - 1;
    };
    double total = 0.0;
    for (size_t i = 0; i < fixed_points.size(); ++i) {
        const Point3& p = fixed_points[i];
        if (!in_bounds(p) || !in_bounds(moving_points[i])) {
            fail(ErrorKind::landmark_out_of_bounds,
                 "landmark " + std::to_string(i) + " lies outside the grid");
        }
        const Point3 mapped = p + sample_field(ddf, p);
        total += ((mapped - moving_points[i]).array() * ddf.spacing.array()).matrix().norm();
    }
    return total / static_cast<double>(fixed_points.size());
}

EvalMetrics evaluate(const VectorField& ddf, const Volume* fixed_label,
                     const Volume* warped_label,
                     const std::vector<Point3>* landmarks_fixed,
                     const std::vector<Point3>* landmarks_moving) {
    EvalMetrics out;
    out.jacobian = jacobian_stats(ddf);
    if (fixed_label && warped_label) {
        out.dice = hard_dice(*fixed_label, *warped_label);
    }
    if (landmarks_fixed && landmarks_moving) {
        out.tre_mm = tre_mm(ddf, *landmarks_fixed, *landmarks_moving);
    }
    return out;
}

} // namespace defreg
