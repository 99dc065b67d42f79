#include "defreg/types.hpp"

namespace defreg {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::dims_mismatch: return "DimsMismatch";
        case ErrorKind::shape_mismatch: return "ShapeMismatch";
        case ErrorKind::even_window: return "EvenWindow";
        case ErrorKind::range_violation: return "RangeViolation";
        case ErrorKind::missing_labels: return "MissingLabels";
        case ErrorKind::config_invalid: return "ConfigInvalid";
        case ErrorKind::layout_mismatch: return "LayoutMismatch";
        case ErrorKind::group_too_small: return "GroupTooSmall";
        case ErrorKind::empty_dataset: return "Empty";
        case ErrorKind::bad_spec: return "BadSpec";
        case ErrorKind::bad_magic: return "BadMagic";
        case ErrorKind::unsupported_datatype: return "UnsupportedDatatype";
        case ErrorKind::truncated: return "Truncated";
        case ErrorKind::non_positive_pixdim: return "NonPositivePixdim";
        case ErrorKind::io_failure: return "IoFailure";
        case ErrorKind::parse_error: return "ParseError";
        case ErrorKind::count_mismatch: return "CountMismatch";
        case ErrorKind::landmark_out_of_bounds: return "LandmarkOutOfBounds";
        case ErrorKind::json_invalid: return "JsonInvalid";
        case ErrorKind::unknown_key: return "UnknownKey";
        case ErrorKind::domain_error: return "DomainError";
        case ErrorKind::spec_invalid: return "SpecInvalid";
    }
    return "Error";
}

namespace {

void require_positive_dims(const Dims3& d, const char* where) {
    if (d.nx < 1 || d.ny < 1 || d.nz < 1) {
        fail(ErrorKind::dims_mismatch,
             std::string(where) + ": non-positive dims " + d.str());
    }
}

} // namespace

void validate(const Volume& vol, const char* where) {
    require_positive_dims(vol.dims, where);
    if (vol.data.size() != vol.dims.voxel_count()) {
        fail(ErrorKind::dims_mismatch,
             std::string(where) + ": data length " + std::to_string(vol.data.size()) +
                 " does not match dims " + vol.dims.str());
    }
    if ((vol.spacing.array() <= 0.0).any()) {
        fail(ErrorKind::non_positive_pixdim, std::string(where) + ": spacing must be > 0");
    }
    if (!vol.data.isFinite().all()) {
        fail(ErrorKind::range_violation, std::string(where) + ": non-finite voxel value");
    }
}

void validate(const VectorField& field, const char* where) {
    require_positive_dims(field.dims, where);
    for (const auto& c : field.comp) {
        if (c.size() != field.dims.voxel_count()) {
            fail(ErrorKind::dims_mismatch,
                 std::string(where) + ": component length does not match dims " +
                     field.dims.str());
        }
        if (!c.isFinite().all()) {
            fail(ErrorKind::range_violation,
                 std::string(where) + ": non-finite field component");
        }
    }
}

void validate_label_range(const Volume& vol, const char* where) {
    if ((vol.data < 0.0).any() || (vol.data > 1.0).any()) {
        fail(ErrorKind::range_violation,
             std::string(where) + ": label values must lie in [0, 1]");
    }
}

} // namespace defreg
