#pragma once

#include <string>

#include "poseinit/image.hpp"

namespace poseinit {

enum class SimilarityKind { ncc, grad_ncc };

std::string to_string(SimilarityKind kind);
SimilarityKind similarity_kind_from_string(const std::string& s);

/// Pearson correlation over all pixels. Throws std::invalid_argument on a
/// shape mismatch and DegenerateInputError if either image is constant.
double ncc(const DetectorImage& a, const DetectorImage& b);

/// Central-difference derivatives with replicated borders:
/// d/dx at column c is (I[c+1] - I[c-1]) / 2 with I[-1] = I[0], I[cols] = I[cols-1].
DetectorImage derivative_x(const DetectorImage& img);
/// Same as derivative_x along rows (row index increasing).
DetectorImage derivative_y(const DetectorImage& img);

/// Gradient correlation: mean of ncc(dx a, dx b) and ncc(dy a, dy b).
double grad_ncc(const DetectorImage& a, const DetectorImage& b);

double similarity(SimilarityKind kind, const DetectorImage& a, const DetectorImage& b);

/// 1 - similarity(kind, target, moving); zero at perfect alignment.
double similarity_loss(SimilarityKind kind, const DetectorImage& target,
                       const DetectorImage& moving);

/// Pixelwise moving - target. Callers pass min-max-normalized images (the
/// projector's default output) so the map is in normalized intensity units.
DetectorImage difference_map(const DetectorImage& moving, const DetectorImage& target);

}  // namespace poseinit
