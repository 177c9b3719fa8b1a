#include "poseinit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "poseinit/errors.hpp"

namespace poseinit {

std::string to_string(SimilarityKind kind) {
    return kind == SimilarityKind::ncc ? "ncc" : "grad_ncc";
}

SimilarityKind similarity_kind_from_string(const std::string& s) {
    if (s == "ncc") {
        return SimilarityKind::ncc;
    }
    if (s == "grad_ncc") {
        return SimilarityKind::grad_ncc;
    }
    throw std::invalid_argument("unknown similarity kind '" + s + "'");
}

namespace {

void require_same_shape(const DetectorImage& a, const DetectorImage& b, const char* who) {
    if (!a.same_shape(b) || a.data.size() != b.data.size()) {
        throw std::invalid_argument(std::string(who) + ": image dimensions differ");
    }
    if (a.data.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty image");
    }
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

double ncc(const DetectorImage& a, const DetectorImage& b) {
    require_same_shape(a, b, "ncc");
    const double ma = mean(a.data);
    const double mb = mean(b.data);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double da = a.data[i] - ma;
        const double db = b.data[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 && sbb == 0.0) {
        throw DegenerateInputError("ncc: both images are constant");
    }
    if (saa == 0.0 || sbb == 0.0) {
        return 0.0;
    }
    // Equality case of Cauchy-Schwarz; sqrt(saa * saa) may round away from saa.
    if (sab == saa && saa == sbb) {
        return 1.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

DetectorImage derivative_x(const DetectorImage& img) {
    DetectorImage out(img.rows, img.cols, img.pixel_spacing_mm);
    for (int r = 0; r < img.rows; ++r) {
        for (int c = 0; c < img.cols; ++c) {
            const int cl = std::max(c - 1, 0);
            const int cr = std::min(c + 1, img.cols - 1);
            out.at(r, c) = 0.5 * (img.at(r, cr) - img.at(r, cl));
        }
    }
    return out;
}

DetectorImage derivative_y(const DetectorImage& img) {
    DetectorImage out(img.rows, img.cols, img.pixel_spacing_mm);
    for (int r = 0; r < img.rows; ++r) {
        const int ru = std::max(r - 1, 0);
        const int rd = std::min(r + 1, img.rows - 1);
        for (int c = 0; c < img.cols; ++c) {
            out.at(r, c) = 0.5 * (img.at(rd, c) - img.at(ru, c));
        }
    }
    return out;
}

double grad_ncc(const DetectorImage& a, const DetectorImage& b) {
    require_same_shape(a, b, "grad_ncc");
    if (a.rows < 3 || a.cols < 3) {
        throw std::invalid_argument("grad_ncc: images must be at least 3x3");
    }
    const auto [amin, amax] = std::minmax_element(a.data.begin(), a.data.end());
    const auto [bmin, bmax] = std::minmax_element(b.data.begin(), b.data.end());
    if (*amin == *amax || *bmin == *bmax) {
        throw DegenerateInputError("grad_ncc: constant image has no gradient");
    }
    return 0.5 * (ncc(derivative_x(a), derivative_x(b)) + ncc(derivative_y(a), derivative_y(b)));
}

double similarity(SimilarityKind kind, const DetectorImage& a, const DetectorImage& b) {
    return kind == SimilarityKind::ncc ? ncc(a, b) : grad_ncc(a, b);
}

double similarity_loss(SimilarityKind kind, const DetectorImage& target,
                       const DetectorImage& moving) {
    return 1.0 - similarity(kind, target, moving);
}

DetectorImage difference_map(const DetectorImage& moving, const DetectorImage& target) {
    require_same_shape(moving, target, "difference_map");
    DetectorImage out = moving;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = moving.data[i] - target.data[i];
    }
    return out;
}

}  // namespace poseinit
