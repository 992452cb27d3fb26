#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "vlpr/imaging.hpp"

namespace vlpr::features {

using imaging::BinaryImage;
using imaging::GrayImage;
using imaging::RealImage;

struct FeatureVector {
    std::vector<double> values;
    std::string extractor_id;  // ties the vector to the producing model/config
};

struct PcaModel {
    int input_w = 0;
    int input_h = 0;
    std::vector<double> mean;                // input_w * input_h
    std::vector<std::vector<double>> basis;  // rows, descending eigenvalue order
    std::vector<double> eigenvalues;         // one per basis row
    std::vector<double> covariance;          // optional, row-major dim x dim

    int dim() const { return input_w * input_h; }
    int components() const { return static_cast<int>(basis.size()); }
    std::string extractor_id() const;
    void validate() const;
};

/// Fits the sample mean and the top `n_components` eigenvectors of the
/// sample covariance (normalized by N-1). Each direction's largest-magnitude
/// entry is made positive.
PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int n_components, int input_w,
                 int input_h, bool keep_covariance = false);

std::vector<double> pca_project(const PcaModel& model, std::span<const double> x);
FeatureVector pca_project(const PcaModel& model, const RealImage& image);
std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> coeffs);

/// Eigen-decomposition of a dense symmetric matrix (row-major n x n).
/// Eigenvalues ascending; eigenvectors are the columns of `vectors`.
struct SymmetricEigen {
    std::vector<double> values;
    std::vector<double> vectors;  // row-major n x n
};
SymmetricEigen symmetric_eigen(std::vector<double> a, int n);

using Block = std::array<double, 64>;  // row-major 8x8

/// Orthonormal 2-D DCT-II; result(p*8+q), p row frequency, q column frequency.
Block dct2_block(const Block& block);

/// Row-major indices in zigzag order, starting (0,0),(0,1),(1,0),(2,0),(1,1),(0,2).
const std::array<int, 64>& zigzag_order();
std::vector<double> zigzag_select(const Block& coeffs, int k);

struct DctConfig {
    int k = 9;          // coefficients per block
    int plate_w = 256;  // multiples of 8
    int plate_h = 128;

    std::string extractor_id() const;
    int dim() const { return (plate_w / 8) * (plate_h / 8) * k; }
    void validate() const;
};

/// Row-major blocks, zigzag-truncated and concatenated. The plate is resized
/// to cfg.plate_w x cfg.plate_h first when needed.
FeatureVector dct_features(const GrayImage& plate, const DctConfig& cfg);

/// Pads a tight glyph mask to a square, keeping its aspect, and resizes it to
/// w x h with foreground = 1.
RealImage normalize_character(const BinaryImage& mask, int w, int h);

}  // namespace vlpr::features
