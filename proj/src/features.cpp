#include "vlpr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vlpr::features {

namespace {

// Householder reduction to tridiagonal form. On return `v` holds the
// orthogonal transform, d the diagonal and e the subdiagonal (e[0] = 0).
void tred2(std::vector<double>& v, int n, std::vector<double>& d, std::vector<double>& e) {
    auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };
    for (int j = 0; j < n; ++j) d[j] = V(n - 1, j);

    for (int i = n - 1; i > 0; --i) {
        double scale = 0.0;
        double h = 0.0;
        for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (int j = 0; j < i; ++j) {
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
                V(j, i) = 0.0;
            }
        } else {
            for (int k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (int j = 0; j < i; ++j) e[j] = 0.0;

            for (int j = 0; j < i; ++j) {
                f = d[j];
                V(j, i) = f;
                g = e[j] + V(j, j) * f;
                for (int k = j + 1; k <= i - 1; ++k) {
                    g += V(k, j) * d[k];
                    e[k] += V(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (int j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (int j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (int k = j; k <= i - 1; ++k) V(k, j) -= (f * e[k] + g * d[k]);
                d[j] = V(i - 1, j);
                V(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for (int i = 0; i < n - 1; ++i) {
        V(n - 1, i) = V(i, i);
        V(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (int k = 0; k <= i; ++k) d[k] = V(k, i + 1) / h;
            for (int j = 0; j <= i; ++j) {
                double g = 0.0;
                for (int k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
                for (int k = 0; k <= i; ++k) V(k, j) -= g * d[k];
            }
        }
        for (int k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
    }
    for (int j = 0; j < n; ++j) {
        d[j] = V(n - 1, j);
        V(n - 1, j) = 0.0;
    }
    V(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal form; eigenvalues sorted ascending.
void tql2(std::vector<double>& v, int n, std::vector<double>& d, std::vector<double>& e) {
    auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i) * n + j]; };
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double f = 0.0;
    double tst1 = 0.0;
    const double eps = std::pow(2.0, -52.0);
    for (int l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        int m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m == n) m = n - 1;

        if (m > l) {
            int iter = 0;
            do {
                if (++iter > 200) fail(ErrorCode::Internal, "eigen solver did not converge");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (int i = l + 2; i < n; ++i) d[i] -= h;
                f += h;

                p = d[m];
                double c = 1.0;
                double c2 = c;
                double c3 = c;
                const double el1 = e[l + 1];
                double s = 0.0;
                double s2 = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for (int k = 0; k < n; ++k) {
                        h = V(k, i + 1);
                        V(k, i + 1) = s * V(k, i) + c * h;
                        V(k, i) = c * V(k, i) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort keeps the order deterministic for equal values.
    for (int i = 0; i < n - 1; ++i) {
        int k = i;
        double p = d[i];
        for (int j = i + 1; j < n; ++j) {
            if (d[j] < p) {
                k = j;
                p = d[j];
            }
        }
        if (k != i) {
            d[k] = d[i];
            d[i] = p;
            for (int j = 0; j < n; ++j) std::swap(V(j, i), V(j, k));
        }
    }
}

}  // namespace

SymmetricEigen symmetric_eigen(std::vector<double> a, int n) {
    require(n >= 1 && a.size() == static_cast<std::size_t>(n) * n, "symmetric_eigen: bad matrix size");
    SymmetricEigen out;
    out.values.assign(n, 0.0);
    std::vector<double> e(n, 0.0);
    tred2(a, n, out.values, e);
    tql2(a, n, out.values, e);
    out.vectors = std::move(a);
    return out;
}

std::string PcaModel::extractor_id() const {
    return "pca:" + std::to_string(input_w) + "x" + std::to_string(input_h) + ":" +
           std::to_string(components());
}

void PcaModel::validate() const {
    require(input_w >= 1 && input_h >= 1, "pca input dims must be positive");
    require(mean.size() == static_cast<std::size_t>(dim()), "pca mean length mismatch");
    require(!basis.empty() && basis.size() <= static_cast<std::size_t>(dim()),
            "pca basis row count must be in [1, dim]");
    require(eigenvalues.size() == basis.size(), "pca eigenvalue count mismatch");
    for (const auto& row : basis) {
        require(row.size() == static_cast<std::size_t>(dim()), "pca basis row length mismatch");
        for (double v : row) require(std::isfinite(v), "pca basis has non-finite values");
    }
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        require(std::isfinite(eigenvalues[i]) && eigenvalues[i] >= 0.0, "pca eigenvalues must be >= 0");
        require(i == 0 || eigenvalues[i] <= eigenvalues[i - 1], "pca eigenvalues must be non-increasing");
    }
    require(covariance.empty() || covariance.size() == static_cast<std::size_t>(dim()) * dim(),
            "pca covariance size mismatch");
}

PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int n_components, int input_w,
                 int input_h, bool keep_covariance) {
    require(input_w >= 1 && input_h >= 1, "pca input dims must be positive");
    if (samples.size() < 2) {
        fail(ErrorCode::InvalidArgument, "pca_fit needs at least 2 samples");
    }
    const int dim = input_w * input_h;
    const int n = static_cast<int>(samples.size());
    if (n_components < 1 || n_components > std::min(n - 1, dim)) {
        fail(ErrorCode::InvalidArgument, "pca_fit: n_components must be in [1, min(samples-1, dim)]");
    }
    for (const auto& s : samples) {
        require(s.size() == static_cast<std::size_t>(dim), "pca_fit: sample length mismatch");
    }

    PcaModel model;
    model.input_w = input_w;
    model.input_h = input_h;
    model.mean.assign(dim, 0.0);
    for (const auto& s : samples) {
        for (int j = 0; j < dim; ++j) model.mean[j] += s[j];
    }
    for (double& m : model.mean) m /= n;

    std::vector<double> centered(static_cast<std::size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dim; ++j) centered[static_cast<std::size_t>(i) * dim + j] = samples[i][j] - model.mean[j];
    }
    std::vector<double> cov(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* x = centered.data() + static_cast<std::size_t>(i) * dim;
        for (int r = 0; r < dim; ++r) {
            const double xr = x[r];
            if (xr == 0.0) continue;
            double* row = cov.data() + static_cast<std::size_t>(r) * dim;
            for (int c = r; c < dim; ++c) row[c] += xr * x[c];
        }
    }
    for (int r = 0; r < dim; ++r) {
        for (int c = r; c < dim; ++c) {
            const double v = cov[static_cast<std::size_t>(r) * dim + c] / (n - 1);
            cov[static_cast<std::size_t>(r) * dim + c] = v;
            cov[static_cast<std::size_t>(c) * dim + r] = v;
        }
    }
    if (keep_covariance) model.covariance = cov;

    const SymmetricEigen eig = symmetric_eigen(std::move(cov), dim);
    for (int k = 0; k < n_components; ++k) {
        const int col = dim - 1 - k;
        std::vector<double> row(dim);
        int arg = 0;
        for (int j = 0; j < dim; ++j) {
            row[j] = eig.vectors[static_cast<std::size_t>(j) * dim + col];
            if (std::abs(row[j]) > std::abs(row[arg])) arg = j;
        }
        if (row[arg] < 0) {
            for (double& v : row) v = -v;
        }
        model.basis.push_back(std::move(row));
        // Round-off can leave null directions slightly negative.
        model.eigenvalues.push_back(std::max(0.0, eig.values[col]));
    }
    return model;
}

std::vector<double> pca_project(const PcaModel& model, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(model.dim())) {
        fail(ErrorCode::InvalidArgument, "pca_project: dimension mismatch");
    }
    std::vector<double> centered(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) centered[j] = x[j] - model.mean[j];
    std::vector<double> out(model.basis.size());
    for (std::size_t k = 0; k < model.basis.size(); ++k) {
        out[k] = std::inner_product(centered.begin(), centered.end(), model.basis[k].begin(), 0.0);
    }
    return out;
}

FeatureVector pca_project(const PcaModel& model, const RealImage& image) {
    if (image.width() != model.input_w || image.height() != model.input_h) {
        fail(ErrorCode::InvalidArgument, "pca_project: image dimensions differ from the model's");
    }
    return FeatureVector{pca_project(model, image.pixels()), model.extractor_id()};
}

std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> coeffs) {
    require(coeffs.size() == model.basis.size(), "pca_reconstruct: coefficient count mismatch");
    std::vector<double> out = model.mean;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += coeffs[k] * model.basis[k][j];
    }
    return out;
}

namespace {

// C[p][m] = alpha_p cos(pi (2m+1) p / 16)
const std::array<double, 64>& dct_matrix() {
    static const std::array<double, 64> table = [] {
        std::array<double, 64> t{};
        for (int p = 0; p < 8; ++p) {
            const double alpha = p == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int m = 0; m < 8; ++m) {
                t[p * 8 + m] = alpha * std::cos(std::numbers::pi * (2 * m + 1) * p / 16.0);
            }
        }
        return t;
    }();
    return table;
}

}  // namespace

Block dct2_block(const Block& block) {
    const auto& c = dct_matrix();
    // Rows first, then columns.
    Block tmp{};
    for (int m = 0; m < 8; ++m) {
        for (int q = 0; q < 8; ++q) {
            double s = 0.0;
            for (int n = 0; n < 8; ++n) s += block[m * 8 + n] * c[q * 8 + n];
            tmp[m * 8 + q] = s;
        }
    }
    Block out{};
    for (int p = 0; p < 8; ++p) {
        for (int q = 0; q < 8; ++q) {
            double s = 0.0;
            for (int m = 0; m < 8; ++m) s += c[p * 8 + m] * tmp[m * 8 + q];
            out[p * 8 + q] = s;
        }
    }
    return out;
}

const std::array<int, 64>& zigzag_order() {
    static const std::array<int, 64> order = [] {
        std::array<int, 64> o{};
        int i = 0;
        for (int s = 0; s < 15; ++s) {
            // Even diagonals run bottom-left to top-right, odd ones the other way.
            const int lo = std::max(0, s - 7);
            const int hi = std::min(s, 7);
            if (s % 2 == 0) {
                for (int r = hi; r >= lo; --r) o[i++] = r * 8 + (s - r);
            } else {
                for (int r = lo; r <= hi; ++r) o[i++] = r * 8 + (s - r);
            }
        }
        return o;
    }();
    return order;
}

std::vector<double> zigzag_select(const Block& coeffs, int k) {
    if (k < 1 || k > 64) {
        fail(ErrorCode::InvalidArgument, "zigzag_select: k must be in [1,64]");
    }
    const auto& order = zigzag_order();
    std::vector<double> out(k);
    for (int i = 0; i < k; ++i) out[i] = coeffs[order[i]];
    return out;
}

std::string DctConfig::extractor_id() const {
    return "dct:" + std::to_string(plate_w) + "x" + std::to_string(plate_h) + ":k" + std::to_string(k);
}

void DctConfig::validate() const {
    require(k >= 1 && k <= 64, "features.k must be in [1,64]");
    require(plate_w >= 8 && plate_h >= 8 && plate_w % 8 == 0 && plate_h % 8 == 0,
            "features.plate_w and features.plate_h must be positive multiples of 8");
}

FeatureVector dct_features(const GrayImage& plate, const DctConfig& cfg) {
    cfg.validate();
    const GrayImage img = (plate.width() == cfg.plate_w && plate.height() == cfg.plate_h)
                              ? plate
                              : imaging::resize_bilinear(plate, cfg.plate_w, cfg.plate_h);
    FeatureVector fv;
    fv.extractor_id = cfg.extractor_id();
    fv.values.reserve(cfg.dim());
    const auto& order = zigzag_order();
    for (int by = 0; by < cfg.plate_h; by += 8) {
        for (int bx = 0; bx < cfg.plate_w; bx += 8) {
            Block b{};
            for (int y = 0; y < 8; ++y) {
                const std::uint8_t* row = img.row(by + y);
                for (int x = 0; x < 8; ++x) b[y * 8 + x] = row[bx + x];
            }
            const Block c = dct2_block(b);
            for (int i = 0; i < cfg.k; ++i) fv.values.push_back(c[order[i]]);
        }
    }
    return fv;
}

RealImage normalize_character(const BinaryImage& mask, int w, int h) {
    require(w >= 1 && h >= 1, "normalized character size must be positive");
    const int side = std::max(mask.width(), mask.height());
    RealImage square(side, side, 0.0);
    const int ox = (side - mask.width()) / 2;
    const int oy = (side - mask.height()) / 2;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) square.at(ox + x, oy + y) = mask.at(x, y) ? 1.0 : 0.0;
    }
    return imaging::resize_bilinear(square, w, h);
}

}  // namespace vlpr::features
