#include "gradapt/mixup.hpp"

#include <cmath>
#include <random>

namespace gradapt {

namespace {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
}

FeatureMap blend_maps(const FeatureMap& a, const FeatureMap& b, double lambda) {
    if (lambda == 0.0) return a;
    if (lambda == 1.0) return b;
    const float s = static_cast<float>(1.0 - lambda);
    const float t = static_cast<float>(lambda);
    FeatureMap out(a.rows, a.cols);
    for (std::size_t j = 0; j < out.data.size(); ++j) out.data[j] = s * a.data[j] + t * b.data[j];
    return out;
}

std::vector<float> blend_labels(const std::vector<float>& a, const std::vector<float>& b, double lambda) {
    if (lambda == 0.0) return a;
    if (lambda == 1.0) return b;
    const float s = static_cast<float>(1.0 - lambda);
    const float t = static_cast<float>(lambda);
    std::vector<float> out(a.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = s * a[j] + t * b[j];
    return out;
}

}  // namespace

std::pair<FeatureMap, std::vector<float>> convex_mixup(const FeatureMap& z_i, const FeatureMap& z_j,
                                                       const std::vector<float>& y_i, const std::vector<float>& y_j,
                                                       double lambda) {
    check_lambda(lambda);
    if (!z_i.same_shape(z_j)) throw ShapeError("mixup feature maps shape mismatch");
    if (y_i.size() != y_j.size()) throw ShapeError("mixup label distributions shape mismatch");
    return {blend_maps(z_i, z_j, lambda), blend_labels(y_i, y_j, lambda)};
}

GaussianStats gaussian_stats(const FeatureMap& z) {
    if (z.rows < 1 || z.cols < 1) throw ShapeError("feature map needs at least one position and channel");
    GaussianStats stats;
    stats.mu.resize(static_cast<std::size_t>(z.cols));
    stats.sigma.resize(static_cast<std::size_t>(z.cols));
    const double inv_s = 1.0 / z.rows;
    for (int c = 0; c < z.cols; ++c) {
        double sum = 0.0;
        for (int s = 0; s < z.rows; ++s) sum += z.at(s, c);
        const double mu = sum * inv_s;
        double var = 0.0;
        for (int s = 0; s < z.rows; ++s) {
            const double d = z.at(s, c) - mu;
            var += d * d;
        }
        stats.mu[static_cast<std::size_t>(c)] = mu;
        stats.sigma[static_cast<std::size_t>(c)] = std::sqrt(var * inv_s);
    }
    return stats;
}

FeatureMap monge_map(const FeatureMap& z, const GaussianStats& stats_i, const GaussianStats& stats_j) {
    const std::size_t c = static_cast<std::size_t>(z.cols);
    if (stats_i.mu.size() != c || stats_j.mu.size() != c) throw ShapeError("stats channel count mismatch");
    FeatureMap out(z.rows, z.cols);
    for (int col = 0; col < z.cols; ++col) {
        const std::size_t ci = static_cast<std::size_t>(col);
        const double ratio = stats_j.sigma[ci] / std::max(stats_i.sigma[ci], kSigmaFloor);
        for (int s = 0; s < z.rows; ++s)
            out.at(s, col) = static_cast<float>(stats_j.mu[ci] + ratio * (z.at(s, col) - stats_i.mu[ci]));
    }
    return out;
}

std::pair<FeatureMap, std::vector<float>> wasserstein_mixup(const FeatureMap& z_i, const FeatureMap& z_j,
                                                            const std::vector<float>& y_i, double lambda) {
    check_lambda(lambda);
    if (z_i.cols != z_j.cols) throw ShapeError("mixup feature maps channel mismatch");
    if (lambda == 0.0) return {z_i, y_i};
    const FeatureMap transported = monge_map(z_i, gaussian_stats(z_i), gaussian_stats(z_j));
    return {blend_maps(z_i, transported, lambda), y_i};
}

double sample_mixup_lambda(Rng& rng, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("mixup Beta parameters must be positive");
    if (alpha == 1.0 && beta == 1.0) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::gamma_distribution<double> ga(alpha, 1.0);
    std::gamma_distribution<double> gb(beta, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

}  // namespace gradapt
