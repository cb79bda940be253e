#pragma once

// Training-time feature interpolation for source fine-tuning: convex
// manifold mixup and a Gaussian (Monge-map) variant that transports one
// feature map's per-channel statistics onto another's.

#include <utility>
#include <vector>

#include "gradapt/common.hpp"
#include "gradapt/mat.hpp"

namespace gradapt {

// A feature map is S spatial positions x C channels; an MLP feature vector
// is the S=1 case. Per-channel statistics treat each position as one sample.
using FeatureMap = MatF;

// Population convention: sigma divides by S, so S=1 gives sigma = 0.
struct GaussianStats {
    std::vector<double> mu;
    std::vector<double> sigma;
};

// Guards the sigma_j / sigma_i ratio against zero-variance channels.
inline constexpr double kSigmaFloor = 1e-5;

std::pair<FeatureMap, std::vector<float>> convex_mixup(const FeatureMap& z_i, const FeatureMap& z_j,
                                                       const std::vector<float>& y_i, const std::vector<float>& y_j,
                                                       double lambda);

GaussianStats gaussian_stats(const FeatureMap& z);

// Per-channel affine transport T(z) = mu_j + (sigma_j / max(sigma_i, floor))
// * (z - mu_i); maps stats_i-distributed features onto stats_j.
FeatureMap monge_map(const FeatureMap& z, const GaussianStats& stats_i, const GaussianStats& stats_j);

// zhat = (1-lambda) * z_i + lambda * T(z_i) where T transports z_i's stats
// onto z_j's; the label stays y_i for every lambda.
std::pair<FeatureMap, std::vector<float>> wasserstein_mixup(const FeatureMap& z_i, const FeatureMap& z_j,
                                                            const std::vector<float>& y_i, double lambda);

// Beta(alpha, beta)-distributed interpolation coefficient; the default
// alpha = beta = 1 draws uniformly from [0,1).
double sample_mixup_lambda(Rng& rng, double alpha = 1.0, double beta = 1.0);

}  // namespace gradapt
