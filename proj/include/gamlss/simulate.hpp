#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gamlss/dataset.hpp"
#include "gamlss/family.hpp"
#include "gamlss/types.hpp"

namespace gamlss {

/// Deterministic sampler: mt19937_64 raw bits with pinned transforms, so
/// streams are identical across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double uniform();                       // (0, 1)
  double normal();                        // inverse-CDF transform
  double gamma(double shape, double scale); // Marsaglia-Tsang
  double inverse_gaussian(double mu, double lambda);
  int uniform_int(int lo, int hi); // inclusive bounds
  /// Draws an index from unnormalized weights.
  int categorical(const std::vector<double>& weights);

  /// One draw from a two-parameter response family in the mean-dispersion
  /// parameterization used across the library.
  double draw(Family family, double mu, double sigma);

 private:
  std::mt19937_64 engine_; // engine output is pinned by the standard;
                           // the transforms above are pinned here
};

/// Generator truth for the synthetic land-lot market. The location
/// predictor combines fixed smooth shapes in LAT, LON and log(AR)
/// (standardized to the generator's covariate boxes) with linear
/// coefficients on derived columns; the dispersion predictor is linear in
/// ST plus a smooth log(AR) effect. Both use log links.
struct TruthParams {
  int format_version = 1;
  Family family = Family::GA;
  double mu_intercept = 2.5;
  std::map<std::string, double> mu_linear; // derived-column coefficients
  double mu_amp_lat = 0.35;
  double mu_amp_lon = 0.25;
  double mu_amp_log_ar = 0.45;
  double sigma_intercept = -1.3;
  double sigma_st = 0.025;
  double sigma_amp_log_ar = 0.3;

  /// The documented default market.
  static TruthParams defaults();

  std::string to_json() const;
  static TruthParams from_json(const std::string& text);
};

void save_truth(const std::string& path, const TruthParams& truth);
TruthParams load_truth(const std::string& path);

/// Predictors implied by the truth on a (derived) dataset; exposed so tests
/// can compare fitted surfaces against the generator.
Vector truth_eta_mu(const TruthParams& truth, const Dataset& derived);
Vector truth_eta_sigma(const TruthParams& truth, const Dataset& derived);

/// Draws n synthetic lots: covariates with fixed marginals (uniform UTM
/// boxes, log-normal areas/frontages, categorical mixes), then UP sampled
/// from the truth's family at the truth's mu/sigma. Returns the base
/// (pre-derivation) columns; deterministic given the seed.
Dataset simulate_hedonic(std::uint64_t seed, Index n, const TruthParams& truth);

} // namespace gamlss
