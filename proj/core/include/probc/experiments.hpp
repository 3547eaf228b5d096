#ifndef PROBC_EXPERIMENTS_HPP
#define PROBC_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "probc/expr.hpp"

namespace probc {

// Linear-dynamics MH experiment: disintegrate the two-step model, simplify
// away the latent states, generate the MH kernel for the (noiseT, noiseE)
// posterior with the coordinate-resampling proposal, and run a chain at
// the given observation.
struct KalmanReport {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double obs1 = 0, obs2 = 0;
    double mean_noise_t = 0, mean_noise_e = 0;
    double ess_per_sample_t = 0, ess_per_sample_e = 0;
    double accept_rate = 0;
    double seconds = 0;
    std::string to_json() const;
};
KalmanReport experiment_kalman(std::uint64_t seed, std::size_t n, double obs1, double obs2);

// The model source and the coordinate proposal used by the experiment.
extern const char* kKalmanSource;
extern const char* kKalmanProposalSource;

// Fixed-size Gaussian mixture labeling: n_points categorical labels with
// known component means at +/- separation/2, conditioned on synthetic
// emissions, resampled by the generated random-scan Gibbs kernel.
struct GmmReport {
    std::uint64_t seed = 0;
    std::size_t n_points = 0;
    int sweeps = 0;
    double separation = 0;
    std::vector<double> accuracy_per_sweep;
    std::string to_json() const;
};
GmmReport experiment_gmm(std::uint64_t seed, std::size_t n_points, int sweeps,
                         double separation = 10.0);

}  // namespace probc

#endif
