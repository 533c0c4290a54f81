#pragma once

#include <stdexcept>

#include "absorbmc/model_fit.hpp"

namespace absorbmc {

/// The steady-state integral converges only when the incomplete-gamma shape
/// parameter gamma - (2 - d)/2 is positive (gamma > 1/2 in 1-D).
struct SteadyStateValidity {
    double shape = 0.0;
    bool valid = false;

    static SteadyStateValidity check(double gamma, int dimension) {
        SteadyStateValidity v;
        v.shape = gamma - 0.5 * (2.0 - dimension);
        v.valid = v.shape > 0.0;
        return v;
    }
};

class DivergentRegimeError : public std::domain_error {
  public:
    DivergentRegimeError(double gamma, int dimension, double threshold)
        : std::domain_error("steady-state concentration diverges: gamma=" +
                            std::to_string(gamma) + " requires gamma > " +
                            std::to_string(threshold) + " in " + std::to_string(dimension) +
                            "-D"),
          gamma(gamma),
          gamma_threshold(threshold) {}
    double gamma;
    double gamma_threshold;
};

/// Concentration after an instantaneous release of N molecules at the origin.
double conc_instant(const FitParams& params, double N, double r, double t, double D, int d);

/// Concentration at time t under constant emission at rate Q started at t=0.
double conc_continuous(const FitParams& params, double Q, double r, double t, double D, int d);

/// Long-time limit of conc_continuous.
double conc_steady(const FitParams& params, double Q, double r, double D, int d);

}  // namespace absorbmc
