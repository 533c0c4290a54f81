#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absorbmc/lattice_walk.hpp"

namespace absorbmc {

/// Fitted channel-model parameters with diagnostics. beta_prime is the
/// rescaled scale parameter beta * x^(gamma - 1) at the fitted site's
/// lattice distance x.
struct FitParams {
    double alpha = 2.0;
    double beta = 1.0;
    double gamma = 0.0;
    double beta_prime = 0.0;
    double sse = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Continuous channel model: alpha / (4 pi D t)^(d/2)
///   * exp(-r^2 / (4 D beta t)) * (r^2 / (D t))^gamma.
/// At (alpha, beta, gamma) = (2, 1, 0) this is the free-space law (twice the
/// continuum density, matching the parity-thinned lattice probabilities).
double model_eval(double alpha, double beta, double gamma, double r, double t, double D, int d);
double model_eval(const FitParams& params, double r, double t, double D, int d);

/// Observations to fit: site distance r, times t_i = n_i * tau, targets y_i.
struct FitDataset {
    int dimension = 1;
    double r = 0.0;          // physical distance, lattice distance * delta
    double x_lattice = 0.0;  // lattice distance of the observation site
    double diffusion = 0.0;
    std::vector<double> t;
    std::vector<double> y;

    void validate() const;
};

class FitWindowError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Window rule for chain-generated targets: reachable steps from the first
/// arrival step up to where the target falls below tail_fraction of its
/// peak, capped at cap_factor times the lattice distance of x.
struct FitWindowSpec {
    double tail_fraction = 1e-4;
    int cap_factor = 40;
    double leak_budget = 1e-10;
};

/// Chain-based targets for fitting at site x, absorber placement abs.m with
/// probability abs.q. Throws FitWindowError when the signal is identically
/// zero (fully blocking placement) or has fewer than 6 usable samples.
FitDataset make_fit_dataset(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x,
                            const FitWindowSpec& window = {},
                            Execution exec = Execution::Parallel);

struct FitOptions {
    int restarts = 8;
    int max_iterations = 1000;
    double lambda_init = 1e-3;
    double sse_rel_tol = 1e-12;
    std::uint64_t seed = 0x5EEDull;
};

/// Damped Gauss-Newton least squares over (alpha, beta, gamma), log-scaled
/// internally with a softplus floor keeping gamma >= 0. Runs the base start
/// plus perturbed restarts and returns the best result; never returns a
/// point worse than any start.
FitParams fit(const FitDataset& data, std::optional<FitParams> init = std::nullopt,
              const FitOptions& options = {});

/// Fitted parameters over an absorption-probability grid for one (x, m)
/// pair, plus non-fatal shape diagnostics gathered along the way.
struct ParamTable {
    int dimension = 1;
    Site x{0, 0, 0};
    Site m{0, 0, 0};
    std::vector<double> q;
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> beta_prime;
    std::vector<double> sse;
    std::vector<std::string> diagnostics;

    std::size_t size() const { return q.size(); }
    FitParams row(std::size_t i) const;
    void validate() const;
};

ParamTable build_param_table(const WalkConfig& cfg, const Site& x, const Site& m,
                             const std::vector<double>& q_grid,
                             const FitWindowSpec& window = {}, const FitOptions& options = {},
                             Execution exec = Execution::Parallel);

/// Monotone piecewise-cubic interpolation of each parameter column; exact at
/// the knots, error on extrapolation requests.
FitParams interp_params(const ParamTable& table, double q);

nlohmann::json param_table_to_json(const ParamTable& table);
ParamTable param_table_from_json(const nlohmann::json& doc);

}  // namespace absorbmc
