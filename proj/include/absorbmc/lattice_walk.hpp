#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace absorbmc {

/// Lattice coordinates. Components beyond the active dimension must stay 0.
using Site = std::array<int, 3>;

int norm_inf(const Site& s);
int norm_l1(const Site& s);
double norm_l2(const Site& s);

/// When the thinning by the absorption probability is applied.
///   ApplyOnEntry       — every move that lands on the absorber site is thinned;
///                        the initial placement is not a move and is exempt.
///   ExemptFinalArrival — thinning is applied on departure from the absorber
///                        site instead, so mass sitting there at query time has
///                        not yet paid for its latest visit; the departure of
///                        the initial placement is exempt as well.
enum class Convention { ApplyOnEntry, ExemptFinalArrival };

enum class Execution { Serial, Parallel };

/// Convention that reproduces the analytic 1-D forms for a query at x:
/// departure-based thinning when the absorber sits on the observation site,
/// entry-based thinning everywhere else.
Convention convention_for(const Site& m, const Site& x);

struct WalkConfig {
    int dimension = 1;
    double p = 0.5;  // right-step probability, 1-D only; must stay 0.5 for d > 1
    double delta = 1.0;
    double tau = 1.0;

    double diffusion() const { return delta * delta / (2.0 * dimension * tau); }
    void validate() const;
};

struct AbsorberSpec {
    Site m{0, 0, 0};
    double q = 0.0;

    void validate(int dimension) const;
};

class TruncationError : public std::runtime_error {
  public:
    TruncationError(const std::string& msg, int required_radius)
        : std::runtime_error(msg), required_radius(required_radius) {}
    int required_radius;
};

/// Geometry and transition rule of the truncated chain: all sites with
/// sup-norm <= radius plus one absorbing sink. Mass stepping past the
/// boundary is routed to the sink and tracked as leakage.
class TruncatedChain {
  public:
    TruncatedChain(const WalkConfig& cfg, const AbsorberSpec& abs, int radius,
                   Convention convention);

    const WalkConfig& config() const { return cfg_; }
    const AbsorberSpec& absorber() const { return abs_; }
    int radius() const { return radius_; }
    Convention convention() const { return convention_; }

    bool contains(const Site& s) const;
    std::size_t state_count() const { return state_count_; }  // lattice sites, sink excluded

    // padded-layout helpers used by the evolution kernels
    std::size_t padded_size() const { return padded_size_; }
    std::size_t index_of(const Site& s) const;
    const std::array<std::size_t, 3>& strides() const { return stride_; }

  private:
    WalkConfig cfg_;
    AbsorberSpec abs_;
    int radius_;
    Convention convention_;
    std::array<std::size_t, 3> stride_{};
    std::size_t padded_size_ = 0;
    std::size_t state_count_ = 0;
};

TruncatedChain build_chain(const WalkConfig& cfg, const AbsorberSpec& abs, int radius,
                           Convention convention = Convention::ApplyOnEntry);

/// Radius giving either provably zero leakage (walker cannot outrun one site
/// per step) or, when that box would be too large for d >= 2, a sub-Gaussian
/// tail bound below leak_budget. The realized leakage is tracked exactly
/// either way.
int choose_radius(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x, int n_max,
                  double leak_budget = 1e-10);

struct OccupancySeries {
    Site x{0, 0, 0};
    int site_parity = 0;  // L1 norm of x mod 2; samples with odd n + parity are 0
    std::vector<int> n;
    std::vector<double> probability;
    std::vector<double> std_error;  // Monte Carlo only, else empty
    double leakage_bound = 0.0;
};

/// Streaming evolution of one start distribution. Query the state between
/// step() calls; occupancy readings follow the chain's convention.
class Evolution {
  public:
    Evolution(const TruncatedChain& chain, const Site& start);

    void step(Execution exec = Execution::Parallel);

    int current_step() const { return step_count_; }
    double at(const Site& s) const;
    double sink() const { return sink_; }
    double leakage() const { return leak_; }
    double lattice_mass() const;  // serial fixed-order sum over the box

  private:
    double boundary_outflow() const;

    const TruncatedChain* chain_;
    std::vector<double> cur_, next_;
    double sink_ = 0.0;
    double leak_ = 0.0;
    int step_count_ = 0;
    bool start_at_absorber_ = false;
};

/// Dense state snapshots pi(0..n_max) in canonical site order (x, then y,
/// then z ascending), one vector per step. Memory scales with the full box;
/// meant for small chains — use occupancy_at for long 3-D runs.
std::vector<std::vector<double>> evolve(const TruncatedChain& chain, int n_max, const Site& start,
                                        Execution exec = Execution::Parallel);

/// Probabilities at site x for each requested step count, plus the tracked
/// truncation leakage at the largest of them. Throws TruncationError naming
/// a sufficient radius when the leakage budget is exceeded.
OccupancySeries occupancy_at(const TruncatedChain& chain, const Site& x,
                             const std::vector<int>& n_list, const Site& start,
                             Execution exec = Execution::Parallel, double leak_budget = 1e-10);

/// Empirical estimate from independent walkers; per-sample binomial standard
/// errors. Bitwise independent of thread count.
OccupancySeries monte_carlo(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x,
                            const std::vector<int>& n_list, std::int64_t walkers,
                            std::uint64_t seed,
                            Convention convention = Convention::ApplyOnEntry);

}  // namespace absorbmc
