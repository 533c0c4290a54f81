#include "absorbmc/lattice_walk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "absorbmc/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace absorbmc {

namespace {

// Values this small only slow the stencil down as denormals.
constexpr double kFlushThreshold = 1e-300;

inline double flushed(double v) { return v < kFlushThreshold ? 0.0 : v; }

}  // namespace

int norm_inf(const Site& s) {
    return std::max({std::abs(s[0]), std::abs(s[1]), std::abs(s[2])});
}

int norm_l1(const Site& s) { return std::abs(s[0]) + std::abs(s[1]) + std::abs(s[2]); }

double norm_l2(const Site& s) {
    const double a = s[0], b = s[1], c = s[2];
    return std::sqrt(a * a + b * b + c * c);
}

Convention convention_for(const Site& m, const Site& x) {
    return m == x ? Convention::ExemptFinalArrival : Convention::ApplyOnEntry;
}

void WalkConfig::validate() const {
    if (dimension < 1 || dimension > 3)
        throw std::invalid_argument("walk.dimension: must be 1, 2 or 3");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("walk.p: must lie in (0, 1)");
    if (dimension > 1 && p != 0.5)
        throw std::invalid_argument("walk.p: must be 0.5 (or absent) for dimension > 1");
    if (!(delta > 0.0)) throw std::invalid_argument("walk.delta: must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("walk.tau: must be positive");
}

void AbsorberSpec::validate(int dimension) const {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("absorber.q: must lie in [0, 1]");
    for (int a = dimension; a < 3; ++a)
        if (m[a] != 0)
            throw std::invalid_argument("absorber.m: must have exactly dimension components");
}

TruncatedChain::TruncatedChain(const WalkConfig& cfg, const AbsorberSpec& abs, int radius,
                               Convention convention)
    : cfg_(cfg), abs_(abs), radius_(radius), convention_(convention) {
    cfg_.validate();
    abs_.validate(cfg_.dimension);
    if (radius_ < norm_inf(abs_.m) + 1)
        throw TruncationError("chain radius too small: need at least |m| + 1 = " +
                                  std::to_string(norm_inf(abs_.m) + 1),
                              norm_inf(abs_.m) + 1);
    const int d = cfg_.dimension;
    std::array<std::size_t, 3> extent{};
    for (int a = 0; a < 3; ++a) extent[a] = a < d ? static_cast<std::size_t>(2 * radius_ + 3) : 1;
    stride_[2] = 1;
    stride_[1] = extent[2];
    stride_[0] = extent[1] * extent[2];
    padded_size_ = extent[0] * extent[1] * extent[2];
    state_count_ = 1;
    for (int a = 0; a < d; ++a) state_count_ *= static_cast<std::size_t>(2 * radius_ + 1);
}

bool TruncatedChain::contains(const Site& s) const {
    for (int a = 0; a < cfg_.dimension; ++a)
        if (std::abs(s[a]) > radius_) return false;
    for (int a = cfg_.dimension; a < 3; ++a)
        if (s[a] != 0) return false;
    return true;
}

std::size_t TruncatedChain::index_of(const Site& s) const {
    if (!contains(s)) throw std::out_of_range("site outside the truncated chain");
    std::size_t idx = 0;
    for (int a = 0; a < cfg_.dimension; ++a)
        idx += static_cast<std::size_t>(s[a] + radius_ + 1) * stride_[a];
    return idx;
}

TruncatedChain build_chain(const WalkConfig& cfg, const AbsorberSpec& abs, int radius,
                           Convention convention) {
    return TruncatedChain(cfg, abs, radius, convention);
}

int choose_radius(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x, int n_max,
                  double leak_budget) {
    cfg.validate();
    const int maxc = std::max(norm_inf(abs.m), norm_inf(x));
    const long long exact = static_cast<long long>(maxc) + n_max;
    if (cfg.dimension == 1) return static_cast<int>(std::max<long long>(exact, maxc + 1));
    // sub-Gaussian bound on the running maximum of each coordinate, with a
    // factor-2 safety margin folded into the 8d constant
    const double lg = std::log(8.0 * cfg.dimension / leak_budget);
    const long long tail = static_cast<long long>(std::ceil(std::sqrt(2.0 * n_max * lg)));
    const long long r = std::min(exact, std::max<long long>(tail, maxc + 1));
    return static_cast<int>(r);
}

Evolution::Evolution(const TruncatedChain& chain, const Site& start) : chain_(&chain) {
    if (!chain.contains(start)) throw std::out_of_range("start outside the truncated chain");
    cur_.assign(chain.padded_size(), 0.0);
    next_.assign(chain.padded_size(), 0.0);
    cur_[chain.index_of(start)] = 1.0;
    start_at_absorber_ = (start == chain.absorber().m);
}

double Evolution::at(const Site& s) const { return cur_[chain_->index_of(s)]; }

double Evolution::lattice_mass() const {
    const int d = chain_->config().dimension;
    const int R = chain_->radius();
    const auto& st = chain_->strides();
    double total = 0.0;
    const int ex = 2 * R + 1;
    const int ey = d >= 2 ? 2 * R + 1 : 1;
    const int ez = d >= 3 ? 2 * R + 1 : 1;
    for (int ix = 0; ix < ex; ++ix)
        for (int iy = 0; iy < ey; ++iy) {
            std::size_t base = static_cast<std::size_t>(ix + 1) * st[0] +
                               static_cast<std::size_t>(iy + (d >= 2 ? 1 : 0)) * st[1] +
                               (d >= 3 ? 1 : 0) * st[2];
            for (int iz = 0; iz < ez; ++iz) total += cur_[base + static_cast<std::size_t>(iz)];
        }
    return total;
}

double Evolution::boundary_outflow() const {
    const auto& cfg = chain_->config();
    const int d = cfg.dimension;
    const int R = chain_->radius();
    const auto& st = chain_->strides();
    const int E = 2 * R + 3;  // padded extent of each active axis
    if (d == 1) {
        return cfg.p * cur_[static_cast<std::size_t>(E - 2)] + (1.0 - cfg.p) * cur_[1];
    }
    const double c = 1.0 / (2.0 * d);
    double out = 0.0;
    if (d == 2) {
        for (int face = 0; face < 2; ++face) {
            const std::size_t ix = face == 0 ? 1 : static_cast<std::size_t>(E - 2);
            for (int iy = 1; iy <= E - 2; ++iy)
                out += cur_[ix * st[0] + static_cast<std::size_t>(iy)];
        }
        for (int face = 0; face < 2; ++face) {
            const std::size_t iy = face == 0 ? 1 : static_cast<std::size_t>(E - 2);
            for (int ix = 1; ix <= E - 2; ++ix)
                out += cur_[static_cast<std::size_t>(ix) * st[0] + iy];
        }
        return c * out;
    }
    for (int face = 0; face < 2; ++face) {
        const std::size_t ix = face == 0 ? 1 : static_cast<std::size_t>(E - 2);
        for (int iy = 1; iy <= E - 2; ++iy) {
            const std::size_t base = ix * st[0] + static_cast<std::size_t>(iy) * st[1];
            for (int iz = 1; iz <= E - 2; ++iz) out += cur_[base + static_cast<std::size_t>(iz)];
        }
    }
    for (int face = 0; face < 2; ++face) {
        const std::size_t iy = face == 0 ? 1 : static_cast<std::size_t>(E - 2);
        for (int ix = 1; ix <= E - 2; ++ix) {
            const std::size_t base = static_cast<std::size_t>(ix) * st[0] + iy * st[1];
            for (int iz = 1; iz <= E - 2; ++iz) out += cur_[base + static_cast<std::size_t>(iz)];
        }
    }
    for (int face = 0; face < 2; ++face) {
        const std::size_t iz = face == 0 ? 1 : static_cast<std::size_t>(E - 2);
        for (int ix = 1; ix <= E - 2; ++ix) {
            const std::size_t base = static_cast<std::size_t>(ix) * st[0] + iz;
            for (int iy = 1; iy <= E - 2; ++iy) out += cur_[base + static_cast<std::size_t>(iy) * st[1]];
        }
    }
    return c * out;
}

void Evolution::step(Execution exec) {
    const auto& cfg = chain_->config();
    const auto& abs = chain_->absorber();
    const int d = cfg.dimension;
    const int E = 2 * chain_->radius() + 3;
    const auto& st = chain_->strides();
    const double q = abs.q;
    const std::size_t m_idx = chain_->index_of(abs.m);

    if (chain_->convention() == Convention::ExemptFinalArrival && q > 0.0 &&
        !(step_count_ == 0 && start_at_absorber_)) {
        const double held = cur_[m_idx];
        if (held > 0.0) {
            cur_[m_idx] = held * (1.0 - q);
            sink_ += held * q;
        }
    }

    const double out = boundary_outflow();
    leak_ += out;
    sink_ += out;

    const double* __restrict src = cur_.data();
    double* __restrict dst = next_.data();
    if (d == 1) {
        const double p = cfg.p;
        for (int i = 1; i <= E - 2; ++i)
            dst[i] = flushed(p * src[i - 1] + (1.0 - p) * src[i + 1]);
    } else if (d == 2) {
        const double c = 0.25;
        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(st[0]);
        const bool parallel = exec == Execution::Parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
        for (int ix = 1; ix <= E - 2; ++ix) {
            const double* row = src + static_cast<std::ptrdiff_t>(ix) * sx;
            double* orow = dst + static_cast<std::ptrdiff_t>(ix) * sx;
            for (int iy = 1; iy <= E - 2; ++iy)
                orow[iy] = flushed(c * (row[iy - sx] + row[iy + sx] + row[iy - 1] + row[iy + 1]));
        }
    } else {
        const double c = 1.0 / 6.0;
        const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(st[0]);
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(st[1]);
        const bool parallel = exec == Execution::Parallel;
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static) if (parallel)
#endif
        for (int ix = 1; ix <= E - 2; ++ix)
            for (int iy = 1; iy <= E - 2; ++iy) {
                const double* row =
                    src + static_cast<std::ptrdiff_t>(ix) * sx + static_cast<std::ptrdiff_t>(iy) * sy;
                double* orow =
                    dst + static_cast<std::ptrdiff_t>(ix) * sx + static_cast<std::ptrdiff_t>(iy) * sy;
                for (int iz = 1; iz <= E - 2; ++iz)
                    orow[iz] = flushed(c * (row[iz - sx] + row[iz + sx] + row[iz - sy] +
                                            row[iz + sy] + row[iz - 1] + row[iz + 1]));
            }
    }

    if (chain_->convention() == Convention::ApplyOnEntry && q > 0.0) {
        const double inflow = next_[m_idx];
        if (inflow > 0.0) {
            next_[m_idx] = inflow * (1.0 - q);
            sink_ += inflow * q;
        }
    }

    cur_.swap(next_);
    ++step_count_;
}

std::vector<std::vector<double>> evolve(const TruncatedChain& chain, int n_max, const Site& start,
                                        Execution exec) {
    if (n_max < 0) throw std::invalid_argument("evolve: n_max must be >= 0");
    Evolution ev(chain, start);
    const int d = chain.config().dimension;
    const int R = chain.radius();
    std::vector<std::vector<double>> states;
    states.reserve(static_cast<std::size_t>(n_max) + 1);
    auto snapshot = [&] {
        std::vector<double> flat;
        flat.reserve(chain.state_count());
        Site s{0, 0, 0};
        const int ylo = d >= 2 ? -R : 0, yhi = d >= 2 ? R : 0;
        const int zlo = d >= 3 ? -R : 0, zhi = d >= 3 ? R : 0;
        for (int x = -R; x <= R; ++x)
            for (int y = ylo; y <= yhi; ++y)
                for (int z = zlo; z <= zhi; ++z) {
                    s = {x, y, z};
                    flat.push_back(ev.at(s));
                }
        states.push_back(std::move(flat));
    };
    snapshot();
    for (int k = 0; k < n_max; ++k) {
        ev.step(exec);
        snapshot();
    }
    return states;
}

OccupancySeries occupancy_at(const TruncatedChain& chain, const Site& x,
                             const std::vector<int>& n_list, const Site& start, Execution exec,
                             double leak_budget) {
    if (!chain.contains(x)) throw std::out_of_range("occupancy_at: x outside the truncated chain");
    int n_max = 0;
    for (int n : n_list) {
        if (n < 0) throw std::invalid_argument("occupancy_at: step counts must be >= 0");
        n_max = std::max(n_max, n);
    }
    OccupancySeries series;
    series.x = x;
    series.site_parity = norm_l1(x) & 1;
    series.n = n_list;
    series.probability.assign(n_list.size(), 0.0);

    Evolution ev(chain, start);
    for (int k = 0;; ++k) {
        for (std::size_t j = 0; j < n_list.size(); ++j)
            if (n_list[j] == k) series.probability[j] = ev.at(x);
        if (k == n_max) break;
        ev.step(exec);
    }
    series.leakage_bound = ev.leakage();
    if (series.leakage_bound > leak_budget) {
        const int required = std::max(
            choose_radius(chain.config(), chain.absorber(), x, n_max, leak_budget),
            chain.radius() + 1);
        throw TruncationError("occupancy_at: truncation leakage " +
                                  std::to_string(series.leakage_bound) + " exceeds budget; use radius >= " +
                                  std::to_string(required),
                              required);
    }
    return series;
}

OccupancySeries monte_carlo(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x,
                            const std::vector<int>& n_list, std::int64_t walkers,
                            std::uint64_t seed, Convention convention) {
    cfg.validate();
    abs.validate(cfg.dimension);
    if (walkers < 1) throw std::invalid_argument("monte_carlo: walkers must be >= 1");
    for (int a = cfg.dimension; a < 3; ++a)
        if (x[a] != 0) throw std::invalid_argument("monte_carlo: x has too many components");

    int n_max = 0;
    for (int n : n_list) {
        if (n < 0) throw std::invalid_argument("monte_carlo: step counts must be >= 0");
        n_max = std::max(n_max, n);
    }
    std::vector<std::vector<std::size_t>> queries_at(static_cast<std::size_t>(n_max) + 1);
    for (std::size_t j = 0; j < n_list.size(); ++j)
        queries_at[static_cast<std::size_t>(n_list[j])].push_back(j);

    const int d = cfg.dimension;
    const double p = cfg.p;
    const double q = abs.q;
    const bool on_departure = convention == Convention::ExemptFinalArrival;
    const Site m = abs.m;
    std::vector<std::int64_t> counts(n_list.size(), 0);

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<std::int64_t> local(counts.size(), 0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (std::int64_t w = 0; w < walkers; ++w) {
            SplitMix64 rng(stream_seed(seed, static_cast<std::uint64_t>(w)));
            Site pos{0, 0, 0};
            bool exempt_pending = on_departure && pos == m;
            for (std::size_t j : queries_at[0])
                if (pos == x) ++local[j];
            bool alive = true;
            for (int k = 1; k <= n_max && alive; ++k) {
                if (on_departure && pos == m && q > 0.0) {
                    if (exempt_pending) {
                        exempt_pending = false;
                    } else if (rng.u01() < q) {
                        alive = false;
                        break;
                    }
                }
                if (d == 1) {
                    pos[0] += rng.u01() < p ? 1 : -1;
                } else {
                    int dir = static_cast<int>(rng.u01() * (2 * d));
                    if (dir >= 2 * d) dir = 2 * d - 1;
                    pos[dir >> 1] += (dir & 1) ? 1 : -1;
                }
                if (!on_departure && pos == m && q > 0.0 && rng.u01() < q) {
                    alive = false;
                    break;
                }
                for (std::size_t j : queries_at[static_cast<std::size_t>(k)])
                    if (pos == x) ++local[j];
            }
        }
#ifdef _OPENMP
#pragma omp critical
#endif
        {
            for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += local[j];
        }
    }

    OccupancySeries series;
    series.x = x;
    series.site_parity = norm_l1(x) & 1;
    series.n = n_list;
    series.probability.resize(n_list.size());
    series.std_error.resize(n_list.size());
    const double W = static_cast<double>(walkers);
    for (std::size_t j = 0; j < n_list.size(); ++j) {
        const double est = static_cast<double>(counts[j]) / W;
        series.probability[j] = est;
        series.std_error[j] = std::sqrt(est * (1.0 - est) / W);
    }
    return series;
}

}  // namespace absorbmc
