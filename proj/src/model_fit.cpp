#include "absorbmc/model_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "absorbmc/json_io.hpp"
#include "absorbmc/rng.hpp"

namespace absorbmc {

namespace {

constexpr double kGammaFloor = 1e-9;

double softplus(double g) {
    if (g > 30.0) return g;
    return std::log1p(std::exp(g));
}

double softplus_inv(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(std::max(y, kGammaFloor)));
}

struct Theta {
    double a, b, g;  // alpha = e^a, beta = e^b, gamma = softplus(g)

    double alpha() const { return std::exp(a); }
    double beta() const { return std::exp(b); }
    double gamma() const { return softplus(g); }
};

double sse_of(const std::vector<double>& res) {
    double s = 0.0;
    for (double r : res) s += r * r;
    return s;
}

void residuals(const FitDataset& data, const Theta& th, std::vector<double>& out) {
    const double alpha = th.alpha(), beta = th.beta(), gamma = th.gamma();
    out.resize(data.t.size());
    for (std::size_t i = 0; i < data.t.size(); ++i)
        out[i] = model_eval(alpha, beta, gamma, data.r, data.t[i], data.diffusion,
                            data.dimension) -
                 data.y[i];
}

// Solve (A + lambda diag(A)) delta = rhs for a 3x3 system. Returns false on a
// numerically singular matrix.
bool solve_damped(const double A[3][3], const double rhs[3], double lambda, double delta[3]) {
    double M[3][4];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) M[i][j] = A[i][j];
        M[i][i] += lambda * std::max(A[i][i], 1e-30);
        M[i][3] = rhs[i];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        if (std::abs(M[piv][col]) < 1e-300) return false;
        if (piv != col)
            for (int j = col; j < 4; ++j) std::swap(M[piv][j], M[col][j]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = M[r][col] / M[col][col];
            for (int j = col; j < 4; ++j) M[r][j] -= f * M[col][j];
        }
    }
    for (int i = 2; i >= 0; --i) {
        double s = M[i][3];
        for (int j = i + 1; j < 3; ++j) s -= M[i][j] * delta[j];
        delta[i] = s / M[i][i];
    }
    return std::isfinite(delta[0]) && std::isfinite(delta[1]) && std::isfinite(delta[2]);
}

struct LocalFit {
    Theta theta;
    double sse;
    int iterations;
    bool converged;
};

LocalFit levenberg_marquardt(const FitDataset& data, Theta theta, const FitOptions& opts) {
    std::vector<double> res, res_try, res_fd;
    residuals(data, theta, res);
    double sse = sse_of(res);
    double lambda = opts.lambda_init;
    const std::size_t K = res.size();
    std::vector<double> J(3 * K);
    int iter = 0;
    bool converged = false;

    while (iter < opts.max_iterations) {
        ++iter;
        // forward-difference Jacobian in the transformed parameters
        double th_arr[3] = {theta.a, theta.b, theta.g};
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(th_arr[j]));
            Theta bumped = theta;
            (j == 0 ? bumped.a : j == 1 ? bumped.b : bumped.g) += h;
            residuals(data, bumped, res_fd);
            for (std::size_t i = 0; i < K; ++i) J[j * K + i] = (res_fd[i] - res[i]) / h;
        }
        double A[3][3] = {};
        double rhs[3] = {};
        for (int a = 0; a < 3; ++a) {
            for (int b = a; b < 3; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < K; ++i) s += J[a * K + i] * J[b * K + i];
                A[a][b] = A[b][a] = s;
            }
            double s = 0.0;
            for (std::size_t i = 0; i < K; ++i) s += J[a * K + i] * res[i];
            rhs[a] = -s;
        }

        double delta[3];
        bool ok = solve_damped(A, rhs, lambda, delta);
        double sse_try = std::numeric_limits<double>::infinity();
        Theta trial = theta;
        if (ok) {
            trial.a += delta[0];
            trial.b += delta[1];
            trial.g += delta[2];
            residuals(data, trial, res_try);
            sse_try = sse_of(res_try);
            if (!std::isfinite(sse_try)) sse_try = std::numeric_limits<double>::infinity();
        }
        if (sse_try < sse) {
            const double rel = (sse - sse_try) / std::max(sse, 1e-300);
            theta = trial;
            sse = sse_try;
            res.swap(res_try);
            lambda = std::max(lambda / 10.0, 1e-13);
            if (rel < opts.sse_rel_tol) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e13) {
                // no direction improves: treat a vanished gradient as converged
                const double gnorm = std::max({std::abs(rhs[0]), std::abs(rhs[1]), std::abs(rhs[2])});
                converged = gnorm <= 1e-8 * (1.0 + sse);
                break;
            }
        }
    }
    return {theta, sse, iter, converged};
}

}  // namespace

double model_eval(double alpha, double beta, double gamma, double r, double t, double D, int d) {
    if (!(t > 0.0)) throw std::domain_error("model_eval: t must be positive");
    if (!(r > 0.0)) throw std::domain_error("model_eval: r must be positive");
    if (!(D > 0.0)) throw std::domain_error("model_eval: D must be positive");
    const double u = r * r / (D * t);
    return alpha * std::pow(4.0 * std::numbers::pi * D * t, -0.5 * d) *
           std::exp(-u / (4.0 * beta)) * std::pow(u, gamma);
}

double model_eval(const FitParams& params, double r, double t, double D, int d) {
    return model_eval(params.alpha, params.beta, params.gamma, r, t, D, d);
}

void FitDataset::validate() const {
    if (dimension < 1 || dimension > 3) throw std::invalid_argument("FitDataset: bad dimension");
    if (!(r > 0.0)) throw std::invalid_argument("FitDataset: r must be positive");
    if (!(x_lattice > 0.0)) throw std::invalid_argument("FitDataset: x_lattice must be positive");
    if (!(diffusion > 0.0)) throw std::invalid_argument("FitDataset: diffusion must be positive");
    if (t.size() != y.size()) throw std::invalid_argument("FitDataset: t/y size mismatch");
    if (t.size() < 6) throw std::invalid_argument("FitDataset: need at least 6 observations");
    for (double ti : t)
        if (!(ti > 0.0)) throw std::invalid_argument("FitDataset: times must be positive");
}

FitDataset make_fit_dataset(const WalkConfig& cfg, const AbsorberSpec& abs, const Site& x,
                            const FitWindowSpec& window, Execution exec) {
    cfg.validate();
    abs.validate(cfg.dimension);
    const double rho = norm_l2(x);
    if (rho <= 0.0) throw std::invalid_argument("make_fit_dataset: x must not be the origin");

    // Skip the ballistic edge t < 1.4 rho: the first reachable steps sit in a
    // lattice boundary layer well off the continuum curve being fitted.
    const int n_first = norm_l1(x);
    int n_start = n_first;
    while (n_start < 1.4 * rho) n_start += 2;
    const int n_cap = window.cap_factor * std::max(1, static_cast<int>(std::llround(rho)));
    std::vector<int> ns;
    for (int n = n_start; n <= n_cap; n += 2) ns.push_back(n);

    const Convention conv = convention_for(abs.m, x);
    const int radius = choose_radius(cfg, abs, x, n_cap, window.leak_budget);
    const TruncatedChain chain = build_chain(cfg, abs, radius, conv);
    const OccupancySeries series =
        occupancy_at(chain, x, ns, Site{0, 0, 0}, exec, window.leak_budget);

    double peak = 0.0;
    std::size_t peak_at = 0;
    for (std::size_t j = 0; j < series.probability.size(); ++j)
        if (series.probability[j] > peak) {
            peak = series.probability[j];
            peak_at = j;
        }
    if (peak <= 0.0)
        throw FitWindowError("make_fit_dataset: target is identically zero (absorber blocks "
                             "every path to x)");
    std::size_t end = series.probability.size();
    for (std::size_t j = peak_at + 1; j < series.probability.size(); ++j)
        if (series.probability[j] < window.tail_fraction * peak) {
            end = j;
            break;
        }

    FitDataset data;
    data.dimension = cfg.dimension;
    data.r = rho * cfg.delta;
    data.x_lattice = rho;
    data.diffusion = cfg.diffusion();
    data.t.reserve(end);
    data.y.reserve(end);
    for (std::size_t j = 0; j < end; ++j) {
        data.t.push_back(static_cast<double>(ns[j]) * cfg.tau);
        data.y.push_back(series.probability[j]);
    }
    if (data.t.size() < 6)
        throw FitWindowError("make_fit_dataset: fewer than 6 usable samples in the window");
    return data;
}

FitParams fit(const FitDataset& data, std::optional<FitParams> init, const FitOptions& options) {
    data.validate();

    Theta base;
    if (init) {
        base = {std::log(init->alpha), std::log(init->beta), softplus_inv(init->gamma)};
    } else {
        base = {std::log(2.0), 0.0, softplus_inv(0.0)};
    }

    std::vector<Theta> starts{base};
    SplitMix64 rng(options.seed);
    for (int k = 0; k < options.restarts; ++k) {
        Theta s = base;
        s.a += std::numbers::ln2 * (2.0 * rng.u01() - 1.0);
        s.b += std::numbers::ln2 * (2.0 * rng.u01() - 1.0);
        s.g = softplus_inv(softplus(base.g) + 1.5 * rng.u01());
        starts.push_back(s);
    }

    LocalFit best{base, std::numeric_limits<double>::infinity(), 0, false};
    for (const Theta& s : starts) {
        LocalFit run = levenberg_marquardt(data, s, options);
        if (run.sse < best.sse) best = run;
    }

    FitParams out;
    out.alpha = best.theta.alpha();
    out.beta = best.theta.beta();
    out.gamma = best.theta.gamma();
    out.beta_prime = out.beta * std::pow(data.x_lattice, out.gamma - 1.0);
    out.sse = best.sse;
    out.iterations = best.iterations;
    out.converged = best.converged;
    return out;
}

FitParams ParamTable::row(std::size_t i) const {
    if (i >= q.size()) throw std::out_of_range("ParamTable::row");
    FitParams p;
    p.alpha = alpha[i];
    p.beta = beta[i];
    p.gamma = gamma[i];
    p.beta_prime = beta_prime[i];
    p.sse = sse[i];
    p.iterations = 0;
    p.converged = true;
    return p;
}

void ParamTable::validate() const {
    const std::size_t k = q.size();
    if (alpha.size() != k || beta.size() != k || gamma.size() != k || beta_prime.size() != k ||
        sse.size() != k)
        throw std::invalid_argument("ParamTable: column length mismatch");
    for (std::size_t i = 0; i + 1 < k; ++i)
        if (q[i] > q[i + 1]) throw std::invalid_argument("ParamTable: q must be sorted");
    for (double v : q)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("ParamTable: q outside [0, 1]");
}

ParamTable build_param_table(const WalkConfig& cfg, const Site& x, const Site& m,
                             const std::vector<double>& q_grid, const FitWindowSpec& window,
                             const FitOptions& options, Execution exec) {
    cfg.validate();
    ParamTable table;
    table.dimension = cfg.dimension;
    table.x = x;
    table.m = m;
    table.q = q_grid;
    table.alpha.resize(q_grid.size());
    table.beta.resize(q_grid.size());
    table.gamma.resize(q_grid.size());
    table.beta_prime.resize(q_grid.size());
    table.sse.resize(q_grid.size());
    table.validate();

    std::vector<bool> converged(q_grid.size(), true);
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        const AbsorberSpec abs{m, q_grid[i]};
        const FitDataset data = make_fit_dataset(cfg, abs, x, window, exec);
        const FitParams p = fit(data, std::nullopt, options);
        table.alpha[i] = p.alpha;
        table.beta[i] = p.beta;
        table.gamma[i] = p.gamma;
        table.beta_prime[i] = p.beta_prime;
        table.sse[i] = p.sse;
        converged[i] = p.converged;
        if (!p.converged)
            table.diagnostics.push_back("unconverged fit at q=" + std::to_string(q_grid[i]));
    }
    for (std::size_t i = 0; i + 1 < table.size(); ++i) {
        if (table.gamma[i + 1] < table.gamma[i] - 1e-9)
            table.diagnostics.push_back("gamma decreases between q=" + std::to_string(table.q[i]) +
                                        " and q=" + std::to_string(table.q[i + 1]));
    }
    return table;
}

namespace {

// Fritsch-Carlson shape-preserving slopes for strictly increasing knots.
std::vector<double> pchip_slopes(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    std::vector<double> m(n, 0.0);
    if (n == 1) return m;
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs[i + 1] - xs[i];
        d[i] = (ys[i + 1] - ys[i]) / h[i];
    }
    if (n == 2) {
        m[0] = m[1] = d[0];
        return m;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] == 0.0 || d[i] == 0.0 || (d[i - 1] > 0) != (d[i] > 0)) {
            m[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if ((d0 > 0) != (d1 > 0) && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    m[0] = endpoint(h[0], h[1], d[0], d[1]);
    m[n - 1] = endpoint(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    return m;
}

double pchip_eval(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::vector<double>& slopes, double x) {
    const std::size_t n = xs.size();
    std::size_t i = 0;
    while (i + 2 < n && x > xs[i + 1]) ++i;
    const double h = xs[i + 1] - xs[i];
    const double s = (x - xs[i]) / h;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h00 * ys[i] + h * h10 * slopes[i] + h01 * ys[i + 1] + h * h11 * slopes[i + 1];
}

}  // namespace

FitParams interp_params(const ParamTable& table, double q) {
    table.validate();
    if (table.size() == 0) throw std::invalid_argument("interp_params: empty table");
    if (q < table.q.front() || q > table.q.back())
        throw std::domain_error("interp_params: q=" + std::to_string(q) +
                                " outside table range [" + std::to_string(table.q.front()) + ", " +
                                std::to_string(table.q.back()) + "]");
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table.q[i] == q) return table.row(i);
    for (std::size_t i = 0; i + 1 < table.size(); ++i)
        if (table.q[i] >= table.q[i + 1])
            throw std::invalid_argument("interp_params: knots must be strictly increasing");

    FitParams p;
    const auto al = pchip_slopes(table.q, table.alpha);
    const auto be = pchip_slopes(table.q, table.beta);
    const auto ga = pchip_slopes(table.q, table.gamma);
    const auto ss = pchip_slopes(table.q, table.sse);
    p.alpha = pchip_eval(table.q, table.alpha, al, q);
    p.beta = pchip_eval(table.q, table.beta, be, q);
    p.gamma = std::max(0.0, pchip_eval(table.q, table.gamma, ga, q));
    p.sse = pchip_eval(table.q, table.sse, ss, q);
    p.beta_prime = p.beta * std::pow(norm_l2(table.x), p.gamma - 1.0);
    p.iterations = 0;
    p.converged = true;
    return p;
}

nlohmann::json param_table_to_json(const ParamTable& table) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["dimension"] = table.dimension;
    doc["x"] = site_to_json(table.x, table.dimension);
    doc["m"] = site_to_json(table.m, table.dimension);
    doc["q"] = table.q;
    doc["alpha"] = table.alpha;
    doc["beta"] = table.beta;
    doc["gamma"] = table.gamma;
    doc["beta_prime"] = table.beta_prime;
    doc["sse"] = table.sse;
    return doc;
}

ParamTable param_table_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("param table: expected a JSON object");
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != 1)
        throw std::invalid_argument("param table: unsupported schema_version");
    ParamTable table;
    table.dimension = doc.at("dimension").get<int>();
    if (table.dimension < 1 || table.dimension > 3)
        throw std::invalid_argument("param table: dimension must be 1, 2 or 3");
    table.x = site_from_json(doc.at("x"), table.dimension, "x");
    table.m = site_from_json(doc.at("m"), table.dimension, "m");
    table.q = doc.at("q").get<std::vector<double>>();
    table.alpha = doc.at("alpha").get<std::vector<double>>();
    table.beta = doc.at("beta").get<std::vector<double>>();
    table.gamma = doc.at("gamma").get<std::vector<double>>();
    table.beta_prime = doc.at("beta_prime").get<std::vector<double>>();
    table.sse = doc.at("sse").get<std::vector<double>>();
    table.validate();
    return table;
}

}  // namespace absorbmc
