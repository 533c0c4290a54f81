#include <doctest.h>

#include <cmath>
#include <numbers>

#include "absorbmc/model_fit.hpp"

using namespace absorbmc;

namespace {

FitDataset synthetic_dataset(double alpha, double beta, double gamma, int d, double r, double D,
                             double x_lattice, int count = 40) {
    FitDataset data;
    data.dimension = d;
    data.r = r;
    data.x_lattice = x_lattice;
    data.diffusion = D;
    for (int i = 0; i < count; ++i) {
        const double t = r + 2.0 * i * r;  // spread across rise and tail
        data.t.push_back(t);
        data.y.push_back(model_eval(alpha, beta, gamma, r, t, D, d));
    }
    return data;
}

double sse_at(const FitDataset& data, const FitParams& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < data.t.size(); ++i) {
        const double rres =
            model_eval(p, data.r, data.t[i], data.diffusion, data.dimension) - data.y[i];
        s += rres * rres;
    }
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("model_fit");

TEST_CASE("model evaluation anchors") {
    CHECK(model_eval(2.0, 1.0, 0.0, 1.0, 1.0, 0.5, 1) ==
          doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5))
              .epsilon(1e-12));
    // gamma = 0, beta = 1 reduces to the free-space law for any inputs
    for (int d : {1, 2, 3})
        for (double r : {0.5, 2.0, 7.0})
            for (double t : {0.3, 4.0, 90.0}) {
                const double D = 1.0 / (2.0 * d);
                const double free_law = 2.0 / std::pow(4.0 * std::numbers::pi * D * t, 0.5 * d) *
                                        std::exp(-r * r / (4.0 * D * t));
                CHECK(model_eval(2.0, 1.0, 0.0, r, t, D, d) ==
                      doctest::Approx(free_law).epsilon(1e-14));
            }
    // two independently coded expressions agree
    const double direct = model_eval(1.5, 0.8, 0.6, 4.0, 16.0, 0.5, 1);
    const double logform = std::exp(std::log(1.5) -
                                    0.5 * std::log(4.0 * std::numbers::pi * 0.5 * 16.0) -
                                    16.0 / (4.0 * 0.5 * 0.8 * 16.0) +
                                    0.6 * std::log(16.0 / (0.5 * 16.0)));
    CHECK(direct == doctest::Approx(logform).epsilon(1e-14));
    CHECK_THROWS_AS(model_eval(2.0, 1.0, 0.0, 1.0, 0.0, 0.5, 1), std::domain_error);
    CHECK_THROWS_AS(model_eval(2.0, 1.0, 0.0, 0.0, 1.0, 0.5, 1), std::domain_error);
}

TEST_CASE("synthetic round trip recovers the generating parameters") {
    const auto data = synthetic_dataset(1.5, 0.8, 0.6, 1, 4.0, 0.5, 4.0);
    const FitParams p = fit(data);
    CHECK(p.converged);
    CHECK(std::abs(p.alpha - 1.5) <= 1e-6);
    CHECK(std::abs(p.beta - 0.8) <= 1e-6);
    CHECK(std::abs(p.gamma - 0.6) <= 1e-6);
    CHECK(p.beta_prime == doctest::Approx(p.beta * std::pow(4.0, p.gamma - 1.0)).epsilon(1e-12));
    CHECK(p.sse <= 1e-14);
}

TEST_CASE("free-walk targets recover the unabsorbed parameter triple") {
    const WalkConfig cfg{1, 0.5, 1.0, 1.0};
    const auto data = make_fit_dataset(cfg, AbsorberSpec{{5, 0, 0}, 0.0}, {10, 0, 0});
    const FitParams p = fit(data);
    CHECK(p.converged);
    CHECK(std::abs(p.alpha - 2.0) <= 1e-2);
    CHECK(std::abs(p.beta - 1.0) <= 1e-2);
    CHECK(std::abs(p.gamma - 0.0) <= 1e-2);
}

TEST_CASE("fits are deterministic and never worse than their starts") {
    const auto data = synthetic_dataset(2.2, 1.1, 0.3, 1, 6.0, 0.5, 6.0);
    const FitParams a = fit(data);
    const FitParams b = fit(data);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    CHECK(a.gamma == b.gamma);
    CHECK(a.sse == b.sse);
    FitParams init;
    init.alpha = 2.0;
    init.beta = 1.0;
    init.gamma = 0.0;
    CHECK(a.sse <= sse_at(data, init));
    // different seed, same optimum within tolerance
    FitOptions opts;
    opts.seed = 999;
    const FitParams c = fit(data, std::nullopt, opts);
    CHECK(std::abs(c.alpha - a.alpha) <= 1e-5);
}

TEST_CASE("finite-difference gradient is consistent near the optimum") {
    const auto data = synthetic_dataset(1.5, 0.8, 0.6, 1, 4.0, 0.5, 4.0);
    // slightly off the optimum so the gradient is nonzero
    const double th[3] = {1.52, 0.81, 0.59};
    auto sse = [&](double alpha, double beta, double gamma) {
        double s = 0.0;
        for (std::size_t i = 0; i < data.t.size(); ++i) {
            const double r = model_eval(alpha, beta, gamma, data.r, data.t[i], data.diffusion,
                                        data.dimension) -
                             data.y[i];
            s += r * r;
        }
        return s;
    };
    for (int j = 0; j < 3; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(th[j]));
        double hi[3] = {th[0], th[1], th[2]}, lo[3] = {th[0], th[1], th[2]},
               fw[3] = {th[0], th[1], th[2]};
        hi[j] += h;
        lo[j] -= h;
        fw[j] += h;
        const double forward = (sse(fw[0], fw[1], fw[2]) - sse(th[0], th[1], th[2])) / h;
        const double central = (sse(hi[0], hi[1], hi[2]) - sse(lo[0], lo[1], lo[2])) / (2.0 * h);
        CHECK(std::abs(forward - central) <= 1e-5 * std::max(1.0, std::abs(central)));
    }
}

TEST_CASE("window construction") {
    const WalkConfig cfg{1, 0.5, 1.0, 1.0};
    // fully blocked: absorber strictly inside at q = 1
    CHECK_THROWS_AS(make_fit_dataset(cfg, AbsorberSpec{{5, 0, 0}, 1.0}, {10, 0, 0}),
                    FitWindowError);
    const auto data = make_fit_dataset(cfg, AbsorberSpec{{5, 0, 0}, 0.5}, {10, 0, 0});
    CHECK(data.t.size() >= 6);
    CHECK(data.t.front() == 14.0);     // first reachable step past the ballistic edge 1.4x
    CHECK(data.t.back() <= 400.0);     // capped at 40x
    CHECK(data.y.front() > 0.0);
    for (std::size_t i = 0; i + 1 < data.t.size(); ++i) CHECK(data.t[i + 1] == data.t[i] + 2.0);
}

TEST_CASE("parameter tables: determinism, diagnostics and interpolation") {
    const WalkConfig cfg{1, 0.5, 1.0, 1.0};
    const Site x{10, 0, 0};
    const Site m{5, 0, 0};
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75};
    const auto table = build_param_table(cfg, x, m, grid, FitWindowSpec{}, FitOptions{});
    CHECK(table.size() == 4);
    CHECK(std::abs(table.alpha[0] - 2.0) <= 1e-2);
    CHECK(std::abs(table.beta[0] - 1.0) <= 1e-2);
    CHECK(std::abs(table.gamma[0] - 0.0) <= 1e-2);

    const auto again = build_param_table(cfg, x, m, grid, FitWindowSpec{}, FitOptions{});
    for (std::size_t i = 0; i < table.size(); ++i) {
        CHECK(table.alpha[i] == again.alpha[i]);
        CHECK(table.beta[i] == again.beta[i]);
        CHECK(table.gamma[i] == again.gamma[i]);
    }

    // knots are exact; midpoints lie between neighbouring knot values
    const FitParams knot = interp_params(table, 0.5);
    CHECK(knot.alpha == table.alpha[2]);
    CHECK(knot.gamma == table.gamma[2]);
    const FitParams mid = interp_params(table, 0.375);
    CHECK(mid.gamma >= std::min(table.gamma[1], table.gamma[2]) - 1e-12);
    CHECK(mid.gamma <= std::max(table.gamma[1], table.gamma[2]) + 1e-12);
    CHECK(mid.beta_prime ==
          doctest::Approx(mid.beta * std::pow(10.0, mid.gamma - 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(interp_params(table, 0.8), std::domain_error);
    CHECK_THROWS_AS(interp_params(table, -0.1), std::domain_error);
}

TEST_CASE("interpolation error shrinks under grid refinement") {
    // on the q range the queue consumes; alpha's steep drop just above q = 0
    // needs a locally finer grid than 0.05 and is excluded
    const WalkConfig cfg{1, 0.5, 1.0, 1.0};
    const Site x{5, 0, 0};
    const Site m{2, 0, 0};
    std::vector<double> coarse, dense;
    for (int i = 0; 0.25 + i * 0.05 <= 0.951; ++i) coarse.push_back(0.25 + i * 0.05);
    for (int i = 0; 0.25 + i * 0.01 <= 0.951; ++i) dense.push_back(0.25 + i * 0.01);
    const auto tc = build_param_table(cfg, x, m, coarse);
    const auto td = build_param_table(cfg, x, m, dense);
    for (double q = 0.255; q <= 0.945; q += 0.01) {
        const FitParams pc = interp_params(tc, q);
        const FitParams pd = interp_params(td, q);
        CHECK(std::abs(pc.alpha - pd.alpha) <= 1e-3);
        CHECK(std::abs(pc.beta - pd.beta) <= 1e-3);
        CHECK(std::abs(pc.gamma - pd.gamma) <= 1e-3);
    }
}

TEST_CASE("tables serialize losslessly") {
    ParamTable t;
    t.dimension = 3;
    t.x = {4, 0, 0};
    t.m = {4, 0, 0};
    t.q = {0.0, 0.5, 1.0};
    t.alpha = {2.0, 1.7320508075688772, 1.1};
    t.beta = {1.0, 0.9999999999999997, 1.3};
    t.gamma = {0.0, 0.55, 1.0 / 3.0};
    t.beta_prime = {0.25, 0.53, 0.51};
    t.sse = {1e-9, 2e-9, 3e-9};
    const auto doc = param_table_to_json(t);
    const auto back = param_table_from_json(doc);
    CHECK(back.dimension == t.dimension);
    CHECK(back.x == t.x);
    CHECK(back.m == t.m);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back.q[i] == t.q[i]);
        CHECK(back.alpha[i] == t.alpha[i]);
        CHECK(back.beta[i] == t.beta[i]);
        CHECK(back.gamma[i] == t.gamma[i]);
        CHECK(back.beta_prime[i] == t.beta_prime[i]);
        CHECK(back.sse[i] == t.sse[i]);
    }
    const auto doc2 = param_table_to_json(back);
    CHECK(doc.dump() == doc2.dump());

    auto broken = doc;
    broken["alpha"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(param_table_from_json(broken), std::invalid_argument);
    broken = doc;
    broken["schema_version"] = 2;
    CHECK_THROWS_AS(param_table_from_json(broken), std::invalid_argument);
}

TEST_SUITE_END();
