#include "absorbmc/receptor_queue.hpp"

#include <cmath>
#include <stdexcept>

#include "absorbmc/concentration.hpp"

namespace absorbmc {

ReceptorSpec ReceptorSpec::make(double T_trafficking, const Site& m, double delta, double kappa) {
    if (!(T_trafficking > 0.0))
        throw std::invalid_argument("receptor.T_trafficking: must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("receptor: delta must be positive");
    if (!(kappa > 0.0)) throw std::invalid_argument("receptor.kappa: must be positive");
    ReceptorSpec spec;
    spec.T_trafficking = T_trafficking;
    spec.mu = 1.0 / T_trafficking;
    spec.m = m;
    spec.r = norm_l2(m) * delta;
    spec.kappa = kappa;
    if (!(spec.r > 0.0))
        throw std::invalid_argument("receptor.m: receptor must not sit on the source");
    return spec;
}

double blocking_q(double lambda_in, double mu) {
    if (lambda_in < 0.0) throw std::domain_error("blocking_q: lambda_in must be nonnegative");
    if (!(mu > 0.0)) throw std::domain_error("blocking_q: mu must be positive");
    return mu / (lambda_in + mu);
}

double arrival_rate(double Q, const ReceptorSpec& spec, const ParamTable& table, double q,
                    double D, int d) {
    if (Q < 0.0) throw std::domain_error("arrival_rate: Q must be nonnegative");
    const FitParams params = interp_params(table, q);
    return spec.kappa * conc_steady(params, Q, spec.r, D, d);
}

QueueSolution solve_fixed_point(double Q, const ReceptorSpec& spec, const ParamTable& table,
                                double D, int d, double tol, int max_iter, double omega) {
    if (!(omega > 0.0 && omega <= 1.0))
        throw std::invalid_argument("solve_fixed_point: omega must lie in (0, 1]");
    table.validate();
    if (table.size() < 1) throw std::invalid_argument("solve_fixed_point: empty table");
    const double q_lo = table.q.front();
    const double q_hi = table.q.back();

    auto F = [&](double q) { return blocking_q(arrival_rate(Q, spec, table, q, D, d), spec.mu); };

    QueueSolution sol;
    double q = 1.0;
    if (q > q_hi) q = q_hi;
    if (q < q_lo)
        throw std::domain_error("solve_fixed_point: table does not cover the start q = 1");

    // bisection fallback state: residual sign alternations across iterations
    int alternations = 0;
    double prev_resid = 0.0;
    bool have_prev = false;
    double bracket_lo = q_lo, bracket_hi = q_hi;
    bool bisecting = false;

    for (int it = 1; it <= max_iter; ++it) {
        const double f = F(q);
        const double resid = q - f;
        sol.iterations = it;
        sol.residual = std::abs(resid);
        sol.trace.push_back(q);
        if (sol.residual <= tol) {
            sol.converged = true;
            break;
        }
        if (have_prev && resid * prev_resid < 0.0) ++alternations;
        have_prev = true;
        if (resid > 0.0)
            bracket_hi = q;
        else
            bracket_lo = q;
        prev_resid = resid;
        if (!bisecting && alternations >= 10) bisecting = true;

        double q_next;
        if (bisecting) {
            q_next = 0.5 * (bracket_lo + bracket_hi);
        } else {
            q_next = (1.0 - omega) * q + omega * f;
        }
        if (q_next < q_lo || q_next > q_hi)
            throw std::domain_error(
                "solve_fixed_point: iteration left the table's q range [" +
                std::to_string(q_lo) + ", " + std::to_string(q_hi) +
                "]; extend the fitted q grid");
        q = q_next;
    }

    sol.q_star = q;
    sol.lambda_in = arrival_rate(Q, spec, table, q, D, d);
    sol.lambda_a = q * sol.lambda_in;
    sol.p_b = 1.0 - q;
    return sol;
}

std::vector<QueueSweepRow> sweep_queue(const std::vector<double>& Q_list,
                                       const std::vector<ReceptorSpec>& specs,
                                       const ParamTable& table, double D, int d, double tol,
                                       int max_iter, double omega) {
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(Q_list.size() * specs.size());
    std::vector<QueueSweepRow> rows(count);
    std::exception_ptr failure;
    // rows are indexed, not appended, so the parallel order never shows
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        try {
            const std::size_t s = static_cast<std::size_t>(k) / Q_list.size();
            const std::size_t i = static_cast<std::size_t>(k) % Q_list.size();
            QueueSweepRow& row = rows[static_cast<std::size_t>(k)];
            row.Q = Q_list[i];
            row.spec_index = s;
            row.solution =
                solve_fixed_point(Q_list[i], specs[s], table, D, d, tol, max_iter, omega);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (!failure) failure = std::current_exception();
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace absorbmc
