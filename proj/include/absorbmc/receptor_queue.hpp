#pragma once

#include <vector>

#include "absorbmc/model_fit.hpp"

namespace absorbmc {

/// Single receptor modeled as a loss queue: exponential service with mean
/// T_trafficking, arrivals lost while the receptor is busy. kappa converts
/// the steady-state concentration at the receptor site into an arrival rate.
struct ReceptorSpec {
    double T_trafficking = 1.0;
    double mu = 1.0;  // 1 / T_trafficking
    Site m{0, 0, 0};
    double r = 0.0;  // physical distance of the receptor from the source
    double kappa = 1.0;

    static ReceptorSpec make(double T_trafficking, const Site& m, double delta,
                             double kappa = 1.0);
};

struct QueueSolution {
    double q_star = 1.0;
    double lambda_in = 0.0;
    double lambda_a = 0.0;
    double p_b = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> trace;  // q after each iteration
};

/// Complement of the blocking probability for the loss queue.
double blocking_q(double lambda_in, double mu);

/// Arrival rate at the receptor: kappa times the steady-state concentration
/// there, with channel parameters interpolated at absorption probability q.
double arrival_rate(double Q, const ReceptorSpec& spec, const ParamTable& table, double q,
                    double D, int d);

/// Damped fixed-point iteration q <- (1-w) q + w mu/(lambda_in(q) + mu)
/// starting from a free receptor (q = 1), with a bisection fallback if the
/// residual starts alternating. Throws std::domain_error when the iteration
/// leaves the table's q range.
QueueSolution solve_fixed_point(double Q, const ReceptorSpec& spec, const ParamTable& table,
                                double D, int d, double tol = 1e-8, int max_iter = 500,
                                double omega = 0.5);

struct QueueSweepRow {
    double Q = 0.0;
    std::size_t spec_index = 0;
    QueueSolution solution;
};

std::vector<QueueSweepRow> sweep_queue(const std::vector<double>& Q_list,
                                       const std::vector<ReceptorSpec>& specs,
                                       const ParamTable& table, double D, int d,
                                       double tol = 1e-8, int max_iter = 500,
                                       double omega = 0.5);

}  // namespace absorbmc
