#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fsde {

/// Problem datum of the delay SDE
///   dX(t) = -beta X(t) dt + { b(X(t)) + B(X_t) } dt + dW(t)
/// with b bounded alpha-Hoelder (constant kappa, sup norm b_inf) and
/// B bounded Lipschitz on path space (constant lambda_B, sup norm B_inf).
struct ModelParams {
    double beta = 1.0;      // drift relaxation rate, > 0
    double kappa = 0.0;     // Hoelder constant of b, >= 0
    double alpha = 0.5;     // Hoelder exponent, in (0,1)
    double b_inf = 0.0;     // sup norm of b, >= 0
    double lambda_B = 0.0;  // Lipschitz constant of B, >= 0
    double B_inf = 0.0;     // sup norm of B, >= 0
    double r0 = 1.0;        // delay horizon, > 0
    int d = 1;              // state dimension, >= 1

    void validate() const {
        if (!(beta > 0.0)) throw std::domain_error("ModelParams: beta must be > 0");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("ModelParams: alpha must lie in (0,1)");
        if (!(r0 > 0.0)) throw std::domain_error("ModelParams: r0 must be > 0");
        if (d < 1) throw std::domain_error("ModelParams: d must be >= 1");
        if (kappa < 0.0 || b_inf < 0.0 || lambda_B < 0.0 || B_inf < 0.0)
            throw std::domain_error("ModelParams: norm constants must be >= 0");
        for (double v : {beta, kappa, alpha, b_inf, lambda_B, B_inf, r0})
            if (!std::isfinite(v)) throw std::domain_error("ModelParams: non-finite field");
    }
};

/// Tuning triple of the contraction machinery. lambda must stay strictly
/// above lambda0(delta) wherever the Zvonkin bounds are used.
struct TuningParams {
    double delta = 0.1;       // in (0,1)
    double eps = 0.5;         // in (0,1)
    double lambda = 1.0;      // > lambda0(delta)
    double eps_moment = -1.0; // in (0, 2*beta); negative means "unset"

    bool has_eps_moment() const { return eps_moment > 0.0; }

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("TuningParams: delta must lie in (0,1)");
        if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("TuningParams: eps must lie in (0,1)");
        if (!(lambda > 0.0)) throw std::domain_error("TuningParams: lambda must be > 0");
    }
};

} // namespace fsde
