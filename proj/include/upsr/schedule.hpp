#pragma once

#include <vector>

#include "upsr/errors.hpp"

namespace upsr {

/// Time-dependent diffusion parameters: the cumulative shift fractions
/// eta_0..eta_T (eta_0 = 0, strictly increasing, eta_T <= 1), the per-step
/// increments alpha_t = eta_t - eta_{t-1}, and the noise magnitude kappa.
class NoiseSchedule {
public:
    /// Geometric-in-sqrt(eta) construction with shape exponent p:
    ///   sqrt(eta_t) = sqrt(eta1) * (sqrt(etaT)/sqrt(eta1))^(((t-1)/(T-1))^p)
    /// Endpoints eta_1 = eta1 and eta_T = etaT are exact; T = 1 degenerates
    /// to the single step eta_1 = etaT.
    static NoiseSchedule build(int T, double kappa, double eta1, double etaT, double p);

    /// Schedule from explicit eta_1..eta_T values (eta_0 = 0 implied).
    static NoiseSchedule from_etas(double kappa, std::vector<double> etas);

    int steps() const { return T_; }
    double kappa() const { return kappa_; }

    double eta(int t) const {
        if (t < 0 || t > T_)
            throw ParamError("eta: step " + std::to_string(t) + " out of range [0, " +
                             std::to_string(T_) + "]");
        return eta_[t];
    }

    double alpha(int t) const {
        if (t < 1 || t > T_)
            throw ParamError("alpha: step " + std::to_string(t) + " out of range [1, " +
                             std::to_string(T_) + "]");
        return eta_[t] - eta_[t - 1];
    }

    /// Initial-state noise level kappa * sqrt(eta_T).
    double sigma_max() const;

    const std::vector<double>& etas() const { return eta_; }

private:
    NoiseSchedule() = default;

    int T_ = 0;
    double kappa_ = 0.0;
    std::vector<double> eta_;  // size T+1, eta_[0] == 0
};

struct ScheduleDefaults {
    static constexpr int T = 5;
    static constexpr double kappa = 2.0;
    static constexpr double eta1 = 0.001;
    static constexpr double etaT = 0.9999;
    static constexpr double p = 0.3;
};

inline NoiseSchedule default_schedule() {
    return NoiseSchedule::build(ScheduleDefaults::T, ScheduleDefaults::kappa,
                                ScheduleDefaults::eta1, ScheduleDefaults::etaT,
                                ScheduleDefaults::p);
}

}  // namespace upsr
