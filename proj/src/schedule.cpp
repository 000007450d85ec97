#include "upsr/schedule.hpp"

#include <cmath>

namespace upsr {

NoiseSchedule NoiseSchedule::build(int T, double kappa, double eta1, double etaT, double p) {
    if (T < 1) throw ParamError("build_schedule: T must be >= 1, got " + std::to_string(T));
    if (!(kappa > 0.0)) throw ParamError("build_schedule: kappa must be > 0, got " + std::to_string(kappa));
    if (!(p > 0.0)) throw ParamError("build_schedule: p must be > 0, got " + std::to_string(p));
    if (!(eta1 > 0.0 && eta1 < etaT && etaT <= 1.0))
        throw ParamError("build_schedule: need 0 < eta1 < etaT <= 1, got eta1=" +
                         std::to_string(eta1) + " etaT=" + std::to_string(etaT));

    NoiseSchedule s;
    s.T_ = T;
    s.kappa_ = kappa;
    s.eta_.assign(static_cast<size_t>(T) + 1, 0.0);
    if (T == 1) {
        s.eta_[1] = etaT;
        return s;
    }
    const double sqrt1 = std::sqrt(eta1);
    const double ratio = std::sqrt(etaT) / sqrt1;
    for (int t = 1; t <= T; ++t) {
        if (t == 1) {
            s.eta_[t] = eta1;
        } else if (t == T) {
            s.eta_[t] = etaT;
        } else {
            const double frac = std::pow(static_cast<double>(t - 1) / (T - 1), p);
            const double se = sqrt1 * std::pow(ratio, frac);
            s.eta_[t] = se * se;
        }
        if (!(s.eta_[t] > s.eta_[t - 1]))
            throw ParamError("build_schedule: schedule not strictly increasing at t=" +
                             std::to_string(t) + " (p too extreme for T)");
    }
    return s;
}

NoiseSchedule NoiseSchedule::from_etas(double kappa, std::vector<double> etas) {
    // kappa = 0 is permitted here: the zero-noise degenerate schedules used
    // by the deterministic-limit tests are not constructible via build().
    if (!(kappa >= 0.0)) throw ParamError("from_etas: kappa must be >= 0");
    if (etas.empty()) throw ParamError("from_etas: need at least one eta value");
    NoiseSchedule s;
    s.T_ = static_cast<int>(etas.size());
    s.kappa_ = kappa;
    s.eta_.assign(static_cast<size_t>(s.T_) + 1, 0.0);
    for (int t = 1; t <= s.T_; ++t) {
        s.eta_[t] = etas[static_cast<size_t>(t) - 1];
        if (!(s.eta_[t] > s.eta_[t - 1]))
            throw ParamError("from_etas: etas must be strictly increasing and positive");
    }
    if (s.eta_[s.T_] > 1.0) throw ParamError("from_etas: eta_T must be <= 1");
    return s;
}

double NoiseSchedule::sigma_max() const {
    return kappa_ * std::sqrt(eta_[T_]);
}

}  // namespace upsr
