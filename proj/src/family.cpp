#include "fragavg/family.hpp"

#include <cmath>

#include "fragavg/error.hpp"

namespace fragavg {

double softplus(double theta) {
    return theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
}

double logistic(double theta) {
    if (theta >= 0.0) return 1.0 / (1.0 + std::exp(-theta));
    const double e = std::exp(theta);
    return e / (1.0 + e);
}

ExponentialFamily ExponentialFamily::binomial() { return {FamilyKind::binomial_logit, 1.0}; }

ExponentialFamily ExponentialFamily::gaussian(double phi) {
    if (!(phi > 0.0)) throw InputError("dispersion must be positive");
    return {FamilyKind::gaussian_identity, phi};
}

ExponentialFamily ExponentialFamily::poisson() { return {FamilyKind::poisson_log, 1.0}; }

ExponentialFamily ExponentialFamily::from_name(std::string_view name, double phi) {
    if (name == "binomial" || name == "binomial-logit" || name == "logistic") return binomial();
    if (name == "gaussian" || name == "gaussian-identity") return gaussian(phi);
    if (name == "poisson" || name == "poisson-log") return poisson();
    throw InputError("unknown family '" + std::string(name) + "'");
}

std::string ExponentialFamily::name() const {
    switch (kind_) {
        case FamilyKind::binomial_logit: return "binomial";
        case FamilyKind::gaussian_identity: return "gaussian";
        case FamilyKind::poisson_log: return "poisson";
    }
    return "unknown";
}

double ExponentialFamily::cumulant(double theta) const {
    switch (kind_) {
        case FamilyKind::binomial_logit: return softplus(theta);
        case FamilyKind::gaussian_identity: return 0.5 * theta * theta;
        case FamilyKind::poisson_log: return std::exp(theta);
    }
    return 0.0;
}

double ExponentialFamily::mean(double theta) const {
    switch (kind_) {
        case FamilyKind::binomial_logit: return logistic(theta);
        case FamilyKind::gaussian_identity: return theta;
        case FamilyKind::poisson_log: return std::exp(theta);
    }
    return 0.0;
}

double ExponentialFamily::variance(double theta) const {
    switch (kind_) {
        case FamilyKind::binomial_logit: {
            const double p = logistic(theta);
            return p * (1.0 - p);
        }
        case FamilyKind::gaussian_identity: return 1.0;
        case FamilyKind::poisson_log: return std::exp(theta);
    }
    return 0.0;
}

double ExponentialFamily::canonical(double mu) const {
    switch (kind_) {
        case FamilyKind::binomial_logit: return std::log(mu / (1.0 - mu));
        case FamilyKind::gaussian_identity: return mu;
        case FamilyKind::poisson_log: return std::log(mu);
    }
    return 0.0;
}

double ExponentialFamily::saturated(double y) const {
    switch (kind_) {
        case FamilyKind::binomial_logit: {
            // y log y + (1-y) log(1-y), with 0 log 0 = 0
            double s = 0.0;
            if (y > 0.0) s += y * std::log(y);
            if (y < 1.0) s += (1.0 - y) * std::log1p(-y);
            return s;
        }
        case FamilyKind::gaussian_identity: return 0.5 * y * y;
        case FamilyKind::poisson_log: return y > 0.0 ? y * std::log(y) - y : 0.0;
    }
    return 0.0;
}

bool ExponentialFamily::valid_response(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind_) {
        case FamilyKind::binomial_logit: return y >= 0.0 && y <= 1.0;
        case FamilyKind::gaussian_identity: return true;
        case FamilyKind::poisson_log: return y >= 0.0;
    }
    return false;
}

}  // namespace fragavg
