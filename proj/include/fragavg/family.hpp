#pragma once

#include <string>
#include <string_view>

namespace fragavg {

enum class FamilyKind { binomial_logit, gaussian_identity, poisson_log };

/// Canonical-link exponential family f(y|θ) = exp{(yθ − b(θ))/φ + c(y, φ)}
/// with known dispersion φ. Only b and its derivatives are needed; c(y, φ)
/// never enters fitting, weight selection or prediction.
class ExponentialFamily {
public:
    static ExponentialFamily binomial();
    static ExponentialFamily gaussian(double phi = 1.0);
    static ExponentialFamily poisson();
    /// Accepts "binomial", "gaussian", "poisson" (and the long forms).
    static ExponentialFamily from_name(std::string_view name, double phi = 1.0);

    FamilyKind kind() const { return kind_; }
    double phi() const { return phi_; }
    std::string name() const;

    /// b(θ)
    double cumulant(double theta) const;
    /// b'(θ), the mean
    double mean(double theta) const;
    /// b''(θ), the variance function
    double variance(double theta) const;
    /// Canonical parameter for a mean value, b'^{-1}(mu).
    double canonical(double mu) const;
    /// sup_θ {yθ − b(θ)}: the saturated-model term used by deviances.
    double saturated(double y) const;
    /// Whether y lies in the family's support.
    bool valid_response(double y) const;

private:
    ExponentialFamily(FamilyKind kind, double phi) : kind_(kind), phi_(phi) {}
    FamilyKind kind_;
    double phi_;
};

/// Numerically stable log(1 + e^θ).
double softplus(double theta);
/// e^θ / (1 + e^θ) without overflow.
double logistic(double theta);

}  // namespace fragavg
