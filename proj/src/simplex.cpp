#include "fragavg/simplex.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace fragavg {

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index K = v.size();
    std::vector<double> sorted(v.data(), v.data() + K);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        cumsum += sorted[static_cast<std::size_t>(k)];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - t > 0.0) tau = t;
    }
    Eigen::VectorXd w = (v.array() - tau).max(0.0).matrix();
    const double s = w.sum();
    if (s > 0.0) w /= s;
    return w;
}

double simplex_kkt_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& w, double active_threshold) {
    const double g_min = grad.minCoeff();
    double active_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        if (w(k) > active_threshold) active_max = std::max(active_max, grad(k));
    }
    if (active_max == -std::numeric_limits<double>::infinity()) return 0.0;
    return 0.5 * (active_max - g_min);
}

}  // namespace fragavg
