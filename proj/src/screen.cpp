#include "fragavg/screen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fragavg/error.hpp"

namespace fragavg {

double pairwise_correlation(const FragmentaryDataset& data, Index j) {
    double sx = 0.0, sy = 0.0;
    Index m = 0;
    for (Index i = 0; i < data.n(); ++i) {
        if (!data.mask(i, j)) continue;
        sx += data.x(i, j);
        sy += data.y(i);
        ++m;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (m < 2) return nan;
    const double mx = sx / static_cast<double>(m);
    const double my = sy / static_cast<double>(m);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        if (!data.mask(i, j)) continue;
        const double dx = data.x(i, j) - mx;
        const double dy = data.y(i) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return nan;
    return sxy / std::sqrt(sxx * syy);
}

ScreenResult screen_columns(const FragmentaryDataset& data, const std::vector<ColumnGroup>& groups, Index keep) {
    if (keep < 1) throw InputError("keep must be at least 1");
    ScreenResult out;
    out.correlation.assign(static_cast<std::size_t>(data.p()), std::numeric_limits<double>::quiet_NaN());
    std::set<Index> grouped;
    std::set<Index> kept;
    for (const auto& g : groups) {
        std::vector<std::pair<double, Index>> ranked;
        bool any_overlap = false;
        for (Index j : g.columns) {
            if (j < 0 || j >= data.p()) throw InputError("group '" + g.name + "' refers to a column outside the data");
            grouped.insert(j);
            if (data.mask.col(j).any()) any_overlap = true;
            const double r = pairwise_correlation(data, j);
            out.correlation[static_cast<std::size_t>(j)] = r;
            ranked.emplace_back(std::isnan(r) ? -1.0 : std::abs(r), j);
        }
        if (!g.columns.empty() && !any_overlap) {
            throw InputError("group '" + g.name + "' has no observation overlapping the response");
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const auto take = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(keep));
        for (std::size_t r = 0; r < take; ++r) kept.insert(ranked[r].second);
    }
    for (Index j = 0; j < data.p(); ++j) {
        if (!grouped.count(j)) kept.insert(j);
    }
    out.kept.assign(kept.begin(), kept.end());
    return out;
}

}  // namespace fragavg
