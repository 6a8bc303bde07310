#include "calltopics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "calltopics/error.hpp"

namespace calltopics::stats {

namespace {

long long s_statistic(std::span<const double> y) {
    long long s = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = i + 1; j < y.size(); ++j) s += (y[j] > y[i]) - (y[j] < y[i]);
    return s;
}

double exact_p(std::span<const double> y, long long s_obs) {
    std::vector<double> perm(y.begin(), y.end());
    std::sort(perm.begin(), perm.end());
    // Distinct arrangements of a multiset are equally likely under the null.
    unsigned long long total = 0, extreme = 0;
    const long long target = std::llabs(s_obs);
    do {
        ++total;
        if (std::llabs(s_statistic(perm)) >= target) ++extreme;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

KendallResult kendall_tau(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 3) throw InsufficientDataError("kendall_tau needs at least 3 observations");
    for (double v : series)
        if (!std::isfinite(v)) throw ParameterError("kendall_tau input must be finite");

    std::map<double, long long> ties;
    for (double v : series) ++ties[v];
    const double nd = static_cast<double>(n);
    const double n0 = nd * (nd - 1) / 2;
    double n2 = 0, tie_var = 0;
    for (const auto& [value, t] : ties) {
        const double td = static_cast<double>(t);
        n2 += td * (td - 1) / 2;
        tie_var += td * (td - 1) * (2 * td + 5);
    }

    KendallResult r;
    if (ties.size() == 1) return r;

    r.s = s_statistic(series);
    r.tau = static_cast<double>(r.s) / std::sqrt(n0 * (n0 - n2));
    r.tau = std::clamp(r.tau, -1.0, 1.0);

    if (n <= kExactKendallMax) {
        r.p_value = exact_p(series, r.s);
    } else {
        const double var = (nd * (nd - 1) * (2 * nd + 5) - tie_var) / 18.0;
        const double z = std::max(static_cast<double>(std::llabs(r.s)) - 1.0, 0.0) / std::sqrt(var);
        r.p_value = std::erfc(z / std::sqrt(2.0));
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

std::vector<double> loess_smooth(std::span<const Point> points, double span, int degree) {
    const std::size_t n = points.size();
    if (degree != 0 && degree != 1) throw ParameterError("loess degree must be 0 or 1");
    if (!(span > 0.0 && span <= 1.0)) throw ParameterError("loess span must be in (0, 1]");
    if (n < 2) throw ParameterError("loess needs at least 2 points");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) throw ParameterError("loess input must be finite");
        if (i > 0 && !(points[i].x > points[i - 1].x)) throw ParameterError("loess x values must be strictly increasing");
    }
    const auto q = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n) - 1e-12)));
    if (q < static_cast<std::size_t>(degree) + 1) throw ParameterError("loess window smaller than degree + 1");

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = points[i].x;
        std::size_t lo = i, hi = i;
        while (hi - lo + 1 < q) {
            if (lo == 0) ++hi;
            else if (hi == n - 1) --lo;
            else if (x0 - points[lo - 1].x <= points[hi + 1].x - x0) --lo;
            else ++hi;
        }
        const double dmax = std::max(x0 - points[lo].x, points[hi].x - x0);

        double sw = 0, sx = 0, sy = 0;
        std::vector<double> w(hi - lo + 1);
        for (std::size_t j = lo; j <= hi; ++j) {
            double wj = 1.0;
            if (dmax > 0) {
                const double u = std::abs(points[j].x - x0) / dmax;
                const double c = 1.0 - u * u * u;
                wj = c * c * c;
            }
            w[j - lo] = wj;
            sw += wj;
            sx += wj * points[j].x;
            sy += wj * points[j].y;
        }
        const double xbar = sx / sw, ybar = sy / sw;
        if (degree == 0) {
            out[i] = ybar;
            continue;
        }
        double sxx = 0, sxy = 0;
        for (std::size_t j = lo; j <= hi; ++j) {
            const double dx = points[j].x - xbar;
            sxx += w[j - lo] * dx * dx;
            sxy += w[j - lo] * dx * (points[j].y - ybar);
        }
        const double scale = std::max(dmax * dmax * sw, 1e-300);
        out[i] = (sxx <= 1e-12 * scale) ? ybar : ybar + (sxy / sxx) * (x0 - xbar);
    }
    return out;
}

}  // namespace calltopics::stats
