#include "uflip/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace uflip {

namespace {

double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0 : s / static_cast<double>(v.size());
}

// Standard deviation of the means of consecutive non-overlapping windows.
double window_mean_stddev(std::span<const double> v, std::uint64_t w) {
  std::vector<double> means;
  for (std::uint64_t i = 0; i + w <= v.size(); i += w) means.push_back(mean_of(v.subspan(i, w)));
  if (means.size() < 2) return 0;
  const double m = mean_of(means);
  double sq = 0;
  for (double x : means) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(means.size()));
}

AreaResult contiguous_area(std::vector<SweepPoint> pts, double reference,
                           double threshold, std::uint64_t always_ok) {
  AreaResult res;
  std::sort(pts.begin(), pts.end(),
            [](const SweepPoint& a, const SweepPoint& b) { return a.x < b.x; });
  res.partial = pts.size() < 2;
  if (pts.empty() || reference <= 0) {
    res.partial = true;
    return res;
  }
  for (const auto& p : pts) {
    const double ratio = p.mean / reference;
    if (ratio > threshold && p.x != always_ok) break;
    res.value = p.x;
    res.factor = std::max(res.factor, ratio);
  }
  if (!res.value) res.factor = pts.front().mean / reference;
  return res;
}

}  // namespace

StartupResult detect_startup(std::span<const double> rts, const StartupOptions& opts) {
  const std::uint64_t n = rts.size();
  if (n < 4 * opts.min_window) return {0, true};

  std::vector<double> s(n + 1, 0), q(n + 1, 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    s[i + 1] = s[i] + rts[i];
    q[i + 1] = q[i] + rts[i] * rts[i];
  }
  auto sse = [&](std::uint64_t a, std::uint64_t b) {
    const double len = static_cast<double>(b - a);
    const double sum = s[b] - s[a];
    return (q[b] - q[a]) - sum * sum / len;
  };
  std::uint64_t cut = 1;
  double best = sse(0, 1) + sse(1, n);
  for (std::uint64_t c = 2; c <= n / 2; ++c) {
    const double e = sse(0, c) + sse(c, n);
    if (e < best) {
      best = e;
      cut = c;
    }
  }

  const double pre = s[cut] / static_cast<double>(cut);
  const double post = (s[n] - s[cut]) / static_cast<double>(n - cut);
  const std::uint64_t w = std::max<std::uint64_t>(opts.min_window, n / 50);
  const double sigma = window_mean_stddev(rts.subspan(n / 2), w);
  // A prefix only counts if no window of the same length in the running
  // phase is as cheap.
  double floor_mean = post;
  if (n - cut >= cut) {
    for (std::uint64_t a = cut; a + cut <= n; ++a)
      floor_mean = std::min(floor_mean, (s[a + cut] - s[a]) / static_cast<double>(cut));
  }
  const double tau = std::max(opts.sigma_k * sigma, opts.min_relative_gap * post);
  if (cut < opts.min_window || !(pre < post - tau) || !(pre < floor_mean)) return {0, false};
  const auto period = estimate_period(rts.subspan(cut)).period;
  if (cut < 2 * period) return {0, false};
  return {cut, false};
}

PeriodResult estimate_period(std::span<const double> rts, std::uint64_t max_lag) {
  const std::uint64_t n = rts.size();
  PeriodResult res;
  if (n < 4) return res;
  // Clip the extreme 0.1% at each end: a handful of one-off stalls would
  // otherwise dominate the variance and flatten the correlogram.
  std::vector<double> sorted(rts.begin(), rts.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[static_cast<std::size_t>(std::ceil(0.001 * static_cast<double>(n - 1)))];
  const double hi = sorted[static_cast<std::size_t>(0.999 * static_cast<double>(n - 1))];
  std::vector<double> d(n);
  for (std::uint64_t i = 0; i < n; ++i) d[i] = std::clamp(rts[i], lo, hi);
  const double m = mean_of(d);
  double var = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    d[i] -= m;
    var += d[i] * d[i];
  }
  var /= static_cast<double>(n);
  if (var <= 1e-12 * std::max(1.0, m * m)) return res;

  const std::uint64_t lags = std::min<std::uint64_t>(max_lag, n / 2);
  if (lags < 1) return res;
  std::vector<double> r(lags + 2, -1.0);
  double best = -1.0;
  for (std::uint64_t lag = 1; lag <= lags; ++lag) {
    double acc = 0;
    const double* a = d.data();
    const double* b = d.data() + lag;
    const std::uint64_t len = n - lag;
    for (std::uint64_t i = 0; i < len; ++i) acc += a[i] * b[i];
    r[lag] = acc / (static_cast<double>(len) * var);
    best = std::max(best, r[lag]);
  }
  res.confidence = best;
  if (best < 0.3) return res;
  for (std::uint64_t lag = 1; lag <= lags; ++lag) {
    const bool left = lag == 1 || r[lag] >= r[lag - 1];
    const bool right = lag == lags || r[lag] >= r[lag + 1];
    if (r[lag] >= 0.95 * best && left && right) {
      res.period = lag;
      res.confidence = r[lag];
      res.low_confidence = false;
      return res;
    }
  }
  return res;
}

AreaResult locality_area(std::vector<SweepPoint> pts, double sw_mean,
                         std::uint64_t io_size, double threshold) {
  std::erase_if(pts, [&](const SweepPoint& p) { return p.x <= io_size; });
  return contiguous_area(std::move(pts), sw_mean, threshold, 0);
}

AreaResult partition_threshold(std::vector<SweepPoint> pts, double sw_mean,
                               double threshold) {
  return contiguous_area(std::move(pts), sw_mean, threshold, 1);
}

OrderRatios order_ratios(const std::map<std::int64_t, double>& mean_by_incr,
                         double sw_mean, std::optional<double> rw_mean,
                         std::uint64_t io_size) {
  OrderRatios o;
  if (sw_mean <= 0) return o;
  double large_sum = 0;
  std::uint64_t large_n = 0;
  for (const auto& [incr, mean] : mean_by_incr) {
    o.by_incr[incr] = mean / sw_mean;
    const std::uint64_t stride = static_cast<std::uint64_t>(std::abs(incr)) * io_size;
    if (incr > 0 && stride >= MiB) {
      large_sum += mean;
      ++large_n;
    }
  }
  if (auto it = o.by_incr.find(-1); it != o.by_incr.end()) o.reverse = it->second;
  if (auto it = o.by_incr.find(0); it != o.by_incr.end()) o.in_place = it->second;
  if (large_n > 0 && rw_mean && *rw_mean > 0)
    o.large_incr = large_sum / static_cast<double>(large_n) / *rw_mean;
  return o;
}

}  // namespace uflip
