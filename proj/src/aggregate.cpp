#include "resrl/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace resrl {

double interp_series(const std::vector<SeriesPoint>& run, double x) {
  if (run.empty()) throw std::invalid_argument("interp: empty series");
  if (x <= run.front().x) return run.front().y;
  if (x >= run.back().x) return run.back().y;
  for (std::size_t i = 1; i < run.size(); ++i) {
    if (x <= run[i].x) {
      const SeriesPoint& a = run[i - 1];
      const SeriesPoint& b = run[i];
      const double span = b.x - a.x;
      if (span <= 0.0) return b.y;
      const double t = (x - a.x) / span;
      return a.y + t * (b.y - a.y);
    }
  }
  return run.back().y;
}

std::vector<double> merged_grid(const std::vector<std::vector<SeriesPoint>>& runs) {
  std::vector<double> xs;
  for (const auto& run : runs) {
    for (const SeriesPoint& p : run) xs.push_back(p.x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::vector<CurvePoint> aggregate(const std::vector<std::vector<SeriesPoint>>& runs,
                                  const std::vector<double>& grid) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  const int n = static_cast<int>(runs.size());
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double x : grid) {
    double sum = 0.0;
    for (const auto& run : runs) sum += interp_series(run, x);
    const double mean = sum / n;
    CurvePoint pt{x, mean, mean, mean, n};
    if (n >= 2) {
      double ss = 0.0;
      for (const auto& run : runs) {
        const double d = interp_series(run, x) - mean;
        ss += d * d;
      }
      const double half = 1.96 * std::sqrt(ss / n) / std::sqrt(static_cast<double>(n));
      pt.ci_low = mean - half;
      pt.ci_high = mean + half;
    }
    out.push_back(pt);
  }
  return out;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open curve file: " + path);
  out << "x,mean,ci_low,ci_high,n\n";
  char buf[256];
  for (const CurvePoint& p : curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d\n", p.x, p.mean, p.ci_low,
                  p.ci_high, p.n);
    out << buf;
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace resrl
