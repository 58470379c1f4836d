#pragma once

#include <string>
#include <vector>

namespace resrl {

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
};

struct CurvePoint {
  double x = 0.0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n = 0;
};

// Linear interpolation within a run's x-range, clamped to the end values
// outside it. The run must be sorted by x.
double interp_series(const std::vector<SeriesPoint>& run, double x);

// Sorted union of the x values of all runs.
std::vector<double> merged_grid(const std::vector<std::vector<SeriesPoint>>& runs);

// Per grid point: mean over runs and the normal-approximation 95% interval
// mean +/- 1.96 * s / sqrt(n). A single run yields a zero-width interval.
std::vector<CurvePoint> aggregate(const std::vector<std::vector<SeriesPoint>>& runs,
                                  const std::vector<double>& grid);

// CSV with header x,mean,ci_low,ci_high,n.
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);

double median(std::vector<double> values);

}  // namespace resrl
