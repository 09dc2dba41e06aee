#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kenburns/metrics.hpp"

namespace kb {

namespace {

struct Samples {
  std::vector<double> pred;
  std::vector<double> gt;
};

Samples collect(const DepthMap& pred, const DepthMap& gt) {
  if (pred.size() != gt.size())
    throw DimensionMismatch("align: " + to_string(pred.size()) + " vs " + to_string(gt.size()));
  Samples s;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x)
      if (pred.valid(x, y) && gt.valid(x, y)) {
        s.pred.push_back(pred(x, y));
        s.gt.push_back(gt(x, y));
      }
  return s;
}

// Best shift for a fixed scale is a median of the residuals; returns the objective.
class LadProfile {
 public:
  explicit LadProfile(const Samples& s) : s_(s), r_(s.pred.size()) {}

  double operator()(double scale, double* shift_out = nullptr) {
    const std::size_t n = r_.size();
    for (std::size_t i = 0; i < n; ++i) r_[i] = s_.gt[i] - scale * s_.pred[i];
    auto mid = r_.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2);
    std::nth_element(r_.begin(), mid, r_.end());
    const double b = *mid;
    double f = 0.0;
    for (double r : r_) f += std::abs(r - b);
    if (shift_out) *shift_out = b;
    return f;
  }

 private:
  const Samples& s_;
  std::vector<double> r_;
};

std::pair<double, double> least_squares(const Samples& s) {
  const double n = static_cast<double>(s.pred.size());
  const double mp = std::accumulate(s.pred.begin(), s.pred.end(), 0.0) / n;
  const double mg = std::accumulate(s.gt.begin(), s.gt.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.pred.size(); ++i) {
    sxx += (s.pred[i] - mp) * (s.pred[i] - mp);
    sxy += (s.pred[i] - mp) * (s.gt[i] - mg);
  }
  const double scale = sxy / sxx;
  return {scale, mg - scale * mp};
}

// The profile objective is convex in the scale; bracket its minimum and shrink
// by golden section, then snap onto the data-pair vertex that defines it.
double solve_l1_scale(const Samples& s, double start) {
  LadProfile f(s);
  double step = std::max(1.0, std::abs(start)) * 0.1;
  double mid = start, fmid = f(mid);
  double lo = mid - step, flo = f(lo);
  double hi = mid + step, fhi = f(hi);
  for (int i = 0; i < 200 && (flo < fmid || fhi < fmid); ++i) {
    step *= 2.0;
    if (flo < fmid) {
      hi = mid, fhi = fmid;
      mid = lo, fmid = flo;
      lo = mid - step, flo = f(lo);
    } else {
      lo = mid, flo = fmid;
      mid = hi, fmid = fhi;
      hi = mid + step, fhi = f(hi);
    }
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 300 && (b - a) > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
    if (fc <= fd) {
      b = d, d = c, fd = fc;
      c = b - inv_phi * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + inv_phi * (b - a), fd = f(d);
    }
  }
  double best_s = fc <= fd ? c : d;
  double shift = 0.0;
  double best_f = f(best_s, &shift);

  // The exact optimum passes through two samples; they are among the ones with
  // the smallest residuals at the approximate optimum.
  const std::size_t n = s.pred.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t k = std::min<std::size_t>(n, 24);
  auto resid = [&](std::size_t i) { return std::abs(s.gt[i] - best_s * s.pred[i] - shift); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t i, std::size_t j) { return resid(i) < resid(j) || (resid(i) == resid(j) && i < j); });
  const double approx_s = best_s;
  for (std::size_t u = 0; u < k; ++u) {
    for (std::size_t v = u + 1; v < k; ++v) {
      const std::size_t i = idx[u], j = idx[v];
      const double dp = s.pred[j] - s.pred[i];
      if (dp == 0.0) continue;
      const double cand = (s.gt[j] - s.gt[i]) / dp;
      const double fv = f(cand);
      if (fv < best_f || (fv == best_f && std::abs(cand - approx_s) < std::abs(best_s - approx_s))) {
        best_f = fv;
        best_s = cand;
      }
    }
  }
  return best_s;
}

}  // namespace

double alignment_objective(const DepthMap& pred, const DepthMap& gt, double s, double b, AlignNorm norm) {
  const Samples smp = collect(pred, gt);
  double f = 0.0;
  for (std::size_t i = 0; i < smp.pred.size(); ++i) {
    const double r = s * smp.pred[i] + b - smp.gt[i];
    f += norm == AlignNorm::l1 ? std::abs(r) : r * r;
  }
  return f;
}

Alignment align_scale_shift(const DepthMap& pred, const DepthMap& gt, AlignNorm norm) {
  const Samples s = collect(pred, gt);
  if (s.pred.size() < 2) throw DegenerateInput("align: fewer than 2 valid overlapping pixels");
  const auto [pmin, pmax] = std::minmax_element(s.pred.begin(), s.pred.end());
  if (*pmin == *pmax) throw DegenerateInput("align: prediction is constant, scale is unidentifiable");

  Alignment out;
  auto [ls_scale, ls_shift] = least_squares(s);
  if (norm == AlignNorm::l2) {
    out.scale = ls_scale;
    out.shift = ls_shift;
  } else {
    out.scale = solve_l1_scale(s, ls_scale);
    LadProfile f(s);
    f(out.scale, &out.shift);
  }
  out.objective = alignment_objective(pred, gt, out.scale, out.shift, norm);

  Raster<double> aligned(pred.size(), 1, 0.0);
  for (int y = 0; y < pred.height(); ++y)
    for (int x = 0; x < pred.width(); ++x)
      if (pred.valid(x, y)) aligned(x, y) = out.scale * pred(x, y) + out.shift;
  out.aligned = DepthMap(std::move(aligned), pred.validity());
  return out;
}

}  // namespace kb
