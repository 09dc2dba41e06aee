#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "kenburns/io.hpp"
#include "kenburns/metrics.hpp"

namespace kb {

namespace {

void require_same_size(Size a, Size b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
}

// Exact 1D squared distance transform of f (Felzenszwalb & Huttenlocher lower envelope).
void dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

StandardMetrics standard_metrics(const DepthMap& aligned, const DepthMap& gt) {
  require_same_size(aligned.size(), gt.size(), "standard_metrics");
  double rel = 0.0, lg = 0.0, sq = 0.0;
  std::size_t n = 0, s1 = 0, s2 = 0, s3 = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!aligned.valid(x, y) || !gt.valid(x, y) || !(gt(x, y) > 0.0)) continue;
      const double d = aligned(x, y);
      const double g = gt(x, y);
      const double dc = std::max(d, kMetricDepthFloor);
      rel += std::abs(d - g) / g;
      lg += std::abs(std::log10(dc) - std::log10(g));
      sq += (d - g) * (d - g);
      const double ratio = std::max(dc / g, g / dc);
      s1 += ratio < 1.25;
      s2 += ratio < 1.25 * 1.25;
      s3 += ratio < 1.25 * 1.25 * 1.25;
      ++n;
    }
  }
  if (n == 0) throw DegenerateInput("standard_metrics: empty valid overlap");
  const double dn = static_cast<double>(n);
  return {rel / dn, lg / dn, std::sqrt(sq / dn), s1 / dn, s2 / dn, s3 / dn};
}

// ---------------------------------------------------------------------------

PlanarityError planarity_error(const DepthMap& aligned, std::span<const PlaneAnnotation> planes, const Intrinsics& K) {
  if (planes.empty()) throw ValidationError("planes", "at least one planar region is required");
  double plan = 0.0, orie = 0.0;
  for (std::size_t r = 0; r < planes.size(); ++r) {
    const PlaneAnnotation& p = planes[r];
    require_same_size(aligned.size(), p.region.size(), "planarity_error");
    const Eigen::Vector3d n_gt = Eigen::Vector3d(p.normal[0], p.normal[1], p.normal[2]);
    const double n_len = n_gt.norm();
    if (!(n_len > 0.0)) throw ValidationError("normal", "plane normal must be non-zero");

    std::vector<Eigen::Vector3d> pts;
    for (int y = 0; y < aligned.height(); ++y)
      for (int x = 0; x < aligned.width(); ++x)
        if (p.region(x, y) && aligned.valid(x, y)) {
          const double d = aligned(x, y);
          pts.emplace_back(d * (x + 0.5 - K.cx) / K.fx, d * (y + 0.5 - K.cy) / K.fy, d);
        }
    if (pts.size() < 3) throw DegenerateInput("planarity_error: region " + std::to_string(r) + " has < 3 points");

    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& q : pts) centroid += q;
    centroid /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& q : pts) cov += (q - centroid) * (q - centroid).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d lambda = eig.eigenvalues();
    if (!(lambda[1] > 1e-12 * std::max(lambda[2], 1e-300)))
      throw DegenerateInput("planarity_error: region " + std::to_string(r) + " is collinear");
    const Eigen::Vector3d n_fit = eig.eigenvectors().col(0);

    const Eigen::Vector3d n_unit = n_gt / n_len;
    const double offset = p.offset / n_len;
    double dist = 0.0;
    for (const auto& q : pts) dist += std::abs(n_unit.dot(q) - offset);
    plan += 100.0 * dist / static_cast<double>(pts.size());
    const double c = std::clamp(std::abs(n_fit.dot(n_unit)), 0.0, 1.0);
    orie += std::acos(c) * 180.0 / std::numbers::pi;
  }
  const double m = static_cast<double>(planes.size());
  return {plan / m, orie / m};
}

// ---------------------------------------------------------------------------

Mask detect_depth_edges(const DepthMap& depth) {
  std::vector<double> vals;
  vals.reserve(depth.valid_count());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) vals.push_back(depth(x, y));
  const double threshold = 0.1 * (percentile(vals, 95.0) - percentile(std::move(vals), 5.0));

  Mask edges(depth.size(), 1, 0);
  for (int y = 1; y + 1 < depth.height(); ++y) {
    for (int x = 1; x + 1 < depth.width(); ++x) {
      if (!depth.valid(x - 1, y) || !depth.valid(x + 1, y) || !depth.valid(x, y - 1) || !depth.valid(x, y + 1))
        continue;
      const double gx = 0.5 * (depth(x + 1, y) - depth(x - 1, y));
      const double gy = 0.5 * (depth(x, y + 1) - depth(x, y - 1));
      if (std::hypot(gx, gy) > threshold) edges(x, y) = 1;
    }
  }
  return edges;
}

Raster<double> distance_transform(const Mask& features) {
  const int w = features.width(), h = features.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Raster<double> sq(w, h, 1, inf);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (features(x, y)) sq(x, y) = 0.0;

#pragma omp parallel
  {
    std::vector<double> f(h), d(h), z(h + 1);
    std::vector<int> v(h);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) f[y] = sq(x, y);
      dt_1d(f, d, v, z);
      for (int y = 0; y < h; ++y) sq(x, y) = d[y];
    }
  }
#pragma omp parallel
  {
    std::vector<double> f(w), d(w), z(w + 1);
    std::vector<int> v(w);
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[x] = sq(x, y);
      dt_1d(f, d, v, z);
      for (int x = 0; x < w; ++x) sq(x, y) = std::sqrt(d[x]);
    }
  }
  return sq;
}

BoundaryError edge_chamfer(const Mask& pred_edges, const Mask& gt_edges, double truncation) {
  require_same_size(pred_edges.size(), gt_edges.size(), "edge_chamfer");
  // Mean over an empty source set is 0; distance to an empty target set is the truncation.
  auto directed = [truncation](const Mask& from, const Raster<double>& to_dist) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < from.height(); ++y)
      for (int x = 0; x < from.width(); ++x)
        if (from(x, y)) {
          sum += std::min(to_dist(x, y), truncation);
          ++n;
        }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  };
  return {directed(pred_edges, distance_transform(gt_edges)), directed(gt_edges, distance_transform(pred_edges))};
}

BoundaryError depth_boundary_error(const DepthMap& aligned, const Mask& gt_edges) {
  require_same_size(aligned.size(), gt_edges.size(), "depth_boundary_error");
  return edge_chamfer(detect_depth_edges(aligned), gt_edges);
}

// ---------------------------------------------------------------------------

DirectedError depth_directed_error(const DepthMap& aligned, const DepthMap& gt, double threshold) {
  require_same_size(aligned.size(), gt.size(), "depth_directed_error");
  std::size_t n = 0, agree = 0, plus = 0, minus = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!aligned.valid(x, y) || !gt.valid(x, y)) continue;
      const bool pred_front = aligned(x, y) < threshold;
      const bool gt_front = gt(x, y) < threshold;
      ++n;
      if (pred_front == gt_front) ++agree;
      else if (pred_front) ++plus;
      else ++minus;
    }
  }
  if (n == 0) throw DegenerateInput("depth_directed_error: empty valid overlap");
  const double dn = static_cast<double>(n);
  return {100.0 * agree / dn, 100.0 * plus / dn, 100.0 * minus / dn};
}

// ---------------------------------------------------------------------------

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, const EvaluationInputs& in) {
  const Alignment al = align_scale_shift(pred, gt, in.norm);
  MetricReport r;
  r.scale = al.scale;
  r.shift = al.shift;
  const StandardMetrics s = standard_metrics(al.aligned, gt);
  r.rel = s.rel, r.log10 = s.log10, r.rms = s.rms;
  r.sigma1 = s.sigma1, r.sigma2 = s.sigma2, r.sigma3 = s.sigma3;
  if (!in.planes.empty()) {
    const PlanarityError pe =
        planarity_error(al.aligned, in.planes, in.intrinsics.value_or(Intrinsics::default_for(gt.size())));
    r.pe_plan = pe.plan_cm;
    r.pe_orie = pe.orie_deg;
  }
  if (in.gt_edges) {
    const BoundaryError be = depth_boundary_error(al.aligned, *in.gt_edges);
    r.dbe_acc = be.acc;
    r.dbe_comp = be.comp;
  }
  const DirectedError dd = depth_directed_error(al.aligned, gt, in.dde_threshold);
  r.dde0 = dd.zero, r.ddePlus = dd.plus, r.ddeMinus = dd.minus;
  return r;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {"rel",     "log10",    "rms",     "sigma1",  "sigma2",
                                                "sigma3",  "pe_plan",  "pe_orie", "dbe_acc", "dbe_comp",
                                                "dde0",    "ddePlus",  "ddeMinus"};
  return cols;
}

namespace {

std::vector<std::optional<double>> report_values(const MetricReport& r) {
  return {r.rel,     r.log10,    r.rms,     r.sigma1,  r.sigma2, r.sigma3,  r.pe_plan,
          r.pe_orie, r.dbe_acc,  r.dbe_comp, r.dde0,   r.ddePlus, r.ddeMinus};
}

}  // namespace

std::string report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["v"] = 1;
  const auto vals = report_values(r);
  const auto& cols = metric_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (vals[i]) j[cols[i]] = *vals[i];
    else j[cols[i]] = nullptr;
  }
  j["alignment"] = {{"scale", r.scale}, {"shift", r.shift}};
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricReport& r) {
  std::ostringstream os;
  const auto& cols = metric_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const auto vals = report_values(r);
  char buf[64];
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) os << ',';
    if (vals[i]) {
      std::snprintf(buf, sizeof buf, "%.17g", *vals[i]);
      os << buf;
    }
  }
  os << '\n';
  return os.str();
}

std::vector<PlaneAnnotation> load_plane_annotations(const std::string& json_path) {
  namespace fs = std::filesystem;
  const auto bytes = io::read_file(json_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(json_path + ": " + e.what(), e.byte);
  }
  const fs::path base = fs::path(json_path).parent_path();
  std::vector<PlaneAnnotation> out;
  for (const auto& reg : j.at("regions")) {
    PlaneAnnotation p;
    p.region = io::decode_binary_png(io::read_file(base / reg.at("mask_png").get<std::string>()));
    const auto n = reg.at("normal").get<std::vector<double>>();
    if (n.size() != 3) throw ValidationError("normal", "expected 3 components");
    p.normal = {n[0], n[1], n[2]};
    p.offset = reg.at("offset").get<double>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace kb
