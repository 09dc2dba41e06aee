#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kenburns/core.hpp"

namespace kb {

// ---------------------------------------------------------------------------
// Depth supervision losses (defined on inverse depth)

/// Components of g_h. x differences run along columns, y along rows.
/// A pixel is valid only when both (x+h, y) and (x, y+h) are inside the raster.
struct GradientField {
  int spacing = 1;
  Raster<double> gx;
  Raster<double> gy;
  Mask valid;
};

/// Denominators below this are treated as zero and yield a zero component.
inline constexpr double kGradientGuard = 1e-12;
inline constexpr double kOrdWeight = 0.0001;
inline constexpr int kGradientSpacings[] = {1, 2, 4, 8, 16};

GradientField scale_invariant_gradient(const InverseDepthMap& f, int spacing);

/// Sum of |xi - xi_gt| over all pixels.
double loss_ord(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);
/// Sum over spacings {1,2,4,8,16} and valid pixels of ||g_h[xi] - g_h[xi_gt]||_2.
/// This is a raw sum: no normalization by pixel count.
double loss_grad(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);
/// 0.0001 * loss_ord + loss_grad
double loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);

/// d loss_depth / d xi per pixel. Subgradients: sign(0) = 0, d||v||/dv = 0 at v = 0,
/// and guarded gradient components contribute nothing.
Raster<double> grad_loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);

// ---------------------------------------------------------------------------
// Inpainting losses

/// Maps an image to a flat feature vector whose length depends only on the image size.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<double> extract(const ImageBuffer& img) const = 0;
};

/// Three-level 2x2 box pyramid; each level contributes RGB and forward x/y differences of RGB.
class PyramidFeatureExtractor final : public FeatureExtractor {
 public:
  explicit PyramidFeatureExtractor(int levels = 3) : levels_(levels) {}
  std::vector<double> extract(const ImageBuffer& img) const override;

 private:
  int levels_;
};

/// Passes the raw RGB values through; handy for checking loss_percep by hand.
class IdentityFeatureExtractor final : public FeatureExtractor {
 public:
  std::vector<double> extract(const ImageBuffer& img) const override;
};

double loss_color(const ImageBuffer& img, const ImageBuffer& img_gt);
double loss_percep(const ImageBuffer& img, const ImageBuffer& img_gt, const FeatureExtractor& phi);
/// loss_color + loss_percep + 0.0001 * loss_ord + loss_grad
double loss_inpaint(const ImageBuffer& img, const ImageBuffer& img_gt, const InverseDepthMap& xi,
                    const InverseDepthMap& xi_gt, const FeatureExtractor& phi);

// ---------------------------------------------------------------------------
// Evaluation

enum class AlignNorm { l1, l2 };

struct Alignment {
  double scale = 1.0;
  double shift = 0.0;
  double objective = 0.0;  // sum |s*pred + b - gt| (l1) or squared residuals (l2)
  DepthMap aligned;
};

/// Fits gt ~ s * pred + b over pixels valid in both maps. L1 is solved to the exact optimum.
Alignment align_scale_shift(const DepthMap& pred, const DepthMap& gt, AlignNorm norm = AlignNorm::l1);

/// Objective of (s, b) over the valid overlap, in the given norm.
double alignment_objective(const DepthMap& pred, const DepthMap& gt, double s, double b,
                           AlignNorm norm = AlignNorm::l1);

struct StandardMetrics {
  double rel = 0.0;
  double log10 = 0.0;
  double rms = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma3 = 0.0;
};

inline constexpr double kMetricDepthFloor = 1e-8;

StandardMetrics standard_metrics(const DepthMap& aligned, const DepthMap& gt);

/// Plane n . X = offset in camera coordinates (n normalized on use).
struct PlaneAnnotation {
  Mask region;
  Vec3 normal{0.0, 0.0, 1.0};
  double offset = 0.0;
};

struct PlanarityError {
  double plan_cm = 0.0;
  double orie_deg = 0.0;
};

PlanarityError planarity_error(const DepthMap& aligned, std::span<const PlaneAnnotation> planes,
                               const Intrinsics& K);

struct BoundaryError {
  double acc = 0.0;
  double comp = 0.0;
};

inline constexpr double kBoundaryTruncation = 10.0;

/// Pixels whose central-difference depth gradient magnitude exceeds 0.1 * (p95 - p5) of depth.
Mask detect_depth_edges(const DepthMap& depth);
/// Euclidean distance to the nearest set pixel (infinity when the mask is empty).
Raster<double> distance_transform(const Mask& features);
/// acc: mean truncated distance from predicted edges to gt edges; comp: gt to predicted.
/// Empty predicted set gives (0, T).
BoundaryError edge_chamfer(const Mask& pred_edges, const Mask& gt_edges, double truncation = kBoundaryTruncation);
BoundaryError depth_boundary_error(const DepthMap& aligned, const Mask& gt_edges);

struct DirectedError {
  double zero = 0.0;   // % classified identically
  double plus = 0.0;   // % predicted in front, gt behind
  double minus = 0.0;  // % predicted behind, gt in front
};

DirectedError depth_directed_error(const DepthMap& aligned, const DepthMap& gt, double threshold = 3.0);

struct MetricReport {
  double rel = 0, log10 = 0, rms = 0;
  double sigma1 = 0, sigma2 = 0, sigma3 = 0;
  std::optional<double> pe_plan, pe_orie;
  std::optional<double> dbe_acc, dbe_comp;
  double dde0 = 0, ddePlus = 0, ddeMinus = 0;
  double scale = 1.0, shift = 0.0;
};

struct EvaluationInputs {
  std::vector<PlaneAnnotation> planes;  // empty: planarity columns omitted
  std::optional<Mask> gt_edges;         // absent: boundary columns omitted
  std::optional<Intrinsics> intrinsics; // default_for(gt size) when absent
  AlignNorm norm = AlignNorm::l1;
  double dde_threshold = 3.0;
};

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt, const EvaluationInputs& inputs = {});

/// Column order of the CSV report.
const std::vector<std::string>& metric_columns();
std::string report_to_json(const MetricReport& r);
std::string report_to_csv(const MetricReport& r);

/// {"regions": [{"mask_png": path, "normal": [3], "offset": o}]}; mask paths are relative to the JSON file.
std::vector<PlaneAnnotation> load_plane_annotations(const std::string& json_path);

}  // namespace kb

namespace kb::serial {

/// Single-threaded reference for the loss kernels, kept for equivalence tests and benchmarks.
double loss_grad(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);
Raster<double> grad_loss_depth(const InverseDepthMap& xi, const InverseDepthMap& xi_gt);

}  // namespace kb::serial
