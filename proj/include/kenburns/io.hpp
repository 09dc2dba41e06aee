#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kenburns/core.hpp"

namespace kb::io {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

// PFM: "Pf" (1 channel) or "PF" (3 channels); negative scale means little-endian.
// Scanlines are stored bottom-to-top.
Raster<double> decode_pfm(const Bytes& bytes);
Bytes encode_pfm(const Raster<double>& raster);

/// Depth PFM: non-finite or non-positive samples become invalid pixels. Invalid pixels are written as 0.
DepthMap decode_depth_pfm(const Bytes& bytes);
Bytes encode_depth_pfm(const DepthMap& depth);

// PNG (8-bit RGB/gray for images, 16-bit gray for depth, 8/16-bit gray label maps).
ImageBuffer decode_image_png(const Bytes& bytes);
/// Values quantized with round(v * 255) after clamping to [0,1]. Deterministic bytes.
Bytes encode_image_png(const ImageBuffer& img, int compression = 1);
Bytes encode_jpeg(const ImageBuffer& img, int quality = 90);
Raster<std::uint16_t> decode_gray16_png(const Bytes& bytes);
Bytes encode_gray16_png(const Raster<std::uint16_t>& raster);
Mask decode_binary_png(const Bytes& bytes);

ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageBuffer& img);

enum class DepthConvention { depth, inverse };

/// Sidecar for 16-bit depth PNGs: stored value v maps to scale * v + offset in `convention`.
struct DepthSidecar {
  double scale = 1.0;
  double offset = 0.0;
  DepthConvention convention = DepthConvention::depth;
};

DepthSidecar parse_depth_sidecar(const std::string& json_text);
std::string dump_depth_sidecar(const DepthSidecar& sidecar);
/// "foo.png" -> "foo.json"
std::filesystem::path sidecar_path(const std::filesystem::path& raster_path);

/// Raw 0 marks a missing sample; inverse values <= 0 are invalid.
DepthMap depth_from_png16(const Raster<std::uint16_t>& raw, const DepthSidecar& sidecar);

/// Reads `.pfm` (metric depth) or `.png` (16-bit + JSON sidecar).
DepthMap load_depth(const std::filesystem::path& path);
void save_depth_pfm(const std::filesystem::path& path, const DepthMap& depth);

/// Label-map PNG plus "<name>.json" {"salient": [ids]}. Missing sidecar means no salient instances.
SegMaskSet load_masks(const std::filesystem::path& path);
SegMaskSet decode_masks(const Bytes& label_png, const std::string& sidecar_json);

}  // namespace kb::io
