#include "kenburns/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace kb::io {

namespace fs = std::filesystem;
using nlohmann::json;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// PFM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const Bytes& b) : bytes_(b) {}

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    last_start_ = start;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) ++pos_;
    if (start == pos_) throw ParseError("pfm: truncated header", pos_);
    return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
  }

  // Exactly one whitespace byte separates the header from the raster.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw ParseError("pfm: missing header terminator", pos_);
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  /// Offset of the most recent token.
  std::size_t last() const { return last_start_; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

  const Bytes& bytes_;
  std::size_t pos_ = 0;
  std::size_t last_start_ = 0;
};

int parse_int(const std::string& s, std::size_t offset, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size() || v < 1 || v > (1 << 20)) throw std::invalid_argument(s);
    return static_cast<int>(v);
  } catch (const std::logic_error&) {
    throw ParseError(std::string("pfm: malformed ") + what + " '" + s + "'", offset);
  }
}

float load_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t u = 0;
  std::memcpy(&u, p, 4);
  if (little_endian != (std::endian::native == std::endian::little)) u = __builtin_bswap32(u);
  return std::bit_cast<float>(u);
}

void store_float_le(std::uint8_t* p, float v) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native != std::endian::little) u = __builtin_bswap32(u);
  std::memcpy(p, &u, 4);
}

}  // namespace

Raster<double> decode_pfm(const Bytes& bytes) {
  HeaderReader hdr(bytes);
  const std::string magic = hdr.token();
  int channels = 0;
  if (magic == "Pf") channels = 1;
  else if (magic == "PF") channels = 3;
  else throw ParseError("pfm: bad magic '" + magic + "'", 0);

  const std::string w_tok = hdr.token();
  const int width = parse_int(w_tok, hdr.last(), "width");
  const std::string h_tok = hdr.token();
  const int height = parse_int(h_tok, hdr.last(), "height");
  const std::string scale_tok = hdr.token();
  const std::size_t s_off = hdr.last();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::logic_error&) {
    throw ParseError("pfm: malformed scale '" + scale_tok + "'", s_off);
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw ParseError("pfm: scale must be non-zero", s_off);
  hdr.end_header();

  const bool little = scale < 0.0;
  const std::size_t data_start = hdr.pos();
  const std::size_t needed = static_cast<std::size_t>(width) * height * channels * 4;
  if (bytes.size() - data_start < needed) {
    // Report the first byte of the first incomplete sample.
    const std::size_t have = bytes.size() - data_start;
    throw ParseError("pfm: truncated raster, expected " + std::to_string(needed) + " bytes of samples",
                     data_start + have - have % 4);
  }

  Raster<double> out(width, height, channels);
  const std::uint8_t* p = bytes.data() + data_start;
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c, p += 4) out(x, y, c) = load_float(p, little);
  }
  return out;
}

Bytes encode_pfm(const Raster<double>& raster) {
  if (raster.channels() != 1 && raster.channels() != 3) throw Error("pfm: only 1 or 3 channels supported");
  std::ostringstream hdr;
  hdr << (raster.channels() == 1 ? "Pf" : "PF") << '\n' << raster.width() << ' ' << raster.height() << "\n-1.0\n";
  const std::string h = hdr.str();
  Bytes out(h.begin(), h.end());
  const std::size_t start = out.size();
  out.resize(start + raster.data().size() * 4);
  std::uint8_t* p = out.data() + start;
  for (int row = 0; row < raster.height(); ++row) {
    const int y = raster.height() - 1 - row;
    for (int x = 0; x < raster.width(); ++x)
      for (int c = 0; c < raster.channels(); ++c, p += 4) store_float_le(p, static_cast<float>(raster(x, y, c)));
  }
  return out;
}

DepthMap decode_depth_pfm(const Bytes& bytes) {
  Raster<double> r = decode_pfm(bytes);
  if (r.channels() != 1) throw ParseError("pfm: depth must be single-channel (Pf)", 0);
  Mask valid(r.size(), 1, 0);
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      const double v = r(x, y);
      if (std::isfinite(v) && v > 0.0) valid(x, y) = 1;
      else r(x, y) = 0.0;
    }
  return DepthMap(std::move(r), std::move(valid));
}

Bytes encode_depth_pfm(const DepthMap& depth) {
  Raster<double> r = depth.values();
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      if (!depth.valid(x, y)) r(x, y) = 0.0;
  return encode_pfm(r);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

cv::Mat decode(const Bytes& bytes, int flags) {
  if (bytes.empty()) throw ParseError("png: empty input", 0);
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat m = cv::imdecode(buf, flags);
  if (m.empty()) throw ParseError("image: cannot decode (corrupt or unsupported)", 0);
  return m;
}

Bytes encode(const std::string& ext, const cv::Mat& m, const std::vector<int>& params) {
  std::vector<uchar> out;
  if (!cv::imencode(ext, m, out, params)) throw Error("image: encoding to " + ext + " failed");
  return Bytes(out.begin(), out.end());
}

cv::Mat to_bgr8(const ImageBuffer& img) {
  cv::Mat m(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img(x, y, c), 0.0, 1.0);
        row[x][2 - c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  }
  return m;
}

}  // namespace

ImageBuffer decode_image_png(const Bytes& bytes) {
  cv::Mat m = decode(bytes, cv::IMREAD_COLOR);
  ImageBuffer img(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) img(x, y, c) = row[x][2 - c] / 255.0;
  }
  return img;
}

Bytes encode_image_png(const ImageBuffer& img, int compression) {
  return encode(".png", to_bgr8(img), {cv::IMWRITE_PNG_COMPRESSION, compression});
}

Bytes encode_jpeg(const ImageBuffer& img, int quality) {
  return encode(".jpg", to_bgr8(img), {cv::IMWRITE_JPEG_QUALITY, quality});
}

Raster<std::uint16_t> decode_gray16_png(const Bytes& bytes) {
  cv::Mat m = decode(bytes, cv::IMREAD_UNCHANGED);
  if (m.channels() != 1) throw ParseError("png: expected a single-channel image", 0);
  if (m.depth() == CV_8U) m.convertTo(m, CV_16U);
  if (m.depth() != CV_16U) throw ParseError("png: expected 8- or 16-bit samples", 0);
  Raster<std::uint16_t> r(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint16_t>(y);
    std::copy(row, row + m.cols, &r(0, y));
  }
  return r;
}

Bytes encode_gray16_png(const Raster<std::uint16_t>& raster) {
  cv::Mat m(raster.height(), raster.width(), CV_16UC1, const_cast<std::uint16_t*>(raster.data().data()));
  return encode(".png", m, {cv::IMWRITE_PNG_COMPRESSION, 3});
}

Mask decode_binary_png(const Bytes& bytes) {
  cv::Mat m = decode(bytes, cv::IMREAD_GRAYSCALE | cv::IMREAD_ANYDEPTH);
  Mask r(m.cols, m.rows);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      r(x, y) = (m.depth() == CV_16U ? m.at<std::uint16_t>(y, x) : m.at<std::uint8_t>(y, x)) != 0 ? 1 : 0;
  return r;
}

ImageBuffer load_image(const fs::path& path) {
  try {
    return decode_image_png(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

void save_image(const fs::path& path, const ImageBuffer& img) { write_file(path, encode_image_png(img)); }

// ---------------------------------------------------------------------------
// Depth

DepthSidecar parse_depth_sidecar(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("depth sidecar: ") + e.what(), e.byte);
  }
  DepthSidecar s;
  s.scale = j.value("scale", 1.0);
  s.offset = j.value("offset", 0.0);
  const std::string conv = j.value("convention", std::string("depth"));
  if (conv == "depth") s.convention = DepthConvention::depth;
  else if (conv == "inverse") s.convention = DepthConvention::inverse;
  else throw ValidationError("convention", "must be \"depth\" or \"inverse\", got \"" + conv + "\"");
  if (!std::isfinite(s.scale) || s.scale == 0.0) throw ValidationError("scale", "must be finite and non-zero");
  return s;
}

std::string dump_depth_sidecar(const DepthSidecar& s) {
  json j = {{"v", 1},
            {"scale", s.scale},
            {"offset", s.offset},
            {"convention", s.convention == DepthConvention::depth ? "depth" : "inverse"}};
  return j.dump();
}

fs::path sidecar_path(const fs::path& raster_path) {
  fs::path p = raster_path;
  return p.replace_extension(".json");
}

DepthMap depth_from_png16(const Raster<std::uint16_t>& raw, const DepthSidecar& sidecar) {
  Raster<double> values(raw.size(), 1, 0.0);
  Mask valid(raw.size(), 1, 0);
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) {
      if (raw(x, y) == 0) continue;
      const double v = sidecar.scale * raw(x, y) + sidecar.offset;
      const double d = sidecar.convention == DepthConvention::depth ? v : (v > 0.0 ? 1.0 / v : 0.0);
      if (std::isfinite(d) && d > 0.0) {
        values(x, y) = d;
        valid(x, y) = 1;
      }
    }
  }
  return DepthMap(std::move(values), std::move(valid));
}

DepthMap load_depth(const fs::path& path) {
  if (!fs::exists(path)) throw Error("depth file not found: " + path.string());
  const std::string ext = path.extension().string();
  try {
    if (ext == ".pfm" || ext == ".PFM") return decode_depth_pfm(read_file(path));
    if (ext == ".png" || ext == ".PNG") {
      const fs::path side = sidecar_path(path);
      if (!fs::exists(side)) throw Error("16-bit depth PNG requires sidecar " + side.string());
      const auto raw_side = read_file(side);
      return depth_from_png16(decode_gray16_png(read_file(path)),
                              parse_depth_sidecar(std::string(raw_side.begin(), raw_side.end())));
    }
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
  throw Error("unsupported depth format '" + ext + "' (expected .pfm or .png)");
}

void save_depth_pfm(const fs::path& path, const DepthMap& depth) { write_file(path, encode_depth_pfm(depth)); }

// ---------------------------------------------------------------------------
// Masks

SegMaskSet decode_masks(const Bytes& label_png, const std::string& sidecar_json) {
  const Raster<std::uint16_t> raw = decode_gray16_png(label_png);
  SegMaskSet masks;
  masks.labels = Raster<std::int32_t>(raw.size());
  int max_label = 0;
  for (std::size_t i = 0; i < raw.data().size(); ++i) {
    masks.labels.data()[i] = raw.data()[i];
    max_label = std::max<int>(max_label, raw.data()[i]);
  }
  masks.salient.assign(static_cast<std::size_t>(max_label) + 1, false);
  if (!sidecar_json.empty()) {
    json j;
    try {
      j = json::parse(sidecar_json);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("mask sidecar: ") + e.what(), e.byte);
    }
    for (const auto& id : j.value("salient", json::array())) {
      const int k = id.get<int>();
      if (k < 1 || k > max_label)
        throw ValidationError("salient", "instance id " + std::to_string(k) + " not present in the label map");
      masks.salient[k] = true;
    }
  }
  masks.validate();
  return masks;
}

SegMaskSet load_masks(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  std::string side_text;
  if (fs::exists(side)) {
    const auto b = read_file(side);
    side_text.assign(b.begin(), b.end());
  }
  return decode_masks(read_file(path), side_text);
}

}  // namespace kb::io
