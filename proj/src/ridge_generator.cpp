#include "l3fp/ridge_generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "l3fp/error.hpp"

namespace l3fp {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap_pi(double a) {
  a = std::fmod(a, kPi);
  if (a < 0) a += kPi;
  if (a >= kPi) a -= kPi;
  return a;
}

}  // namespace

std::string_view to_string(FingerprintClass c) {
  switch (c) {
    case FingerprintClass::Whorl: return "whorl";
    case FingerprintClass::RightLoop: return "right_loop";
    case FingerprintClass::LeftLoop: return "left_loop";
    case FingerprintClass::PlainArch: return "plain_arch";
    case FingerprintClass::TentedArch: return "tented_arch";
  }
  return "unknown";
}

FingerprintClass class_from_string(std::string_view name) {
  for (auto c : kAllClasses)
    if (to_string(c) == name) return c;
  throw InvalidArgument("unknown fingerprint class '" + std::string(name) + "'");
}

ClassWeights ClassWeights::population() {
  constexpr double plain = 0.7222, tented = 0.2777;
  constexpr double arch = 0.06;
  return ClassWeights{{0.41, 0.50, 0.03, arch * plain / (plain + tented),
                       arch * tented / (plain + tented)}};
}

void ClassWeights::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("class weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidArgument("class weights must sum to 1");
}

FingerprintClass class_at(const ClassWeights& weights, double u) {
  double cumulative = 0.0;
  for (auto c : kAllClasses) {
    cumulative += weights[c];
    if (u < cumulative) return c;
  }
  // u within rounding of 1.0: last class with non-zero weight.
  for (auto it = kAllClasses.rbegin(); it != kAllClasses.rend(); ++it)
    if (weights[*it] > 0.0) return *it;
  throw InvalidArgument("all class weights are zero");
}

FingerprintClass sample_class(const ClassWeights& weights, Rng& rng) {
  return class_at(weights, uniform01(rng));
}

SingularityLayout layout_template(FingerprintClass c, int width, int height) {
  const double sx = width / static_cast<double>(kRidgeMapWidth);
  const double sy = height / static_cast<double>(kRidgeMapHeight);
  auto at = [&](double x, double y) { return Point2d{x * sx, y * sy}; };
  switch (c) {
    case FingerprintClass::Whorl:
      return {{at(137, 160), at(137, 205)}, {at(55, 300), at(220, 300)}};
    case FingerprintClass::RightLoop:
      return {{at(150, 180)}, {at(70, 295)}};
    case FingerprintClass::LeftLoop:
      return {{at(125, 180)}, {at(205, 295)}};
    case FingerprintClass::TentedArch:
      return {{at(137, 195)}, {at(137, 275)}};
    case FingerprintClass::PlainArch:
      return {};
  }
  return {};
}

void validate_layout(FingerprintClass c, const SingularityLayout& layout, int width,
                     int height) {
  std::size_t cores = 0, deltas = 0;
  switch (c) {
    case FingerprintClass::Whorl: cores = deltas = 2; break;
    case FingerprintClass::RightLoop:
    case FingerprintClass::LeftLoop:
    case FingerprintClass::TentedArch: cores = deltas = 1; break;
    case FingerprintClass::PlainArch: break;
  }
  if (layout.cores.size() != cores || layout.deltas.size() != deltas)
    throw InvalidArgument("singularity layout does not match class " +
                          std::string(to_string(c)));
  auto inside = [&](Point2d p) { return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height; };
  for (const auto& p : layout.cores)
    if (!inside(p)) throw InvalidArgument("core outside canvas");
  for (const auto& p : layout.deltas)
    if (!inside(p)) throw InvalidArgument("delta outside canvas");
  if (c == FingerprintClass::TentedArch &&
      std::abs(layout.cores[0].x - layout.deltas[0].x) > 1e-9)
    throw InvalidArgument("tented arch core and delta must be vertically aligned");
}

SingularityLayout sample_layout(FingerprintClass c, Rng& rng, double jitter,
                                double border_margin, int width, int height) {
  const SingularityLayout base = layout_template(c, width, height);
  auto near_border = [&](Point2d p) {
    return p.x < border_margin || p.y < border_margin || p.x > width - 1 - border_margin ||
           p.y > height - 1 - border_margin;
  };
  for (int attempt = 0; attempt < 100; ++attempt) {
    SingularityLayout out = base;
    for (auto& p : out.cores) p = p + Point2d{uniform(rng, -jitter, jitter), uniform(rng, -jitter, jitter)};
    for (auto& p : out.deltas) p = p + Point2d{uniform(rng, -jitter, jitter), uniform(rng, -jitter, jitter)};
    if (c == FingerprintClass::TentedArch) out.deltas[0].x = out.cores[0].x;
    const bool degenerate = std::any_of(out.cores.begin(), out.cores.end(), near_border) ||
                            std::any_of(out.deltas.begin(), out.deltas.end(), near_border);
    if (!degenerate) return out;
  }
  throw GenerationFailure("could not place singularities away from the border");
}

double background_orientation(FingerprintClass c, Point2d p, int width, int height) {
  if (c != FingerprintClass::PlainArch) return 0.0;
  // Ridges of the form y = y0 - A(y) exp(-u^2): a bump rising towards the
  // middle, growing stronger towards the bottom of the print.
  const double s = 0.3 * width;
  const double u = (p.x - 0.5 * width) / s;
  const double ramp = std::clamp((p.y - 0.15 * height) / (0.85 * height), 0.0, 1.0);
  const double amplitude = 0.12 * height * ramp;
  const double slope = amplitude * 2.0 * u / s * std::exp(-u * u);
  return std::atan(slope);
}

double zero_pole_orientation(FingerprintClass c, const SingularityLayout& layout, Point2d p,
                             int width, int height) {
  double a = background_orientation(c, p, width, height);
  for (const auto& core : layout.cores) a += 0.5 * std::atan2(p.y - core.y, p.x - core.x);
  for (const auto& delta : layout.deltas) a -= 0.5 * std::atan2(p.y - delta.y, p.x - delta.x);
  return wrap_pi(a);
}

OrientationField build_orientation_field(FingerprintClass c, const SingularityLayout& layout,
                                         int width, int height) {
  validate_layout(c, layout, width, height);
  OrientationField field{c, layout, FloatImage(width, height)};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      field.theta(x, y) = static_cast<float>(
          zero_pole_orientation(c, layout, {x + 0.0, y + 0.0}, width, height));
  return field;
}

double accumulated_rotation(const std::vector<double>& directions) {
  double total = 0.0;
  const std::size_t n = directions.size();
  for (std::size_t i = 0; i < n; ++i) {
    double d = directions[(i + 1) % n] - directions[i];
    d = std::fmod(d, kPi);
    if (d <= -kPi / 2) d += kPi;
    if (d > kPi / 2) d -= kPi;
    total += d;
  }
  return total;
}

double field_winding(const OrientationField& field, Point2d center, double radius,
                     int samples) {
  std::vector<double> dirs;
  dirs.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * kPi * i / samples;
    const int x = static_cast<int>(std::lround(center.x + radius * std::cos(a)));
    const int y = static_cast<int>(std::lround(center.y + radius * std::sin(a)));
    if (!field.theta.contains(x, y)) throw InvalidArgument("winding loop leaves the field");
    dirs.push_back(field.theta(x, y));
  }
  return accumulated_rotation(dirs);
}

void GaborParams::validate() const {
  if (!(base_scale > 0.0)) throw InvalidArgument("gabor base_scale must be > 0");
  if (!(max_jitter >= 0.0 && max_jitter < 1.0))
    throw InvalidArgument("gabor max_jitter must be in [0, 1)");
  if (!(kernel_bandwidth > 0.0)) throw InvalidArgument("gabor kernel_bandwidth must be > 0");
  if (iterations < 1) throw InvalidArgument("gabor iterations must be >= 1");
  if (!(seed_density > 0.0 && seed_density <= 1.0))
    throw InvalidArgument("gabor seed_density must be in (0, 1]");
  if (orientation_bins < 4) throw InvalidArgument("gabor orientation_bins must be >= 4");
}

double gabor_scale_from_factor(const GaborParams& params, double factor) {
  if (factor < 1.0 - params.max_jitter - 1e-12 || factor > 1.0 + params.max_jitter + 1e-12)
    throw InvalidArgument("gabor scale factor outside the jitter band");
  return params.base_scale * factor;
}

double sample_gabor_scale(const GaborParams& params, Rng& rng) {
  params.validate();
  const double u = 1.0 - params.max_jitter + 2.0 * params.max_jitter * uniform01(rng);
  return gabor_scale_from_factor(params, u);
}

double RidgeMap::foreground_fraction() const {
  if (pixels.empty()) return 0.0;
  const auto px = pixels.pixels();
  return static_cast<double>(std::count(px.begin(), px.end(), std::uint8_t{1})) /
         static_cast<double>(px.size());
}

namespace {

/// Oriented, zero-mean Gabor kernels. Rows are zero-padded to `stride`
/// floats so the inner product has a compile-time trip count.
struct GaborBank {
  int radius = 0;
  int size = 0;
  int stride = 0;
  int bins = 0;
  std::vector<float> taps;  // bins x size x stride

  const float* kernel(int bin) const {
    return taps.data() + static_cast<std::size_t>(bin) * size * stride;
  }
};

GaborBank make_bank(double scale, double bandwidth, int bins) {
  GaborBank bank;
  bank.radius = static_cast<int>(std::lround(scale));
  bank.size = 2 * bank.radius + 1;
  bank.stride = (bank.size + 7) / 8 * 8;
  bank.bins = bins;
  bank.taps.assign(static_cast<std::size_t>(bins) * bank.size * bank.stride, 0.0f);
  const double sigma = bandwidth * scale;
  std::vector<double> env(bank.size * bank.size), wave(bank.size * bank.size);
  for (int b = 0; b < bins; ++b) {
    const double theta = kPi * b / bins;
    // Intensity oscillates across the ridge direction.
    const double nx = -std::sin(theta), ny = std::cos(theta);
    double env_sum = 0.0, dc = 0.0;
    for (int dy = -bank.radius; dy <= bank.radius; ++dy)
      for (int dx = -bank.radius; dx <= bank.radius; ++dx) {
        const int i = (dy + bank.radius) * bank.size + (dx + bank.radius);
        env[i] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        wave[i] = std::cos(2.0 * kPi * (dx * nx + dy * ny) / scale);
        env_sum += env[i];
        dc += env[i] * wave[i];
      }
    const double offset = dc / env_sum;
    float* k = bank.taps.data() + static_cast<std::size_t>(b) * bank.size * bank.stride;
    for (int ky = 0; ky < bank.size; ++ky)
      for (int kx = 0; kx < bank.size; ++kx) {
        const int i = ky * bank.size + kx;
        k[ky * bank.stride + kx] = static_cast<float>(env[i] * (wave[i] - offset));
      }
  }
  return bank;
}

/// One filtering pass over the padded canvas; returns the sum of squares.
template <int Stride>
double filter_pass(const GaborBank& bank, const std::vector<float>& canvas, int pitch,
                   const std::vector<int>& bin, int w, int h, std::vector<float>& response) {
  double sum_sq = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const float* k = bank.kernel(bin[idx]);
      const float* src = canvas.data() + static_cast<std::size_t>(y) * pitch + x;
      float acc = 0.0f;
      for (int ky = 0; ky < bank.size; ++ky) {
        const float* srow = src + static_cast<std::size_t>(ky) * pitch;
        const float* krow = k + ky * Stride;
#pragma omp simd reduction(+ : acc)
        for (int kx = 0; kx < Stride; ++kx) acc += srow[kx] * krow[kx];
      }
      response[idx] = acc;
      sum_sq += static_cast<double>(acc) * acc;
    }
  }
  return sum_sq;
}

double dispatch_filter_pass(const GaborBank& bank, const std::vector<float>& canvas, int pitch,
                            const std::vector<int>& bin, int w, int h,
                            std::vector<float>& response) {
  switch (bank.stride) {
    case 8: return filter_pass<8>(bank, canvas, pitch, bin, w, h, response);
    case 16: return filter_pass<16>(bank, canvas, pitch, bin, w, h, response);
    case 24: return filter_pass<24>(bank, canvas, pitch, bin, w, h, response);
    case 32: return filter_pass<32>(bank, canvas, pitch, bin, w, h, response);
    case 40: return filter_pass<40>(bank, canvas, pitch, bin, w, h, response);
    case 48: return filter_pass<48>(bank, canvas, pitch, bin, w, h, response);
    default: throw InvalidArgument("Gabor scale too large (kernel wider than 48 px)");
  }
}

}  // namespace

FloatImage gabor_response(const FloatImage& canvas, const OrientationField& field,
                          double effective_scale, const GaborParams& params) {
  params.validate();
  const int w = field.width(), h = field.height();
  if (canvas.width() != w || canvas.height() != h)
    throw InvalidArgument("canvas and orientation field sizes differ");
  const GaborBank bank =
      make_bank(effective_scale, params.kernel_bandwidth, params.orientation_bins);
  const int r = bank.radius;
  const int pitch = w + 2 * r + bank.stride;
  std::vector<int> bin(static_cast<std::size_t>(w) * h);
  std::vector<float> padded(static_cast<std::size_t>(pitch) * (h + 2 * r), 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bin[static_cast<std::size_t>(y) * w + x] =
          static_cast<int>(std::lround(field.theta(x, y) / kPi * bank.bins)) % bank.bins;
      padded[static_cast<std::size_t>(y + r) * pitch + x + r] = canvas(x, y);
    }
  std::vector<float> response(static_cast<std::size_t>(w) * h);
  dispatch_filter_pass(bank, padded, pitch, bin, w, h, response);
  FloatImage out(w, h);
  std::copy(response.begin(), response.end(), out.pixels().begin());
  return out;
}

RidgeMap synthesize_ridge_map(const OrientationField& field, const GaborParams& params,
                              double effective_scale, Rng& rng) {
  params.validate();
  if (!(effective_scale > 1.0)) throw InvalidArgument("effective Gabor scale must be > 1 px");
  const int w = field.width(), h = field.height();
  if (w == 0 || h == 0) throw InvalidArgument("empty orientation field");

  const GaborBank bank =
      make_bank(effective_scale, params.kernel_bandwidth, params.orientation_bins);
  const int r = bank.radius;
  // Extra right padding covers the zero taps beyond the kernel width.
  const int pitch = w + 2 * r + bank.stride;

  std::vector<int> bin(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int b = static_cast<int>(std::lround(field.theta(x, y) / kPi * bank.bins));
      bin[static_cast<std::size_t>(y) * w + x] = b % bank.bins;
    }

  // Mid-gray (0) canvas with sparse +-1 seeds; the border stays mid-gray.
  std::vector<float> canvas(static_cast<std::size_t>(pitch) * (h + 2 * r), 0.0f);
  auto at = [&](int x, int y) -> float& {
    return canvas[static_cast<std::size_t>(y + r) * pitch + x + r];
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (uniform01(rng) < params.seed_density) at(x, y) = uniform01(rng) < 0.5 ? -1.0f : 1.0f;

  std::vector<float> response(static_cast<std::size_t>(w) * h, 0.0f);
  double flips = 1.0;
  for (int it = 0; it < params.iterations; ++it) {
    const double sum_sq = dispatch_filter_pass(bank, canvas, pitch, bin, w, h, response);
    const double rms = std::sqrt(sum_sq / response.size());
    if (rms == 0.0) throw RegenerationRequired("Gabor iteration collapsed to a flat canvas");
    std::size_t flipped = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const float next = std::clamp(
            static_cast<float>(response[static_cast<std::size_t>(y) * w + x] / rms), -1.0f, 1.0f);
        float& cur = at(x, y);
        if ((next > 0.0f) != (cur > 0.0f)) ++flipped;
        cur = next;
      }
    flips = static_cast<double>(flipped) / response.size();
  }
  if (flips > params.convergence_tolerance)
    throw RegenerationRequired("Gabor iteration did not converge");

  std::vector<float> sorted = response;
  auto mid = sorted.begin() + sorted.size() / 2;
  std::nth_element(sorted.begin(), mid, sorted.end());
  const float median = *mid;

  RidgeMap map{BinaryImage(w, h), effective_scale};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      map.pixels(x, y) = response[static_cast<std::size_t>(y) * w + x] > median ? 1 : 0;

  const double fg = map.foreground_fraction();
  if (fg < kMinForegroundFraction || fg > kMaxForegroundFraction)
    throw RegenerationRequired("ridge foreground fraction out of range");
  return map;
}

RidgeGeneration generate_ridge_map(const ClassWeights& weights, const GaborParams& params,
                                   Rng& rng, int max_attempts) {
  weights.validate();
  params.validate();
  RidgeGeneration out;
  out.fingerprint_class = sample_class(weights, rng);
  out.effective_scale = sample_gabor_scale(params, rng);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    out.attempts = attempt;
    out.layout = sample_layout(out.fingerprint_class, rng);
    const OrientationField field = build_orientation_field(out.fingerprint_class, out.layout);
    try {
      out.ridge_map = synthesize_ridge_map(field, params, out.effective_scale, rng);
      return out;
    } catch (const RegenerationRequired&) {
    }
  }
  throw GenerationFailure("ridge map generation did not converge after " +
                          std::to_string(max_attempts) + " attempts");
}

}  // namespace l3fp
