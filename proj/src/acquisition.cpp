#include "l3fp/acquisition.hpp"

#include <algorithm>
#include <cmath>

#include "l3fp/error.hpp"

namespace l3fp {

void AcquisitionStats::validate() const {
  if (!(sigma_x >= 0.0 && sigma_y >= 0.0 && sigma_theta_deg >= 0.0))
    throw InvalidArgument("acquisition sigmas must be >= 0");
}

RigidTransform sample_rigid(const AcquisitionStats& stats, Rng& rng) {
  stats.validate();
  RigidTransform t;
  t.dx = normal(rng, 0.0, stats.sigma_x);
  t.dy = normal(rng, 0.0, stats.sigma_y);
  t.theta_deg = normal(rng, 0.0, stats.sigma_theta_deg);
  return t;
}

void AffinePerturbation::validate() const {
  if (!(std::abs(gamma_x) <= kMaxGamma && std::abs(gamma_y) <= kMaxGamma))
    throw InvalidArgument("affine gamma must lie within [-10, 10]");
}

Point2d AffinePerturbation::apply(Point2d p, Point2d center) const {
  if (mode == AffineMode::Translation) return {p.x + gamma_x, p.y + gamma_y};
  const Point2d q = p - center;
  return {center.x + q.x + gamma_x / 100.0 * q.y, center.y + gamma_y / 100.0 * q.x + q.y};
}

Point2d AffinePerturbation::apply_inverse(Point2d p, Point2d center) const {
  if (mode == AffineMode::Translation) return {p.x - gamma_x, p.y - gamma_y};
  const double a = gamma_x / 100.0, b = gamma_y / 100.0;
  const double det = 1.0 - a * b;  // |a|, |b| <= 0.1 keeps this near 1
  const Point2d q = p - center;
  return {center.x + (q.x - a * q.y) / det, center.y + (q.y - b * q.x) / det};
}

AffinePerturbation sample_affine(AffineMode mode, Rng& rng) {
  AffinePerturbation g;
  g.mode = mode;
  g.gamma_x = uniform(rng, -AffinePerturbation::kMaxGamma, AffinePerturbation::kMaxGamma);
  g.gamma_y = uniform(rng, -AffinePerturbation::kMaxGamma, AffinePerturbation::kMaxGamma);
  return g;
}

double sample_bilinear(const GrayImage& image, Point2d p, double outside) {
  const double fx = std::floor(p.x), fy = std::floor(p.y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = p.x - fx, ay = p.y - fy;
  auto px = [&](int x, int y) -> double {
    return image.contains(x, y) ? static_cast<double>(image(x, y)) : outside;
  };
  const double top = px(x0, y0) * (1.0 - ax) + px(x0 + 1, y0) * ax;
  const double bottom = px(x0, y0 + 1) * (1.0 - ax) + px(x0 + 1, y0 + 1) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

namespace {

Point2d image_center(int width, int height) { return {(width - 1) / 2.0, (height - 1) / 2.0}; }

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (float& v : k) v = static_cast<float>(v / sum);
  return k;
}

FloatImage gaussian_blur(const FloatImage& src, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = src.width(), h = src.height();
  FloatImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

std::pair<GrayImage, std::vector<Point2d>> perturb_affine(const GrayImage& image,
                                                          std::span<const Point2d> points,
                                                          const AffinePerturbation& gamma) {
  gamma.validate();
  const Point2d c = image_center(image.width(), image.height());
  GrayImage out = warp_inverse(image, image.width(), image.height(),
                               [&](Point2d q) { return gamma.apply_inverse(q, c); });
  std::vector<Point2d> moved;
  moved.reserve(points.size());
  for (Point2d p : points) moved.push_back(gamma.apply(p, c));
  return {std::move(out), std::move(moved)};
}

void ElasticParams::validate() const {
  if (!(alpha >= 0.0)) throw InvalidArgument("elastic alpha must be >= 0");
  if (!(smoothing_sigma > 0.0)) throw InvalidArgument("elastic smoothing_sigma must be > 0");
}

DisplacementField::DisplacementField(int width, int height, const ElasticParams& params,
                                     std::uint64_t seed)
    : dx_(width, height), dy_(width, height) {
  params.validate();
  if (params.alpha == 0.0) return;
  Rng rng(seed);
  FloatImage rx(width, height), ry(width, height);
  for (float& v : rx.pixels()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  for (float& v : ry.pixels()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  rx = gaussian_blur(rx, params.smoothing_sigma);
  ry = gaussian_blur(ry, params.smoothing_sigma);
  double peak = 0.0;
  for (float v : rx.pixels()) peak = std::max(peak, std::abs(static_cast<double>(v)));
  for (float v : ry.pixels()) peak = std::max(peak, std::abs(static_cast<double>(v)));
  if (peak == 0.0) return;
  const double scale = params.alpha / peak;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    dx_.pixels()[i] = static_cast<float>(rx.pixels()[i] * scale);
    dy_.pixels()[i] = static_cast<float>(ry.pixels()[i] * scale);
  }
  for (float v : dx_.pixels()) max_component_ = std::max(max_component_, std::abs(static_cast<double>(v)));
  for (float v : dy_.pixels()) max_component_ = std::max(max_component_, std::abs(static_cast<double>(v)));

  // The inverse map q -> q - D(q) must not fold.
  for (int y = 0; y + 1 < height; ++y)
    for (int x = 0; x + 1 < width; ++x) {
      const double dxx = dx_(x + 1, y) - dx_(x, y), dxy = dx_(x, y + 1) - dx_(x, y);
      const double dyx = dy_(x + 1, y) - dy_(x, y), dyy = dy_(x, y + 1) - dy_(x, y);
      const double det = (1.0 - dxx) * (1.0 - dyy) - dxy * dyx;
      if (!(det > 0.0)) throw RegenerationRequired("elastic field folds over");
    }
}

Point2d DisplacementField::at(Point2d p) const {
  if (dx_.empty()) return {};
  const double x = std::clamp(p.x, 0.0, width() - 1.0);
  const double y = std::clamp(p.y, 0.0, height() - 1.0);
  const int x0 = std::min(static_cast<int>(x), width() - 2 < 0 ? 0 : width() - 2);
  const int y0 = std::min(static_cast<int>(y), height() - 2 < 0 ? 0 : height() - 2);
  const int x1 = std::min(x0 + 1, width() - 1), y1 = std::min(y0 + 1, height() - 1);
  const double ax = x - x0, ay = y - y0;
  auto lerp = [&](const FloatImage& f) {
    const double top = f(x0, y0) * (1.0 - ax) + f(x1, y0) * ax;
    const double bottom = f(x0, y1) * (1.0 - ax) + f(x1, y1) * ax;
    return top * (1.0 - ay) + bottom * ay;
  };
  return {lerp(dx_), lerp(dy_)};
}

Point2d DisplacementField::forward(Point2d p) const {
  if (max_component_ == 0.0) return p;
  Point2d q = p + at(p);
  for (int i = 0; i < 100; ++i) {
    const Point2d next = p + at(q);
    const double step = distance(next, q);
    q = next;
    if (step < 1e-10) break;
  }
  return q;
}

std::pair<GrayImage, std::vector<Point2d>> elastic_deform(const GrayImage& image,
                                                          std::span<const Point2d> points,
                                                          const ElasticParams& params, Rng& rng) {
  params.validate();
  const DisplacementField field(image.width(), image.height(), params, rng());
  GrayImage out = warp_inverse(image, image.width(), image.height(),
                               [&](Point2d q) { return field.inverse(q); });
  std::vector<Point2d> moved;
  moved.reserve(points.size());
  for (Point2d p : points) moved.push_back(field.forward(p));
  return {std::move(out), std::move(moved)};
}

DropoutResult dropout_pores(std::span<const Pore> pores, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1]");
  DropoutResult r;
  std::bernoulli_distribution drop(rate);
  for (const Pore& p : pores) {
    if (drop(rng))
      r.dropped_ids.push_back(p.id);
    else
      r.kept.push_back(p);
  }
  return r;
}

void SeedConfig::validate() const {
  if (crop_width < 1 || crop_height < 1) throw InvalidArgument("crop size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0))
    throw InvalidArgument("dropout rate must lie in [0, 1]");
  if (max_retries < 1) throw InvalidArgument("max_retries must be >= 1");
  if (!(max_padding >= 0.0)) throw InvalidArgument("max_padding must be >= 0");
  elastic.validate();
}

AcquisitionMap::AcquisitionMap(const Provenance& provenance) : prov_(provenance) {
  if (prov_.elastic_enabled)
    field_.emplace(prov_.crop_width, prov_.crop_height, prov_.elastic, prov_.elastic_seed);
}

Point2d AcquisitionMap::forward(Point2d p) const {
  const Point2d a = prov_.affine.apply(p, prov_.canvas_center);
  const Point2d r = prov_.rigid.apply(a, prov_.canvas_center);
  const Point2d u = r - prov_.crop_origin;
  return field_ ? field_->forward(u) : u;
}

Point2d AcquisitionMap::inverse(Point2d q) const {
  const Point2d u = field_ ? field_->inverse(q) : q;
  const Point2d r = u + prov_.crop_origin;
  const Point2d a = prov_.rigid.apply_inverse(r, prov_.canvas_center);
  return prov_.affine.apply_inverse(a, prov_.canvas_center);
}

SeedImage render_seed_image(const L3MasterFingerprint& l3, const Provenance& provenance,
                            int sample_id) {
  std::vector<int> dropped = provenance.dropped_pore_ids;
  std::sort(dropped.begin(), dropped.end());
  std::vector<Pore> kept;
  kept.reserve(l3.pores.size());
  for (const Pore& p : l3.pores)
    if (!std::binary_search(dropped.begin(), dropped.end(), p.id)) kept.push_back(p);

  const GrayImage canvas = render_l3(l3.master, kept, l3.scratches);
  const AcquisitionMap map(provenance);

  SeedImage seed;
  seed.identity_id = l3.identity_id;
  seed.sample_id = sample_id;
  seed.provenance = provenance;
  seed.image = warp_inverse(canvas, provenance.crop_width, provenance.crop_height,
                            [&](Point2d q) { return map.inverse(q); });
  for (const Pore& p : kept) {
    const Point2d q = map.forward({p.position.x + 0.0, p.position.y + 0.0});
    if (q.x >= 0.0 && q.y >= 0.0 && q.x < provenance.crop_width && q.y < provenance.crop_height)
      seed.pores.push_back({p.id, q, p.segment_id, p.arc_position});
  }
  return seed;
}

namespace {

bool crop_inside_canvas(const AcquisitionMap& map, const Provenance& prov, int width, int height,
                        double padding) {
  auto inside = [&](Point2d q) {
    const Point2d p = map.inverse(q);
    return p.x >= -padding && p.y >= -padding && p.x <= width - 1 + padding &&
           p.y <= height - 1 + padding;
  };
  const int w = prov.crop_width, h = prov.crop_height;
  for (int x = 0; x < w; x += 8)
    if (!inside({x + 0.0, 0.0}) || !inside({x + 0.0, h - 1.0})) return false;
  for (int y = 0; y < h; y += 8)
    if (!inside({0.0, y + 0.0}) || !inside({w - 1.0, y + 0.0})) return false;
  return inside({w - 1.0, h - 1.0});
}

}  // namespace

SeedImage make_seed_image(const L3MasterFingerprint& l3, const AcquisitionStats& stats,
                          const SeedConfig& config, Rng& rng, int sample_id) {
  stats.validate();
  config.validate();
  const int w = l3.master.width(), h = l3.master.height();

  Provenance prov;
  prov.crop_width = config.crop_width;
  prov.crop_height = config.crop_height;
  prov.canvas_center = image_center(w, h);
  prov.crop_origin = {std::floor((w - config.crop_width) / 2.0),
                      std::floor((h - config.crop_height) / 2.0)};
  prov.dropped_pore_ids = dropout_pores(l3.pores, config.dropout_rate, rng).dropped_ids;
  prov.elastic_enabled = config.elastic_enabled;
  prov.elastic = config.elastic;

  for (int attempt = 1; attempt <= config.max_retries; ++attempt) {
    prov.attempts = attempt;
    prov.affine = config.affine_enabled ? sample_affine(config.affine_mode, rng)
                                        : AffinePerturbation{0.0, 0.0, config.affine_mode};
    prov.rigid = config.rigid_enabled ? sample_rigid(stats, rng) : RigidTransform{};
    prov.elastic_seed = config.elastic_enabled ? rng() : 0;
    try {
      const AcquisitionMap map(prov);
      if (!crop_inside_canvas(map, prov, w, h, config.max_padding)) continue;
    } catch (const RegenerationRequired&) {
      continue;
    }
    return render_seed_image(l3, prov, sample_id);
  }
  throw GenerationFailure("seed image crop left the canvas after " +
                          std::to_string(config.max_retries) + " attempts");
}

}  // namespace l3fp
