#include "l3fp/io_formats.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "l3fp/error.hpp"

namespace l3fp {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xf];
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Minimal CSV reader: comma separated, no quoting, header row first.
class CsvTable {
 public:
  CsvTable(const std::string& text, std::string source) : source_(std::move(source)) {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty()) continue;
      std::vector<std::string> cells;
      std::string_view rest = line;
      for (;;) {
        const auto comma = rest.find(',');
        cells.emplace_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (header_.empty()) {
        header_ = std::move(cells);
        header_line_ = n;
        continue;
      }
      if (cells.size() != header_.size())
        throw FormatError(source_, n,
                          "expected " + std::to_string(header_.size()) + " fields, found " +
                              std::to_string(cells.size()));
      rows_.push_back({n, std::move(cells)});
    }
    if (header_.empty()) throw FormatError(source_, std::max(n, 1), "missing header row");
  }

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    return std::nullopt;
  }
  std::size_t require(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw FormatError(source_, header_line_, "missing column '" + std::string(name) + "'");
  }

  struct Row {
    int line;
    std::vector<std::string> cells;
  };
  const std::vector<Row>& rows() const { return rows_; }

  double number(const Row& r, std::size_t c) const {
    const std::string& s = r.cells[c];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
      throw FormatError(source_, r.line, "'" + header_[c] + "' is not a finite number: '" + s + "'");
    return v;
  }
  int integer(const Row& r, std::size_t c) const {
    const std::string& s = r.cells[c];
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw FormatError(source_, r.line, "'" + header_[c] + "' is not an integer: '" + s + "'");
    return v;
  }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  int header_line_ = 1;
  std::vector<Row> rows_;
};

}  // namespace

std::string pore_csv(std::span<const PoreAnnotation> rows) {
  std::string s = "identity_id,sample_id,pore_id,x,y,segment_id,arc\n";
  for (const auto& r : rows) {
    s += std::to_string(r.identity_id) + ',' + std::to_string(r.sample_id) + ',' +
         std::to_string(r.pore_id) + ',' + format_double(r.position.x) + ',' +
         format_double(r.position.y) + ',' + (r.segment_id >= 0 ? std::to_string(r.segment_id) : "") +
         ',' + (std::isfinite(r.arc) ? format_double(r.arc) : "") + '\n';
  }
  return s;
}

void write_pore_csv(const std::filesystem::path& path, std::span<const PoreAnnotation> rows) {
  write_text(path, pore_csv(rows));
}

std::vector<PoreAnnotation> parse_pore_csv(const std::string& text, const std::string& source) {
  const CsvTable t(text, source);
  const std::size_t cx = t.require("x"), cy = t.require("y");
  const auto cid = t.column("identity_id"), csample = t.column("sample_id"),
             cpore = t.column("pore_id"), cseg = t.column("segment_id"), carc = t.column("arc");
  std::vector<PoreAnnotation> out;
  for (const auto& r : t.rows()) {
    PoreAnnotation a;
    a.identity_id = cid ? t.integer(r, *cid) : 0;
    a.sample_id = csample ? t.integer(r, *csample) : 0;
    a.pore_id = cpore ? t.integer(r, *cpore) : static_cast<int>(out.size());
    a.position = {t.number(r, cx), t.number(r, cy)};
    if (cseg && !r.cells[*cseg].empty()) a.segment_id = t.integer(r, *cseg);
    if (carc && !r.cells[*carc].empty()) a.arc = t.number(r, *carc);
    out.push_back(a);
  }
  return out;
}

std::vector<PoreAnnotation> read_pore_csv(const std::filesystem::path& path) {
  return parse_pore_csv(read_text(path), path.string());
}

std::vector<PoreAnnotation> annotations_of(const SeedImage& seed) {
  std::vector<PoreAnnotation> out;
  out.reserve(seed.pores.size());
  for (const auto& p : seed.pores) {
    PoreAnnotation a;
    a.identity_id = seed.identity_id;
    a.sample_id = seed.sample_id;
    a.pore_id = p.id;
    a.position = p.position;
    a.segment_id = p.segment_id;
    a.arc = p.arc_position;
    out.push_back(a);
  }
  return out;
}

std::vector<PoreAnnotation> annotations_of(const L3MasterFingerprint& l3) {
  std::vector<PoreAnnotation> out;
  out.reserve(l3.pores.size());
  for (const auto& p : l3.pores) {
    PoreAnnotation a;
    a.identity_id = l3.identity_id;
    a.sample_id = -1;
    a.pore_id = p.id;
    a.position = {p.position.x + 0.0, p.position.y + 0.0};
    a.segment_id = p.segment_id;
    a.arc = p.arc_position;
    out.push_back(a);
  }
  return out;
}

std::vector<CorrespondenceGroup> parse_correspondence_csv(const std::string& text,
                                                          const std::string& source) {
  const CsvTable t(text, source);
  const std::size_t ca = t.require("image_a"), cb = t.require("image_b"), x1 = t.require("x1"),
                    y1 = t.require("y1"), x2 = t.require("x2"), y2 = t.require("y2");
  std::vector<CorrespondenceGroup> out;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& r : t.rows()) {
    if (r.cells[ca].empty() || r.cells[cb].empty())
      throw FormatError(source, r.line, "image_a and image_b must be non-empty");
    const auto key = std::pair{r.cells[ca], r.cells[cb]};
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({key.first, key.second, {}});
    }
    out[it->second].pairs.push_back({{t.number(r, x1), t.number(r, y1)}, {t.number(r, x2), t.number(r, y2)}});
  }
  return out;
}

std::vector<CorrespondenceGroup> read_correspondence_csv(const std::filesystem::path& path) {
  return parse_correspondence_csv(read_text(path), path.string());
}

std::vector<int> parse_scratch_counts(const std::string& text, const std::string& source) {
  const CsvTable t(text, source);
  const std::size_t c = t.require("count");
  std::vector<int> out;
  for (const auto& r : t.rows()) {
    const int v = t.integer(r, c);
    if (v < 0) throw FormatError(source, r.line, "count must be >= 0");
    out.push_back(v);
  }
  return out;
}

std::vector<int> read_scratch_counts(const std::filesystem::path& path) {
  return parse_scratch_counts(read_text(path), path.string());
}

std::string segment_sidecar(const MasterFingerprint& master) {
  std::string s;
  for (std::size_t i = 0; i < master.segments.size(); ++i) {
    const auto& seg = master.segments[i];
    s += std::to_string(seg.id) + ' ' + format_double(master.widths.at(i));
    for (Pixel p : seg.pixels) s += ' ' + std::to_string(p.x) + ',' + std::to_string(p.y);
    s += '\n';
  }
  return s;
}

std::vector<SegmentRecord> parse_segment_sidecar(const std::string& text, const std::string& source) {
  std::vector<SegmentRecord> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    SegmentRecord r;
    std::string width;
    if (!(fields >> r.segment.id >> width)) throw FormatError(source, n, "expected '<id> <width> ...'");
    const auto res = std::from_chars(width.data(), width.data() + width.size(), r.width);
    if (res.ec != std::errc() || res.ptr != width.data() + width.size())
      throw FormatError(source, n, "width is not a number: '" + width + "'");
    for (std::string tok; fields >> tok;) {
      Pixel p;
      const auto comma = tok.find(',');
      if (comma == std::string::npos) throw FormatError(source, n, "expected x,y: '" + tok + "'");
      const auto rx = std::from_chars(tok.data(), tok.data() + comma, p.x);
      const auto ry = std::from_chars(tok.data() + comma + 1, tok.data() + tok.size(), p.y);
      if (rx.ec != std::errc() || rx.ptr != tok.data() + comma || ry.ec != std::errc() ||
          ry.ptr != tok.data() + tok.size())
        throw FormatError(source, n, "expected x,y: '" + tok + "'");
      r.segment.pixels.push_back(p);
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

ordered_json point_json(Point2d p) { return ordered_json::array({p.x, p.y}); }

Point2d point_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

ordered_json to_json(const Provenance& p) {
  ordered_json j;
  j["rigid"] = {{"dx", p.rigid.dx}, {"dy", p.rigid.dy}, {"theta_deg", p.rigid.theta_deg}};
  j["affine"] = {{"gamma_x", p.affine.gamma_x},
                 {"gamma_y", p.affine.gamma_y},
                 {"mode", p.affine.mode == AffineMode::Shear ? "shear" : "translation"}};
  j["elastic"] = {{"enabled", p.elastic_enabled},
                  {"alpha", p.elastic.alpha},
                  {"sigma", p.elastic.smoothing_sigma},
                  {"seed", p.elastic_seed}};
  j["dropped_pore_ids"] = p.dropped_pore_ids;
  j["crop"] = {{"width", p.crop_width}, {"height", p.crop_height}, {"origin", point_json(p.crop_origin)}};
  j["canvas_center"] = point_json(p.canvas_center);
  j["attempts"] = p.attempts;
  return j;
}

Provenance provenance_from_json(const json& j) {
  Provenance p;
  const auto& r = j.at("rigid");
  p.rigid = {r.at("dx").get<double>(), r.at("dy").get<double>(), r.at("theta_deg").get<double>()};
  const auto& a = j.at("affine");
  p.affine.gamma_x = a.at("gamma_x").get<double>();
  p.affine.gamma_y = a.at("gamma_y").get<double>();
  const std::string mode = a.at("mode").get<std::string>();
  if (mode != "shear" && mode != "translation") throw InvalidArgument("unknown affine mode " + mode);
  p.affine.mode = mode == "shear" ? AffineMode::Shear : AffineMode::Translation;
  const auto& e = j.at("elastic");
  p.elastic_enabled = e.at("enabled").get<bool>();
  p.elastic.alpha = e.at("alpha").get<double>();
  p.elastic.smoothing_sigma = e.at("sigma").get<double>();
  p.elastic_seed = e.at("seed").get<std::uint64_t>();
  p.dropped_pore_ids = j.at("dropped_pore_ids").get<std::vector<int>>();
  const auto& c = j.at("crop");
  p.crop_width = c.at("width").get<int>();
  p.crop_height = c.at("height").get<int>();
  p.crop_origin = point_from(c.at("origin"));
  p.canvas_center = point_from(j.at("canvas_center"));
  p.attempts = j.at("attempts").get<int>();
  return p;
}

ordered_json to_json(std::span<const Scratch> scratches) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : scratches) {
    ordered_json legs = ordered_json::array();
    for (const auto& l : s.legs) legs.push_back({{"length", l.length}, {"turn_deg", l.turn_deg}});
    ordered_json verts = ordered_json::array();
    for (Point2d v : s.vertices()) verts.push_back(point_json(v));
    arr.push_back({{"start", point_json(s.start)},
                   {"heading_deg", s.heading_deg},
                   {"stroke_width", s.stroke_width},
                   {"legs", legs},
                   {"vertices", verts}});
  }
  return arr;
}

std::string scores_csv(std::span<const ScoredPair> scores) {
  std::string s = "id_a,sample_a,id_b,sample_b,kind,score\n";
  for (const auto& p : scores)
    s += std::to_string(p.identity_a) + ',' + std::to_string(p.sample_a) + ',' +
         std::to_string(p.identity_b) + ',' + std::to_string(p.sample_b) + ',' +
         std::string(to_string(p.kind)) + ',' + format_double(p.score) + '\n';
  return s;
}

std::string roc_csv(const RocCurve& roc) {
  std::string s = "threshold,far,frr\n";
  for (const auto& p : roc.points)
    s += format_double(p.threshold) + ',' + format_double(p.far) + ',' + format_double(p.frr) + '\n';
  return s;
}

std::string roc_dat(const RocCurve& roc) {
  std::string s;
  for (const auto& p : roc.points) s += format_double(p.far) + ' ' + format_double(p.frr) + '\n';
  return s;
}

std::string mean_roc_csv(const MeanRoc& roc) {
  std::string s = "far,mean_frr,ci_low,ci_high\n";
  for (std::size_t i = 0; i < roc.far.size(); ++i)
    s += format_double(roc.far[i]) + ',' + format_double(roc.mean_frr[i]) + ',' +
         format_double(roc.mean_frr[i] - roc.ci_half_width[i]) + ',' +
         format_double(roc.mean_frr[i] + roc.ci_half_width[i]) + '\n';
  return s;
}

}  // namespace l3fp
