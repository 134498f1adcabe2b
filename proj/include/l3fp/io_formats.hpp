#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "l3fp/acquisition.hpp"
#include "l3fp/estimation.hpp"
#include "l3fp/l3_features.hpp"
#include "l3fp/matcher.hpp"

namespace l3fp {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Header: identity_id,sample_id,pore_id,x,y,segment_id,arc. NaN arcs and
/// negative segment ids are written as empty fields.
std::string pore_csv(std::span<const PoreAnnotation> rows);
void write_pore_csv(const std::filesystem::path& path, std::span<const PoreAnnotation> rows);
/// Columns are located by header name; only x and y are required.
std::vector<PoreAnnotation> read_pore_csv(const std::filesystem::path& path);
std::vector<PoreAnnotation> parse_pore_csv(const std::string& text, const std::string& source);

std::vector<PoreAnnotation> annotations_of(const SeedImage& seed);
/// Master-frame annotations; sample_id is -1.
std::vector<PoreAnnotation> annotations_of(const L3MasterFingerprint& l3);

struct CorrespondenceGroup {
  std::string image_a;
  std::string image_b;
  CorrespondenceSet pairs;
};

/// Header: image_a,image_b,x1,y1,x2,y2. Groups keep first-appearance order.
std::vector<CorrespondenceGroup> read_correspondence_csv(const std::filesystem::path& path);
std::vector<CorrespondenceGroup> parse_correspondence_csv(const std::string& text,
                                                          const std::string& source);

/// One non-negative integer per row under a `count` header column.
std::vector<int> read_scratch_counts(const std::filesystem::path& path);
std::vector<int> parse_scratch_counts(const std::string& text, const std::string& source);

struct SegmentRecord {
  RidgeSegment segment;
  double width = 0.0;
  bool operator==(const SegmentRecord&) const = default;
};

/// One line per segment: `<id> <width> <x>,<y> <x>,<y> ...`.
std::string segment_sidecar(const MasterFingerprint& master);
std::vector<SegmentRecord> parse_segment_sidecar(const std::string& text, const std::string& source);

nlohmann::ordered_json to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(std::span<const Scratch> scratches);

/// Header: id_a,sample_a,id_b,sample_b,kind,score.
std::string scores_csv(std::span<const ScoredPair> scores);
/// Header: threshold,far,frr.
std::string roc_csv(const RocCurve& roc);
/// Two whitespace-separated columns, FAR and FRR, one point per line.
std::string roc_dat(const RocCurve& roc);
/// Header: far,mean_frr,ci_low,ci_high.
std::string mean_roc_csv(const MeanRoc& roc);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file, then renames.
void write_text(const std::filesystem::path& path, const std::string& text);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace l3fp
