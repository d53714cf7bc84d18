/**
 * Copyright 2026 The dermnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dermnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dermnet/error.hpp"
#include "dermnet/preprocess.hpp"
#include "dermnet/rng.hpp"

namespace derm::dataset {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Splits one CSV line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

// Snaps values within 1e-9 of an integer so that e.g. 10 * 0.7 floors to 7.
double snapped(double q) {
  const double r = std::round(q);
  return std::fabs(q - r) < 1e-9 ? r : q;
}

void validate(const SplitConfig& cfg) {
  for (double f : {cfg.train_frac, cfg.val_frac, cfg.test_frac}) {
    if (!(f > 0.0 && f < 1.0)) fail(ErrorCode::InvalidArgument, "split fractions must lie in (0, 1)");
  }
  const double sum = cfg.train_frac + cfg.val_frac + cfg.test_frac;
  if (std::fabs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::FractionsDoNotSumToOne, "fractions sum to " + std::to_string(sum));
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "-";
}

std::optional<Split> parse_split(std::string_view s) {
  s = trim(s);
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

Label encode_label(std::string_view diagnosis_code) {
  const std::string code = lower(trim(diagnosis_code));
  if (code == "nv") return Label::Benign;
  if (code == "mel") return Label::Malignant;
  return Label::Undetermined;
}

std::vector<SampleRecord> parse_metadata(std::string_view csv_text, const std::filesystem::path& image_dir) {
  auto lines = lines_of(csv_text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorCode::EmptyInput, "metadata has no header row");

  const std::vector<std::string> header = split_csv_line(lines.front());
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (lower(header[i]) == name) return i;
    }
    fail(ErrorCode::MissingColumn, "metadata lacks column '" + std::string(name) + "'");
  };
  const std::size_t id_col = column("image_id");
  const std::size_t lesion_col = column("lesion_id");
  const std::size_t dx_col = column("dx");
  const std::size_t needed = std::max({id_col, lesion_col, dx_col}) + 1;

  std::vector<SampleRecord> records;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(lines[i]);
    if (fields.size() < needed) {
      fail(ErrorCode::MissingColumn, "row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) + " fields");
    }
    SampleRecord rec;
    rec.image_id = fields[id_col];
    rec.lesion_id = fields[lesion_col];
    rec.diagnosis_code = fields[dx_col];
    rec.label = encode_label(rec.diagnosis_code);
    rec.image_path = image_dir / (rec.image_id + ".jpg");
    if (!seen.insert(rec.image_id).second) fail(ErrorCode::DuplicateImageId, rec.image_id);
    records.push_back(std::move(rec));
  }
  if (records.empty()) fail(ErrorCode::EmptyInput, "metadata has no data rows");
  return records;
}

std::vector<const SampleRecord*> DatasetManifest::in_split(Split s) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records) {
    auto it = split_of.find(r.image_id);
    if (it != split_of.end() && it->second == s) out.push_back(&r);
  }
  return out;
}

std::size_t DatasetManifest::count(Split s, Label label) const {
  std::size_t n = 0;
  for (const SampleRecord* r : in_split(s)) n += r->label == label ? 1 : 0;
  return n;
}

std::array<std::size_t, 3> split_totals(std::size_t n, const SplitConfig& cfg) {
  validate(cfg);
  const std::array<double, 3> fracs{cfg.train_frac, cfg.val_frac, cfg.test_frac};
  std::array<std::size_t, 3> totals{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const double q = snapped(static_cast<double>(n) * fracs[s]);
    totals[s] = static_cast<std::size_t>(std::floor(q));
    rem[s] = q - std::floor(q);
    assigned += totals[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++totals[order[k % 3]];
  return totals;
}

DatasetManifest split(const DatasetManifest& manifest, const SplitConfig& cfg) {
  validate(cfg);
  const std::array<double, 3> fracs{cfg.train_frac, cfg.val_frac, cfg.test_frac};
  const std::array<Label, 2> classes{Label::Benign, Label::Malignant};

  std::array<std::vector<std::string>, 2> members;
  for (const auto& r : manifest.records) {
    if (r.label == Label::Benign) members[0].push_back(r.image_id);
    if (r.label == Label::Malignant) members[1].push_back(r.image_id);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (members[c].empty()) {
      fail(ErrorCode::EmptyClass, std::string(classes[c] == Label::Benign ? "benign" : "malignant") + " class is empty");
    }
  }

  const std::array<std::size_t, 3> totals = split_totals(members[0].size() + members[1].size(), cfg);

  std::array<std::array<std::size_t, 3>, 2> counts{};
  std::array<std::array<double, 3>, 2> frac_part{};
  std::array<std::size_t, 3> deficit = totals;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t s = 0; s < 3; ++s) {
      const double q = snapped(static_cast<double>(members[c].size()) * fracs[s]);
      counts[c][s] = static_cast<std::size_t>(std::floor(q));
      frac_part[c][s] = q - std::floor(q);
      deficit[s] -= counts[c][s];
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t remainder = members[c].size() - (counts[c][0] + counts[c][1] + counts[c][2]);
    std::array<bool, 3> given{};
    for (; remainder > 0; --remainder) {
      auto pick = [&](bool allow_repeat) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (std::size_t s = 0; s < 3; ++s) {
          if (deficit[s] == 0 || (given[s] && !allow_repeat)) continue;
          if (!best || frac_part[c][s] > frac_part[c][*best]) best = s;
        }
        return best;
      };
      std::optional<std::size_t> s = pick(false);
      if (!s) s = pick(true);
      if (!s) s = 0;
      ++counts[c][*s];
      given[*s] = true;
      if (deficit[*s] > 0) --deficit[*s];
    }
  }

  DatasetManifest out;
  out.records = manifest.records;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::string> ids = members[c];
    std::sort(ids.begin(), ids.end());
    CounterRng rng(cfg.seed, Stream::Split, c);
    shuffle(std::span<std::string>(ids), rng);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[c][s]; ++k) out.split_of[ids[pos++]] = static_cast<Split>(s);
    }
  }
  return out;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::ostringstream out;
  for (const auto& r : manifest.records) {
    auto it = manifest.split_of.find(r.image_id);
    out << r.image_id << ',' << r.lesion_id << ',' << r.diagnosis_code << ',' << static_cast<int>(r.label) << ','
        << (it == manifest.split_of.end() ? std::string_view("-") : to_string(it->second)) << '\n';
  }
  return out.str();
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& image_dir) {
  DatasetManifest m;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(text)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      fail(ErrorCode::CorruptHeader, "manifest line " + std::to_string(line_no) + " needs 5 fields");
    }
    if (fields[0] == "image_id") continue;
    SampleRecord r;
    r.image_id = fields[0];
    r.lesion_id = fields[1];
    r.diagnosis_code = fields[2];
    r.label = encode_label(r.diagnosis_code);
    if (fields[3] != std::to_string(static_cast<int>(r.label))) {
      fail(ErrorCode::CorruptHeader, "manifest line " + std::to_string(line_no) + ": label does not match dx");
    }
    r.image_path = image_dir / (r.image_id + ".jpg");
    if (!seen.insert(r.image_id).second) fail(ErrorCode::DuplicateImageId, r.image_id);
    if (auto s = parse_split(fields[4])) {
      if (r.label == Label::Undetermined) {
        fail(ErrorCode::CorruptHeader, "undetermined record " + r.image_id + " assigned to a split");
      }
      m.split_of[r.image_id] = *s;
    } else if (fields[4] != "-") {
      fail(ErrorCode::CorruptHeader, "manifest line " + std::to_string(line_no) + ": bad split '" + fields[4] + "'");
    }
    m.records.push_back(std::move(r));
  }
  if (m.records.empty()) fail(ErrorCode::EmptyInput, "manifest has no records");
  return m;
}

std::set<std::string> parse_exclusion_list(std::string_view text) {
  std::set<std::string> ids;
  for (std::string_view line : lines_of(text)) {
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) ids.emplace(line);
  }
  return ids;
}

std::vector<SampleRecord> apply_exclusions(std::vector<SampleRecord> records, const std::set<std::string>& excluded) {
  std::erase_if(records, [&](const SampleRecord& r) { return excluded.contains(r.image_id); });
  return records;
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::LowContrast: return "low_contrast";
    case RejectReason::Blurry: return "blurry";
    case RejectReason::ArtifactHeavy: return "artifact_heavy";
  }
  return "none";
}

double laplacian_variance(const ImageBuffer& gray) {
  if (gray.height() < 3 || gray.width() < 3) return 0.0;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t y = 1; y + 1 < gray.height(); ++y) {
    for (std::size_t x = 1; x + 1 < gray.width(); ++x) {
      const double lap =
          gray.at(y - 1, x) + gray.at(y + 1, x) + gray.at(y, x - 1) + gray.at(y, x + 1) - 4.0 * gray.at(y, x);
      sum += lap;
      sum_sq += lap * lap;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  return std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
}

double quantile_range(const ImageBuffer& gray, double lo, double hi) {
  std::vector<double> v(gray.data().begin(), gray.data().end());
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, v.size() - 1);
    return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
  };
  return q(hi) - q(lo);
}

QualityReport quality_filter(const ImageBuffer& image, const QualityThresholds& thresholds, std::string image_id) {
  if (image.empty()) fail(ErrorCode::EmptyImage, "cannot score an empty image");
  const ImageBuffer gray = preprocess::to_grayscale(image);
  QualityReport report;
  report.image_id = std::move(image_id);
  report.sharpness_score = laplacian_variance(gray);
  report.contrast_score = quantile_range(gray);

  preprocess::PreprocessConfig detect_cfg;
  detect_cfg.mean_window = std::min({detect_cfg.mean_window, gray.height(), gray.width()});
  const double artifact_fraction = preprocess::detect_reflection(gray, detect_cfg).fraction();

  if (report.contrast_score < thresholds.min_contrast) {
    report.reject_reason = RejectReason::LowContrast;
  } else if (report.sharpness_score < thresholds.min_sharpness) {
    report.reject_reason = RejectReason::Blurry;
  } else if (artifact_fraction > thresholds.max_artifact_fraction) {
    report.reject_reason = RejectReason::ArtifactHeavy;
  }
  report.kept = report.reject_reason == RejectReason::None;
  return report;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace derm::dataset
