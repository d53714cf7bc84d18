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
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "dermnet/dataset.hpp"
#include "dermnet/preprocess.hpp"
#include "helpers.hpp"

using namespace derm;
using namespace derm::dataset;

namespace {

std::string metadata_csv(const std::vector<std::pair<std::string, int>>& class_counts) {
  std::ostringstream csv;
  csv << "lesion_id,image_id,dx,dx_type,age,sex,localization\n";
  int id = 0;
  for (const auto& [dx, count] : class_counts) {
    for (int i = 0; i < count; ++i, ++id) {
      csv << "HAM_" << id << ",ISIC_" << 1000000 + id << ',' << dx << ",histo,45.0,male,back\n";
    }
  }
  return csv.str();
}

DatasetManifest labeled_manifest(std::size_t benign, std::size_t malignant, std::size_t undetermined = 0) {
  return {parse_metadata(metadata_csv({{"nv", static_cast<int>(benign)},
                                       {"mel", static_cast<int>(malignant)},
                                       {"bkl", static_cast<int>(undetermined)}}),
                         "/img"),
          {}};
}

std::array<std::size_t, 3> totals(const DatasetManifest& m) {
  return {m.in_split(Split::Train).size(), m.in_split(Split::Val).size(), m.in_split(Split::Test).size()};
}

ImageBuffer checkerboard(std::size_t n, std::size_t cell) {
  ImageBuffer img(n, n, 1);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) img.at(y, x) = ((y / cell + x / cell) % 2) ? 1.0 : 0.0;
  return img;
}

ImageBuffer box_blur(const ImageBuffer& img, int k) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  const int h = static_cast<int>(img.height()), w = static_cast<int>(img.width()), r = k / 2;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (std::size_t c = 0; c < img.channels(); ++c) {
        double s = 0.0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            s += img.at(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1), c);
        out.at(y, x, c) = s / (k * k);
      }
  return out;
}

}  // namespace

TEST_CASE("encode_label maps nv and mel, everything else undetermined") {
  CHECK(encode_label("nv") == Label::Benign);
  CHECK(encode_label("mel") == Label::Malignant);
  CHECK(encode_label("bkl") == Label::Undetermined);
  CHECK(encode_label("  NV ") == Label::Benign);
  CHECK(encode_label("Mel\t") == Label::Malignant);
  CHECK(encode_label("") == Label::Undetermined);
  CHECK(static_cast<int>(Label::Benign) == 0);
  CHECK(static_cast<int>(Label::Malignant) == 1);
}

TEST_CASE("encode_label is idempotent under trimming and casing") {
  for (std::string s : {"nv", "mel", "bcc", "akiec", "vasc", "df", "bkl", "xyz"}) {
    const Label base = encode_label(s);
    std::string upper = s;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    CHECK(encode_label(upper) == base);
    CHECK(encode_label("  " + s + "  ") == base);
    CHECK(encode_label(" \t" + upper + " \n") == base);
  }
}

TEST_CASE("HAM10000 class mix yields the published benign/malignant/undetermined counts") {
  // Per-class counts of the public HAM10000 metadata.
  const auto records = parse_metadata(
      metadata_csv({{"nv", 6705}, {"mel", 1113}, {"bkl", 1099}, {"bcc", 514}, {"akiec", 327}, {"vasc", 142}, {"df", 115}}),
      "/data/images");
  std::map<Label, int> counts;
  for (const auto& r : records) ++counts[r.label];
  CHECK(records.size() == 10015);
  CHECK(counts[Label::Benign] == 6705);
  CHECK(counts[Label::Malignant] == 1113);
  CHECK(counts[Label::Undetermined] == 2197);
  CHECK(records.front().image_path == std::filesystem::path("/data/images") / (records.front().image_id + ".jpg"));
}

TEST_CASE("parse_metadata errors") {
  CHECK_ERROR(parse_metadata("lesion_id,image_id,dx\n", "/x"), ErrorCode::EmptyInput);
  CHECK_ERROR(parse_metadata("", "/x"), ErrorCode::EmptyInput);
  CHECK_ERROR(parse_metadata("lesion_id,image_id,dx\nL1,I1,nv\nL2,I1,mel\n", "/x"), ErrorCode::DuplicateImageId);
  try {
    parse_metadata("lesion_id,image_id,age\nL1,I1,40\n", "/x");
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
    CHECK(std::string(e.what()).find("dx") != std::string::npos);
  }
}

TEST_CASE("parse_metadata handles quoted fields and column order") {
  const auto r = parse_metadata("dx,\"note\",image_id,lesion_id\r\nmel,\"a, \"\"quoted\"\" note\",I9,L9\r\n", "/d");
  REQUIRE(r.size() == 1);
  CHECK(r[0].image_id == "I9");
  CHECK(r[0].lesion_id == "L9");
  CHECK(r[0].diagnosis_code == "mel");
  CHECK(r[0].label == Label::Malignant);
}

TEST_CASE("split totals follow floor plus largest remainder") {
  CHECK(split_totals(10, {0.7, 0.2, 0.1, 0}) == std::array<std::size_t, 3>{7, 2, 1});
  const auto t = split_totals(7115, {0.8, 0.1, 0.1, 0});
  CHECK(t[0] == 5692);
  CHECK(t[1] + t[2] == 1423);
  CHECK(((t[1] == 711 && t[2] == 712) || (t[1] == 712 && t[2] == 711)));
}

TEST_CASE("10 samples, 5 per class, 70/20/10 gives 7/2/1") {
  const DatasetManifest out = split(labeled_manifest(5, 5), {0.7, 0.2, 0.1, 42});
  CHECK(totals(out) == std::array<std::size_t, 3>{7, 2, 1});
}

TEST_CASE("fractions must sum to one") {
  CHECK_ERROR(split(labeled_manifest(5, 5), {0.7, 0.2, 0.2, 0}), ErrorCode::FractionsDoNotSumToOne);
  CHECK_ERROR(split(labeled_manifest(5, 5), {0.7, 0.3, 0.0, 0}), ErrorCode::InvalidArgument);
}

TEST_CASE("empty class is rejected") {
  CHECK_ERROR(split(labeled_manifest(5, 0, 3), {0.7, 0.2, 0.1, 0}), ErrorCode::EmptyClass);
}

TEST_CASE("6136 benign + 979 malignant at 80/10/10") {
  const DatasetManifest m = labeled_manifest(6136, 979);
  const DatasetManifest out = split(m, {0.8, 0.1, 0.1, 7});
  const auto t = totals(out);
  CHECK(t[0] == 5692);
  CHECK(((t[1] == 711 && t[2] == 712) || (t[1] == 712 && t[2] == 711)));

  const double global = 979.0 / 7115.0;
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const double n = static_cast<double>(out.in_split(s).size());
    CHECK(std::abs(static_cast<double>(out.count(s, Label::Malignant)) / n - global) <= 0.02);
  }
}

TEST_CASE("split is a partition of labeled records") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DatasetManifest m = labeled_manifest(37, 23, 11);
    const DatasetManifest out = split(m, {0.7, 0.2, 0.1, seed});
    std::size_t assigned = 0;
    for (const auto& r : out.records) {
      const bool has = out.split_of.count(r.image_id) > 0;
      CHECK(has == (r.label != Label::Undetermined));
      assigned += has;
    }
    CHECK(assigned == 60);
    CHECK(out.split_of.size() == 60);
  }
}

TEST_CASE("same seed is byte-identical, different seeds keep counts") {
  const DatasetManifest m = labeled_manifest(120, 45, 5);
  const std::string a = format_manifest(split(m, {0.7, 0.2, 0.1, 5}));
  const std::string b = format_manifest(split(m, {0.7, 0.2, 0.1, 5}));
  CHECK(a == b);
  const DatasetManifest x = split(m, {0.7, 0.2, 0.1, 5});
  const DatasetManifest y = split(m, {0.7, 0.2, 0.1, 6});
  CHECK(x.split_of != y.split_of);
  for (Split s : {Split::Train, Split::Val, Split::Test})
    for (Label l : {Label::Benign, Label::Malignant}) CHECK(x.count(s, l) == y.count(s, l));
}

TEST_CASE("stratification within two points on large manifests") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DatasetManifest out = split(labeled_manifest(900, 150), {0.7, 0.2, 0.1, seed});
    const double global = 150.0 / 1050.0;
    for (Split s : {Split::Train, Split::Val, Split::Test}) {
      const double n = static_cast<double>(out.in_split(s).size());
      REQUIRE(n >= 100);
      CHECK(std::abs(static_cast<double>(out.count(s, Label::Malignant)) / n - global) <= 0.02);
    }
  }
}

TEST_CASE("manifest text round-trips") {
  const DatasetManifest out = split(labeled_manifest(8, 6, 2), {0.5, 0.25, 0.25, 1});
  const std::string text = format_manifest(out);
  const DatasetManifest back = parse_manifest(text, "/img");
  CHECK(back.records == out.records);
  CHECK(back.split_of == out.split_of);
  CHECK(format_manifest(back) == text);
  CHECK(text.find(",-\n") != std::string::npos);
}

TEST_CASE("exclusion list skips comments and blank lines") {
  const auto ex = parse_exclusion_list("# removed by hand\nISIC_1000001\n\n  ISIC_1000003  # blurry\n");
  CHECK(ex == std::set<std::string>{"ISIC_1000001", "ISIC_1000003"});
  const auto kept = apply_exclusions(labeled_manifest(3, 2).records, ex);
  CHECK(kept.size() == 3);
}

TEST_CASE("quality filter: uniform gray is low contrast") {
  const QualityReport r = quality_filter(ImageBuffer(32, 32, 3, 0.5), {});
  CHECK_FALSE(r.kept);
  CHECK(r.reject_reason == RejectReason::LowContrast);
  CHECK(r.contrast_score == 0.0);
  CHECK(r.sharpness_score == 0.0);
}

TEST_CASE("quality filter: sharp checkerboard kept, blurred checkerboard blurry") {
  ImageBuffer sharp = checkerboard(64, 16);
  for (double& v : sharp.data()) v = 0.2 + 0.6 * v;
  const ImageBuffer blurred = box_blur(sharp, 15);
  const double before = laplacian_variance(sharp);
  const double after = laplacian_variance(blurred);
  const QualityThresholds t;
  CHECK(before > t.min_sharpness);
  CHECK(after < t.min_sharpness);

  const QualityReport a = quality_filter(sharp, t);
  CHECK(a.kept);
  CHECK(a.reject_reason == RejectReason::None);
  const QualityReport b = quality_filter(blurred, t);
  CHECK(b.reject_reason == RejectReason::Blurry);
  CHECK_FALSE(b.kept);
}

TEST_CASE("quality filter: heavy reflections rejected") {
  ImageBuffer img = checkerboard(64, 8);
  for (double& v : img.data()) v = 0.2 + 0.3 * v;
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x)
      if ((x / 2 + y / 2) % 2 == 0) img.at(y, x) = 0.99;
  const QualityReport r = quality_filter(img, {});
  CHECK(r.reject_reason == RejectReason::ArtifactHeavy);
}

TEST_CASE("quality filter: kept iff no reject reason, empty image errors") {
  CHECK_ERROR(quality_filter(ImageBuffer(), {}), ErrorCode::EmptyImage);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ImageBuffer img(24, 24, 1);
    CounterRng rng(seed);
    const double amp = rng.uniform(0.0, 0.5);
    for (double& v : img.data()) v = 0.3 + amp * rng.uniform();
    const QualityReport r = quality_filter(img, {});
    CHECK(r.kept == (r.reject_reason == RejectReason::None));
  }
}

TEST_CASE("extra blur never increases sharpness") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ImageBuffer img(40, 40, 1);
    CounterRng rng(seed);
    for (double& v : img.data()) v = rng.uniform();
    double prev = laplacian_variance(img);
    for (int round = 0; round < 3; ++round) {
      img = box_blur(img, 3);
      const double now = laplacian_variance(img);
      CHECK(now <= prev);
      prev = now;
    }
  }
}
