#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <clifer/datasets.hpp>

using namespace clifer;

namespace {

std::vector<SubjectDataset> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

}  // namespace

TEST(Synthetic, ZeroNoiseFramesAreAnchors) {
  SynthConfig c;
  c.within_class_sigma = 0.0;
  c.subject_offset_sigma = 0.0;
  c.ar_coefficient = 0.0;
  c.subjects = 2;
  const auto anchors = class_anchors(c.dim, c.class_separation);
  for (const auto& ds : generate_synthetic(c))
    for (const auto& s : ds.sequences)
      for (const auto& f : s.frames) EXPECT_EQ(f, anchors[index_of(s.label)]);
}

TEST(Synthetic, AnchorsEquidistant) {
  for (double sep : {0.3, 1.0, 2.5}) {
    const auto a = class_anchors(32, sep);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j) {
        double ss = 0.0;
        for (std::size_t k = 0; k < 32; ++k) ss += (a[i][k] - a[j][k]) * (a[i][k] - a[j][k]);
        EXPECT_NEAR(std::sqrt(ss), sep, 1e-9);
      }
  }
}

TEST(Synthetic, Deterministic) {
  SynthConfig c;
  c.subjects = 3;
  EXPECT_EQ(generate_synthetic(c), generate_synthetic(c));
  auto d = c;
  d.seed = 2;
  EXPECT_NE(generate_synthetic(c), generate_synthetic(d));
}

TEST(Synthetic, DimTooSmall) {
  SynthConfig c;
  c.dim = 5;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
}

TEST(Synthetic, StationaryArVariance) {
  SynthConfig c;
  c.subjects = 1;
  c.dim = 8;
  c.sequences_per_class = 100;
  c.frames_per_sequence = 20;
  c.within_class_sigma = 0.3;
  c.ar_coefficient = 0.8;
  c.subject_offset_sigma = 0.0;
  const auto anchors = class_anchors(c.dim, c.class_separation);
  const auto ds = generate_synthetic(c)[0];
  double ss = 0.0;
  std::size_t n = 0, frames = 0;
  for (const auto& s : ds.sequences)
    for (const auto& f : s.frames) {
      ++frames;
      for (std::size_t k = 0; k < c.dim; ++k) {
        const double e = f[k] - anchors[index_of(s.label)][k];
        ss += e * e;
        ++n;
      }
    }
  ASSERT_GE(frames, 10000u);
  const double var = ss / static_cast<double>(n);
  EXPECT_NEAR(var / (c.within_class_sigma * c.within_class_sigma), 1.0, 0.1);
}

TEST(Csv, GroupsFramesBySample) {
  const auto data = parse(
      "subject_id,sample_id,frame_index,label,f0,f1\n"
      "A,x,1,happy,3,4\n"
      "A,x,0,happy,1,2\n");
  ASSERT_EQ(data.size(), 1u);
  ASSERT_EQ(data[0].sequences.size(), 1u);
  const auto& s = data[0].sequences[0];
  EXPECT_EQ(s.label, Expression::happy);
  ASSERT_EQ(s.frames.size(), 2u);
  EXPECT_EQ(s.frames[0], (Vector{1, 2}));
  EXPECT_EQ(s.frames[1], (Vector{3, 4}));
}

TEST(Csv, UnknownLabel) {
  EXPECT_THROW(parse("subject_id,sample_id,frame_index,label,f0\nA,x,0,disgust,1\n"), LabelError);
}

TEST(Csv, InconsistentDimension) {
  std::string header = "subject_id,sample_id,frame_index,label";
  std::string row32 = "A,x,0,fear", row31 = "A,x,1,fear";
  for (int k = 0; k < 32; ++k) {
    header += ",f" + std::to_string(k);
    row32 += ",0.5";
    if (k < 31) row31 += ",0.5";
  }
  EXPECT_THROW(parse(header + "\n" + row32 + "\n" + row31 + "\n"), SchemaError);
}

TEST(Csv, MalformedRowCarriesLineNumber) {
  try {
    parse("subject_id,sample_id,frame_index,label,f0\nA,x,0,fear,1\nA,x,zero,fear,1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse("subject_id,sample_id,frame_index,label,f0\nA,x\n"), ParseError);
  EXPECT_THROW(parse("subject_id,sample_id,frame_index,label,f0\nA,x,0,fear,abc\n"), ParseError);
  EXPECT_THROW(parse(""), SchemaError);
}

TEST(Csv, RoundTrip) {
  SynthConfig c;
  c.subjects = 2;
  c.dim = 6;
  const auto data = generate_synthetic(c);
  const auto path = (std::filesystem::temp_directory_path() / "clifer_roundtrip.csv").string();
  save_csv(path, data);
  EXPECT_EQ(load_csv(path), data);
  std::filesystem::remove(path);
}

TEST(Split, CeilRule) {
  SynthConfig c;
  c.subjects = 1;
  c.sequences_per_class = 10;
  const auto ds = generate_synthetic(c)[0];
  const auto sp = split(ds, 0.2, 4);
  for (Expression e : kAllExpressions) {
    EXPECT_EQ(sp.test.count(e), 2u);
    EXPECT_EQ(sp.train.count(e), 8u);
  }
  const auto again = split(ds, 0.2, 4);
  EXPECT_EQ(sp.test, again.test);
  EXPECT_EQ(sp.train, again.train);
}

TEST(Split, OneSequenceNamesClass) {
  SynthConfig c;
  c.subjects = 1;
  c.sequences_per_class = 2;
  auto ds = generate_synthetic(c)[0];
  std::erase_if(ds.sequences, [](const LabeledSequence& s) { return s.label == Expression::fear && s.sample_id != "fear-0"; });
  try {
    split(ds, 0.2, 1);
    FAIL() << "expected SplitError";
  } catch (const SplitError& e) {
    EXPECT_NE(std::string(e.what()).find("fear"), std::string::npos);
  }
}

TEST(Split, BothSidesPerClass) {
  SynthConfig c;
  c.subjects = 1;
  c.sequences_per_class = 3;
  const auto ds = generate_synthetic(c)[0];
  for (double f : {0.1, 0.5, 0.9}) {
    const auto sp = split(ds, f, 2);
    for (Expression e : kAllExpressions) {
      EXPECT_GE(sp.test.count(e), 1u);
      EXPECT_GE(sp.train.count(e), 1u);
    }
  }
}
