#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "texsense/dataset.hpp"
#include "texsense/error.hpp"
#include "texsense/synth_signals.hpp"
#include "texsense/transport.hpp"
#include "texsense/wav.hpp"

using namespace texsense;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("texsense_test_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Two-channel sine at a given RMS level.
WavData sine_wav(double seconds, double rms_dbfs, int rate = 48000, std::size_t channels = 2) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  const double amp = std::sqrt(2.0) * std::pow(10.0, rms_dbfs / 20.0);
  WavData w;
  w.sample_rate_hz = rate;
  w.channels.assign(channels, std::vector<float>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    for (auto& ch : w.channels)
      ch[i] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * 250.0 * t));
  }
  return w;
}

Recording make_recording(std::vector<float> piezo, TextureLabel label, const std::string& name) {
  Recording r;
  r.entry.path = name;
  r.entry.label = label;
  r.mems = piezo;
  r.piezo = std::move(piezo);
  r.piezo_rms = rms_linear(r.piezo);
  return r;
}

/// Seconds of tone at `loud_dbfs`, then the same length at `quiet_dbfs`.
std::vector<float> loud_then_quiet(double seconds, double loud_dbfs, double quiet_dbfs) {
  const auto n = static_cast<std::size_t>(seconds * 48000);
  std::vector<float> x(2 * n);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lvl = i < n ? loud_dbfs : quiet_dbfs;
    x[i] = static_cast<float>(std::sqrt(2.0) * std::pow(10.0, lvl / 20.0) *
                              std::sin(2 * std::numbers::pi * 300.0 * static_cast<double>(i) / 48000));
  }
  return x;
}

std::size_t expected_chunks(std::size_t frames) {
  const std::size_t nbuf = frames / 512;
  return nbuf < 24 ? 0 : (nbuf - 24) / 12 + 1;
}

}  // namespace

// ---------------------------------------------------------------- manifest

TEST(Manifest, ParsesFieldsAndResolvesRelativePaths) {
  const std::string text =
      "texsense-manifest 1\n"
      "sample_rate 48000\n"
      "channels piezo,mems\n"
      "# path object label scenario split\n"
      "rec/a.wav  stone_a  rough  handheld  train\n"
      "\n"
      "/abs/b.wav glass smooth bench test\r\n";
  const auto m = DatasetManifest::parse(text, "/data");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.sample_rate_hz, 48000);
  EXPECT_EQ(m.entries[0].path, fs::path("/data/rec/a.wav"));
  EXPECT_EQ(m.entries[0].object, "stone_a");
  EXPECT_EQ(m.entries[0].label, TextureLabel::Rough);
  EXPECT_EQ(m.entries[0].scenario, "handheld");
  EXPECT_EQ(m.entries[0].split, Split::Train);
  EXPECT_EQ(m.entries[1].path, fs::path("/abs/b.wav"));
  EXPECT_EQ(m.entries[1].label, TextureLabel::Smooth);
  EXPECT_EQ(m.entries[1].split, Split::Test);
  EXPECT_TRUE(m.has(Split::Test));
  EXPECT_EQ(m.only(Split::Train).entries.size(), 1u);
}

TEST(Manifest, SerializeRoundTrip) {
  DatasetManifest m;
  m.sample_rate_hz = 44100;
  m.entries.push_back({"/d/x/one.wav", "obj1", TextureLabel::Smooth, "bench", Split::Test});
  m.entries.push_back({"/d/two.wav", "obj2", TextureLabel::Rough, "handheld", Split::Train});
  const auto back = DatasetManifest::parse(m.serialize("/d"), "/d");
  EXPECT_EQ(back.sample_rate_hz, 44100);
  ASSERT_EQ(back.entries.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.entries[i].path.lexically_normal(), m.entries[i].path.lexically_normal());
    EXPECT_EQ(back.entries[i].object, m.entries[i].object);
    EXPECT_EQ(back.entries[i].label, m.entries[i].label);
    EXPECT_EQ(back.entries[i].scenario, m.entries[i].scenario);
    EXPECT_EQ(back.entries[i].split, m.entries[i].split);
  }
}

TEST(Manifest, MalformedInputIsConfigError) {
  const char* bad[] = {
      "",
      "not-a-manifest 1\n",
      "texsense-manifest 2\n",
      "texsense-manifest 1\na.wav obj medium other train\n",
      "texsense-manifest 1\na.wav obj rough other validate\n",
      "texsense-manifest 1\na.wav obj rough other\n",
      "texsense-manifest 1\nsample_rate abc\n",
      "texsense-manifest 1\nsample_rate -5\n",
      "texsense-manifest 1\nchannels mems,piezo\n",
  };
  for (const char* text : bad) EXPECT_THROW(DatasetManifest::parse(text, {}), ConfigError) << text;
}

TEST(Manifest, ErrorNamesLine) {
  try {
    DatasetManifest::parse("texsense-manifest 1\n\na.wav o wrong s train\n", {});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

// ---------------------------------------------------------------- wav

TEST(Wav, FloatRoundTripIsExact) {
  const auto dir = fresh_dir("wav_float");
  const auto w = sine_wav(0.1, -10.0);
  write_wav(dir / "x.wav", w, WavSampleFormat::Float32);
  const auto r = read_wav(dir / "x.wav");
  EXPECT_EQ(r.sample_rate_hz, 48000);
  EXPECT_EQ(r.channels, w.channels);
}

TEST(Wav, Pcm16RoundTripWithinOneLsb) {
  const auto dir = fresh_dir("wav_pcm");
  const auto w = sine_wav(0.1, -6.0);
  write_wav(dir / "x.wav", w, WavSampleFormat::Pcm16);
  const auto r = read_wav(dir / "x.wav");
  ASSERT_EQ(r.num_channels(), 2u);
  ASSERT_EQ(r.num_frames(), w.num_frames());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < w.num_frames(); ++i)
      EXPECT_NEAR(r.channels[c][i], w.channels[c][i], 1.0 / 32767.0);
}

TEST(Wav, GarbageIsDataError) {
  const auto dir = fresh_dir("wav_bad");
  std::ofstream(dir / "bad.wav") << "this is not a riff file at all";
  EXPECT_THROW(read_wav(dir / "bad.wav"), DataError);
}

// ---------------------------------------------------------------- ingest

TEST(Ingest, MissingFileIsItemizedAndOthersLoad) {
  const auto dir = fresh_dir("ingest_missing");
  DatasetManifest m;
  for (int i = 0; i < 3; ++i) {
    const auto p = dir / ("f" + std::to_string(i) + ".wav");
    write_wav(p, sine_wav(0.5, -20.0));
    m.entries.push_back({p, "o", TextureLabel::Rough, "x", Split::Train});
  }
  m.entries.insert(m.entries.begin() + 1,
                   ManifestEntry{dir / "missing.wav", "o", TextureLabel::Rough, "x", Split::Train});
  const auto r = ingest(m);
  EXPECT_EQ(r.recordings.size(), 3u);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_EQ(r.issues[0].entry_index, 1u);
  EXPECT_NE(r.issues[0].message.find("missing.wav"), std::string::npos);
}

TEST(Ingest, MonoFileNamesFileAndChannelCount) {
  const auto dir = fresh_dir("ingest_mono");
  DatasetManifest m;
  write_wav(dir / "mono.wav", sine_wav(0.2, -20.0, 48000, 1));
  m.entries.push_back({dir / "mono.wav", "o", TextureLabel::Smooth, "x", Split::Train});
  const auto r = ingest(m);
  EXPECT_TRUE(r.recordings.empty());
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_NE(r.issues[0].message.find("mono.wav"), std::string::npos);
  EXPECT_NE(r.issues[0].message.find("found 1"), std::string::npos);
}

TEST(Ingest, SampleRateMismatchIsItemized) {
  const auto dir = fresh_dir("ingest_rate");
  DatasetManifest m;
  write_wav(dir / "r.wav", sine_wav(0.2, -20.0, 44100));
  m.entries.push_back({dir / "r.wav", "o", TextureLabel::Smooth, "x", Split::Train});
  const auto r = ingest(m);
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_NE(r.issues[0].message.find("44100"), std::string::npos);
}

TEST(Ingest, ThirtySecondFileHasAllFrames) {
  const auto dir = fresh_dir("ingest_long");
  DatasetManifest m;
  write_wav(dir / "long.wav", sine_wav(30.0, -20.0));
  m.entries.push_back({dir / "long.wav", "o", TextureLabel::Rough, "x", Split::Train});
  const auto r = ingest(m);
  ASSERT_EQ(r.recordings.size(), 1u);
  EXPECT_EQ(r.recordings[0].frames(), 1'440'000u);
  EXPECT_DOUBLE_EQ(r.recordings[0].duration_s(), 30.0);
  EXPECT_NEAR(linear_to_dbfs(r.recordings[0].piezo_rms), -20.0, 0.01);
}

// ---------------------------------------------------------------- thresholds

TEST(ThresholdMode, ParseAndDescribe) {
  EXPECT_EQ(ThresholdMode::parse("fixed:-30").fixed_dbfs, -30.0);
  EXPECT_EQ(ThresholdMode::parse("fixed:-30").kind, ThresholdMode::Kind::Fixed);
  EXPECT_EQ(ThresholdMode::parse("dynamic:0.25").ratio, 0.25);
  EXPECT_EQ(ThresholdMode::parse("dynamic:0.25").kind, ThresholdMode::Kind::Dynamic);
  EXPECT_EQ(ThresholdMode::fixed(-26).describe(), "fixed:-26");
  EXPECT_EQ(ThresholdMode::dynamic(0.5).describe(), "dynamic:0.5");
  for (const char* bad : {"fixed:3", "fixed:0", "dynamic:0", "dynamic:-1", "median", "fixed:abc"})
    EXPECT_THROW(ThresholdMode::parse(bad), ConfigError) << bad;
}

TEST(ThresholdMode, DynamicIsRatioOfMeanFileRms) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(std::vector<float>(48000, 0.75f), TextureLabel::Rough, "a"));
  recs.push_back(make_recording(std::vector<float>(48000, 0.25f), TextureLabel::Rough, "b"));
  recs.push_back(make_recording(std::vector<float>(48000, 0.1f), TextureLabel::Smooth, "c"));
  const auto t = resolve_thresholds(recs, ThresholdMode::dynamic(0.5));
  EXPECT_DOUBLE_EQ(t.at(TextureLabel::Rough), 0.25);
  EXPECT_NEAR(t.at(TextureLabel::Smooth), 0.05, 1e-9);
}

// ---------------------------------------------------------------- chunking

TEST(Chunking, GeometryAndCount) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(loud_then_quiet(2.0, -20, -80), TextureLabel::Rough, "a"));
  const auto set = chunk_and_label(recs, ThresholdMode::fixed(-26));
  EXPECT_EQ(set.length_samples, 12288u);
  EXPECT_EQ(set.hop_samples, 6144u);
  EXPECT_EQ(set.chunks.size(), expected_chunks(recs[0].frames()));
  for (std::size_t i = 0; i < set.chunks.size(); ++i) {
    EXPECT_EQ(set.chunks[i].end_sample, 12288u + 6144u * i);
    EXPECT_EQ(set.chunks[i].piezo.size(), 512u);
    EXPECT_EQ(set.chunks[i].features.size(), 514u);
  }
}

TEST(Chunking, LoudWindowTakesFileLabelQuietIsNonValid) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(loud_then_quiet(2.0, -20, -80), TextureLabel::Rough, "r"));
  recs.push_back(make_recording(loud_then_quiet(2.0, -20, -80), TextureLabel::Smooth, "s"));
  const auto set = chunk_and_label(recs, ThresholdMode::fixed(-26));
  ASSERT_EQ(set.sources.size(), 2u);
  const ClassIndex contact[] = {ClassIndex::Rough, ClassIndex::Smooth};
  for (const auto& c : set.chunks) {
    if (c.end_sample <= 96000) {
      EXPECT_EQ(c.label, contact[c.source]);
      EXPECT_NEAR(c.piezo_dbfs(), -20.0, 0.05);
    } else if (c.end_sample - 12288 >= 96000) {
      EXPECT_EQ(c.label, ClassIndex::NonValid);
      EXPECT_NEAR(c.piezo_dbfs(), -80.0, 0.05);
    }
  }
}

TEST(Chunking, WindowAtDynamicThresholdIsNonValid) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(std::vector<float>(48000, 0.75f), TextureLabel::Rough, "hi"));
  recs.push_back(make_recording(std::vector<float>(48000, 0.25f), TextureLabel::Rough, "lo"));
  const auto set = chunk_and_label(recs, ThresholdMode::dynamic(0.5));
  ASSERT_FALSE(set.chunks.empty());
  for (const auto& c : set.chunks) {
    EXPECT_DOUBLE_EQ(c.threshold, 0.25);
    if (c.source == 0) EXPECT_EQ(c.label, ClassIndex::Rough);
    if (c.source == 1) {
      EXPECT_EQ(c.piezo_rms, 0.25);
      EXPECT_EQ(c.label, ClassIndex::NonValid);
    }
  }
}

TEST(Chunking, ContactChunksExceedTheirThreshold) {
  std::vector<Recording> recs;
  const auto wav = synth_recording({{SyntheticTexture::Rough, 1.5},
                                    {SyntheticTexture::Silence, 1.0},
                                    {SyntheticTexture::Smooth, 1.5}},
                                   5);
  recs.push_back(make_recording(wav.channels[0], TextureLabel::Rough, "mix"));
  for (const auto mode : {ThresholdMode::fixed(-26), ThresholdMode::fixed(-40), ThresholdMode::dynamic(0.5)}) {
    const auto set = chunk_and_label(recs, mode);
    std::size_t contact = 0;
    for (const auto& c : set.chunks) {
      if (c.label != ClassIndex::NonValid) {
        EXPECT_GT(c.piezo_rms, c.threshold);
        ++contact;
      } else {
        EXPECT_LE(c.piezo_rms, c.threshold);
      }
    }
    EXPECT_GT(contact, 0u) << mode.describe();
  }
}

TEST(Chunking, RaisingThresholdNeverAddsContact) {
  std::vector<Recording> recs;
  const auto wav = synth_recording({{SyntheticTexture::Rough, 1.0},
                                    {SyntheticTexture::Silence, 0.7},
                                    {SyntheticTexture::Smooth, 1.2},
                                    {SyntheticTexture::Silence, 0.5}},
                                   9);
  recs.push_back(make_recording(wav.channels[0], TextureLabel::Smooth, "m"));
  const double thresholds[] = {-60, -45, -30, -26, -20, -14, -8};
  std::vector<ClassIndex> prev;
  for (double t : thresholds) {
    const auto set = chunk_and_label(recs, ThresholdMode::fixed(t));
    if (!prev.empty()) {
      ASSERT_EQ(prev.size(), set.chunks.size());
      for (std::size_t i = 0; i < prev.size(); ++i)
        if (prev[i] == ClassIndex::NonValid) EXPECT_EQ(set.chunks[i].label, ClassIndex::NonValid);
    }
    prev.clear();
    for (const auto& c : set.chunks) prev.push_back(c.label);
  }
}

TEST(Chunking, DeterministicHash) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(loud_then_quiet(1.0, -15, -50), TextureLabel::Rough, "a"));
  const auto a = chunk_and_label(recs, ThresholdMode::fixed(-26));
  const auto b = chunk_and_label(recs, ThresholdMode::fixed(-26));
  EXPECT_EQ(a.content_hash(), b.content_hash());
  EXPECT_EQ(a.content_hash().size(), 64u);
  const auto c = chunk_and_label(recs, ThresholdMode::fixed(-30));
  EXPECT_NE(a.content_hash(), c.content_hash());
}

TEST(Chunking, PassthroughCodecConditioningIsIdentity) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(loud_then_quiet(1.0, -15, -50), TextureLabel::Smooth, "a"));
  PassthroughCodec codec;
  ChunkingConfig cfg;
  cfg.codec = &codec;
  const auto plain = chunk_and_label(recs, ThresholdMode::fixed(-26));
  const auto coded = chunk_and_label(recs, ThresholdMode::fixed(-26), cfg);
  EXPECT_EQ(coded.codec, "passthrough");
  ASSERT_EQ(plain.chunks.size(), coded.chunks.size());
  for (std::size_t i = 0; i < plain.chunks.size(); ++i) {
    EXPECT_EQ(plain.chunks[i].features, coded.chunks[i].features);
    EXPECT_EQ(plain.chunks[i].label, coded.chunks[i].label);
  }
}

TEST(Chunking, MismatchedFeatureGeometryRejected) {
  ChunkingConfig cfg;
  cfg.features.window_samples = 256;
  EXPECT_THROW(chunk_and_label({}, ThresholdMode::fixed(-26), cfg), ConfigError);
  ChunkingConfig zero;
  zero.hop_buffers = 0;
  EXPECT_THROW(chunk_and_label({}, ThresholdMode::fixed(-26), zero), ConfigError);
}

// ---------------------------------------------------------------- chunk set io

TEST(ChunkSet, SerializeRoundTripAndAppend) {
  std::vector<Recording> recs;
  recs.push_back(make_recording(loud_then_quiet(1.0, -15, -50), TextureLabel::Rough, "a"));
  const auto set = chunk_and_label(recs, ThresholdMode::fixed(-26));
  const auto dir = fresh_dir("chunkset");
  set.save(dir / "c.bin");
  const auto back = LabeledChunkSet::load(dir / "c.bin");
  EXPECT_EQ(back.content_hash(), set.content_hash());
  EXPECT_EQ(back.sources, set.sources);
  EXPECT_EQ(back.threshold_mode, "fixed:-26");
  ASSERT_EQ(back.chunks.size(), set.chunks.size());
  EXPECT_EQ(back.chunks[3].features, set.chunks[3].features);
  EXPECT_EQ(back.chunks[3].piezo_rms, set.chunks[3].piezo_rms);

  auto merged = set;
  auto other = set;
  other.sources = {"other"};
  merged.append(other);
  EXPECT_EQ(merged.sources.size(), 2u);
  EXPECT_EQ(merged.chunks.size(), 2 * set.chunks.size());
  EXPECT_EQ(merged.chunks.back().source, 1u);
}

TEST(ChunkSet, TruncatedBytesRejected) {
  const auto set = synth_dataset(3, 2);
  auto bytes = set.serialize();
  bytes.resize(bytes.size() / 2);
  EXPECT_ANY_THROW(LabeledChunkSet::deserialize(bytes));
}

// ---------------------------------------------------------------- synthetic

TEST(SynthDataset, ExactCountsAndLevels) {
  const auto set = synth_dataset(7, 100);
  EXPECT_EQ(set.count(ClassIndex::Rough), 100u);
  EXPECT_EQ(set.count(ClassIndex::Smooth), 100u);
  EXPECT_EQ(set.count(ClassIndex::NonValid), 100u);
  for (const auto& c : set.chunks) {
    if (c.label == ClassIndex::NonValid)
      EXPECT_LT(c.piezo_dbfs(), -26.0);
    else
      EXPECT_GT(c.piezo_dbfs(), -26.0);
  }
}

TEST(SynthDataset, DeterministicPerSeed) {
  EXPECT_EQ(synth_dataset(7, 10).content_hash(), synth_dataset(7, 10).content_hash());
  EXPECT_NE(synth_dataset(7, 10).content_hash(), synth_dataset(8, 10).content_hash());
}

// Rough and smooth differ in how loud the MEMS channel is relative to the
// piezo, so a single threshold on the band-energy ratio separates them.
TEST(SynthDataset, BandEnergyRatioSeparatesTextures) {
  const auto set = synth_dataset(7, 100);
  std::size_t right = 0, total = 0;
  for (const auto& c : set.chunks) {
    if (c.label == ClassIndex::NonValid) continue;
    double ep = 0.0, em = 0.0;
    for (std::size_t k = 1; k < 257; ++k) {
      ep += static_cast<double>(c.features[k]) * c.features[k];
      em += static_cast<double>(c.features[257 + k]) * c.features[257 + k];
    }
    const bool rough = 10.0 * std::log10(em / ep) > -13.0;
    right += rough == (c.label == ClassIndex::Rough);
    ++total;
  }
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(total), 0.99);
}

TEST(SynthDataset, CorpusIngestsCleanly) {
  const auto dir = fresh_dir("corpus");
  const auto manifest_path = write_synthetic_corpus(dir, 4, 1, 3.0);
  const auto m = DatasetManifest::load(manifest_path);
  EXPECT_EQ(m.entries.size(), 4u);
  EXPECT_TRUE(m.has(Split::Train));
  EXPECT_TRUE(m.has(Split::Test));
  const auto r = ingest(m);
  EXPECT_TRUE(r.issues.empty());
  ASSERT_EQ(r.recordings.size(), 4u);
  const auto set = chunk_and_label(r.recordings, ThresholdMode::fixed(-26));
  EXPECT_GT(set.count(ClassIndex::Rough), 0u);
  EXPECT_GT(set.count(ClassIndex::Smooth), 0u);
  EXPECT_GT(set.count(ClassIndex::NonValid), 0u);
}
