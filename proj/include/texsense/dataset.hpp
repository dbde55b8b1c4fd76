#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "texsense/audio_core.hpp"
#include "texsense/error.hpp"
#include "texsense/features.hpp"
#include "texsense/mlp.hpp"

namespace texsense {

class Codec;

enum class TextureLabel : std::uint8_t { Rough = 0, Smooth = 1 };
enum class Split : std::uint8_t { Train = 0, Test = 1 };

std::string to_string(TextureLabel l);
std::string to_string(Split s);
std::string to_string(ClassIndex c);
TextureLabel parse_texture_label(const std::string& s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest's directory
  std::string object;
  TextureLabel label = TextureLabel::Rough;
  std::string scenario = "other";
  Split split = Split::Train;
};

/// Recording list. Text format, one record per line after the header:
///
///   texsense-manifest 1
///   sample_rate 48000
///   channels piezo,mems
///   # path  object  label  scenario  split
///   rec/stone_a_light.wav  stone_a  rough  handheld  train
///
/// Fields are whitespace-separated; '#' starts a comment line. Relative
/// paths are resolved against the manifest's directory.
struct DatasetManifest {
  static constexpr int kVersion = 1;

  int sample_rate_hz = 48000;
  std::vector<ManifestEntry> entries;

  /// Throws ConfigError on a malformed manifest.
  static DatasetManifest parse(const std::string& text, const std::filesystem::path& base_dir);
  static DatasetManifest load(const std::filesystem::path& path);
  /// Paths are written relative to `base_dir` when possible.
  std::string serialize(const std::filesystem::path& base_dir = {}) const;
  void save(const std::filesystem::path& path) const;

  DatasetManifest only(Split split) const;
  bool has(Split split) const;
};

/// One validated two-channel recording.
struct Recording {
  ManifestEntry entry;
  std::vector<float> piezo;
  std::vector<float> mems;
  int sample_rate_hz = 48000;
  double piezo_rms = 0.0;  // linear, whole file

  std::size_t frames() const { return piezo.size(); }
  double duration_s() const { return static_cast<double>(frames()) / sample_rate_hz; }
};

struct IngestIssue {
  std::size_t entry_index = 0;
  std::filesystem::path path;
  ErrorKind kind = ErrorKind::Data;
  std::string message;
};

struct IngestResult {
  std::vector<Recording> recordings;
  std::vector<IngestIssue> issues;
};

/// Loads every manifest entry. Problems are itemized per entry and never
/// stop the remaining entries from loading.
IngestResult ingest(const DatasetManifest& manifest);

/// Contact threshold used to label chunks.
struct ThresholdMode {
  enum class Kind : std::uint8_t { Fixed, Dynamic };
  Kind kind = Kind::Fixed;
  double fixed_dbfs = -26.0;
  double ratio = 0.5;  // dynamic: fraction of the label's mean file RMS

  static ThresholdMode fixed(double dbfs) { return {Kind::Fixed, dbfs, 0.5}; }
  static ThresholdMode dynamic(double ratio) { return {Kind::Dynamic, -26.0, ratio}; }
  /// "fixed:-26" or "dynamic:0.5".
  std::string describe() const;
  static ThresholdMode parse(const std::string& s);
};

/// One labeled 256 ms analysis window.
struct LabeledChunk {
  std::vector<float> piezo;     // analysis-rate window
  std::vector<float> mems;
  std::vector<float> features;  // featurized window
  ClassIndex label = ClassIndex::NonValid;
  std::uint32_t source = 0;     // index into LabeledChunkSet::sources
  std::uint64_t end_sample = 0; // input-rate sample index one past the window end
  double piezo_rms = 0.0;       // linear, raw piezo over the window span
  double threshold = 0.0;       // linear threshold applied to this chunk

  double piezo_dbfs() const { return linear_to_dbfs(piezo_rms); }
  double threshold_dbfs() const { return linear_to_dbfs(threshold); }
};

struct LabeledChunkSet {
  std::vector<std::string> sources;
  std::vector<LabeledChunk> chunks;
  FeatureConfig features;
  std::uint64_t length_samples = 0;  // input-rate span of each chunk
  std::uint64_t hop_samples = 0;
  std::string threshold_mode;
  std::map<std::string, double> thresholds_dbfs;  // per texture label
  std::string codec = "none";

  std::size_t count(ClassIndex c) const;
  /// Hex SHA-256 of the serialized set; stable across runs and platforms.
  std::string content_hash() const;
  std::vector<std::uint8_t> serialize() const;
  static LabeledChunkSet deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static LabeledChunkSet load(const std::filesystem::path& path);
  /// Appends `other`, remapping its source indices.
  void append(const LabeledChunkSet& other);
};

struct ChunkingConfig {
  StreamConfig stream;
  FeatureConfig features;
  std::size_t hop_buffers = 12;  // 128 ms at 48 kHz / 512
  Codec* codec = nullptr;        // optional transmission conditioning
};

/// Slides 256 ms windows over each recording (hop = hop_buffers capture
/// buffers) and labels each one with its file's label if the raw piezo RMS
/// over the window strictly exceeds the threshold, NonValid otherwise.
/// Output is ordered by recording, then by position.
LabeledChunkSet chunk_and_label(const std::vector<Recording>& recordings, const ThresholdMode& mode,
                                const ChunkingConfig& cfg = {});

/// Per-label thresholds (linear) that `mode` implies for `recordings`.
std::map<TextureLabel, double> resolve_thresholds(const std::vector<Recording>& recordings,
                                                  const ThresholdMode& mode);

/// Deterministic synthetic stand-in dataset with exactly `chunks_per_class`
/// chunks of each class, labeled with the fixed -26 dBFS threshold.
LabeledChunkSet synth_dataset(std::uint64_t seed, std::size_t chunks_per_class,
                              const FeatureConfig& features = {});

/// Writes a synthetic recording set (WAV files plus manifest) to `dir`:
/// `files_per_label` rough and smooth recordings per split, each alternating
/// contact and silence. Returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, std::uint64_t seed,
                                             std::size_t files_per_label, double seconds_per_file);

}  // namespace texsense
