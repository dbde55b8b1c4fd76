#include "texsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "texsense/bytes.hpp"
#include "texsense/chunk_ring.hpp"
#include "texsense/random.hpp"
#include "texsense/synth_signals.hpp"
#include "texsense/transport.hpp"
#include "texsense/wav.hpp"

namespace texsense {

namespace fs = std::filesystem;

std::string to_string(TextureLabel l) { return l == TextureLabel::Rough ? "rough" : "smooth"; }
std::string to_string(Split s) { return s == Split::Train ? "train" : "test"; }
std::string to_string(ClassIndex c) {
  switch (c) {
    case ClassIndex::Rough:
      return "rough";
    case ClassIndex::Smooth:
      return "smooth";
    default:
      return "non_valid";
  }
}

TextureLabel parse_texture_label(const std::string& s) {
  if (s == "rough") return TextureLabel::Rough;
  if (s == "smooth") return TextureLabel::Smooth;
  throw ConfigError("label must be 'rough' or 'smooth', got '" + s + "'");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  throw ConfigError("split must be 'train' or 'test', got '" + s + "'");
}

// ---------------------------------------------------------------- manifest

DatasetManifest DatasetManifest::parse(const std::string& text, const fs::path& base_dir) {
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("manifest line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty() || f[0][0] == '#') continue;
    if (!header) {
      if (f.size() != 2 || f[0] != "texsense-manifest") fail("expected 'texsense-manifest <version>'");
      if (f[1] != std::to_string(kVersion)) fail("unsupported manifest version " + f[1]);
      header = true;
      continue;
    }
    if (f[0] == "sample_rate") {
      if (f.size() != 2) fail("sample_rate takes one value");
      try {
        m.sample_rate_hz = std::stoi(f[1]);
      } catch (const std::exception&) {
        fail("bad sample rate '" + f[1] + "'");
      }
      if (m.sample_rate_hz <= 0) fail("sample rate must be positive");
      continue;
    }
    if (f[0] == "channels") {
      if (f.size() != 2 || f[1] != "piezo,mems") fail("channel order must be 'piezo,mems'");
      continue;
    }
    if (f.size() != 5) fail("expected 5 fields: path object label scenario split");
    ManifestEntry e;
    e.path = fs::path(f[0]);
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    e.object = f[1];
    try {
      e.label = parse_texture_label(f[2]);
      e.split = parse_split(f[4]);
    } catch (const ConfigError& err) {
      fail(err.what());
    }
    e.scenario = f[3];
    m.entries.push_back(std::move(e));
  }
  if (!header) throw ConfigError("manifest is empty or lacks the 'texsense-manifest' header");
  return m;
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

std::string DatasetManifest::serialize(const fs::path& base_dir) const {
  std::ostringstream os;
  os << "texsense-manifest " << kVersion << "\n";
  os << "sample_rate " << sample_rate_hz << "\n";
  os << "channels piezo,mems\n";
  os << "# path\tobject\tlabel\tscenario\tsplit\n";
  for (const auto& e : entries) {
    fs::path p = e.path;
    if (!base_dir.empty()) {
      const auto rel = p.lexically_relative(base_dir);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    os << p.generic_string() << '\t' << e.object << '\t' << to_string(e.label) << '\t'
       << e.scenario << '\t' << to_string(e.split) << '\n';
  }
  return os.str();
}

void DatasetManifest::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write manifest " + path.string());
  out << serialize(path.parent_path());
}

DatasetManifest DatasetManifest::only(Split split) const {
  DatasetManifest m;
  m.sample_rate_hz = sample_rate_hz;
  for (const auto& e : entries)
    if (e.split == split) m.entries.push_back(e);
  return m;
}

bool DatasetManifest::has(Split split) const {
  return std::any_of(entries.begin(), entries.end(),
                     [split](const ManifestEntry& e) { return e.split == split; });
}

// ---------------------------------------------------------------- ingest

IngestResult ingest(const DatasetManifest& manifest) {
  IngestResult result;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    auto issue = [&](ErrorKind kind, const std::string& msg) {
      result.issues.push_back({i, e.path, kind, e.path.string() + ": " + msg});
    };
    if (!fs::exists(e.path)) {
      issue(ErrorKind::Data, "file not found");
      continue;
    }
    WavData wav;
    try {
      wav = read_wav(e.path);
    } catch (const Error& err) {
      issue(err.kind(), err.what());
      continue;
    }
    if (wav.num_channels() != 2) {
      issue(ErrorKind::Data, "expected 2 channels (piezo, mems), found " +
                                 std::to_string(wav.num_channels()));
      continue;
    }
    if (wav.sample_rate_hz != manifest.sample_rate_hz) {
      issue(ErrorKind::Data, "sample rate " + std::to_string(wav.sample_rate_hz) +
                                 " Hz, manifest declares " +
                                 std::to_string(manifest.sample_rate_hz) + " Hz");
      continue;
    }
    if (wav.num_frames() == 0) {
      issue(ErrorKind::Data, "no audio frames");
      continue;
    }
    Recording r;
    r.entry = e;
    r.sample_rate_hz = wav.sample_rate_hz;
    r.piezo = std::move(wav.channels[0]);
    r.mems = std::move(wav.channels[1]);
    r.piezo_rms = rms_linear(r.piezo);
    result.recordings.push_back(std::move(r));
  }
  return result;
}

// ---------------------------------------------------------------- thresholds

std::string ThresholdMode::describe() const {
  std::ostringstream os;
  if (kind == Kind::Fixed)
    os << "fixed:" << fixed_dbfs;
  else
    os << "dynamic:" << ratio;
  return os.str();
}

ThresholdMode ThresholdMode::parse(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string value = colon == std::string::npos ? "" : s.substr(colon + 1);
  try {
    if (kind == "fixed") {
      const double v = value.empty() ? -26.0 : std::stod(value);
      if (!(v < 0.0)) throw ConfigError("fixed threshold must be below 0 dBFS");
      return fixed(v);
    }
    if (kind == "dynamic") {
      const double v = value.empty() ? 0.5 : std::stod(value);
      if (!(v > 0.0)) throw ConfigError("dynamic threshold ratio must be positive");
      return dynamic(v);
    }
  } catch (const std::invalid_argument&) {
  }
  throw ConfigError("threshold mode must be 'fixed:<dBFS>' or 'dynamic:<ratio>', got '" + s + "'");
}

std::map<TextureLabel, double> resolve_thresholds(const std::vector<Recording>& recordings,
                                                  const ThresholdMode& mode) {
  std::map<TextureLabel, double> out;
  if (mode.kind == ThresholdMode::Kind::Fixed) {
    const double lin = dbfs_to_linear(mode.fixed_dbfs);
    out[TextureLabel::Rough] = lin;
    out[TextureLabel::Smooth] = lin;
    return out;
  }
  std::map<TextureLabel, std::pair<double, std::size_t>> acc;
  for (const auto& r : recordings) {
    auto& a = acc[r.entry.label];
    a.first += r.piezo_rms;
    a.second += 1;
  }
  for (const auto& [label, a] : acc)
    out[label] = mode.ratio * (a.first / static_cast<double>(a.second));
  return out;
}

// ---------------------------------------------------------------- chunking

namespace {

double span_rms(const std::vector<float>& x, std::uint64_t end, std::uint64_t len) {
  return rms_linear(std::span<const float>(x.data() + (end - len), len));
}

LabeledChunk make_chunk(const AnalysisWindow& w, const FeatureConfig& features, double rms,
                        double threshold, ClassIndex contact_label, std::uint32_t source,
                        std::uint64_t end_sample) {
  LabeledChunk c;
  c.piezo = w.piezo;
  c.mems = w.mems;
  c.features.resize(features.dim());
  featurize_into(c.piezo, c.mems, features, c.features);
  c.piezo_rms = rms;
  c.threshold = threshold;
  c.label = rms > threshold ? contact_label : ClassIndex::NonValid;
  c.source = source;
  c.end_sample = end_sample;
  return c;
}

ClassIndex to_class(TextureLabel l) {
  return l == TextureLabel::Rough ? ClassIndex::Rough : ClassIndex::Smooth;
}

void init_set(LabeledChunkSet& set, const ChunkingConfig& cfg) {
  set.features = cfg.features;
  set.length_samples = cfg.stream.window_samples * static_cast<std::uint64_t>(cfg.stream.decimation_factor());
  set.hop_samples = cfg.hop_buffers * cfg.stream.buffer_size;
  set.codec = cfg.codec ? cfg.codec->name() : "none";
}

}  // namespace

LabeledChunkSet chunk_and_label(const std::vector<Recording>& recordings, const ThresholdMode& mode,
                                const ChunkingConfig& cfg) {
  if (cfg.hop_buffers == 0) throw ConfigError("chunk hop must be at least one buffer");
  if (cfg.features.window_samples != cfg.stream.window_samples ||
      cfg.features.input_rate_hz != cfg.stream.sample_rate_hz ||
      cfg.features.analysis_rate_hz != cfg.stream.analysis_rate_hz)
    throw ConfigError("feature configuration disagrees with stream geometry");

  LabeledChunkSet set;
  init_set(set, cfg);
  set.threshold_mode = mode.describe();
  const auto thresholds = resolve_thresholds(recordings, mode);
  for (const auto& [label, lin] : thresholds) set.thresholds_dbfs[to_string(label)] = linear_to_dbfs(lin);

  const std::size_t bs = cfg.stream.buffer_size;
  for (const auto& rec : recordings) {
    if (rec.sample_rate_hz != cfg.stream.sample_rate_hz)
      throw DataError(rec.entry.path.string() + ": sample rate does not match the stream");
    const auto source = static_cast<std::uint32_t>(set.sources.size());
    set.sources.push_back(rec.entry.path.generic_string());
    const double threshold = thresholds.at(rec.entry.label);

    const std::size_t nbuf = rec.frames() / bs;
    std::vector<float> piezo, mems;  // conditioned audio, as the classifier would see it
    piezo.reserve(nbuf * bs);
    mems.reserve(nbuf * bs);
    ChunkRing ring(cfg.stream);
    const std::uint64_t warmup = ring.warmup_buffers();
    for (std::size_t b = 0; b < nbuf; ++b) {
      AudioBuffer buf(bs, cfg.stream.sample_rate_hz, b);
      std::copy_n(rec.piezo.begin() + static_cast<std::ptrdiff_t>(b * bs), bs, buf.piezo.begin());
      std::copy_n(rec.mems.begin() + static_cast<std::ptrdiff_t>(b * bs), bs, buf.mems.begin());
      if (cfg.codec) buf = codec_round_trip(*cfg.codec, buf, cfg.stream);
      piezo.insert(piezo.end(), buf.piezo.begin(), buf.piezo.end());
      mems.insert(mems.end(), buf.mems.begin(), buf.mems.end());
      const auto window = ring.push(buf);
      if (!window) continue;
      if ((b + 1 - warmup) % cfg.hop_buffers != 0) continue;
      const std::uint64_t end = (b + 1) * bs;
      const double rms = span_rms(piezo, end, std::min<std::uint64_t>(set.length_samples, end));
      set.chunks.push_back(make_chunk(*window, cfg.features, rms, threshold,
                                      to_class(rec.entry.label), source, end));
    }
  }
  return set;
}

LabeledChunkSet synth_dataset(std::uint64_t seed, std::size_t chunks_per_class,
                              const FeatureConfig& features) {
  if (chunks_per_class == 0) throw ArgumentError("chunks_per_class must be at least 1");
  ChunkingConfig cfg;
  cfg.features = features;
  cfg.stream.sample_rate_hz = features.input_rate_hz;
  cfg.stream.analysis_rate_hz = features.analysis_rate_hz;
  cfg.stream.window_samples = features.window_samples;
  const std::size_t bs = cfg.stream.buffer_size;
  const std::uint64_t seg_len =
      features.window_samples * static_cast<std::uint64_t>(cfg.stream.decimation_factor());
  if (seg_len % bs != 0) throw ConfigError("synthetic segments must be a whole number of buffers");
  cfg.hop_buffers = seg_len / bs;

  LabeledChunkSet set;
  init_set(set, cfg);
  set.threshold_mode = ThresholdMode::fixed(-26.0).describe();
  set.thresholds_dbfs = {{"rough", -26.0}, {"smooth", -26.0}};
  const double threshold = dbfs_to_linear(-26.0);

  struct Family {
    SyntheticTexture texture;
    ClassIndex expected;
    const char* name;
  };
  const Family families[] = {{SyntheticTexture::Rough, ClassIndex::Rough, "synthetic:rough"},
                             {SyntheticTexture::Smooth, ClassIndex::Smooth, "synthetic:smooth"},
                             {SyntheticTexture::Silence, ClassIndex::NonValid, "synthetic:silence"}};
  Rng master(seed);
  for (const auto& fam : families) {
    Rng rng(master.next_u64());
    const auto source = static_cast<std::uint32_t>(set.sources.size());
    set.sources.push_back(fam.name);
    const ClassIndex contact_label =
        fam.expected == ClassIndex::NonValid ? ClassIndex::Smooth : fam.expected;
    ChunkRing ring(cfg.stream);
    std::vector<float> piezo, mems;
    // Segment 0 only fills the ring; segments 1..n each align with one window.
    for (std::size_t seg = 0; seg <= chunks_per_class; ++seg) {
      piezo.clear();
      mems.clear();
      append_texture(fam.texture, seg_len, cfg.stream.sample_rate_hz, rng, piezo, mems);
      std::optional<AnalysisWindow> window;
      for (std::size_t b = 0; b < seg_len / bs; ++b) {
        AudioBuffer buf(bs, cfg.stream.sample_rate_hz, seg * (seg_len / bs) + b);
        std::copy_n(piezo.begin() + static_cast<std::ptrdiff_t>(b * bs), bs, buf.piezo.begin());
        std::copy_n(mems.begin() + static_cast<std::ptrdiff_t>(b * bs), bs, buf.mems.begin());
        window = ring.push(buf);
      }
      if (seg == 0) continue;
      auto chunk = make_chunk(*window, features, rms_linear(piezo), threshold, contact_label,
                              source, (seg + 1) * seg_len);
      if (chunk.label != fam.expected)
        throw DataError("synthetic generator produced a chunk outside its class level range");
      set.chunks.push_back(std::move(chunk));
    }
  }
  return set;
}

fs::path write_synthetic_corpus(const fs::path& dir, std::uint64_t seed,
                                std::size_t files_per_label, double seconds_per_file) {
  fs::create_directories(dir);
  DatasetManifest manifest;
  Rng master(seed);
  for (const Split split : {Split::Train, Split::Test}) {
    for (const TextureLabel label : {TextureLabel::Rough, TextureLabel::Smooth}) {
      for (std::size_t i = 0; i < files_per_label; ++i) {
        const auto texture =
            label == TextureLabel::Rough ? SyntheticTexture::Rough : SyntheticTexture::Smooth;
        // Strokes separated by lift-offs, as in a hand-recorded take.
        std::vector<TextureSegment> segs;
        double t = 0.0;
        while (t < seconds_per_file) {
          const double stroke = std::min(2.0, seconds_per_file - t);
          segs.push_back({texture, stroke});
          t += stroke;
          if (t >= seconds_per_file) break;
          const double gap = std::min(0.5, seconds_per_file - t);
          segs.push_back({SyntheticTexture::Silence, gap});
          t += gap;
        }
        const std::string name =
            to_string(split) + "_" + to_string(label) + "_" + std::to_string(i) + ".wav";
        write_wav(dir / name, synth_recording(segs, master.next_u64()));
        manifest.entries.push_back({dir / name, to_string(label) + "_obj" + std::to_string(i),
                                    label, "synthetic", split});
      }
    }
  }
  const fs::path path = dir / "manifest.txt";
  manifest.save(path);
  return path;
}

// ---------------------------------------------------------------- chunk set

std::size_t LabeledChunkSet::count(ClassIndex c) const {
  return static_cast<std::size_t>(
      std::count_if(chunks.begin(), chunks.end(), [c](const LabeledChunk& x) { return x.label == c; }));
}

namespace {
constexpr char kChunkMagic[4] = {'R', 'T', 'C', '1'};
constexpr std::uint32_t kChunkVersion = 1;

void write_floats(bytes::Writer& w, const std::vector<float>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  w.raw(v.data(), v.size() * sizeof(float));
}
std::vector<float> read_floats(bytes::Reader& r) {
  std::vector<float> v(r.u32());
  r.raw(v.data(), v.size() * sizeof(float));
  return v;
}
}  // namespace

std::vector<std::uint8_t> LabeledChunkSet::serialize() const {
  bytes::Writer w;
  w.raw(kChunkMagic, 4);
  w.u32(kChunkVersion);
  w.u32(static_cast<std::uint32_t>(features.input_rate_hz));
  w.u32(static_cast<std::uint32_t>(features.analysis_rate_hz));
  w.u32(static_cast<std::uint32_t>(features.window_samples));
  w.u8(static_cast<std::uint8_t>(features.order));
  w.u8(static_cast<std::uint8_t>(features.window));
  w.u8(static_cast<std::uint8_t>(features.spectrum));
  w.u8(static_cast<std::uint8_t>(features.channels));
  w.u64(length_samples);
  w.u64(hop_samples);
  w.str(threshold_mode);
  w.u32(static_cast<std::uint32_t>(thresholds_dbfs.size()));
  for (const auto& [k, v] : thresholds_dbfs) {
    w.str(k);
    w.f64(v);
  }
  w.str(codec);
  w.u32(static_cast<std::uint32_t>(sources.size()));
  for (const auto& s : sources) w.str(s);
  w.u64(chunks.size());
  for (const auto& c : chunks) {
    w.u8(static_cast<std::uint8_t>(c.label));
    w.u32(c.source);
    w.u64(c.end_sample);
    w.f64(c.piezo_rms);
    w.f64(c.threshold);
    write_floats(w, c.piezo);
    write_floats(w, c.mems);
    write_floats(w, c.features);
  }
  return w.take();
}

LabeledChunkSet LabeledChunkSet::deserialize(std::span<const std::uint8_t> data) {
  if (data.size() < 8 || std::memcmp(data.data(), kChunkMagic, 4) != 0)
    throw CorruptFileError("not a chunk set file");
  bytes::Reader r(data.subspan(4));
  const auto version = r.u32();
  if (version != kChunkVersion) throw VersionError("unsupported chunk set version " + std::to_string(version));
  LabeledChunkSet s;
  s.features.input_rate_hz = static_cast<int>(r.u32());
  s.features.analysis_rate_hz = static_cast<int>(r.u32());
  s.features.window_samples = r.u32();
  s.features.order = static_cast<ChannelOrder>(r.u8());
  s.features.window = static_cast<WindowFunction>(r.u8());
  s.features.spectrum = static_cast<SpectrumKind>(r.u8());
  s.features.channels = static_cast<ChannelMode>(r.u8());
  s.length_samples = r.u64();
  s.hop_samples = r.u64();
  s.threshold_mode = r.str();
  for (auto n = r.u32(); n > 0; --n) {
    auto k = r.str();
    s.thresholds_dbfs[k] = r.f64();
  }
  s.codec = r.str();
  for (auto n = r.u32(); n > 0; --n) s.sources.push_back(r.str());
  const auto count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledChunk c;
    const auto label = r.u8();
    if (label > 2) throw CorruptFileError("invalid chunk label");
    c.label = static_cast<ClassIndex>(label);
    c.source = r.u32();
    if (c.source >= s.sources.size()) throw CorruptFileError("chunk source index out of range");
    c.end_sample = r.u64();
    c.piezo_rms = r.f64();
    c.threshold = r.f64();
    c.piezo = read_floats(r);
    c.mems = read_floats(r);
    c.features = read_floats(r);
    if (c.features.size() != s.features.dim()) throw CorruptFileError("chunk feature size mismatch");
    s.chunks.push_back(std::move(c));
  }
  if (r.remaining() != 0) throw CorruptFileError("trailing bytes after chunk set");
  return s;
}

std::string LabeledChunkSet::content_hash() const { return bytes::sha256_hex(serialize()); }

void LabeledChunkSet::save(const fs::path& path) const {
  bytes::write_file(path.string(), serialize());
}

LabeledChunkSet LabeledChunkSet::load(const fs::path& path) {
  return deserialize(bytes::read_file(path.string()));
}

void LabeledChunkSet::append(const LabeledChunkSet& other) {
  if (!chunks.empty() && !(features == other.features))
    throw ConfigError("cannot merge chunk sets with different feature layouts");
  if (chunks.empty()) features = other.features;
  const auto offset = static_cast<std::uint32_t>(sources.size());
  sources.insert(sources.end(), other.sources.begin(), other.sources.end());
  for (auto c : other.chunks) {
    c.source += offset;
    chunks.push_back(std::move(c));
  }
}

}  // namespace texsense
