// texsense command-line suite: dataset preparation, training, evaluation,
// offline simulation and live send/receive.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "texsense/dataset.hpp"
#include "texsense/error.hpp"
#include "texsense/evaluation.hpp"
#include "texsense/live.hpp"
#include "texsense/model.hpp"
#include "texsense/synth_signals.hpp"
#include "texsense/trainer.hpp"
#include "texsense/transport.hpp"
#include "texsense/wav.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace texsense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitNetwork = 5;

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Argument:
    case ErrorKind::Fingerprint:
    case ErrorKind::Version:
      return kExitConfig;
    case ErrorKind::Data:
    case ErrorKind::CorruptFile:
    case ErrorKind::Shape:
      return kExitData;
    case ErrorKind::Numeric:
      return kExitNumeric;
    case ErrorKind::Network:
      return kExitNetwork;
  }
  return kExitOther;
}

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("write failed for " + path.string());
}

/// Resolved parameters of one run. Written beside every artifact; the wall
/// clock lives in its own field so the rest is reproducible.
struct RunConfig {
  std::string command;
  json params = json::object();

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["params"] = params;
    j["created_utc"] = utc_now();
    write_text(path, j.dump(2) + "\n");
  }
};

fs::path sidecar(const fs::path& artifact, const std::string& suffix) {
  return fs::path(artifact.string() + suffix);
}

// ------------------------------------------------------------ shared options

struct FeatureOpts {
  bool piezo_only = false;
  bool hann = false;
  bool power = false;

  void add(CLI::App* app) {
    app->add_flag("--piezo-only", piezo_only, "Zero the MEMS half of every feature vector");
    app->add_flag("--hann", hann, "Hann analysis window instead of rectangular");
    app->add_flag("--power", power, "Power spectrum instead of magnitude");
  }
  FeatureConfig resolve() const {
    FeatureConfig fc;
    if (piezo_only) fc.channels = ChannelMode::PiezoOnly;
    if (hann) fc.window = WindowFunction::Hann;
    if (power) fc.spectrum = SpectrumKind::Power;
    return fc;
  }
  void record(json& j, const FeatureConfig& fc) const {
    j["features"] = fc.describe();
  }
};

struct ImpairOpts {
  double loss = 0.0;
  double reorder = 0.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 0;

  void add(CLI::App* app) {
    app->add_option("--loss", loss, "Packet loss probability")->check(CLI::Range(0.0, 1.0));
    app->add_option("--reorder", reorder, "Probability of delaying a packet by 1.5 periods")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--jitter-ms", jitter_ms, "Uniform extra delay bound in ms")->check(CLI::NonNegativeNumber);
    app->add_option("--impair-seed", seed, "Seed of the impairment draws");
  }
  ImpairmentConfig resolve() const { return {loss, reorder, jitter_ms, seed}; }
  void record(json& j) const {
    j["loss"] = loss;
    j["reorder"] = reorder;
    j["jitter_ms"] = jitter_ms;
    j["impair_seed"] = seed;
  }
};

struct EngineOpts {
  double threshold_dbfs = -26.0;
  std::string mode = "confidence";

  void add(CLI::App* app) {
    app->add_option("--gate-dbfs", threshold_dbfs, "Contact gate threshold on piezo RMS");
    app->add_option("--modulation", mode, "Target selection: confidence or hard")
        ->check(CLI::IsMember({"confidence", "hard"}));
  }
  EngineConfig resolve(const FeatureConfig& fc) const {
    EngineConfig e;
    e.features = fc;
    e.gate.threshold_dbfs = threshold_dbfs;
    e.targets.mode = mode == "hard" ? ModulationMode::Hard : ModulationMode::Confidence;
    return e;
  }
  void record(json& j) const {
    j["gate_dbfs"] = threshold_dbfs;
    j["modulation"] = mode;
  }
};

// --------------------------------------------------------------- subcommands

std::vector<TextureSegment> parse_pattern(const std::string& pattern) {
  std::vector<TextureSegment> out;
  std::stringstream ss(pattern);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ArgumentError("pattern item '" + item + "' must be texture:seconds");
    const std::string name = item.substr(0, colon);
    double seconds = 0.0;
    try {
      seconds = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw ArgumentError("bad duration in pattern item '" + item + "'");
    }
    if (!(seconds > 0.0)) throw ArgumentError("pattern durations must be positive");
    SyntheticTexture t;
    if (name == "rough") t = SyntheticTexture::Rough;
    else if (name == "smooth") t = SyntheticTexture::Smooth;
    else if (name == "silence") t = SyntheticTexture::Silence;
    else throw ArgumentError("unknown texture '" + name + "' (rough, smooth, silence)");
    out.push_back({t, seconds});
  }
  if (out.empty()) throw ArgumentError("empty pattern");
  return out;
}

LabeledChunkSet chunks_from_manifest(const fs::path& manifest_path, std::optional<Split> split,
                                     const ThresholdMode& mode, const FeatureConfig& fc,
                                     const std::string& codec_name) {
  auto manifest = DatasetManifest::load(manifest_path);
  if (split) {
    if (!manifest.has(*split))
      throw ConfigError("manifest " + manifest_path.string() + " has no '" + to_string(*split) + "' split");
    manifest = manifest.only(*split);
  }
  const IngestResult ing = ingest(manifest);
  if (!ing.issues.empty()) {
    std::string msg = std::to_string(ing.issues.size()) + " manifest entries failed to load:";
    for (const auto& i : ing.issues) msg += "\n  " + i.path.string() + ": " + i.message;
    throw DataError(msg);
  }
  auto codecs = CodecRegistry::with_defaults();
  ChunkingConfig cc;
  cc.features = fc;
  if (codec_name != "none") cc.codec = &codecs.get(codec_name);
  return chunk_and_label(ing.recordings, mode, cc);
}

void print_counts(const LabeledChunkSet& s, const std::string& what) {
  std::printf("%s: %zu chunks (rough %zu, smooth %zu, non_valid %zu)\n", what.c_str(), s.chunks.size(),
              s.count(ClassIndex::Rough), s.count(ClassIndex::Smooth), s.count(ClassIndex::NonValid));
}

std::string loss_table(const std::vector<double>& loss) {
  std::string out = "epoch\tloss\n";
  char buf[64];
  for (std::size_t i = 0; i < loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\n", i + 1, loss[i]);
    out += buf;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"texsense: acoustic texture sensing and vibrotactile feedback pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // synth-wav
  std::string sw_out, sw_pattern = "silence:0.5,rough:2,silence:0.5,smooth:2,silence:0.5";
  std::uint64_t sw_seed = 0;
  auto* sw = app.add_subcommand("synth-wav", "Render a synthetic two-channel (piezo, MEMS) recording");
  sw->add_option("--out", sw_out, "Output WAV")->required();
  sw->add_option("--pattern", sw_pattern, "Comma-separated texture:seconds segments (rough, smooth, silence)");
  sw->add_option("--seed", sw_seed, "Generator seed");

  // make-synthetic
  std::string ms_dir;
  std::uint64_t ms_seed = 7;
  std::size_t ms_files = 4;
  double ms_seconds = 10.0;
  auto* ms = app.add_subcommand("make-synthetic", "Write a synthetic recording corpus and its manifest");
  ms->add_option("--out-dir", ms_dir, "Output directory")->required();
  ms->add_option("--seed", ms_seed, "Generator seed");
  ms->add_option("--files-per-label", ms_files, "Recordings per label and split")->check(CLI::PositiveNumber);
  ms->add_option("--seconds", ms_seconds, "Length of each recording")->check(CLI::PositiveNumber);

  // convert
  std::string cv_in, cv_out, cv_format = "float32";
  std::size_t cv_piezo = 0, cv_mems = 1;
  auto* cv = app.add_subcommand("convert", "Extract piezo and MEMS channels into a two-channel WAV");
  cv->add_option("--in", cv_in, "Input WAV")->required()->check(CLI::ExistingFile);
  cv->add_option("--out", cv_out, "Output WAV")->required();
  cv->add_option("--piezo-channel", cv_piezo, "Source channel holding the piezo signal");
  cv->add_option("--mems-channel", cv_mems, "Source channel holding the MEMS signal");
  cv->add_option("--format", cv_format, "float32 or pcm16")->check(CLI::IsMember({"float32", "pcm16"}));

  // chunk
  std::string ck_manifest, ck_out, ck_split = "all", ck_threshold = "fixed:-26", ck_codec = "none";
  FeatureOpts ck_feat;
  auto* ck = app.add_subcommand("chunk", "Cut, label and featurize a manifest into a chunk cache");
  ck->add_option("--manifest", ck_manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ck->add_option("--out", ck_out, "Chunk cache file")->required();
  ck->add_option("--split", ck_split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  ck->add_option("--threshold", ck_threshold, "fixed:<dBFS> or dynamic:<ratio>");
  ck->add_option("--codec", ck_codec, "Codec round trip before featurizing (none, passthrough)");
  ck_feat.add(ck);

  // train
  std::string tr_manifest, tr_out, tr_threshold = "fixed:-26", tr_domain = "feature", tr_codec = "none";
  std::optional<std::uint64_t> tr_synthetic;
  std::size_t tr_per_class = 2000;
  TrainConfig tr_cfg;
  std::optional<double> tr_sigma;
  bool tr_eval_after = false;
  bool tr_no_standardize = false;
  FeatureOpts tr_feat;
  auto* tr = app.add_subcommand("train", "Train a classifier and save it with its feature fingerprint");
  auto* tr_src = tr->add_option_group("source");
  tr_src->add_option("--manifest", tr_manifest, "Dataset manifest (train split is used)")
      ->check(CLI::ExistingFile);
  tr_src->add_option("--synthetic", tr_synthetic, "Train on the synthetic dataset with this seed");
  tr_src->require_option(1);
  tr->add_option("--chunks-per-class", tr_per_class, "Synthetic chunks per class")->check(CLI::PositiveNumber);
  tr->add_option("--out", tr_out, "Model file")->required();
  tr->add_option("--epochs", tr_cfg.epochs, "Epochs")->check(CLI::PositiveNumber);
  tr->add_option("--batch", tr_cfg.batch_size, "Batch size")->check(CLI::PositiveNumber);
  tr->add_option("--lr", tr_cfg.adam.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--seed", tr_cfg.seed, "Initialization and shuffling seed");
  tr->add_option("--noise-sigma", tr_sigma, "Absolute augmentation noise std")->check(CLI::NonNegativeNumber);
  tr->add_option("--noise-scale", tr_cfg.noise_scale, "Noise std as a fraction of the mean input RMS")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--noise-domain", tr_domain, "feature or sample")->check(CLI::IsMember({"feature", "sample"}));
  tr->add_option("--residual-gain", tr_cfg.init.residual_gain, "Init scale of residual-branch weights");
  tr->add_option("--head-gain", tr_cfg.init.head_gain, "Init scale of output-layer weights");
  tr->add_flag("--no-standardize", tr_no_standardize, "Train on raw feature scale");
  tr->add_option("--threshold", tr_threshold, "fixed:<dBFS> or dynamic:<ratio>");
  tr->add_option("--codec", tr_codec, "Codec round trip before featurizing (none, passthrough)");
  tr->add_flag("--eval-after", tr_eval_after, "Evaluate on the test split after training");
  tr_feat.add(tr);

  // eval
  std::string ev_model, ev_manifest, ev_chunks, ev_split = "test", ev_threshold = "fixed:-26", ev_out, ev_json,
                                                 ev_codec = "none";
  std::optional<std::uint64_t> ev_synthetic;
  std::size_t ev_per_class = 500;
  FeatureOpts ev_feat;
  auto* ev = app.add_subcommand("eval", "Confusion matrix and per-class chunk accuracy");
  ev->add_option("--model", ev_model, "Model file")->required()->check(CLI::ExistingFile);
  auto* ev_src = ev->add_option_group("source");
  ev_src->add_option("--manifest", ev_manifest, "Dataset manifest")->check(CLI::ExistingFile);
  ev_src->add_option("--chunks", ev_chunks, "Chunk cache from 'chunk'")->check(CLI::ExistingFile);
  ev_src->add_option("--synthetic", ev_synthetic, "Synthetic dataset seed");
  ev_src->require_option(1);
  ev->add_option("--chunks-per-class", ev_per_class, "Synthetic chunks per class")->check(CLI::PositiveNumber);
  ev->add_option("--split", ev_split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  ev->add_option("--threshold", ev_threshold, "fixed:<dBFS> or dynamic:<ratio>");
  ev->add_option("--codec", ev_codec, "Codec round trip before featurizing (none, passthrough)");
  ev->add_option("--out", ev_out, "Write the text report here");
  ev->add_option("--json", ev_json, "Write a JSON report here");
  ev_feat.add(ev);

  // simulate
  std::string sm_in, sm_model, sm_dir;
  bool sm_transport = false;
  double sm_net_ms = 0.0;
  std::size_t sm_depth = 2;
  ImpairOpts sm_imp;
  EngineOpts sm_eng;
  FeatureOpts sm_feat;
  auto* sm = app.add_subcommand("simulate", "Run the full chain offline over a recording");
  sm->add_option("--in", sm_in, "Two-channel input WAV")->required()->check(CLI::ExistingFile);
  sm->add_option("--model", sm_model, "Model file")->required()->check(CLI::ExistingFile);
  sm->add_option("--out-dir", sm_dir, "Output directory")->required();
  sm->add_flag("--transport", sm_transport, "Route buffers through packetization and the jitter buffer");
  sm->add_option("--network-delay-ms", sm_net_ms, "One-way network delay for the latency account")
      ->check(CLI::NonNegativeNumber);
  sm->add_option("--depth", sm_depth, "Jitter buffer depth in buffers")->check(CLI::PositiveNumber);
  sm_imp.add(sm);
  sm_eng.add(sm);
  sm_feat.add(sm);

  // send
  std::string sd_in, sd_to;
  double sd_speed = 1.0;
  std::uint32_t sd_first_seq = 0;
  ImpairOpts sd_imp;
  auto* sd = app.add_subcommand("send", "Stream a recording to a receiver over UDP");
  sd->add_option("--in", sd_in, "Two-channel input WAV")->required()->check(CLI::ExistingFile);
  sd->add_option("--to", sd_to, "Receiver host:port")->required();
  sd->add_option("--speed", sd_speed, "Pacing relative to real time (0 = unpaced)")->check(CLI::NonNegativeNumber);
  sd->add_option("--first-seq", sd_first_seq, "Sequence number of the first datagram");
  sd_imp.add(sd);

  // receive
  std::string rc_listen, rc_model, rc_dir;
  double rc_idle = 2.0, rc_start = 30.0, rc_net_ms = 0.0;
  std::size_t rc_max = 0, rc_stats = 100, rc_depth = 2;
  EngineOpts rc_eng;
  FeatureOpts rc_feat;
  auto* rc = app.add_subcommand("receive", "Receive a stream, classify and render live");
  rc->add_option("--listen", rc_listen, "Local host:port")->required();
  rc->add_option("--model", rc_model, "Model file")->required()->check(CLI::ExistingFile);
  rc->add_option("--out-dir", rc_dir, "Output directory")->required();
  rc->add_option("--idle-timeout", rc_idle, "Stop after this many idle seconds")->check(CLI::PositiveNumber);
  rc->add_option("--start-timeout", rc_start, "Give up if nothing arrives within this many seconds")
      ->check(CLI::PositiveNumber);
  rc->add_option("--max-buffers", rc_max, "Stop after this many buffers (0 = unbounded)");
  rc->add_option("--stats-every", rc_stats, "Stats line cadence in buffers (0 = end only)");
  rc->add_option("--depth", rc_depth, "Jitter buffer depth in buffers")->check(CLI::PositiveNumber);
  rc->add_option("--network-delay-ms", rc_net_ms, "One-way network delay for the latency account")
      ->check(CLI::NonNegativeNumber);
  rc_eng.add(rc);
  rc_feat.add(rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sw) {
      const auto segments = parse_pattern(sw_pattern);
      write_wav(sw_out, synth_recording(segments, sw_seed));
      RunConfig run{"synth-wav", {{"pattern", sw_pattern}, {"seed", sw_seed}}};
      run.write(sidecar(sw_out, ".run.json"));
      std::printf("wrote %s\n", sw_out.c_str());
    } else if (*ms) {
      const fs::path manifest = write_synthetic_corpus(ms_dir, ms_seed, ms_files, ms_seconds);
      RunConfig run{"make-synthetic",
                    {{"seed", ms_seed}, {"files_per_label", ms_files}, {"seconds", ms_seconds}}};
      run.write(fs::path(ms_dir) / "run.json");
      std::printf("wrote %s\n", manifest.string().c_str());
    } else if (*cv) {
      const WavData in = read_wav(cv_in);
      if (cv_piezo >= in.num_channels() || cv_mems >= in.num_channels())
        throw ArgumentError("input has " + std::to_string(in.num_channels()) + " channels; requested " +
                            std::to_string(cv_piezo) + " and " + std::to_string(cv_mems));
      WavData out;
      out.sample_rate_hz = in.sample_rate_hz;
      out.channels = {in.channels[cv_piezo], in.channels[cv_mems]};
      write_wav(cv_out, out, cv_format == "pcm16" ? WavSampleFormat::Pcm16 : WavSampleFormat::Float32);
      RunConfig run{"convert",
                    {{"input", cv_in}, {"piezo_channel", cv_piezo}, {"mems_channel", cv_mems}, {"format", cv_format}}};
      run.write(sidecar(cv_out, ".run.json"));
      std::printf("wrote %s (%zu frames at %d Hz)\n", cv_out.c_str(), out.num_frames(), out.sample_rate_hz);
    } else if (*ck) {
      const FeatureConfig fc = ck_feat.resolve();
      const ThresholdMode mode = ThresholdMode::parse(ck_threshold);
      std::optional<Split> split;
      if (ck_split != "all") split = parse_split(ck_split);
      const auto set = chunks_from_manifest(ck_manifest, split, mode, fc, ck_codec);
      set.save(ck_out);
      RunConfig run{"chunk",
                    {{"manifest", ck_manifest}, {"split", ck_split}, {"threshold", mode.describe()}, {"codec", ck_codec},
                     {"content_hash", set.content_hash()}}};
      ck_feat.record(run.params, fc);
      run.write(sidecar(ck_out, ".run.json"));
      print_counts(set, ck_out);
    } else if (*tr) {
      const FeatureConfig fc = tr_feat.resolve();
      tr_cfg.noise_sigma = tr_sigma;
      tr_cfg.noise_domain = tr_domain == "sample" ? NoiseDomain::Sample : NoiseDomain::Feature;
      tr_cfg.standardize_inputs = !tr_no_standardize;
      tr_cfg.validate();
      const ThresholdMode mode = ThresholdMode::parse(tr_threshold);

      LabeledChunkSet train_set, test_set;
      if (tr_synthetic) {
        if (tr_threshold != "fixed:-26")
          throw ArgumentError("the synthetic dataset is labeled with the fixed -26 dBFS threshold");
        train_set = synth_dataset(*tr_synthetic, tr_per_class, fc);
        if (tr_eval_after) test_set = synth_dataset(*tr_synthetic + 1, std::max<std::size_t>(1, tr_per_class / 4), fc);
      } else {
        // Check the test split before spending time on training.
        if (tr_eval_after && !DatasetManifest::load(tr_manifest).has(Split::Test))
          throw ConfigError("--eval-after needs a test split, and " + tr_manifest + " has none");
        train_set = chunks_from_manifest(tr_manifest, Split::Train, mode, fc, tr_codec);
        if (tr_eval_after) test_set = chunks_from_manifest(tr_manifest, Split::Test, mode, fc, tr_codec);
      }
      print_counts(train_set, "training set");

      const auto result = train(tr_cfg, train_set, [](int epoch, double loss) {
        std::printf("epoch %d loss %.6f\n", epoch, loss);
        std::fflush(stdout);
      });
      for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      save_model(result.model, tr_out);
      write_text(sidecar(tr_out, ".loss.txt"), loss_table(result.epoch_loss));

      RunConfig run{"train"};
      auto& p = run.params;
      if (tr_synthetic) {
        p["synthetic_seed"] = *tr_synthetic;
        p["chunks_per_class"] = tr_per_class;
      } else {
        p["manifest"] = tr_manifest;
        p["codec"] = tr_codec;
      }
      p["epochs"] = tr_cfg.epochs;
      p["batch"] = tr_cfg.batch_size;
      p["lr"] = tr_cfg.adam.learning_rate;
      p["seed"] = tr_cfg.seed;
      p["noise_sigma"] = result.noise_sigma;
      p["noise_domain"] = tr_domain;
      p["init"] = describe(tr_cfg.init, tr_cfg.standardize_inputs);
      p["threshold"] = mode.describe();
      p["train_content_hash"] = train_set.content_hash();
      p["model_hash"] = model_hash(result.model);
      tr_feat.record(p, fc);

      if (tr_eval_after) {
        print_counts(test_set, "test set");
        const EvalReport report = evaluate(result.model, test_set);
        const double acc = accuracy(result.model, test_set);
        std::printf("held-out accuracy (3-class) %.4f\n%s", acc, report.to_table().c_str());
        write_text(sidecar(tr_out, ".eval.txt"), report.to_table());
        p["heldout_accuracy"] = acc;
      }
      run.write(sidecar(tr_out, ".run.json"));
      std::printf("wrote %s (sha256 %s)\n", tr_out.c_str(), model_hash(result.model).c_str());
    } else if (*ev) {
      const FeatureConfig fc = ev_feat.resolve();
      const ModelParams model = load_model(ev_model, fc);
      const ThresholdMode mode = ThresholdMode::parse(ev_threshold);
      LabeledChunkSet set;
      json src;
      if (!ev_chunks.empty()) {
        set = LabeledChunkSet::load(ev_chunks);
        src["chunks"] = ev_chunks;
      } else if (ev_synthetic) {
        set = synth_dataset(*ev_synthetic, ev_per_class, fc);
        src["synthetic_seed"] = *ev_synthetic;
        src["chunks_per_class"] = ev_per_class;
      } else {
        std::optional<Split> split;
        if (ev_split != "all") split = parse_split(ev_split);
        set = chunks_from_manifest(ev_manifest, split, mode, fc, ev_codec);
        src["manifest"] = ev_manifest;
        src["split"] = ev_split;
        src["threshold"] = mode.describe();
        src["codec"] = ev_codec;
      }
      const EvalReport report = evaluate(model, set);
      std::printf("%s", report.to_table().c_str());
      RunConfig run{"eval", {{"model", ev_model}, {"model_hash", model_hash(model)}, {"source", src}}};
      ev_feat.record(run.params, fc);
      if (!ev_out.empty()) {
        write_text(ev_out, report.to_table());
        run.write(sidecar(ev_out, ".run.json"));
      }
      if (!ev_json.empty()) {
        write_text(ev_json, report.to_json() + "\n");
        if (ev_out.empty()) run.write(sidecar(ev_json, ".run.json"));
      }
    } else if (*sm) {
      const FeatureConfig fc = sm_feat.resolve();
      const ModelParams model = load_model(sm_model, fc);
      SimulationConfig scfg;
      scfg.engine = sm_eng.resolve(fc);
      scfg.use_transport = sm_transport || !sm_imp.resolve().is_identity();
      scfg.impairment = sm_imp.resolve();
      scfg.jitter.depth = sm_depth;
      scfg.network_delay_s = sm_net_ms * 1e-3;
      const auto result = simulate(read_wav(sm_in), model, scfg);

      const fs::path dir(sm_dir);
      fs::create_directories(dir);
      write_text(dir / "timeline.tsv", format_timeline(result.decisions));
      write_wav(dir / "oscillator.wav", WavData{scfg.engine.stream.sample_rate_hz, {result.oscillator}});
      std::string latency = result.budget.to_text();
      char buf[160];
      std::snprintf(buf, sizeof buf, "measured_buffer_latency_ms\t%.3f\n", result.measured_latency_s * 1e3);
      latency += buf;
      write_text(dir / "latency.txt", latency);
      // Wall-clock inference time varies run to run; report it on stdout only.
      std::printf("%zu buffers, %zu decisions, max inference %.3f ms\n%s", result.buffers, result.decisions.size(),
                  result.max_inference_s * 1e3, latency.c_str());
      if (result.transport) std::printf("%s\n", result.transport->to_line().c_str());

      RunConfig run{"simulate",
                    {{"input", sm_in}, {"model", sm_model}, {"model_hash", model_hash(model)},
                     {"transport", scfg.use_transport}, {"depth", sm_depth}, {"network_delay_ms", sm_net_ms}}};
      sm_imp.record(run.params);
      sm_eng.record(run.params);
      sm_feat.record(run.params, fc);
      run.write(dir / "run.json");
    } else if (*sd) {
      SenderConfig scfg;
      scfg.destination = Endpoint::parse(sd_to);
      scfg.speed = sd_speed;
      scfg.first_sequence = sd_first_seq;
      scfg.impairment = sd_imp.resolve();
      const auto report = run_sender(read_wav(sd_in), scfg);
      std::printf("sent %zu of %zu buffers to %s\n", report.datagrams_sent, report.buffers,
                  scfg.destination.to_string().c_str());
    } else if (*rc) {
      const FeatureConfig fc = rc_feat.resolve();
      const ModelParams model = load_model(rc_model, fc);
      ReceiverConfig rcfg;
      rcfg.engine = rc_eng.resolve(fc);
      rcfg.jitter.depth = rc_depth;
      rcfg.idle_timeout_s = rc_idle;
      rcfg.start_timeout_s = rc_start;
      rcfg.max_buffers = rc_max;
      rcfg.stats_every = rc_stats;
      rcfg.network_delay_s = rc_net_ms * 1e-3;

      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const Endpoint local = Endpoint::parse(rc_listen);
      UdpSocket sock = UdpSocket::bind(local);
      std::fprintf(stderr, "listening on %s\n", sock.description().c_str());
      ReceiverHooks hooks;
      hooks.on_stats = [](const std::string& line) { std::fprintf(stderr, "stats %s\n", line.c_str()); };
      hooks.on_event = [](const std::string& line) { std::fprintf(stderr, "event %s\n", line.c_str()); };
      hooks.stop = &g_stop;
      const auto report = run_receiver(sock, model, rcfg, hooks);

      const fs::path dir(rc_dir);
      fs::create_directories(dir);
      write_text(dir / "timeline.tsv", format_timeline(report.decisions));
      write_wav(dir / "oscillator.wav", WavData{rcfg.engine.stream.sample_rate_hz, {report.oscillator}});
      std::string stats = receiver_stats_line(report.buffers, report.decisions.size(), report.counters,
                                              report.budget.total_s());
      stats += " stream_resets=" + std::to_string(report.stream_resets) +
               " queue_overflows=" + std::to_string(report.queue_overflows) + "\n";
      write_text(dir / "stats.txt", stats);
      write_text(dir / "latency.txt", report.budget.to_text());
      RunConfig run{"receive",
                    {{"listen", rc_listen}, {"model", rc_model}, {"model_hash", model_hash(model)},
                     {"depth", rc_depth}, {"idle_timeout", rc_idle}, {"max_buffers", rc_max},
                     {"network_delay_ms", rc_net_ms}}};
      rc_eng.record(run.params);
      rc_feat.record(run.params, fc);
      run.write(dir / "run.json");
      std::printf("%s", stats.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOk;
}
