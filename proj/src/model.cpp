#include "texsense/model.hpp"

#include <array>
#include <cstring>
#include <json.hpp>

#include "texsense/bytes.hpp"

namespace texsense {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'T', 'M', '1'};

std::string metadata_to_json(const TrainingMetadata& m) {
  nlohmann::json j;
  j["epochs"] = m.epochs;
  j["batch_size"] = m.batch_size;
  j["learning_rate"] = m.learning_rate;
  j["seed"] = m.seed;
  j["noise_sigma"] = m.noise_sigma;
  j["noise_domain"] = m.noise_domain;
  j["threshold_mode"] = m.threshold_mode;
  j["init"] = m.init;
  j["loss_curve"] = m.loss_curve;
  return j.dump();
}

TrainingMetadata metadata_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw CorruptFileError("model metadata is not valid JSON");
  TrainingMetadata m;
  try {
    m.epochs = j.at("epochs").get<int>();
    m.batch_size = j.at("batch_size").get<std::size_t>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.noise_sigma = j.at("noise_sigma").get<double>();
    m.noise_domain = j.at("noise_domain").get<std::string>();
    m.threshold_mode = j.at("threshold_mode").get<std::string>();
    m.init = j.at("init").get<std::string>();
    m.loss_curve = j.at("loss_curve").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(std::string("model metadata incomplete: ") + e.what());
  }
  return m;
}

template <typename E>
E checked_enum(std::uint8_t v, std::uint8_t max, const char* what) {
  if (v > max) throw CorruptFileError(std::string("invalid ") + what + " code " + std::to_string(v));
  return static_cast<E>(v);
}

}  // namespace

void check_fingerprint(const FeatureConfig& model, const FeatureConfig& runtime) {
  if (!(model == runtime))
    throw FingerprintError("model was trained for features [" + model.describe() +
                           "] but the runtime produces [" + runtime.describe() + "]");
}

std::vector<std::uint8_t> serialize_model(const ModelParams& model) {
  const auto& arch = model.network.architecture();
  const auto& fp = model.fingerprint;
  bytes::Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kModelFormatVersion);

  w.u32(static_cast<std::uint32_t>(arch.input_dim));
  w.u32(static_cast<std::uint32_t>(arch.hidden_width));
  w.u32(static_cast<std::uint32_t>(arch.hidden_layers));
  w.u32(static_cast<std::uint32_t>(arch.residual_first));
  w.u32(static_cast<std::uint32_t>(arch.residual_last));
  w.u32(static_cast<std::uint32_t>(arch.output_dim));
  w.u8(static_cast<std::uint8_t>(arch.activation));

  w.u32(static_cast<std::uint32_t>(fp.input_rate_hz));
  w.u32(static_cast<std::uint32_t>(fp.analysis_rate_hz));
  w.u32(static_cast<std::uint32_t>(fp.window_samples));
  w.u8(static_cast<std::uint8_t>(fp.order));
  w.u8(static_cast<std::uint8_t>(fp.window));
  w.u8(static_cast<std::uint8_t>(fp.spectrum));
  w.u8(static_cast<std::uint8_t>(fp.channels));

  w.str(metadata_to_json(model.metadata));

  w.u64(model.network.parameter_count());
  for (const auto& layer : model.network.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f32(layer.weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f32(layer.bias(r));
  }
  w.u32(bytes::crc32(w.data()));
  return w.take();
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  bytes::write_file(path.string(), serialize_model(model));
}

ModelParams deserialize_model(std::span<const std::uint8_t> data,
                              const std::optional<FeatureConfig>& runtime) {
  if (data.size() < kMagic.size() + 8) throw CorruptFileError("model file too short");
  if (std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0)
    throw CorruptFileError("not a model file (bad magic)");
  bytes::Reader header(data.subspan(kMagic.size()));
  const std::uint32_t version = header.u32();
  if (version != kModelFormatVersion)
    throw VersionError("model format version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");

  const auto body = data.first(data.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, data.data() + data.size() - 4, 4);
  if (bytes::crc32(body) != stored_crc) throw CorruptFileError("model checksum mismatch");

  bytes::Reader r(body.subspan(kMagic.size() + 4));
  MlpArchitecture arch;
  arch.input_dim = r.u32();
  arch.hidden_width = r.u32();
  arch.hidden_layers = r.u32();
  arch.residual_first = r.u32();
  arch.residual_last = r.u32();
  arch.output_dim = r.u32();
  arch.activation = checked_enum<Activation>(r.u8(), 1, "activation");
  try {
    arch.validate();
  } catch (const ShapeError& e) {
    throw CorruptFileError(std::string("invalid architecture descriptor: ") + e.what());
  }
  if (arch.output_dim != kNumClasses)
    throw CorruptFileError("model must have " + std::to_string(kNumClasses) + " outputs");

  FeatureConfig fp;
  fp.input_rate_hz = static_cast<int>(r.u32());
  fp.analysis_rate_hz = static_cast<int>(r.u32());
  fp.window_samples = r.u32();
  fp.order = checked_enum<ChannelOrder>(r.u8(), 0, "channel order");
  fp.window = checked_enum<WindowFunction>(r.u8(), 1, "window function");
  fp.spectrum = checked_enum<SpectrumKind>(r.u8(), 1, "spectrum kind");
  fp.channels = checked_enum<ChannelMode>(r.u8(), 1, "channel mode");
  if (fp.dim() != arch.input_dim)
    throw CorruptFileError("feature fingerprint dimension disagrees with model input");

  ModelParams model;
  model.metadata = metadata_from_json(r.str());
  model.fingerprint = fp;
  model.network = Mlp<float>(arch);

  const std::uint64_t count = r.u64();
  if (count != model.network.parameter_count())
    throw CorruptFileError("parameter count disagrees with architecture");
  if (r.remaining() != count * sizeof(float)) throw CorruptFileError("parameter block size mismatch");
  for (auto& layer : model.network.layers()) {
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.f32();
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias(row) = r.f32();
  }
  if (!model.network.all_finite()) throw CorruptFileError("model contains non-finite parameters");

  if (runtime) check_fingerprint(fp, *runtime);
  return model;
}

ModelParams load_model(const std::filesystem::path& path,
                       const std::optional<FeatureConfig>& runtime) {
  const auto data = bytes::read_file(path.string());
  try {
    return deserialize_model(data, runtime);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptFile)
      throw CorruptFileError(path.string() + ": " + e.what());
    throw;
  }
}

std::string model_hash(const ModelParams& model) {
  return bytes::sha256_hex(serialize_model(model));
}

}  // namespace texsense
