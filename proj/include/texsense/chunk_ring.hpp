#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "texsense/audio_core.hpp"
#include "texsense/decimator.hpp"

namespace texsense {

/// Sliding 256 ms analysis history fed one capture buffer at a time.
///
/// Incoming buffers are decimated to the analysis rate before storage, so the
/// ring holds `window_samples` per channel. No window is produced until the
/// ring is full; after that every push yields exactly one window ending at
/// the newest sample. Single producer, single consumer.
class ChunkRing {
 public:
  explicit ChunkRing(const StreamConfig& cfg = {});
  ChunkRing(const StreamConfig& cfg, Decimator decimator);

  /// Throws ConfigError on geometry mismatch and DataError on non-finite input.
  std::optional<AnalysisWindow> push(const AudioBuffer& buf);

  void reset();

  const StreamConfig& config() const { return cfg_; }
  std::uint64_t buffers_pushed() const { return pushed_; }
  std::uint64_t decimated_samples() const { return written_; }
  bool warmed_up() const { return written_ >= cfg_.window_samples; }
  /// Buffers that must be pushed before the first window appears.
  std::uint64_t warmup_buffers() const;

  /// Current ring contents in chronological order (may be partially filled).
  AnalysisWindow snapshot() const;

 private:
  void append(const std::vector<float>& piezo, const std::vector<float>& mems);

  StreamConfig cfg_;
  Decimator decimator_;
  std::vector<float> piezo_;
  std::vector<float> mems_;
  std::size_t head_ = 0;  // next write position
  std::uint64_t written_ = 0;
  std::uint64_t pushed_ = 0;
};

}  // namespace texsense
