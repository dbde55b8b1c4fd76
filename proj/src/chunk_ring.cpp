#include "texsense/chunk_ring.hpp"

#include <algorithm>

namespace texsense {

ChunkRing::ChunkRing(const StreamConfig& cfg) : ChunkRing(cfg, Decimator(cfg)) {}

ChunkRing::ChunkRing(const StreamConfig& cfg, Decimator decimator)
    : cfg_(cfg),
      decimator_(std::move(decimator)),
      piezo_(cfg.window_samples, 0.0f),
      mems_(cfg.window_samples, 0.0f) {
  cfg_.validate();
}

std::uint64_t ChunkRing::warmup_buffers() const {
  // Smallest n with floor(n * buffer / factor) >= window.
  const auto factor = static_cast<std::uint64_t>(cfg_.decimation_factor());
  const std::uint64_t needed_inputs = cfg_.window_samples * factor;
  return (needed_inputs + cfg_.buffer_size - 1) / cfg_.buffer_size;
}

void ChunkRing::append(const std::vector<float>& piezo, const std::vector<float>& mems) {
  const std::size_t cap = piezo_.size();
  for (std::size_t i = 0; i < piezo.size(); ++i) {
    piezo_[head_] = piezo[i];
    mems_[head_] = mems[i];
    head_ = head_ + 1 == cap ? 0 : head_ + 1;
  }
  written_ += piezo.size();
}

std::optional<AnalysisWindow> ChunkRing::push(const AudioBuffer& buf) {
  buf.validate(cfg_);
  const DecimatedBlock block = decimator_.process(buf);
  append(block.piezo, block.mems);
  ++pushed_;
  if (!warmed_up()) return std::nullopt;
  AnalysisWindow w = snapshot();
  w.end_time_s = static_cast<double>(buf.frame_index + 1) * cfg_.buffer_duration_s();
  return w;
}

AnalysisWindow ChunkRing::snapshot() const {
  AnalysisWindow w;
  const std::size_t cap = piezo_.size();
  w.piezo.reserve(cap);
  w.mems.reserve(cap);
  // Oldest sample sits at head_ once the ring has wrapped.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t idx = (head_ + i) % cap;
    w.piezo.push_back(piezo_[idx]);
    w.mems.push_back(mems_[idx]);
  }
  w.end_time_s = static_cast<double>(pushed_) * cfg_.buffer_duration_s();
  return w;
}

void ChunkRing::reset() {
  decimator_.reset();
  std::fill(piezo_.begin(), piezo_.end(), 0.0f);
  std::fill(mems_.begin(), mems_.end(), 0.0f);
  head_ = 0;
  written_ = 0;
  pushed_ = 0;
}

}  // namespace texsense
