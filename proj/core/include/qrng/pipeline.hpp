#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/source.hpp"
#include "qrng/toeplitz.hpp"

namespace qrng::extractor {

/// Stages between generation and accumulation (load, multiply, then accumulate).
inline constexpr std::size_t kStages = 3;

/// The T shift register: j + b - 1 bits holding the bit-reversed seed window
/// for the current input word. reseed() loads the first window; shift() moves
/// right by b and refills the top b bits from the seed stream.
class GenerationStage {
 public:
  GenerationStage(const ToeplitzConfig& cfg, const BitStream& seed);

  void reseed();
  void shift();

  [[nodiscard]] const BitStream& reg() const noexcept { return t_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }
  [[nodiscard]] std::size_t words_since_reseed() const noexcept { return shifts_; }

  /// Refill bits that the next shift() would insert.
  [[nodiscard]] std::uint64_t next_refill() const noexcept { return rev_.read(ptr_, static_cast<unsigned>(b_)); }

 private:
  BitStream rev_;
  BitStream t_;
  std::size_t width_;
  std::size_t b_;
  std::size_t ptr_ = 0;
  std::size_t shifts_ = 0;
};

enum StageBit : std::uint8_t {
  kGen = 1,
  kLoad = 2,
  kMult = 4,
  kAcc = 8,
  kOut = 16,
};

struct InvocationRecord {
  std::size_t block = 0;
  std::size_t frame = 0;
  std::uint64_t gen_start = 0;
  std::uint64_t acc_start = 0;
  std::uint64_t acc_end = 0;
  std::uint64_t out_start = 0;
  std::uint64_t out_end = 0;
  std::size_t acc_cycles = 0;
  std::size_t out_cycles = 0;
  std::size_t reseeds = 0;
};

enum class ReseedCause : std::uint8_t { init, done };

struct ReseedEvent {
  std::uint64_t cycle = 0;
  std::size_t block = 0;
  ReseedCause cause = ReseedCause::init;
};

struct DonePulse {
  std::uint64_t cycle = 0;
  std::size_t block = 0;
  std::size_t acc_index = 0;
};

struct Handoff {
  std::uint64_t cycle = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

struct CycleRecord {
  std::uint64_t cycle = 0;
  int filling_block = -1;
  std::vector<std::uint8_t> stages;      // StageBit mask per block
  std::vector<std::uint8_t> full_buffers;  // 0..2 per block
};

struct PipelineTrace {
  std::uint64_t cycles = 0;
  std::vector<InvocationRecord> invocations;
  std::vector<ReseedEvent> reseeds;
  std::vector<DonePulse> done_pulses;
  std::vector<Handoff> handoffs;
  std::vector<CycleRecord> per_cycle;  // only with record_cycles
  std::size_t max_fillers_per_cycle = 0;
  std::size_t bus_stall_cycles = 0;
  std::size_t collations = 0;
  std::size_t flushed_frames = 0;
  /// Cycles between consecutive stages of one word.
  std::size_t stage_latency = 1;
  /// First generation cycle to last output cycle of invocation 0.
  std::uint64_t invocation_latency = 0;
};

struct PipelineOptions {
  bool record_cycles = false;
};

struct PipelineResult {
  BitStream output;
  PipelineTrace trace;
};

/// Word-granular cycle emulation of the pipelined, daisy-chained extractor.
/// Input must hold a positive whole number of k_in frames.
[[nodiscard]] PipelineResult pipeline_run(const BitStream& input, const ToeplitzConfig& cfg,
                                          const BitStream& seed, const PipelineOptions& opts = {});

/// Clipped rounds are removed and a trailing partial frame dropped before framing.
[[nodiscard]] PipelineResult pipeline_run(const source::SampleBlock& block, const ToeplitzConfig& cfg,
                                          const BitStream& seed, const PipelineOptions& opts = {});

}  // namespace qrng::extractor
