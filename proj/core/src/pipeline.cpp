#include "qrng/pipeline.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "qrng/error.hpp"

namespace qrng::extractor {

GenerationStage::GenerationStage(const ToeplitzConfig& cfg, const BitStream& seed)
    : rev_(seed.size()), t_(cfg.j + cfg.b - 1), width_(cfg.j + cfg.b - 1), b_(cfg.b) {
  check_seed(cfg, seed);
  const std::size_t len = seed.size();
  for (std::size_t t = 0; t < len; ++t) rev_.set(t, seed.get(len - 1 - t));
}

void GenerationStage::reseed() {
  t_ = rev_.slice(0, width_);
  ptr_ = width_;
  shifts_ = 0;
}

void GenerationStage::shift() {
  BitStream next = t_.slice(b_, width_ - b_);
  next.append(rev_.read(ptr_, static_cast<unsigned>(b_)), static_cast<unsigned>(b_));
  t_ = std::move(next);
  ptr_ += b_;
  ++shifts_;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Token {
  bool valid = false;
  std::size_t frame = 0;
  std::size_t word = 0;
  std::size_t buf = 0;
  BitStream t;                 // T_B snapshot
  std::uint64_t d = 0;         // D_i
  std::vector<std::uint64_t> u;  // reduced product, reversed row order
};

enum class BufState : std::uint8_t { empty, filling, full, reading };

struct Buffer {
  BufState state = BufState::empty;
  std::vector<std::uint64_t> words;
  std::size_t fill = 0;
  std::size_t frame = 0;
};

struct Block {
  explicit Block(const ToeplitzConfig& cfg, const BitStream& seed) : gen(cfg, seed) {
    for (auto& b : bufs) b.words.resize(cfg.rounds_per_invocation());
  }

  GenerationStage gen;
  bool reseed_pending = true;
  ReseedCause pending_cause = ReseedCause::init;
  bool done_pulse = false;

  bool gen_active = false;
  std::size_t gen_word = 0;
  std::size_t gen_frame = 0;
  std::size_t gen_buf = 0;

  Token load_in;
  Token mult_in;
  Token acc_in;

  std::vector<std::uint64_t> z;
  std::optional<BitStream> capture;
  std::size_t capture_frame = 0;

  bool out_active = false;
  BitStream zout;
  std::size_t out_word = 0;
  std::size_t out_frame = 0;

  std::deque<std::uint64_t> fifo;
  std::size_t fifo_frames = 0;

  std::array<Buffer, 2> bufs;
  std::size_t fill_buf = kNone;

  [[nodiscard]] bool idle() const {
    if (gen_active || load_in.valid || mult_in.valid || acc_in.valid || capture || out_active) return false;
    return std::none_of(bufs.begin(), bufs.end(),
                        [](const Buffer& b) { return b.state != BufState::empty; });
  }
};

}  // namespace

PipelineResult pipeline_run(const BitStream& input, const ToeplitzConfig& cfg, const BitStream& seed,
                            const PipelineOptions& opts) {
  cfg.validate();
  check_seed(cfg, seed);
  const std::size_t K = cfg.rounds_per_invocation();
  const std::size_t J = cfg.output_words();
  if (K < kStages + 1) throw ValidationError("pipeline needs k_in / b >= 4 for the early reseed");
  if (input.empty() || input.size() % cfg.k_in != 0) {
    throw ValidationError("pipeline input must be a positive whole number of k_in-bit frames");
  }

  const std::size_t nb = cfg.n_b;
  const std::size_t uw = (cfg.j + 63) / 64;
  const unsigned b = static_cast<unsigned>(cfg.b);
  const std::size_t total_words = input.size() / cfg.b;

  std::vector<Block> blocks;
  blocks.reserve(nb);
  for (std::size_t i = 0; i < nb; ++i) blocks.emplace_back(cfg, seed);

  PipelineResult res;
  auto& tr = res.trace;
  res.output.set_framing(Framing::output_words);
  res.output.reserve(input.size() / cfg.k_in * cfg.j);

  // frame id -> index into tr.invocations
  std::vector<std::size_t> inv_of(input.size() / cfg.k_in, kNone);

  std::size_t next_word = 0;
  std::size_t next_frame = 0;
  std::size_t chain = 0;
  const std::uint64_t cycle_cap = 64 + 4 * (total_words + nb * (K + J + kStages + 4));

  for (std::uint64_t cycle = 0;; ++cycle) {
    if (cycle > cycle_cap) throw std::logic_error("pipeline emulation did not drain");
    CycleRecord rec;
    if (opts.record_cycles) {
      rec.cycle = cycle;
      rec.stages.assign(nb, 0);
      rec.full_buffers.assign(nb, 0);
    }

    for (std::size_t bi = 0; bi < nb; ++bi) {
      Block& B = blocks[bi];
      std::uint8_t mask = 0;

      // Output stage: Z_capture -> Z_out, then one b-bit word per cycle.
      if (!B.out_active && B.capture) {
        B.zout = std::move(*B.capture);
        B.capture.reset();
        B.out_active = true;
        B.out_word = 0;
        B.out_frame = B.capture_frame;
        tr.invocations[inv_of[B.out_frame]].out_start = cycle;
      }
      if (B.out_active) {
        B.fifo.push_back(B.zout.read(B.out_word * cfg.b, b));
        auto& inv = tr.invocations[inv_of[B.out_frame]];
        ++inv.out_cycles;
        inv.out_end = cycle;
        mask |= kOut;
        if (++B.out_word == J) {
          B.out_active = false;
          ++B.fifo_frames;
        }
      }

      // XOR accumulation.
      if (B.acc_in.valid) {
        Token& tk = B.acc_in;
        if (tk.word == 0) {
          B.z = tk.u;
        } else {
          for (std::size_t k = 0; k < uw; ++k) B.z[k] ^= tk.u[k];
        }
        auto& inv = tr.invocations[inv_of[tk.frame]];
        if (inv.acc_cycles == 0) inv.acc_start = cycle;
        ++inv.acc_cycles;
        inv.acc_end = cycle;
        mask |= kAcc;
        if (tk.word == K - kStages - 1) {
          B.done_pulse = true;
          tr.done_pulses.push_back({cycle, bi, tk.word});
        }
        if (tk.word == K - 1) {
          if (B.capture) throw std::logic_error("Z_capture overrun");
          BitStream cap(cfg.j);
          for (std::size_t r = 0; r < cfg.j; ++r) {
            const std::size_t q = cfg.j - 1 - r;
            cap.set(r, (B.z[q >> 6] >> (q & 63)) & 1U);
          }
          B.capture = std::move(cap);
          B.capture_frame = tk.frame;
        }
        tk.valid = false;
      }

      // Multiplication: U_B = T_B & D_i, XOR-reduced over the b columns.
      if (B.mult_in.valid) {
        Token& tk = B.mult_in;
        tk.u.assign(uw, 0);
        for (unsigned c = 0; c < b; ++c) {
          if (!((tk.d >> c) & 1U)) continue;
          for (std::size_t k = 0; k < uw; ++k) {
            const unsigned n = static_cast<unsigned>(std::min<std::size_t>(64, cfg.j - 64 * k));
            tk.u[k] ^= tk.t.read(c + 64 * k, n);
          }
        }
        B.acc_in = std::move(tk);
        tk.valid = false;
        mask |= kMult;
      }

      // Load D_i from the read-side buffer.
      if (B.load_in.valid) {
        Token& tk = B.load_in;
        Buffer& buf = B.bufs[tk.buf];
        tk.d = buf.words[tk.word];
        if (tk.word == K - 1) buf.state = BufState::empty;
        B.mult_in = std::move(tk);
        tk.valid = false;
        mask |= kLoad;
      }

      // Generation: reseed on word 0 (latched init/done), otherwise shift by b.
      if (!B.gen_active) {
        std::size_t pick = kNone;
        for (std::size_t k = 0; k < 2; ++k) {
          if (B.bufs[k].state == BufState::full &&
              (pick == kNone || B.bufs[k].frame < B.bufs[pick].frame)) {
            pick = k;
          }
        }
        if (pick != kNone) {
          B.bufs[pick].state = BufState::reading;
          B.gen_active = true;
          B.gen_word = 0;
          B.gen_buf = pick;
          B.gen_frame = B.bufs[pick].frame;
        }
      }
      if (B.gen_active) {
        if (B.gen_word == 0) {
          if (!B.reseed_pending) throw std::logic_error("frame start without reseed");
          B.gen.reseed();
          tr.reseeds.push_back({cycle, bi, B.pending_cause});
          B.reseed_pending = false;
          inv_of[B.gen_frame] = tr.invocations.size();
          InvocationRecord inv;
          inv.block = bi;
          inv.frame = B.gen_frame;
          inv.gen_start = cycle;
          inv.reseeds = 1;
          tr.invocations.push_back(inv);
        } else {
          B.gen.shift();
        }
        B.load_in.valid = true;
        B.load_in.frame = B.gen_frame;
        B.load_in.word = B.gen_word;
        B.load_in.buf = B.gen_buf;
        B.load_in.t = B.gen.reg();
        mask |= kGen;
        if (++B.gen_word == K) B.gen_active = false;
      }

      if (B.done_pulse) {
        B.reseed_pending = true;
        B.pending_cause = ReseedCause::done;
        B.done_pulse = false;
      }
      if (opts.record_cycles) rec.stages[bi] = mask;
    }

    // Daisy chain: only the block holding read-enable takes bus words.
    std::size_t fillers = 0;
    if (next_word < total_words) {
      Block& B = blocks[chain];
      if (B.fill_buf == kNone) {
        for (std::size_t k = 0; k < 2; ++k) {
          if (B.bufs[k].state == BufState::empty) {
            B.fill_buf = k;
            B.bufs[k].state = BufState::filling;
            B.bufs[k].fill = 0;
            B.bufs[k].frame = next_frame++;
            break;
          }
        }
      }
      if (B.fill_buf == kNone) {
        ++tr.bus_stall_cycles;
      } else {
        Buffer& buf = B.bufs[B.fill_buf];
        const std::size_t n = std::min({cfg.n_s, K - buf.fill, total_words - next_word});
        for (std::size_t k = 0; k < n; ++k) buf.words[buf.fill + k] = input.read((next_word + k) * cfg.b, b);
        buf.fill += n;
        next_word += n;
        fillers = 1;
        if (opts.record_cycles) rec.filling_block = static_cast<int>(chain);
        if (buf.fill == K) {
          buf.state = BufState::full;
          B.fill_buf = kNone;
          const std::size_t to = (chain + 1) % nb;
          tr.handoffs.push_back({cycle, chain, to});
          chain = to;
        }
      }
    }
    tr.max_fillers_per_cycle = std::max(tr.max_fillers_per_cycle, fillers);

    // FIFO collation: one frame from every block, in block-index order.
    while (std::all_of(blocks.begin(), blocks.end(), [](const Block& B) { return B.fifo_frames > 0; })) {
      for (auto& B : blocks) {
        for (std::size_t k = 0; k < J; ++k) {
          res.output.append(B.fifo.front(), b);
          B.fifo.pop_front();
        }
        --B.fifo_frames;
      }
      ++tr.collations;
    }

    if (opts.record_cycles) {
      for (std::size_t bi = 0; bi < nb; ++bi) {
        rec.full_buffers[bi] = static_cast<std::uint8_t>(std::count_if(
            blocks[bi].bufs.begin(), blocks[bi].bufs.end(),
            [](const Buffer& x) { return x.state == BufState::full || x.state == BufState::reading; }));
      }
      tr.per_cycle.push_back(std::move(rec));
    }

    if (next_word == total_words &&
        std::all_of(blocks.begin(), blocks.end(), [](const Block& B) { return B.idle(); })) {
      tr.cycles = cycle + 1;
      break;
    }
  }

  // End-of-stream flush of the incomplete collation round.
  bool any = true;
  while (any) {
    any = false;
    for (auto& B : blocks) {
      if (B.fifo_frames == 0) continue;
      for (std::size_t k = 0; k < J; ++k) {
        res.output.append(B.fifo.front(), b);
        B.fifo.pop_front();
      }
      --B.fifo_frames;
      ++tr.flushed_frames;
      any = true;
    }
  }

  if (!tr.invocations.empty()) {
    tr.invocation_latency = tr.invocations[0].out_end - tr.invocations[0].gen_start + 1;
  }
  return res;
}

PipelineResult pipeline_run(const source::SampleBlock& block, const ToeplitzConfig& cfg,
                            const BitStream& seed, const PipelineOptions& opts) {
  const BitStream aligned = frame_align(rounds_to_bits(block), cfg);
  if (aligned.empty()) throw ValidationError("fewer unclipped rounds than one extractor frame");
  return pipeline_run(aligned, cfg, seed, opts);
}

}  // namespace qrng::extractor
