#include "qrng/source.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "qrng/error.hpp"
#include "qrng/fir.hpp"
#include "qrng/philox.hpp"

namespace qrng::source {

namespace {

// White-noise counter offset so that filter history before round 0 is defined.
constexpr std::uint64_t kHistoryOffset = std::uint64_t{1} << 32;

void put_u16(unsigned char* p, std::uint16_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::int16_t decode_code(const unsigned char* p, std::uint64_t round, char channel) {
  const auto code = static_cast<std::int16_t>(get_u16(p));
  if (code < kCodeMin || code > kCodeMax) {
    std::ostringstream msg;
    msg << "code " << code << " out of 12-bit range at round " << round << " channel " << channel;
    throw ValidationError(msg.str());
  }
  return code;
}

}  // namespace

double SourceModel::code_step_x() const { return effective_code_width(v_pp, enob_x); }
double SourceModel::code_step_p() const { return effective_code_width(v_pp, enob_p); }

std::vector<std::string> validate(const SourceModel& m) {
  std::vector<std::string> warnings;
  auto fail = [](const std::string& what) { throw ValidationError("source model: " + what); };
  if (!(m.m_x > 0.0) || !(m.m_p > 0.0)) fail("shot-noise slopes must be positive");
  if (m.c_x < 0.0 || m.c_p < 0.0) fail("electronics-noise variances must be non-negative");
  if (m.p_lo < 0.0) fail("LO power must be non-negative");
  if (!(m.v_pp > 0.0)) fail("v_pp must be positive");
  if (!(m.f_s > 0.0)) fail("sampling rate must be positive");
  if (m.adc_bits != kAdcBits) fail("only 12-bit ADCs are supported");
  if (!(m.enob_x > 0.0) || !(m.enob_p > 0.0)) fail("ENOB must be positive");
  if (m.enob_x > m.adc_bits || m.enob_p > m.adc_bits) fail("ENOB exceeds ADC resolution");
  if (!(std::abs(m.rho_xp) < 1.0)) fail("|rho_xp| must be < 1");
  if (m.variance_x() < 0.0 || m.variance_p() < 0.0) fail("negative voltage variance at p_lo");
  if (m.filtered()) {
    if (m.filter_taps % 2 == 0 || m.filter_taps < 3) fail("filter_taps must be odd and >= 3");
    if (!(m.passband_lo > 0.0) || !(m.passband_hi > m.passband_lo)) {
      fail("passband must satisfy 0 < lo < hi");
    }
    if (m.passband_lo >= m.f_s / 2.0) fail("passband_lo must be below Nyquist");
    if (m.passband_hi > m.f_s / 2.0) {
      std::ostringstream w;
      w << "passband_hi " << m.passband_hi << " Hz exceeds Nyquist " << m.f_s / 2.0
        << " Hz; synthesis band clamped at Nyquist, aliasing not modeled";
      warnings.push_back(w.str());
    }
  }
  return warnings;
}

double effective_code_width(double v_pp, double enob) { return v_pp / std::exp2(enob); }

std::int16_t quantize(double volts, double step) noexcept {
  const double q = std::round(volts / step);
  if (!(q > kCodeMin)) return kCodeMin;  // also catches NaN
  if (q >= kCodeMax) return kCodeMax;
  return static_cast<std::int16_t>(q);
}

std::size_t SampleBlock::clipped_count() const noexcept {
  return static_cast<std::size_t>(std::count(clip_mask.begin(), clip_mask.end(), 1));
}

SampleBlock SampleBlock::from_codes(std::vector<std::int16_t> x, std::vector<std::int16_t> p,
                                    Origin origin, std::uint64_t f_s_hz) {
  if (x.size() != p.size()) throw ValidationError("X and P code streams differ in length");
  SampleBlock block;
  block.clip_mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < kCodeMin || x[i] > kCodeMax || p[i] < kCodeMin || p[i] > kCodeMax) {
      throw ValidationError("code out of 12-bit range at round " + std::to_string(i));
    }
    block.clip_mask[i] = (is_rail(x[i]) || is_rail(p[i])) ? 1 : 0;
  }
  block.codes_x = std::move(x);
  block.codes_p = std::move(p);
  block.origin = origin;
  block.f_s_hz = f_s_hz;
  return block;
}

SampleBlock SampleBlock::slice(std::size_t first, std::size_t count) const {
  if (first > round_count() || count > round_count() - first) {
    throw ValidationError("slice out of range");
  }
  SampleBlock out;
  out.codes_x.assign(codes_x.begin() + first, codes_x.begin() + first + count);
  out.codes_p.assign(codes_p.begin() + first, codes_p.begin() + first + count);
  out.clip_mask.assign(clip_mask.begin() + first, clip_mask.begin() + first + count);
  out.origin = origin;
  out.f_s_hz = f_s_hz;
  return out;
}

SampleBlock SampleBlock::decimate(std::size_t factor) const {
  if (factor == 0) throw ValidationError("decimation factor must be >= 1");
  SampleBlock out;
  out.origin = origin;
  out.f_s_hz = f_s_hz / factor;
  for (std::size_t i = 0; i < round_count(); i += factor) {
    out.codes_x.push_back(codes_x[i]);
    out.codes_p.push_back(codes_p[i]);
    out.clip_mask.push_back(clip_mask[i]);
  }
  return out;
}

VoltageStream synthesize_voltages(const SourceModel& model, std::uint64_t seed,
                                  std::uint64_t first, std::size_t count) {
  const double sx = std::sqrt(model.variance_x());
  const double sp = std::sqrt(model.variance_p());
  const double rho = model.rho_xp;
  const double rho_c = std::sqrt(1.0 - rho * rho);
  const Philox4x32 gen(seed);

  const std::size_t history = model.filtered() ? model.filter_taps - 1 : 0;
  std::vector<double> wx(count + history), wp(count + history);
  for (std::size_t i = 0; i < wx.size(); ++i) {
    const std::uint64_t t = kHistoryOffset + first + i - history;
    const auto [n1, n2] = gaussian_pair(gen, t, 0);
    wx[i] = sx * n1;
    wp[i] = sp * (rho * n1 + rho_c * n2);
  }

  VoltageStream out;
  if (!model.filtered()) {
    out.x = std::move(wx);
    out.p = std::move(wp);
    return out;
  }
  const auto taps = design_bandpass(model.filter_taps, model.passband_lo,
                                    std::min(model.passband_hi, model.f_s / 2.0), model.f_s);
  out.x.resize(count);
  out.p.resize(count);
  const std::span<const double> h(taps);
  for (std::size_t n = 0; n < count; ++n) {
    out.x[n] = fir_at(h, std::span<const double>(wx).subspan(n, taps.size()));
    out.p[n] = fir_at(h, std::span<const double>(wp).subspan(n, taps.size()));
  }
  return out;
}

SampleBlock simulate(const SourceModel& model, std::size_t rounds, std::uint64_t seed,
                     unsigned workers) {
  if (rounds == 0) throw ValidationError("simulate: rounds must be >= 1");
  validate(model);
  const double step_x = model.code_step_x();
  const double step_p = model.code_step_p();

  std::vector<std::int16_t> cx(rounds), cp(rounds);
  auto work = [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t at = begin; at < end; at += kChunk) {
      const std::size_t n = std::min(kChunk, end - at);
      const auto v = synthesize_voltages(model, seed, at, n);
      for (std::size_t i = 0; i < n; ++i) {
        cx[at + i] = quantize(v.x[i], step_x);
        cp[at + i] = quantize(v.p[i], step_p);
      }
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rounds)));
  if (workers == 1) {
    work(0, rounds);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t per = (rounds + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = std::min(rounds, per * w);
      const std::size_t e = std::min(rounds, b + per);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return SampleBlock::from_codes(std::move(cx), std::move(cp), Origin::synthetic,
                                 static_cast<std::uint64_t>(std::llround(model.f_s)));
}

void write_raw(const std::filesystem::path& path, const SampleBlock& block, RawFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (format == RawFormat::qrngraw1) {
    std::array<unsigned char, kRawHeaderBytes> hdr{};
    std::memcpy(hdr.data(), "QRNGRAW1", 8);
    put_u16(hdr.data() + 8, kRawVersion);
    put_u16(hdr.data() + 10, kAdcBits);
    put_u64(hdr.data() + 12, block.f_s_hz);
    put_u64(hdr.data() + 20, block.round_count());
    out.write(reinterpret_cast<const char*>(hdr.data()), hdr.size());
  }
  constexpr std::size_t kBatch = 1 << 14;
  std::vector<unsigned char> buf(kBatch * 4);
  for (std::size_t at = 0; at < block.round_count(); at += kBatch) {
    const std::size_t n = std::min(kBatch, block.round_count() - at);
    for (std::size_t i = 0; i < n; ++i) {
      put_u16(&buf[4 * i], static_cast<std::uint16_t>(block.codes_x[at + i]));
      put_u16(&buf[4 * i + 2], static_cast<std::uint16_t>(block.codes_p[at + i]));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(4 * n));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SampleBlock ingest(const std::filesystem::path& path, RawFormat format, std::uint64_t f_s_hz) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  std::uint64_t rounds = 0;
  std::uint64_t body = size;
  if (format == RawFormat::qrngraw1) {
    std::array<unsigned char, kRawHeaderBytes> hdr{};
    if (size < kRawHeaderBytes || !in.read(reinterpret_cast<char*>(hdr.data()), hdr.size())) {
      throw IoError("malformed header: file shorter than 32 bytes");
    }
    if (std::memcmp(hdr.data(), "QRNGRAW1", 8) != 0) throw IoError("malformed header: bad magic");
    if (get_u16(hdr.data() + 8) != kRawVersion) throw IoError("malformed header: unsupported version");
    if (get_u16(hdr.data() + 10) != kAdcBits) throw IoError("malformed header: adc_bits != 12");
    f_s_hz = get_u64(hdr.data() + 12);
    rounds = get_u64(hdr.data() + 20);
    body = size - kRawHeaderBytes;
    if (body != rounds * 4) {
      throw IoError("truncated file: header declares " + std::to_string(rounds) +
                    " rounds but body holds " + std::to_string(body) + " bytes");
    }
  } else {
    if (body % 4 != 0) throw IoError("truncated file: length is not a whole number of rounds");
    rounds = body / 4;
  }

  std::vector<std::int16_t> cx(rounds), cp(rounds);
  constexpr std::size_t kBatch = 1 << 14;
  std::vector<unsigned char> buf(kBatch * 4);
  for (std::uint64_t at = 0; at < rounds; at += kBatch) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kBatch, rounds - at));
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(4 * n))) {
      throw IoError("truncated file at round " + std::to_string(at));
    }
    for (std::size_t i = 0; i < n; ++i) {
      cx[at + i] = decode_code(&buf[4 * i], at + i, 'X');
      cp[at + i] = decode_code(&buf[4 * i + 2], at + i, 'P');
    }
  }
  return SampleBlock::from_codes(std::move(cx), std::move(cp), Origin::ingested, f_s_hz);
}

std::vector<double> to_volts(std::span<const std::int16_t> codes, double step) {
  std::vector<double> v(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) v[i] = codes[i] * step;
  return v;
}

}  // namespace qrng::source
