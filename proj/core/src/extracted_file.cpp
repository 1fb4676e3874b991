#include "qrng/extracted_file.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "qrng/error.hpp"

namespace qrng::extractor {

namespace {

constexpr char kMagic[8] = {'Q', 'R', 'N', 'G', 'E', 'X', 'T', '1'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t off) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in[off + i]) << (8 * i));
  return v;
}

}  // namespace

void write_extracted(const std::filesystem::path& path, const ExtractedFile& f) {
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kMagic, kMagic + 8);
  put<std::uint16_t>(buf, f.version);
  put<std::uint16_t>(buf, f.flags);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(f.cfg.j));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(f.cfg.k_in));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(f.cfg.b));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(f.cfg.n_b));
  buf.insert(buf.end(), f.seed_digest.begin(), f.seed_digest.end());
  put<std::uint64_t>(buf, f.payload.size());
  buf.insert(buf.end(), f.certificate_digest.begin(), f.certificate_digest.end());
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(f.certificate.size()));
  buf.insert(buf.end(), f.certificate.begin(), f.certificate.end());
  const auto bytes = f.payload.to_bytes();
  buf.insert(buf.end(), bytes.begin(), bytes.end());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

ExtractedFile read_extracted(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> buf{std::istreambuf_iterator<char>(in), {}};
  if (buf.size() < kExtHeaderBytes + 36) throw IoError(path.string() + ": truncated header");
  if (std::memcmp(buf.data(), kMagic, 8) != 0) throw IoError(path.string() + ": bad magic");

  ExtractedFile f;
  f.version = get<std::uint16_t>(buf, 8);
  if (f.version != kExtVersion) throw IoError(path.string() + ": unsupported version");
  f.flags = get<std::uint16_t>(buf, 10);
  f.cfg.j = get<std::uint32_t>(buf, 12);
  f.cfg.k_in = get<std::uint32_t>(buf, 16);
  f.cfg.b = get<std::uint16_t>(buf, 20);
  f.cfg.n_b = get<std::uint16_t>(buf, 22);
  f.cfg.n_s = f.cfg.n_b;
  std::memcpy(f.seed_digest.data(), buf.data() + 24, 32);
  const auto bits = get<std::uint64_t>(buf, 56);
  std::memcpy(f.certificate_digest.data(), buf.data() + 64, 32);
  const auto cert_len = get<std::uint32_t>(buf, 96);
  const std::size_t payload_off = 100 + static_cast<std::size_t>(cert_len);
  if (buf.size() < payload_off) throw IoError(path.string() + ": truncated certificate");
  f.certificate.assign(buf.begin() + 100, buf.begin() + static_cast<std::ptrdiff_t>(payload_off));
  if (f.certified() && sha256(f.certificate) != f.certificate_digest) {
    throw IoError(path.string() + ": certificate digest mismatch");
  }
  const std::size_t nbytes = (bits + 7) / 8;
  if (buf.size() != payload_off + nbytes) throw IoError(path.string() + ": payload length mismatch");
  f.payload = BitStream::from_bytes(std::span(buf).subspan(payload_off), bits);
  f.payload.set_framing(Framing::output_words);
  return f;
}

void export_raw(const std::filesystem::path& path, const BitStream& bits) { write_bits_file(path, bits); }

}  // namespace qrng::extractor
