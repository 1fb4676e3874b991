#include "qrng/extracted_file.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <vector>

#include "qrng/error.hpp"
#include "test_util.hpp"

using namespace qrng;
using namespace qrng::extractor;

namespace {

ExtractedFile sample() {
  ExtractedFile f;
  f.flags = kExtFlagCertified;
  f.seed_digest = sha256(make_seed(f.cfg.seed_bits(), 1).to_bytes());
  f.certificate = "# qrng certificate v1\nell = 1272 bit\n";
  f.certificate_digest = sha256(f.certificate);
  f.payload = testutil::random_bits(3 * f.cfg.j, 4);
  return f;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::uint64_t le(const std::vector<std::uint8_t>& b, std::size_t off, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = v << 8 | b[off + i];
  return v;
}

}  // namespace

TEST(ExtractedFile, RoundTrip) {
  const auto dir = testutil::scratch_dir("extfile_rt");
  const auto f = sample();
  write_extracted(dir / "a.qrngext", f);
  const auto g = read_extracted(dir / "a.qrngext");
  EXPECT_TRUE(g.certified());
  EXPECT_EQ(g.cfg.j, f.cfg.j);
  EXPECT_EQ(g.cfg.k_in, f.cfg.k_in);
  EXPECT_EQ(g.cfg.b, f.cfg.b);
  EXPECT_EQ(g.cfg.n_b, f.cfg.n_b);
  EXPECT_EQ(g.seed_digest, f.seed_digest);
  EXPECT_EQ(g.certificate_digest, f.certificate_digest);
  EXPECT_EQ(g.certificate, f.certificate);
  EXPECT_EQ(g.payload, f.payload);
}

TEST(ExtractedFile, HeaderLayout) {
  const auto dir = testutil::scratch_dir("extfile_layout");
  const auto f = sample();
  write_extracted(dir / "a.qrngext", f);
  const auto b = slurp(dir / "a.qrngext");
  ASSERT_GE(b.size(), kExtHeaderBytes + 36);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "QRNGEXT1");
  EXPECT_EQ(le(b, 8, 2), kExtVersion);
  EXPECT_EQ(le(b, 10, 2), kExtFlagCertified);
  EXPECT_EQ(le(b, 12, 4), 1272u);
  EXPECT_EQ(le(b, 16, 4), 2880u);
  EXPECT_EQ(le(b, 20, 2), 24u);
  EXPECT_EQ(le(b, 22, 2), 20u);
  EXPECT_TRUE(std::equal(f.seed_digest.begin(), f.seed_digest.end(), b.begin() + 24));
  EXPECT_EQ(le(b, 56, 8), f.payload.size());
  EXPECT_TRUE(std::equal(f.certificate_digest.begin(), f.certificate_digest.end(), b.begin() + 64));
  EXPECT_EQ(le(b, 96, 4), f.certificate.size());
  const std::size_t payload_at = 100 + f.certificate.size();
  EXPECT_EQ(b.size(), payload_at + (f.payload.size() + 7) / 8);
  const auto bytes = f.payload.to_bytes();
  EXPECT_TRUE(std::equal(bytes.begin(), bytes.end(), b.begin() + static_cast<std::ptrdiff_t>(payload_at)));
}

TEST(ExtractedFile, TamperedCertificateIsRejected) {
  const auto dir = testutil::scratch_dir("extfile_tamper");
  write_extracted(dir / "a.qrngext", sample());
  auto b = slurp(dir / "a.qrngext");
  b[100 + 10] ^= 0x01;
  spit(dir / "b.qrngext", b);
  EXPECT_THROW((void)read_extracted(dir / "b.qrngext"), IoError);
}

TEST(ExtractedFile, MalformedFiles) {
  const auto dir = testutil::scratch_dir("extfile_bad");
  write_extracted(dir / "a.qrngext", sample());
  auto b = slurp(dir / "a.qrngext");

  auto bad_magic = b;
  bad_magic[0] = 'X';
  spit(dir / "magic.qrngext", bad_magic);
  EXPECT_THROW((void)read_extracted(dir / "magic.qrngext"), IoError);

  auto truncated = b;
  truncated.resize(truncated.size() - 5);
  spit(dir / "trunc.qrngext", truncated);
  EXPECT_THROW((void)read_extracted(dir / "trunc.qrngext"), IoError);

  spit(dir / "short.qrngext", std::vector<std::uint8_t>(b.begin(), b.begin() + 20));
  EXPECT_THROW((void)read_extracted(dir / "short.qrngext"), IoError);
  EXPECT_THROW((void)read_extracted(dir / "nope.qrngext"), IoError);
}

TEST(ExtractedFile, RawExport) {
  const auto dir = testutil::scratch_dir("extfile_raw");
  const auto bits = testutil::random_bits(1001, 2);
  export_raw(dir / "x.bin", bits);
  const auto b = slurp(dir / "x.bin");
  EXPECT_EQ(b, bits.to_bytes());
}
