#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>
#include <zlib.h>

#include "deeptarget/checkpoint.hpp"
#include "deeptarget/error.hpp"
#include "deeptarget/synthetic.hpp"

namespace dt = deeptarget;
namespace fs = std::filesystem;

namespace {

dt::ArchitectureSpec spec_b() {
  dt::ArchitectureSpec s;
  s.cell = dt::nn::CellKind::Lstm;
  return s;
}

// Rewrites the trailing CRC-32 after an in-place edit, so that the decoder
// reaches the check behind the checksum.
void reseal(std::vector<std::uint8_t>& bytes) {
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t crc = static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) bytes[body + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(crc >> (8 * i));
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

class CheckpointFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("deeptarget_ckpt_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

TEST(Checkpoint, Crc32MatchesZlibReference) {
  const std::string text = "123456789";
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  EXPECT_EQ(dt::crc32_checksum(bytes), 0xCBF43926u);
}

TEST(Checkpoint, RoundTripFreshModel) {
  const dt::DeepTargetModel model(dt::ArchitectureSpec{}, 17);
  const auto bytes = dt::encode_checkpoint(model);
  EXPECT_EQ(std::memcmp(bytes.data(), dt::kCheckpointMagic, 8), 0);
  const auto back = dt::decode_checkpoint(bytes);
  EXPECT_TRUE(back == model);
  EXPECT_EQ(back.spec(), model.spec());
  EXPECT_EQ(back.metadata().seed, 17u);
  EXPECT_EQ(dt::encode_checkpoint(back), bytes);
}

TEST(Checkpoint, RoundTripPreservesBitsAndPredictions) {
  dt::SyntheticConfig cfg;
  cfg.positives = cfg.negatives = 50;
  const auto data = dt::make_synthetic_benchmark(cfg);
  dt::DeepTargetModel model(spec_b(), 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& [_, p] : model.params()) {
    for (double& v : p.value.data()) v = u(rng) * 1e-3 + 1.0 / 3.0;  // full-mantissa values
  }
  model.metadata().pretrain_epochs = 50;
  model.metadata().finetune_epochs = 12;
  const auto back = dt::decode_checkpoint(dt::encode_checkpoint(model), spec_b());
  for (const auto& [name, p] : model.params()) {
    const auto& q = back.params().at(name).value;
    ASSERT_EQ(q.shape(), p.value.shape());
    EXPECT_EQ(std::memcmp(q.data().data(), p.value.data().data(), p.value.size() * sizeof(double)), 0) << name;
  }
  EXPECT_EQ(back.metadata().pretrain_epochs, 50u);
  EXPECT_EQ(back.metadata().finetune_epochs, 12u);
  const auto a = dt::predict_sites(model, data.pairs);
  const auto b = dt::predict_sites(back, data.pairs);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i].probability), std::bit_cast<std::uint64_t>(b[i].probability));
  }
}

TEST(Checkpoint, TamperedMagicIsRejected) {
  auto bytes = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  bytes[0] = 'X';
  EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError);
  reseal(bytes);
  EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError);
}

TEST(Checkpoint, FlippedPayloadBitFailsChecksum) {
  const auto clean = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  for (std::size_t at : {std::size_t{12}, clean.size() / 2, clean.size() - 5, clean.size() - 1}) {
    auto bytes = clean;
    bytes[at] ^= 0x10;
    EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError) << "offset " << at;
  }
}

TEST(Checkpoint, WrongVersionIsRejected) {
  auto bytes = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  bytes[8] = static_cast<std::uint8_t>(dt::kCheckpointVersion + 1);
  reseal(bytes);
  EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError);
}

TEST(Checkpoint, TruncationIsRejected) {
  const auto clean = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  for (std::size_t keep : {std::size_t{0}, std::size_t{5}, std::size_t{20}, clean.size() / 3, clean.size() - 1}) {
    std::vector<std::uint8_t> cut(clean.begin(), clean.begin() + static_cast<std::ptrdiff_t>(keep));
    EXPECT_THROW(dt::decode_checkpoint(cut), dt::FormatError) << "kept " << keep;
    if (cut.size() > 4) {
      reseal(cut);
      EXPECT_THROW(dt::decode_checkpoint(cut), dt::FormatError) << "resealed, kept " << keep;
    }
  }
}

TEST(Checkpoint, TrailingBytesAreRejected) {
  auto bytes = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  bytes.insert(bytes.end() - 4, {0, 0, 0, 0});
  reseal(bytes);
  EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError);
}

TEST(Checkpoint, ShapeTableMismatchIsRejected) {
  auto bytes = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  // First tensor: skip magic, version, header, count, name; bump its first dim.
  std::size_t at = 8 + 2;
  at += 4 + read_u32(bytes, at);
  at += 4;
  at += 4 + read_u32(bytes, at);
  at += 4;  // rank
  bytes[at] = static_cast<std::uint8_t>(bytes[at] + 1);
  reseal(bytes);
  EXPECT_THROW(dt::decode_checkpoint(bytes), dt::FormatError);
}

TEST(Checkpoint, ArchitectureMismatchIsRefused) {
  const auto bytes = dt::encode_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1));
  EXPECT_NO_THROW(dt::decode_checkpoint(bytes, dt::ArchitectureSpec{}));
  EXPECT_THROW(dt::decode_checkpoint(bytes, spec_b()), dt::FormatError);
}

TEST_F(CheckpointFile, SaveAndLoad) {
  const dt::DeepTargetModel model(spec_b(), 9);
  const auto path = (dir / "model.ckpt").string();
  dt::save_checkpoint(model, path);
  EXPECT_TRUE(dt::load_checkpoint(path) == model);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);  // no temporary left behind
}

TEST_F(CheckpointFile, CorruptFileOnDiskIsRejected) {
  const auto path = (dir / "model.ckpt").string();
  dt::save_checkpoint(dt::DeepTargetModel(dt::ArchitectureSpec{}, 1), path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  EXPECT_THROW(dt::load_checkpoint(path), dt::FormatError);
  EXPECT_THROW(dt::load_checkpoint((dir / "missing.ckpt").string()), dt::DataError);
}
