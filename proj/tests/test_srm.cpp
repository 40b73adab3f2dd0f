#include <gtest/gtest.h>

#include <filesystem>

#include "cisnet/srm.hpp"
#include "cisnet/train.hpp"
#include "test_util.hpp"

using namespace cisnet;
using namespace cisnet::testutil;

TEST(SrmBank, TwentyKernelsEachSummingToZero) {
  const FilterBank bank = build_bank();
  ASSERT_EQ(bank.count(), 20);
  ASSERT_EQ(bank.names.size(), 20u);
  for (int64_t k = 0; k < bank.count(); ++k) {
    double total = 0.0;
    for (int64_t i = 0; i < 25; ++i) total += bank.kernels.data()[k * 25 + i];
    EXPECT_EQ(total, 0.0) << bank.names[static_cast<size_t>(k)];
  }
}

TEST(SrmBank, NoFourthOrderKernels) {
  const FilterBank bank = build_bank();
  for (const std::string& name : bank.names) EXPECT_EQ(name.find("s4"), std::string::npos);
  // Families: 4 second order, 8 third order, KB, KV, 6 EDGE.
  int s2 = 0, s3 = 0, edge = 0;
  for (const std::string& name : bank.names) {
    if (name.rfind("s2_", 0) == 0) ++s2;
    if (name.rfind("s3_", 0) == 0) ++s3;
    if (name.rfind("edge", 0) == 0) ++edge;
  }
  EXPECT_EQ(s2, 4);
  EXPECT_EQ(s3, 8);
  EXPECT_EQ(edge, 6);
}

TEST(SrmBank, ConstantImageGivesExactZeroResidual) {
  // Zero residual across the valid interior; the 2-pixel border sees the
  // zero padding instead of the constant.
  const FilterBank bank = build_bank();
  const int64_t n = 12;
  Tensor image = Tensor::full({1, 1, n, n}, 131.0);
  Tensor out = hpf_forward(image, bank);
  for (int64_t k = 0; k < 20; ++k)
    for (int64_t y = 2; y < n - 2; ++y)
      for (int64_t x = 2; x < n - 2; ++x)
        EXPECT_EQ(out.at({0, k, y, x}), 0.0) << bank.names[static_cast<size_t>(k)];
}

TEST(SrmBank, SecondOrderAnnihilatesLinearRamp) {
  const FilterBank bank = build_bank();
  const int64_t n = 16;
  Tensor ramp(Shape{1, 1, n, n});
  for (int64_t y = 0; y < n; ++y)
    for (int64_t x = 0; x < n; ++x) ramp.data()[y * n + x] = static_cast<double>(x);
  Tensor out = hpf_forward(ramp, bank);
  const int64_t horiz = 0;  // s2_horiz
  ASSERT_EQ(bank.names[0], "s2_horiz");
  for (int64_t y = 2; y < n - 2; ++y)
    for (int64_t x = 2; x < n - 2; ++x) EXPECT_EQ(out.at({0, horiz, y, x}), 0.0);
}

TEST(SrmBank, MatchesShippedAssetBitExactly) {
  const FilterBank built = build_bank();
  const FilterBank shipped =
      load_filter_bank(std::string(CISNET_DATA_DIR) + "/srm_bank_v1.txt");
  ASSERT_EQ(shipped.count(), built.count());
  EXPECT_EQ(shipped.names, built.names);
  EXPECT_TRUE(bitwise_equal(shipped.kernels, built.kernels));
}

TEST(SrmBank, AssetRoundTripIsBitExact) {
  const FilterBank bank = build_bank();
  const std::string path =
      (std::filesystem::temp_directory_path() / "srm_roundtrip.txt").string();
  save_filter_bank(bank, path);
  const FilterBank loaded = load_filter_bank(path);
  EXPECT_EQ(loaded.names, bank.names);
  EXPECT_TRUE(bitwise_equal(loaded.kernels, bank.kernels));
  std::filesystem::remove(path);
}

TEST(HpfForward, OutputShapeAndGrayscaleCheck) {
  const FilterBank bank = build_bank();
  Tensor image = random_tensor({3, 1, 24, 17}, 61, 0.0, 255.0);
  Tensor out = hpf_forward(image, bank);
  EXPECT_EQ(out.shape(), (Shape{3, 20, 24, 17}));
  Tensor color = random_tensor({1, 3, 24, 24}, 62);
  EXPECT_THROW(hpf_forward(color, bank), Error);
}

TEST(HpfForward, ResidualDifferenceHasFiniteSupport) {
  const FilterBank bank = build_bank();
  const int64_t n = 32;
  Tensor cover = random_tensor({1, 1, n, n}, 63, 0.0, 255.0);
  for (int64_t i = 0; i < cover.numel(); ++i) cover.data()[i] = std::round(cover.data()[i]);
  Tensor stego = cover.clone_detached();
  const int64_t cy = 13, cx = 21;
  stego.data()[cy * n + cx] += 1.0;

  Tensor rc = hpf_forward(cover, bank);
  Tensor rs = hpf_forward(stego, bank);
  for (int64_t k = 0; k < 20; ++k)
    for (int64_t y = 0; y < n; ++y)
      for (int64_t x = 0; x < n; ++x) {
        const double diff = rs.at({0, k, y, x}) - rc.at({0, k, y, x});
        if (std::abs(y - cy) > 2 || std::abs(x - cx) > 2)
          EXPECT_EQ(diff, 0.0);
      }
}

TEST(HpfForward, LinearityIsExactOnIntegerImages) {
  const FilterBank bank = build_bank();
  const int64_t n = 24;
  Tensor cover = random_tensor({1, 1, n, n}, 64, 0.0, 255.0);
  for (int64_t i = 0; i < cover.numel(); ++i) cover.data()[i] = std::round(cover.data()[i]);
  Tensor change = Tensor::zeros({1, 1, n, n});
  Rng rng(65);
  for (int64_t i = 0; i < change.numel(); ++i)
    if (rng.uniform() < 0.2) change.data()[i] = (rng.next_u64() & 1) ? 1.0 : -1.0;
  Tensor mixed = cover.clone_detached();
  for (int64_t i = 0; i < mixed.numel(); ++i) mixed.data()[i] += change.data()[i];

  Tensor lhs = hpf_forward(mixed, bank);
  Tensor rc = hpf_forward(cover, bank);
  Tensor rn = hpf_forward(change, bank);
  for (int64_t i = 0; i < lhs.numel(); ++i)
    EXPECT_EQ(lhs.data()[i] - rc.data()[i], rn.data()[i]);
}

TEST(HpfForward, CheckerboardUnderKbIsAlternatingConstantMagnitude) {
  const FilterBank bank = build_bank();
  int64_t kb = -1;
  for (size_t i = 0; i < bank.names.size(); ++i)
    if (bank.names[i] == "kb") kb = static_cast<int64_t>(i);
  ASSERT_GE(kb, 0);
  const int64_t n = 16;
  Tensor board(Shape{1, 1, n, n});
  for (int64_t y = 0; y < n; ++y)
    for (int64_t x = 0; x < n; ++x) board.data()[y * n + x] = ((y + x) % 2) ? 200.0 : 100.0;

  // Direct-convolution oracle for the same kernel.
  Tensor kernel(Shape{1, 1, 5, 5});
  for (int64_t i = 0; i < 25; ++i) kernel.data()[i] = bank.kernels.data()[kb * 25 + i];
  Tensor oracle = naive_conv2d(board, kernel, 1, 1, 2);
  Tensor got = hpf_forward(board, bank);
  for (int64_t y = 0; y < n; ++y)
    for (int64_t x = 0; x < n; ++x)
      EXPECT_EQ(got.at({0, kb, y, x}), oracle.at({0, 0, y, x}));

  // Interior response alternates sign with constant magnitude.
  const double magnitude = std::fabs(got.at({0, kb, 4, 4}));
  EXPECT_GT(magnitude, 0.0);
  for (int64_t y = 2; y < n - 2; ++y)
    for (int64_t x = 2; x < n - 2; ++x) {
      EXPECT_EQ(std::fabs(got.at({0, kb, y, x})), magnitude);
      EXPECT_EQ(got.at({0, kb, y, x}), -got.at({0, kb, y, x + 1}));
    }
}

TEST(SrmBank, MalformedAssetFilesThrow) {
  namespace fs = std::filesystem;
  const std::string dir = fs::temp_directory_path().string();
  const std::string bad_header = dir + "/srm_bad_header.txt";
  write_file_atomic(bad_header, "not-a-bank v9 count=3\n");
  EXPECT_THROW(load_filter_bank(bad_header), Error);
  const std::string truncated = dir + "/srm_truncated.txt";
  write_file_atomic(truncated, "srm-bank v1 count=2\nk0\n1 2 3\n");
  EXPECT_THROW(load_filter_bank(truncated), Error);
  fs::remove(bad_header);
  fs::remove(truncated);
}
