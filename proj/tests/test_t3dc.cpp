#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "mvc3d/error.hpp"
#include "mvc3d/t3dc.hpp"

using namespace mvc3d;

TEST(T3dc, ByteLayout) {
  const Tensor t({2, 1}, {1.0, -2.5});
  const std::string b = t3dc::encode(t);
  ASSERT_EQ(b.size(), 4u + 1 + 1 + 2 * 4 + 2 * 4);
  EXPECT_EQ(b.substr(0, 4), "T3DC");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(b[5]), 2);
  EXPECT_EQ(static_cast<unsigned char>(b[6]), 2);  // dim 0, little endian
  EXPECT_EQ(static_cast<unsigned char>(b[10]), 1);
  // 1.0f = 0x3f800000, little endian.
  EXPECT_EQ(static_cast<unsigned char>(b[14]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(b[17]), 0x3f);
}

TEST(T3dc, RoundTripsFloatValues) {
  const Tensor t({2, 3, 1, 2, 2}, std::vector<double>(24, 0.0));
  for (std::size_t i = 0; i < 24; ++i) t.values_mut()[i] = static_cast<float>(0.37 * i - 3.1);
  const Tensor r = t3dc::decode(t3dc::encode(t));
  EXPECT_EQ(r.dims(), t.dims());
  for (std::size_t i = 0; i < 24; ++i) EXPECT_EQ(r[i], t[i]);
  const auto path = std::filesystem::temp_directory_path() / "mvc3d_t3dc_test.t3dc";
  t3dc::save(path, t);
  EXPECT_EQ(t3dc::load(path).values()[5], t[5]);
  std::filesystem::remove(path);
}

TEST(T3dc, RejectsMalformedInput) {
  std::string b = t3dc::encode(Tensor({2}, {1.0, 2.0}));
  EXPECT_THROW(t3dc::decode("XXXX" + b.substr(4)), FormatError);
  std::string v = b;
  v[4] = 9;
  EXPECT_THROW(t3dc::decode(v), FormatError);
  EXPECT_THROW(t3dc::decode(b.substr(0, b.size() - 1)), FormatError);
  EXPECT_THROW(t3dc::decode(b + "x"), FormatError);
  EXPECT_THROW(t3dc::load("/nonexistent/file.t3dc"), FormatError);
}
