#include <cstring>
#include <sstream>

#include <gtest/gtest.h>

#include "meshmap/tensor_io.hpp"

using namespace meshmap;

namespace {

std::string bytes_of(const TensorFile& f) {
  std::ostringstream os(std::ios::binary);
  write_rmtf(os, f);
  return os.str();
}

TensorFile parse(const std::string& s) {
  std::istringstream is(s, std::ios::binary);
  return read_rmtf(is);
}

}  // namespace

TEST(TensorIo, ByteLayoutMatchesHandEncoding) {
  TensorFile f;
  f.add("ab", Tensor({2}, {1.0f, -2.0f}));
  std::string expect = "RMTF";
  expect += std::string("\x01\x00", 2);  // version
  expect += std::string("\x01\x00", 2);  // one entry
  expect += std::string("\x02\x00", 2);  // name length
  expect += "ab";
  expect += std::string("\x01", 1);              // rank
  expect += std::string("\x02\x00\x00\x00", 4);  // dim
  expect += std::string("\x00\x00\x80\x3f", 4);  // 1.0f
  expect += std::string("\x00\x00\x00\xc0", 4);  // -2.0f
  EXPECT_EQ(bytes_of(f), expect);
}

TEST(TensorIo, RoundTripPreservesOrderAndValues) {
  TensorFile f;
  f.add("x", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  f.add("scalarish", Tensor({1}, {0.1f}));
  f.add("empty", Tensor({0, 4}, {}));
  const TensorFile g = parse(bytes_of(f));
  ASSERT_EQ(g.entries().size(), 3u);
  EXPECT_EQ(g.entries()[0].first, "x");
  EXPECT_EQ(g.at("x").dims, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(g.at("x").data, f.at("x").data);
  EXPECT_EQ(g.at("scalarish").data[0], 0.1f);
  EXPECT_EQ(g.at("empty").size(), 0u);
}

TEST(TensorIo, AddReplacesExistingName) {
  TensorFile f;
  f.add("a", Tensor({1}, {1}));
  f.add("a", Tensor({1}, {2}));
  EXPECT_EQ(f.entries().size(), 1u);
  EXPECT_EQ(f.at("a").data[0], 2.0f);
}

TEST(TensorIo, MissingEntryIsLoadError) {
  TensorFile f;
  try {
    f.at("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Load);
  }
}

TEST(TensorIo, TruncatedInputIsParseError) {
  TensorFile f;
  f.add("x", Tensor({4}, {1, 2, 3, 4}));
  const std::string full = bytes_of(f);
  for (std::size_t cut = 0; cut < full.size(); ++cut) {
    try {
      parse(full.substr(0, cut));
      FAIL() << "cut at " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse);
    }
  }
}

TEST(TensorIo, BadMagicAndVersionRejected) {
  TensorFile f;
  f.add("x", Tensor({1}, {1}));
  std::string s = bytes_of(f);
  std::string bad_magic = s;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse(bad_magic), Error);
  std::string bad_version = s;
  bad_version[4] = 9;
  EXPECT_THROW(parse(bad_version), Error);
}

TEST(TensorIo, PayloadSizeMismatchRejected) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), Error);
}

TEST(TensorIo, MissingFileIsLoadError) {
  try {
    load_rmtf("/nonexistent/file.rmtf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Load);
  }
}
