#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "magsuture/pgm.hpp"
#include "magsuture/raster.hpp"

using namespace magsuture;

TEST(Raster, IndexingAndBounds) {
  Raster<int> r(3, 2, 7);
  EXPECT_EQ(r.width(), 3);
  EXPECT_EQ(r.height(), 2);
  EXPECT_EQ(r.size(), 6u);
  r(2, 1) = 5;
  EXPECT_EQ(r.at(2, 1), 5);
  EXPECT_EQ(r.data()[5], 5);
  EXPECT_THROW(r.at(3, 0), std::out_of_range);
  EXPECT_EQ(count_nonzero(r), 6u);
}

TEST(Raster, RotateAndTranspose) {
  SegMask m(4, 4, 0);
  m(1, 0) = 1;
  const SegMask r = rotate90_ccw(m);
  EXPECT_EQ(r(0, 2), 1);
  EXPECT_EQ(count_nonzero(r), 1u);
  EXPECT_EQ(rotate90_ccw(rotate90_ccw(rotate90_ccw(r))), m);
  EXPECT_EQ(transpose(transpose(m)), m);
  EXPECT_EQ(transpose(m)(0, 1), 1);
}

TEST(Raster, MaskPointsArePixelCenters) {
  SegMask m(5, 5, 0);
  m(2, 3) = 1;
  const auto pts = mask_points(m);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0], Vec2(2.5, 3.5));
}

TEST(Pgm, RoundTrip) {
  GrayFrame img(7, 3);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(i * 37);
  std::stringstream ss;
  write_pgm(ss, img);
  EXPECT_EQ(read_pgm(ss), img);
}

TEST(Pgm, CommentsAndSixteenBit) {
  std::string data = "P5\n# a comment\n2 1\n# another\n65535\n";
  data += std::string("\xff\xff\x00\x00", 4);
  std::istringstream in(data);
  const GrayFrame img = read_pgm(in);
  EXPECT_EQ(img(0, 0), 255);
  EXPECT_EQ(img(1, 0), 0);
}

TEST(Pgm, Errors) {
  std::istringstream p2("P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(p2), IoError);
  std::istringstream trunc("P5\n4 4\n255\n\x01\x02");
  EXPECT_THROW(read_pgm(trunc), IoError);
  std::istringstream bad("P5\nx 4\n255\n");
  EXPECT_THROW(read_pgm(bad), IoError);
  EXPECT_THROW(read_mask_pgm("/nonexistent/dir/frame.pgm"), IoError);
}

TEST(Pgm, MaskThreshold) {
  GrayFrame img(3, 1);
  img(0, 0) = 127;
  img(1, 0) = 128;
  img(2, 0) = 255;
  const SegMask m = gray_to_mask(img);
  EXPECT_EQ(m(0, 0), 0);
  EXPECT_EQ(m(1, 0), 1);
  EXPECT_EQ(m(2, 0), 1);
  EXPECT_EQ(gray_to_mask(mask_to_gray(m)), m);
}

TEST(Pgm, MaskFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "magsuture_pgm_test";
  std::filesystem::create_directories(dir);
  SegMask m(16, 8, 0);
  m(3, 4) = 1;
  m(15, 7) = 1;
  write_mask_pgm(dir / "m.pgm", m);
  EXPECT_EQ(read_mask_pgm(dir / "m.pgm"), m);
  std::filesystem::remove_all(dir);
}
