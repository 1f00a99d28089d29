#include <gtest/gtest.h>

#include <sstream>

#include "tvbd/pnm.hpp"
#include "tvbd/text_io.hpp"

using namespace tvbd;

TEST(Pnm, AsciiGrayWithComments) {
  std::istringstream in("P2\n# made by hand\n3 2\n# max\n4\n0 1 2\n3 4 # trailing\n 0\n");
  const Image img = read_pnm(in);
  ASSERT_EQ(img.width(), 3);
  ASSERT_EQ(img.height(), 2);
  EXPECT_EQ(img.channels(), 1);
  EXPECT_DOUBLE_EQ(img(2, 0), 0.5);
  EXPECT_DOUBLE_EQ(img(1, 1), 1.0);
}

TEST(Pnm, RoundTripAllFormats) {
  Image rgb(4, 3, 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb.data()[i] = static_cast<double>(i % 17) / 16;
  const Image gray = rgb.channel(1);
  for (bool binary : {false, true})
    for (int maxval : {255, 1023, 65535})
      for (const Image* src : std::vector<const Image*>{&gray, &rgb}) {
        std::stringstream ss;
        write_pnm(ss, *src, {maxval, binary});
        const Image back = read_pnm(ss);
        ASSERT_TRUE(back.same_shape(*src));
        for (std::size_t i = 0; i < back.size(); ++i) {
          EXPECT_NEAR(back.data()[i], src->data()[i], 0.5 / maxval + 1e-12);
        }
      }
}

TEST(Pnm, ClampsOnWrite) {
  std::stringstream ss;
  write_pnm(ss, Image::row({-0.5, 0.5, 2.0}), {255, false});
  const Image back = read_pnm(ss);
  EXPECT_EQ(back(0, 0), 0.0);
  EXPECT_EQ(back(2, 0), 1.0);
}

TEST(Pnm, RejectsGarbage) {
  std::istringstream bad("P7\n1 1\n255\n");
  EXPECT_THROW(read_pnm(bad), FormatError);
  std::istringstream trunc("P5\n4 4\n255\nab");
  EXPECT_THROW(read_pnm(trunc), FormatError);
}

TEST(KernelText, RoundTrip) {
  const Kernel k(3, 5, 0.1 / 3);
  std::stringstream ss;
  write_kernel(ss, k);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "5 3");
  ss.seekg(0);
  const Kernel back = read_kernel(ss);
  EXPECT_EQ(back.width(), 3);
  EXPECT_EQ(back.height(), 5);
  EXPECT_EQ(back.max_abs_diff(k), 0.0);
}

TEST(KernelText, Errors) {
  std::istringstream a("2 3\n1 2 3\n");
  EXPECT_THROW(read_kernel(a), FormatError);
  std::istringstream b("1 2\n1 2\n");
  EXPECT_THROW(read_kernel(b), DimensionError);
}

TEST(SignalCsv, HeaderAndBlankLines) {
  std::istringstream in("value\n1.5\n\n-2\n3e-1,\n");
  EXPECT_EQ(read_signal_csv(in), (std::vector<double>{1.5, -2, 0.3}));
  std::istringstream bad("1\nx\n");
  EXPECT_THROW(read_signal_csv(bad), FormatError);
  std::stringstream ss;
  write_signal_csv(ss, {0.1, 1.0 / 3});
  EXPECT_EQ(read_signal_csv(ss), (std::vector<double>{0.1, 1.0 / 3}));
}
