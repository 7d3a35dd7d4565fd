#include <gtest/gtest.h>

#include "conres/types.hpp"

using namespace conres;

TEST(Delay, MillisecondsRoundToMicroseconds) {
  EXPECT_EQ(Delay::from_ms(7.2).us(), 7200);
  EXPECT_EQ(Delay::from_ms(8.3391).us(), 8339);
  EXPECT_DOUBLE_EQ(Delay::from_us(16000).ms(), 16.0);
}

TEST(Delay, SumsAreExact) {
  Delay total = Delay::from_us(0);
  for (int i = 0; i < 10; ++i) total += Delay::from_ms(0.1);
  EXPECT_EQ(total, Delay::from_ms(1.0));
}

TEST(Delay, InfinityAbsorbsAndOrdersLast) {
  const Delay inf = Delay::infinite();
  EXPECT_TRUE((inf + Delay::from_ms(5)).is_infinite());
  EXPECT_LT(Delay::from_ms(1e6), inf);
  EXPECT_EQ(format_ms(inf), "inf");
}

TEST(Format, FixedDecimalsAndNegativeZero) {
  EXPECT_EQ(format_ms(Delay::from_us(8339)), "8.339");
  EXPECT_EQ(format_fixed(66.666666, 2), "66.67");
  EXPECT_EQ(format_fixed(-0.0001, 2), "0.00");
  EXPECT_EQ(format_fixed(100.0, 0), "100");
}

TEST(Format, ShortestDoubleRoundTrips) {
  for (double v : {0.0, 0.1, 130.0, 1e-9, 7199.999999, 1.0 / 3.0}) {
    double back = -1;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(back, v);
  }
}

TEST(Format, ParseDoubleIsStrict) {
  double v = 0;
  EXPECT_TRUE(parse_double("  12.5 ", v));
  EXPECT_EQ(v, 12.5);
  EXPECT_FALSE(parse_double("12.5x", v));
  EXPECT_FALSE(parse_double("", v));
  EXPECT_FALSE(parse_double("abc", v));
}

TEST(Errors, ConfigErrorNamesField) {
  ConfigError e("layers[0].planes", "must be >= 1");
  EXPECT_EQ(e.field(), "layers[0].planes");
  EXPECT_NE(std::string(e.what()).find("layers[0].planes"), std::string::npos);
}
