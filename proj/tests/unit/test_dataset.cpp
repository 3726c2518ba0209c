#include <gtest/gtest.h>

#include <pdds/dataset.hpp>
#include <pdds/errors.hpp>

#include <cstdio>
#include <fstream>

using namespace pdds;

TEST(Dataset, ParsesMixedSeparatorsAndComments) {
  const std::string text =
      "# header comment\n"
      "1.0, 2.0, 1\n"
      "\n"
      "3.0 4.0 0\n"
      "5.0;6.0;1\n";
  const Dataset d = parse_dataset(text, {.standardize = false});
  ASSERT_EQ(d.features.rows(), 3);
  ASSERT_EQ(d.features.cols(), 2);
  EXPECT_DOUBLE_EQ(d.features(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(d.features(2, 1), 6.0);
  EXPECT_DOUBLE_EQ(d.labels[1], 0.0);
}

TEST(Dataset, StandardizesColumns) {
  const Dataset d = parse_dataset("1 10 0\n2 10 1\n3 10 0\n");
  EXPECT_NEAR(d.features.col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(d.features.col(0).squaredNorm() / 3.0, 1.0, 1e-14);
  // Constant columns are only centred.
  EXPECT_EQ(d.features.col(1).norm(), 0.0);
}

TEST(Dataset, InterceptColumnFirst) {
  const Dataset d = parse_dataset("1 0\n3 1\n", {.standardize = true, .intercept = true});
  ASSERT_EQ(d.features.cols(), 2);
  EXPECT_EQ(d.features(0, 0), 1.0);
  EXPECT_EQ(d.features(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(d.features(0, 1), -1.0);
}

TEST(Dataset, RejectsMalformedInput) {
  EXPECT_THROW(parse_dataset(""), DataError);
  EXPECT_THROW(parse_dataset("1 2 0\n1 0\n"), DataError);
  EXPECT_THROW(parse_dataset("1 abc 0\n"), DataError);
  EXPECT_THROW(parse_dataset("1 2 3\n"), DataError);
  EXPECT_THROW(parse_dataset("1\n"), DataError);
  EXPECT_THROW(load_dataset("/nonexistent/pdds.csv"), DataError);
}

TEST(Dataset, LoadsFromFile) {
  const std::string path = ::testing::TempDir() + "pdds_dataset.csv";
  {
    std::ofstream out(path);
    out << "0.5,1.5,1\n-0.5,2.5,0\n";
  }
  const Dataset d = load_dataset(path, {.standardize = false});
  EXPECT_EQ(d.features.rows(), 2);
  EXPECT_DOUBLE_EQ(d.features(1, 1), 2.5);
  std::remove(path.c_str());
}
