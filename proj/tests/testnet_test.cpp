#include "ssdb/testnet.hpp"

#include <gtest/gtest.h>

namespace ssdb::testnet {
namespace {

TEST(TestnetTest, ThresholdAboveServerCountIsRejected) {
  try {
    TestCluster c(2, 3, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Usage);
  }
  EXPECT_THROW(TestCluster(3, 0, 1), Error);
}

TEST(TestnetTest, FiveServersThresholdThree) {
  TestCluster c(5, 3, 2);
  EXPECT_EQ(c.config().n(), 5u);
  EXPECT_EQ(c.config().t, 3u);
  for (u64 k = 1; k <= 5; ++k) {
    EXPECT_TRUE(c.is_up(k));
    EXPECT_EQ(c.config().servers[k - 1].x_coord, k);
    EXPECT_EQ(c.server(k).x_coord(), k);
  }
  c.load_fixture_patients();
  auto r = c.query_engine().execute("SELECT Patientid FROM patient_details WHERE Doctorid = 51");
  EXPECT_EQ(r.rows, (std::vector<std::vector<Value>>{{u64{101}}, {u64{103}}}));
}

TEST(TestnetTest, KillAndReviveKeepsRows) {
  TestCluster c(3, 2, 3);
  c.load_fixture_patients();
  c.kill_server(2);
  EXPECT_FALSE(c.is_up(2));
  EXPECT_THROW(c.server(2), Error);
  c.revive_server(2);
  EXPECT_TRUE(c.is_up(2));
  EXPECT_EQ(c.server(2).row_count("patient_details"), 4u);
  // Query through the revived server and one other.
  c.kill_server(1);
  auto r = c.query_engine().execute("SELECT * FROM patient_details");
  EXPECT_EQ(r.rows, patient_details_rows());
}

TEST(TestnetTest, FixtureLoadsOnce) {
  TestCluster c(3, 2, 4);
  c.load_fixture_patients();
  try {
    c.load_fixture_patients();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Usage);
  }
  EXPECT_EQ(c.server(1).row_count("patient_details"), 4u);
}

TEST(TestnetTest, SameSeedSameShares) {
  std::vector<std::string> logs[2];
  for (int run = 0; run < 2; ++run) {
    TestCluster c(3, 2, 77);
    c.load_fixture_patients();
    for (u64 k = 1; k <= 3; ++k) logs[run].push_back(c.rows_log(k, "patient_details"));
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_FALSE(logs[0][0].empty());
  EXPECT_NE(logs[0][0], logs[0][1]);

  TestCluster other(3, 2, 78);
  other.load_fixture_patients();
  EXPECT_NE(other.rows_log(1, "patient_details"), logs[0][0]);
}

TEST(TestnetTest, TempDirIsRemoved) {
  std::filesystem::path root;
  {
    TestCluster c(2, 1, 5);
    root = c.root();
    EXPECT_TRUE(std::filesystem::exists(c.data_dir(1)));
  }
  EXPECT_FALSE(std::filesystem::exists(root));
}

}  // namespace
}  // namespace ssdb::testnet
