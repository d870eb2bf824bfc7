#include "ssdb/hub.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <regex>

#include "ssdb/testnet.hpp"

namespace ssdb {
namespace {

using testnet::TestCluster;

ErrorCode call_error(const HubClient& hub, proto::Body body, std::string* detail = nullptr) {
  try {
    hub.call(std::move(body));
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  return ErrorCode::Internal;
}

HubClient client_for(TestCluster& c) { return HubClient(c.hub_address(), kMersenne61, {}); }

std::vector<u64> sent(TestCluster& c) {
  std::vector<u64> out;
  for (std::size_t i = 0; i < c.config().n(); ++i) out.push_back(c.hub().requests_sent(i));
  return out;
}

TEST(HubTest, ReadsContactExactlyThresholdServers) {
  TestCluster c(3, 2, 1);
  c.load_fixture_patients();
  auto before = sent(c);
  auto reply = client_for(c).call(proto::GetColumn{"patient_details", "Doctorid"});
  ASSERT_TRUE(reply.is<proto::ColumnSet>());
  const auto& set = reply.as<proto::ColumnSet>();
  ASSERT_EQ(set.responses.size(), 2u);
  EXPECT_EQ(set.responses[0].server_x, 1u);
  EXPECT_EQ(set.responses[1].server_x, 2u);
  EXPECT_EQ(set.responses[0].index_list, (std::vector<u64>{1, 2, 3, 4}));
  auto after = sent(c);
  EXPECT_EQ(after[0] - before[0], 1u);
  EXPECT_EQ(after[1] - before[1], 1u);
  EXPECT_EQ(after[2] - before[2], 0u);
}

TEST(HubTest, SkipsADownServer) {
  TestCluster c(3, 2, 2);
  c.load_fixture_patients();
  c.kill_server(1);
  auto reply = client_for(c).call(proto::GetColumn{"patient_details", "Doctorid"});
  const auto& set = reply.as<proto::ColumnSet>();
  ASSERT_EQ(set.responses.size(), 2u);
  EXPECT_EQ(set.responses[0].server_x, 2u);
  EXPECT_EQ(set.responses[1].server_x, 3u);
  EXPECT_EQ(c.hub().liveness(), (std::vector<bool>{false, true, true}));
}

TEST(HubTest, BelowThresholdIsReported) {
  TestCluster c(3, 2, 3);
  c.load_fixture_patients();
  c.kill_server(1);
  c.kill_server(3);
  auto hub = client_for(c);
  EXPECT_EQ(call_error(hub, proto::GetColumn{"patient_details", "Doctorid"}), ErrorCode::ThresholdUnavailable);
  EXPECT_EQ(call_error(hub, proto::FetchToClient{"patient_details", "Doctorid", {1}, "127.0.0.1:1"}),
            ErrorCode::ThresholdUnavailable);
}

TEST(HubTest, WritesNeedEveryServer) {
  TestCluster c(3, 2, 4);
  c.load_fixture_patients();
  c.kill_server(2);
  auto d = c.dealer();
  const auto schema = testnet::patient_details_schema();
  auto bundle = d.make_bundle(schema, {u64{105}, std::string("Eve"), u64{3}, std::string("Flu")}, 5);
  std::string detail;
  EXPECT_EQ(call_error(client_for(c), bundle, &detail), ErrorCode::Unavailable);
  EXPECT_NE(detail.find("server 2"), std::string::npos) << detail;
  // Nothing was applied anywhere.
  EXPECT_EQ(c.server(1).row_count("patient_details"), 4u);
  EXPECT_EQ(c.server(3).row_count("patient_details"), 4u);
}

TEST(HubTest, BundleMustMatchTheCluster) {
  TestCluster c(3, 2, 5);
  c.load_fixture_patients();
  auto d = c.dealer();
  const auto schema = testnet::patient_details_schema();
  auto bundle = d.make_bundle(schema, {u64{105}, std::string("Eve"), u64{3}, std::string("Flu")}, 5);
  auto unknown = bundle;
  unknown.shares[9] = unknown.shares[1];
  EXPECT_EQ(call_error(client_for(c), unknown), ErrorCode::BadRequest);
  auto missing = bundle;
  missing.shares.erase(3);
  EXPECT_EQ(call_error(client_for(c), missing), ErrorCode::BadRequest);
  EXPECT_EQ(c.server(1).row_count("patient_details"), 4u);
}

TEST(HubTest, ServerRejectionsPropagate) {
  TestCluster c(3, 2, 6);
  c.load_fixture_patients();
  EXPECT_EQ(call_error(client_for(c), proto::GetColumn{"nope", "x"}), ErrorCode::NoSuchTable);
  EXPECT_EQ(call_error(client_for(c), proto::GetColumn{"patient_details", "x"}), ErrorCode::NoSuchAttr);
  EXPECT_EQ(call_error(client_for(c), proto::DeliverShares{}), ErrorCode::BadRequest);
}

TEST(HubTest, ServerListAndRegistration) {
  TestCluster c(3, 2, 7);
  auto reply = client_for(c).call(proto::ServerList{});
  ASSERT_TRUE(reply.is<proto::ClusterInfo>());
  EXPECT_EQ(reply.as<proto::ClusterInfo>().config, c.config());
  EXPECT_EQ(call_error(client_for(c), proto::Register{2, 5}), ErrorCode::BadRequest);
  EXPECT_EQ(call_error(client_for(c), proto::Register{8, 8}), ErrorCode::BadRequest);
  EXPECT_TRUE(client_for(c).call(proto::Register{2, 2}).is<proto::Ack>());
}

TEST(HubTest, HubHeaderHasNoReconstructionCode) {
  std::ifstream in(std::string(SSDB_INCLUDE_DIR) + "/ssdb/hub.hpp");
  ASSERT_TRUE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text.find("shamir"), std::string::npos);
  EXPECT_EQ(text.find("lagrange"), std::string::npos);
  EXPECT_EQ(text.find("reconstruct"), std::string::npos);
  std::regex include_re(R"(#include\s+"([^"]+)\")");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), include_re); it != std::sregex_iterator(); ++it) {
    EXPECT_NE((*it)[1], "ssdb/client.hpp");
  }
}

}  // namespace
}  // namespace ssdb
