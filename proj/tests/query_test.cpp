#include "ssdb/query.hpp"

#include <gtest/gtest.h>

#include "ssdb/testnet.hpp"

namespace ssdb {
namespace {

std::size_t syntax_pos(std::string_view sql) {
  try {
    parse_query(sql);
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.code(), ErrorCode::Syntax);
    return e.position();
  }
  ADD_FAILURE() << "no syntax error for: " << sql;
  return 0;
}

std::vector<std::pair<u64, Value>> column(std::size_t attr) {
  std::vector<std::pair<u64, Value>> out;
  auto rows = testnet::patient_details_rows();
  for (std::size_t i = 0; i < rows.size(); ++i) out.push_back({i + 1, rows[i][attr]});
  return out;
}

TEST(QueryTest, ParsesTheHospitalQuery) {
  Query q = parse_query("SELECT Patientname FROM patient_details WHERE Diagonosis = 'Aids'");
  EXPECT_EQ(q.select_attrs, std::vector<std::string>{"Patientname"});
  EXPECT_FALSE(q.select_all);
  EXPECT_EQ(q.table, "patient_details");
  ASSERT_TRUE(q.predicate.has_value());
  EXPECT_EQ(q.predicate->attr, "Diagonosis");
  EXPECT_EQ(q.predicate->op, CompareOp::Eq);
  EXPECT_EQ(q.predicate->literal, Value(std::string("Aids")));
}

TEST(QueryTest, GrammarVariants) {
  Query q = parse_query("select * from t;");
  EXPECT_TRUE(q.select_all);
  EXPECT_FALSE(q.predicate.has_value());

  q = parse_query("SELECT a,b , c FROM t WHERE n >= 18446744073709551615");
  EXPECT_EQ(q.select_attrs, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(q.predicate->literal, Value(~u64{0}));

  q = parse_query("SELECT a FROM t WHERE s <> 'it''s'");
  EXPECT_EQ(q.predicate->op, CompareOp::Ne);
  EXPECT_EQ(q.predicate->literal, Value(std::string("it's")));

  const std::pair<const char*, CompareOp> ops[] = {{"=", CompareOp::Eq}, {"!=", CompareOp::Ne},
                                                   {"<", CompareOp::Lt}, {"<=", CompareOp::Le},
                                                   {">", CompareOp::Gt}, {">=", CompareOp::Ge}};
  for (const auto& [sym, op] : ops) {
    EXPECT_EQ(parse_query(std::string("SELECT a FROM t WHERE a ") + sym + " 1").predicate->op, op) << sym;
    EXPECT_EQ(op_symbol(op), sym);
  }
  // Identifiers keep their case; keywords do not matter.
  EXPECT_EQ(parse_query("SeLeCt Name FrOm Tab").select_attrs[0], "Name");
}

TEST(QueryTest, SyntaxErrorsCarryPositions) {
  EXPECT_EQ(syntax_pos("SELECT FROM t"), 7u);
  EXPECT_EQ(syntax_pos("SELECT a t"), 9u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t WHERE a == 1"), 24u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t WHERE a = 'open"), 26u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t WHERE a = b"), 26u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t WHERE a = 99999999999999999999"), 26u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t extra"), 16u);
  EXPECT_EQ(syntax_pos("DELETE FROM t"), 0u);
  EXPECT_EQ(syntax_pos(""), 0u);
  EXPECT_EQ(syntax_pos("SELECT a FROM t WHERE a = 1 AND b = 2"), 28u);
}

TEST(QueryTest, ValidateAgainstSchema) {
  const auto schema = testnet::patient_details_schema();
  EXPECT_NO_THROW(parse_query("SELECT * FROM patient_details WHERE Doctorid < 30").validate(schema));
  auto code = [&](std::string_view sql) {
    try {
      parse_query(sql).validate(schema);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Internal;
  };
  EXPECT_EQ(code("SELECT * FROM other"), ErrorCode::NoSuchTable);
  EXPECT_EQ(code("SELECT Age FROM patient_details"), ErrorCode::NoSuchAttr);
  EXPECT_EQ(code("SELECT * FROM patient_details WHERE Age = 1"), ErrorCode::NoSuchAttr);
  EXPECT_EQ(code("SELECT * FROM patient_details WHERE Doctorid = '51'"), ErrorCode::TypeMismatch);
  EXPECT_EQ(code("SELECT * FROM patient_details WHERE Diagonosis = 1"), ErrorCode::TypeMismatch);
  EXPECT_EQ(parse_query("SELECT * FROM patient_details").columns(schema),
            (std::vector<std::string>{"Patientid", "Patientname", "Doctorid", "Diagonosis"}));
}

TEST(QueryTest, PredicateEvaluation) {
  const Predicate aids{"Diagonosis", CompareOp::Eq, std::string("Aids")};
  EXPECT_EQ(evaluate_predicate(column(3), aids), (std::vector<u64>{1, 4}));
  EXPECT_EQ(evaluate_predicate(column(3), std::nullopt), (std::vector<u64>{1, 2, 3, 4}));
  const Predicate young_doctor{"Doctorid", CompareOp::Lt, u64{30}};
  EXPECT_EQ(evaluate_predicate(column(2), young_doctor), (std::vector<u64>{2, 4}));
  EXPECT_EQ(evaluate_predicate(column(2), Predicate{"Doctorid", CompareOp::Ge, u64{51}}),
            (std::vector<u64>{1, 3}));
  EXPECT_EQ(evaluate_predicate(column(1), Predicate{"Patientname", CompareOp::Gt, std::string("Bony")}),
            (std::vector<u64>{3, 4}));
  EXPECT_EQ(evaluate_predicate({}, aids), std::vector<u64>{});
}

TEST(QueryTest, TextOrderIsBytewise) {
  EXPECT_TRUE(compare(std::string("B"), CompareOp::Lt, std::string("a")));
  EXPECT_TRUE(compare(std::string("z"), CompareOp::Lt, std::string("\xc3\xa9")));  // 0x7a < 0xc3
  EXPECT_TRUE(compare(std::string(""), CompareOp::Lt, std::string("a")));
  EXPECT_TRUE(compare(std::string("ab"), CompareOp::Gt, std::string("a")));
  EXPECT_THROW(compare(u64{1}, CompareOp::Eq, std::string("1")), Error);
}

}  // namespace
}  // namespace ssdb
