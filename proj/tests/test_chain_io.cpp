#include <gtest/gtest.h>

#include "core/chain_io.hpp"
#include "core/commands.hpp"

using namespace stochchain;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    load_chain_spec(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for: " << text;
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ChainIo, FixturesRoundTrip) {
  for (const auto& name : fixture_names()) {
    const auto chain = fixture_by_name(name, 0, 3);
    const std::string text = emit_chain_spec(chain);
    const auto back = load_chain_spec(text);
    EXPECT_EQ(emit_chain_spec(back), text) << name;
    EXPECT_EQ(back.kind(), chain.kind());
    for (std::size_t k = 1; k <= 130; ++k) EXPECT_EQ(back.expected_matrix(k), chain.expected_matrix(k)) << name;
    EXPECT_EQ(back.flow_declaration().size(), chain.flow_declaration().size());
  }
}

TEST(ChainIo, AllKinds) {
  const auto s = load_chain_spec(R"({"schema":1,"dim":2,"kind":"static","matrix":[[0.9,0.1],[0.2,0.8]]})");
  EXPECT_EQ(s.kind(), ChainKind::Static);
  EXPECT_EQ(s.matrix_at(7)(1, 0), 0.2);

  const auto p = load_chain_spec(R"({"dim":2,"kind":"periodic","matrices":[[[1,0],[0,1]],[[0,1],[1,0]]]})");
  EXPECT_EQ(p.matrix_at(4)(0, 1), 1.0);

  const auto e = load_chain_spec(R"({"dim":2,"kind":"explicit","tail":"repeat-last","matrices":[[[0,1],[1,0]]]})");
  EXPECT_EQ(e.matrix_at(9)(0, 1), 1.0);

  const auto i = load_chain_spec(
      R"({"dim":2,"kind":"iid","matrices":[[[1,0],[0,1]],[[0.5,0.5],[0.5,0.5]]],"probabilities":[0.5,0.5],"seed":12})");
  EXPECT_EQ(i.expected_matrix(3)(0, 0), 0.75);
  EXPECT_EQ(i.seed(), 12u);

  const auto ind = load_chain_spec(R"({"dim":2,"kind":"independent","tail":"cycle","cycle_start":1,
      "steps":[{"matrices":[[[1,0],[0,1]]],"probabilities":[1]},
               {"matrices":[[[0,1],[1,0]],[[1,0],[0,1]]],"probabilities":[0.25,0.75]}],
      "flow_declaration":[{"i":1,"j":0,"status":"diverges"}]})");
  EXPECT_EQ(ind.step_index(5), 1u);
  EXPECT_EQ(ind.expected_matrix(2)(0, 1), 0.25);
  ASSERT_EQ(ind.flow_declaration().size(), 1u);
  EXPECT_EQ(ind.flow_declaration()[0].i, 0u);
}

TEST(ChainIo, ParseErrorCarriesLine) {
  const std::string text = "{\n  \"dim\": 2,\n  \"kind\": \"static\",,\n}";
  try {
    load_chain_spec(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
    EXPECT_EQ(e.index(), 3u);
  }
}

TEST(ChainIo, SchemaViolationsAreParseErrors) {
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"weird","matrix":[[1,0],[0,1]]})"), ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"kind":"static","matrix":[[1,0],[0,1]]})"), ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"static","matrix":[[1,0],[0,1]],"extra":1})"), ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"schema":2,"dim":2,"kind":"static","matrix":[[1,0],[0,1]]})"), ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"static","matrix":[[1,"a"],[0,1]]})"), ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"iid","matrices":[[[1,0],[0,1]]],"probabilities":[0.5,0.5]})"),
            ErrorCode::Parse);
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"explicit","tail":"cycle","matrices":[[[1,0],[0,1]]]})"), ErrorCode::Parse);
  EXPECT_EQ(code_of("[1, 2]"), ErrorCode::Parse);
}

TEST(ChainIo, ValidationErrorsCarryMatrixIndex) {
  try {
    load_chain_spec(R"({"dim":2,"kind":"periodic","matrices":[[[1,0],[0,1]],[[0.5,0.5],[0.5,0.6]]]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RowSumOutOfTolerance);
    EXPECT_EQ(e.index(), 1u);
    EXPECT_NE(std::string(e.what()).find("RowSumOutOfTolerance(1, 1.1"), std::string::npos);
  }
  EXPECT_EQ(code_of(R"({"dim":2,"kind":"iid","matrices":[[[1,0],[0,1]],[[1,0],[0,1]]],"probabilities":[1.5,-0.5]})"),
            ErrorCode::Validation);
  EXPECT_EQ(code_of(R"({"dim":3,"kind":"static","matrix":[[1,0],[0,1]]})"), ErrorCode::DimensionMismatch);
}

TEST(ChainIo, CheckCollectsEveryProblem) {
  const auto raw = parse_chain_spec(R"({"dim":2,"kind":"independent","steps":[
      {"matrices":[[[0.5,0.6],[0,1]],[[1,0],[0,1]]],"probabilities":[0.5,0.5]},
      {"matrices":[[[1,0],[-0.1,1.1]]],"probabilities":[1]},
      {"matrices":[[[1,0],[0,1]]],"probabilities":[0.9]}]})");
  const auto summary = check_chain_spec(raw);
  ASSERT_EQ(summary.matrices.size(), 4u);
  EXPECT_FALSE(summary.matrices[0].ok);
  EXPECT_TRUE(summary.matrices[1].ok);
  EXPECT_FALSE(summary.matrices[2].ok);
  EXPECT_EQ(*summary.matrices[2].code, ErrorCode::NegativeEntry);
  EXPECT_TRUE(summary.matrices[3].ok);
  ASSERT_EQ(summary.steps.size(), 3u);
  EXPECT_FALSE(summary.steps[2].ok);
  EXPECT_FALSE(summary.ok());
}

TEST(ChainIo, DimensionCap) {
  const std::size_t m = kMaxDim + 1;
  std::string rows;
  for (std::size_t i = 0; i < m; ++i) {
    rows += i ? "," : "";
    rows += "[";
    for (std::size_t j = 0; j < m; ++j) rows += std::string(j ? "," : "") + (i == j ? "1" : "0");
    rows += "]";
  }
  const std::string text = R"({"dim":)" + std::to_string(m) + R"(,"kind":"static","matrix":[)" + rows + "]}";
  EXPECT_EQ(code_of(text), ErrorCode::DimensionTooLarge);
}
