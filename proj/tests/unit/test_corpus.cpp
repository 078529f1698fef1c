#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "scripted.hpp"
#include "socratic/corpus.hpp"
#include "socratic/error.hpp"

namespace socratic {
namespace {

using testing::TempDir;

TEST(DefaultBank, HasTheFiveShippedQuestions) {
  const auto& bank = default_bank();
  ASSERT_EQ(bank.size(), 5u);
  EXPECT_EQ(bank.ids(), (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_EQ(bank.get(1).question, "Is replicability necessary in the production of knowledge?");
  EXPECT_EQ(bank.get(5).question, "Are visual representations always helpful in the communication of knowledge?");
}

TEST(DefaultBank, GetItemExamples) {
  const auto& bank = default_bank();
  EXPECT_NE(get_item(bank, 4).question.find("so little knowledge can give us so much power"), std::string::npos);
  EXPECT_TRUE(get_item(bank, 1).reference_summary.starts_with("Replicability is crucial in the production of knowledge"));
  EXPECT_THROW(get_item(bank, 99), PreconditionError);
  EXPECT_EQ(bank.find(99), nullptr);
}

TEST(DefaultBank, MatchesGoldenFile) {
  std::istringstream golden(testing::read_file(SOCRATIC_TEST_DATA "/golden/default_bank.txt"));
  std::string line;
  int count = 0;
  while (std::getline(golden, line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    ASSERT_NE(t2, std::string::npos);
    const int id = std::stoi(line.substr(0, t1));
    const auto& item = default_bank().get(id);
    EXPECT_EQ(item.question, line.substr(t1 + 1, t2 - t1 - 1)) << "question " << id;
    EXPECT_EQ(item.reference_summary, line.substr(t2 + 1)) << "summary " << id;
    ++count;
  }
  EXPECT_EQ(count, 5);
}

TEST(DefaultBank, SummariesHaveNoLayoutLineBreaks) {
  for (const auto& item : default_bank().items()) {
    EXPECT_EQ(item.reference_summary.find('\n'), std::string::npos);
    EXPECT_EQ(item.reference_summary.find("  "), std::string::npos);
  }
}

nlohmann::json bank_doc(std::vector<std::tuple<int, std::string, std::string>> items) {
  nlohmann::json j = {{"version", 1}, {"items", nlohmann::json::array()}};
  for (auto& [id, q, s] : items) j["items"].push_back({{"id", id}, {"question", q}, {"reference_summary", s}});
  return j;
}

TEST(LoadBank, RejectsDuplicateIdNamingIt) {
  try {
    QuestionBank::from_json(bank_doc({{1, "a?", "x"}, {1, "b?", "y"}}).dump());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(LoadBank, RejectsBlankTextsNamingTheId) {
  try {
    QuestionBank::from_json(bank_doc({{7, "   ", "x"}}).dump());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
  EXPECT_THROW(QuestionBank::from_json(bank_doc({{2, "q?", " \t"}}).dump()), DataError);
}

TEST(LoadBank, RejectsSchemaViolations) {
  EXPECT_THROW(QuestionBank::from_json("not json"), DataError);
  EXPECT_THROW(QuestionBank::from_json(R"({"items": []})"), DataError);
  EXPECT_THROW(QuestionBank::from_json(R"({"version": 1, "items": []})"), DataError);
  EXPECT_THROW(QuestionBank::from_json(R"({"version": 2, "items": [{"id":1,"question":"q","reference_summary":"s"}]})"),
               DataError);
  EXPECT_THROW(QuestionBank::from_json(R"({"version": 1, "items": [{"id":"1","question":"q","reference_summary":"s"}]})"),
               DataError);
  EXPECT_THROW(QuestionBank::from_json(R"({"version": 1, "items": [{"id":1,"question":"q"}]})"), DataError);
}

TEST(LoadBank, MissingFileIsDataError) {
  TempDir dir;
  EXPECT_THROW(load_bank(dir / "absent.json"), DataError);
}

TEST(LoadBank, RoundTripIsByteIdentical) {
  TempDir dir;
  save_bank(default_bank(), dir / "a.json");
  const auto loaded = load_bank(dir / "a.json");
  EXPECT_EQ(loaded.items(), default_bank().items());
  save_bank(loaded, dir / "b.json");
  EXPECT_EQ(testing::read_file(dir / "a.json"), testing::read_file(dir / "b.json"));
}

TEST(LoadBank, CustomBankKeepsOrder) {
  const auto bank = QuestionBank::from_json(bank_doc({{9, "Nine?", "n"}, {3, "Three?", "t"}}).dump());
  EXPECT_EQ(bank.ids(), (std::vector<int>{9, 3}));
  EXPECT_EQ(bank.get(3).reference_summary, "t");
}

}  // namespace
}  // namespace socratic
