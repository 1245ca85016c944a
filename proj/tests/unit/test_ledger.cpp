#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "falsify/ledger.hpp"

using namespace falsify;
namespace fs = std::filesystem;

namespace {

class Ledger : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("falsify_ledger_") + info->name());
    fs::remove_all(dir_);
    path_ = dir_ / "ledger.jsonl";
  }
  void TearDown() override { fs::remove_all(dir_); }

  static DecisionRecord rec(std::string id, std::string text, DecisionStatus st = DecisionStatus::OPEN) {
    DecisionRecord r;
    r.id = std::move(id);
    r.text = std::move(text);
    r.status = st;
    r.created_at = "2026-01-05T10:00:00Z";
    return r;
  }

  std::vector<std::string> lines() const {
    std::ifstream in(path_);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  void rewrite(const std::vector<std::string>& ls) const {
    std::ofstream out(path_, std::ios::trunc);
    for (const auto& l : ls) out << l << '\n';
  }

  fs::path dir_, path_;
};

}  // namespace

TEST_F(Ledger, MissingFileIsEmpty) {
  EXPECT_TRUE(ledger_read(path_).empty());
  const auto v = ledger_verify(path_);
  EXPECT_TRUE(v.ok);
  EXPECT_EQ(v.records, 0u);
}

TEST_F(Ledger, AppendThenReadOne) {
  ledger_append(path_, rec("D001", "ORB breakout both sides tested"));
  const auto rs = ledger_read(path_);
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0], rec("D001", "ORB breakout both sides tested"));
}

TEST_F(Ledger, DuplicateIdRejected) {
  ledger_append(path_, rec("D001", "first"));
  EXPECT_THROW(ledger_append(path_, rec("D001", "first")), DuplicateIdError);
  EXPECT_THROW(ledger_append(path_, rec("D001", "changed", DecisionStatus::LOCKED)), DuplicateIdError);
  EXPECT_EQ(lines().size(), 1u);
}

TEST_F(Ledger, LockByReappendThenImmutable) {
  ledger_append(path_, rec("D002", "London transition variant B selected"));
  ledger_append(path_, rec("D002", "London transition variant B selected", DecisionStatus::LOCKED));
  EXPECT_THROW(ledger_append(path_, rec("D002", "London transition variant B selected", DecisionStatus::LOCKED)),
               LockedRecordError);
  EXPECT_THROW(ledger_append(path_, rec("D002", "reopened")), LockedRecordError);
  const auto cur = ledger_list(path_);
  ASSERT_EQ(cur.size(), 1u);
  EXPECT_EQ(cur[0].status, DecisionStatus::LOCKED);
  EXPECT_EQ(ledger_read(path_).size(), 2u);
}

TEST_F(Ledger, PermanentRejectionRoundTrips) {
  auto r = rec("D100", "MNQ OU mean reversion permanently rejected", DecisionStatus::LOCKED);
  r.evidence_refs = {"run-3f2a", "run-77c0"};
  ledger_append(path_, r);
  const auto locked = ledger_list(path_, DecisionStatus::LOCKED);
  ASSERT_EQ(locked.size(), 1u);
  EXPECT_EQ(locked[0], r);
  EXPECT_TRUE(ledger_list(path_, DecisionStatus::OPEN).empty());
}

TEST_F(Ledger, SupersedesMustNameExistingId) {
  ledger_append(path_, rec("D010", "old", DecisionStatus::LOCKED));
  auto r = rec("D011", "new evidence reopens D010");
  r.supersedes = "D999";
  EXPECT_THROW(ledger_append(path_, r), LedgerError);
  r.supersedes = "D010";
  ledger_append(path_, r);
  EXPECT_EQ(ledger_read(path_).back().supersedes, "D010");
  auto self = rec("D012", "self");
  self.supersedes = "D012";
  EXPECT_THROW(ledger_append(path_, self), LedgerError);
}

TEST_F(Ledger, InvalidIdRejected) {
  EXPECT_THROW(ledger_append(path_, rec("X001", "bad")), LedgerError);
  EXPECT_THROW(ledger_append(path_, rec("D1", "bad")), LedgerError);
  EXPECT_TRUE(valid_decision_id("D001"));
  EXPECT_TRUE(valid_decision_id("D1234"));
}

TEST_F(Ledger, TamperedLineIsNamed) {
  ledger_append(path_, rec("D001", "a"));
  ledger_append(path_, rec("D002", "b"));
  ledger_append(path_, rec("D003", "c"));
  auto ls = lines();
  const auto pos = ls[1].find("\"b\"");
  ASSERT_NE(pos, std::string::npos);
  ls[1].replace(pos, 3, "\"B\"");
  rewrite(ls);
  const auto v = ledger_verify(path_);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.bad_line, 2u);
  try {
    ledger_read(path_);
    FAIL() << "expected ChainError";
  } catch (const ChainError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(ledger_append(path_, rec("D004", "d")), ChainError);
}

TEST_F(Ledger, DeletedLineBreaksChain) {
  ledger_append(path_, rec("D001", "a"));
  ledger_append(path_, rec("D002", "b"));
  ledger_append(path_, rec("D003", "c"));
  auto ls = lines();
  ls.erase(ls.begin() + 1);
  rewrite(ls);
  EXPECT_EQ(ledger_verify(path_).bad_line, 2u);
}

TEST_F(Ledger, AppendOnlyPreservesPrefix) {
  ledger_append(path_, rec("D001", "a"));
  const auto before = lines();
  ledger_append(path_, rec("D002", "b"));
  const auto after = lines();
  ASSERT_EQ(after.size(), 2u);
  EXPECT_EQ(after[0], before[0]);
}
