#pragma once

// Append-only decision ledger: one JSON record per line, each line carrying
// the SHA-256 of (previous hash + canonical record).

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace falsify {

enum class DecisionStatus { OPEN, LOCKED };

std::string_view to_string(DecisionStatus s);
std::optional<DecisionStatus> parse_decision_status(std::string_view text);

struct DecisionRecord {
  std::string id;  // D###
  std::string text;
  DecisionStatus status = DecisionStatus::OPEN;
  std::string created_at;  // ISO-8601
  std::vector<std::string> evidence_refs;
  std::optional<std::string> supersedes;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

bool valid_decision_id(std::string_view id);

class LedgerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DuplicateIdError : public LedgerError {
 public:
  using LedgerError::LedgerError;
};
class LockedRecordError : public LedgerError {
 public:
  using LedgerError::LedgerError;
};
class ChainError : public LedgerError {
 public:
  ChainError(std::size_t line, const std::string& what)
      : LedgerError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kGenesisHash = "0000000000000000000000000000000000000000000000000000000000000000";

struct LedgerVerification {
  bool ok = true;
  std::optional<std::size_t> bad_line;  // 1-based
  std::string message;
  std::size_t records = 0;
};

// Reads every line, checking the chain; throws ChainError on the first bad
// line. A missing file is an empty ledger.
std::vector<DecisionRecord> ledger_read(const std::filesystem::path& path);
LedgerVerification ledger_verify(const std::filesystem::path& path);

// Current state per id (the last line naming it), in first-seen order.
std::vector<DecisionRecord> ledger_list(const std::filesystem::path& path,
                                        std::optional<DecisionStatus> status = std::nullopt);

// Appends one line. An OPEN record may be locked by re-appending it with
// status LOCKED and unchanged text; any other reuse of an id is a
// DuplicateIdError, and any reuse of a LOCKED id is a LockedRecordError.
// `supersedes` must name an existing id.
void ledger_append(const std::filesystem::path& path, const DecisionRecord& record);

}  // namespace falsify
