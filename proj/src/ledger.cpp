#include "falsify/ledger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "falsify/hash.hpp"
#include "json.hpp"

namespace falsify {

namespace {

using nlohmann::json;

json to_json(const DecisionRecord& r) {
  json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["status"] = std::string(to_string(r.status));
  j["created_at"] = r.created_at;
  j["evidence_refs"] = r.evidence_refs;
  j["supersedes"] = r.supersedes ? json(*r.supersedes) : json(nullptr);
  return j;
}

DecisionRecord from_json(const json& j) {
  DecisionRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  const auto st = parse_decision_status(j.at("status").get<std::string>());
  if (!st) throw std::runtime_error("unknown status");
  r.status = *st;
  r.created_at = j.at("created_at").get<std::string>();
  r.evidence_refs = j.at("evidence_refs").get<std::vector<std::string>>();
  if (!j.at("supersedes").is_null()) r.supersedes = j.at("supersedes").get<std::string>();
  return r;
}

std::string chain_hash(std::string_view prev, const json& record) { return sha256_hex(std::string(prev) + record.dump()); }

struct Chain {
  std::vector<DecisionRecord> records;
  std::string tip{kGenesisHash};
};

Chain read_chain(const std::filesystem::path& path) {
  Chain c;
  std::ifstream in(path);
  if (!in) return c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) throw ChainError(lineno, "empty line");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw ChainError(lineno, "not valid JSON");
    }
    try {
      if (j.at("prev").get<std::string>() != c.tip) throw ChainError(lineno, "previous-hash link broken");
      const auto& rec = j.at("record");
      if (j.at("hash").get<std::string>() != chain_hash(c.tip, rec)) {
        throw ChainError(lineno, "content hash mismatch");
      }
      c.records.push_back(from_json(rec));
      c.tip = j.at("hash").get<std::string>();
    } catch (const ChainError&) {
      throw;
    } catch (const std::exception& e) {
      throw ChainError(lineno, std::string("malformed record: ") + e.what());
    }
  }
  return c;
}

}  // namespace

std::string_view to_string(DecisionStatus s) { return s == DecisionStatus::OPEN ? "OPEN" : "LOCKED"; }

std::optional<DecisionStatus> parse_decision_status(std::string_view text) {
  if (text == "OPEN") return DecisionStatus::OPEN;
  if (text == "LOCKED") return DecisionStatus::LOCKED;
  return std::nullopt;
}

bool valid_decision_id(std::string_view id) {
  if (id.size() < 4 || id[0] != 'D') return false;
  return std::all_of(id.begin() + 1, id.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::vector<DecisionRecord> ledger_read(const std::filesystem::path& path) { return read_chain(path).records; }

LedgerVerification ledger_verify(const std::filesystem::path& path) {
  LedgerVerification v;
  try {
    v.records = read_chain(path).records.size();
    v.message = "ok";
  } catch (const ChainError& e) {
    v.ok = false;
    v.bad_line = e.line();
    v.message = e.what();
  }
  return v;
}

std::vector<DecisionRecord> ledger_list(const std::filesystem::path& path, std::optional<DecisionStatus> status) {
  std::vector<DecisionRecord> current;
  for (auto& r : read_chain(path).records) {
    auto it = std::find_if(current.begin(), current.end(), [&](const DecisionRecord& c) { return c.id == r.id; });
    if (it == current.end()) {
      current.push_back(std::move(r));
    } else {
      *it = std::move(r);
    }
  }
  if (status) std::erase_if(current, [&](const DecisionRecord& r) { return r.status != *status; });
  return current;
}

void ledger_append(const std::filesystem::path& path, const DecisionRecord& record) {
  if (!valid_decision_id(record.id)) throw LedgerError("invalid decision id '" + record.id + "' (expected D###)");
  const Chain chain = read_chain(path);
  const DecisionRecord* existing = nullptr;
  for (const auto& r : chain.records) {
    if (r.id == record.id) existing = &r;
  }
  if (existing) {
    if (existing->status == DecisionStatus::LOCKED) {
      throw LockedRecordError(record.id + " is LOCKED; supersede it with a new record");
    }
    const bool lock = record.status == DecisionStatus::LOCKED && record.text == existing->text;
    if (!lock) throw DuplicateIdError("duplicate decision id " + record.id);
  }
  if (record.supersedes) {
    const bool found = std::any_of(chain.records.begin(), chain.records.end(),
                                   [&](const DecisionRecord& r) { return r.id == *record.supersedes; });
    if (!found) throw LedgerError("supersedes unknown id " + *record.supersedes);
    if (*record.supersedes == record.id) throw LedgerError("a record cannot supersede itself");
  }
  const json rec = to_json(record);
  json line;
  line["prev"] = chain.tip;
  line["record"] = rec;
  line["hash"] = chain_hash(chain.tip, rec);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw LedgerError("cannot open ledger " + path.string());
  out << line.dump() << '\n';
}

}  // namespace falsify
