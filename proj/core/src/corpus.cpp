#include "socratic/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "socratic/error.hpp"

namespace socratic {

namespace detail {
extern const std::string_view kDefaultBankJson;
}

namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string id_label(int id) { return "item id " + std::to_string(id); }

}  // namespace

QuestionBank::QuestionBank(std::vector<ToKItem> items) : items_(std::move(items)) {
  if (items_.empty()) throw DataError("question bank is empty");
  std::set<int> seen;
  for (const auto& item : items_) {
    if (!seen.insert(item.id).second) throw DataError("duplicate " + id_label(item.id));
    if (is_blank(item.question)) throw DataError(id_label(item.id) + ": empty question");
    if (is_blank(item.reference_summary))
      throw DataError(id_label(item.id) + ": empty reference_summary");
  }
}

const ToKItem* QuestionBank::find(int id) const noexcept {
  auto it = std::find_if(items_.begin(), items_.end(), [id](const ToKItem& i) { return i.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

const ToKItem& QuestionBank::get(int id) const {
  if (const ToKItem* item = find(id)) return *item;
  throw PreconditionError("unknown question id " + std::to_string(id));
}

std::vector<int> QuestionBank::ids() const {
  std::vector<int> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.push_back(item.id);
  return out;
}

QuestionBank QuestionBank::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("bank is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("bank: top level must be an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw DataError("bank: missing integer field 'version'");
  if (doc["version"].get<int>() != kSchemaVersion)
    throw DataError("bank: unsupported version " + doc["version"].dump());
  if (!doc.contains("items") || !doc["items"].is_array())
    throw DataError("bank: missing array field 'items'");

  std::vector<ToKItem> items;
  std::size_t index = 0;
  for (const auto& entry : doc["items"]) {
    const std::string where = "bank item #" + std::to_string(index++);
    if (!entry.is_object()) throw DataError(where + ": not an object");
    if (!entry.contains("id") || !entry["id"].is_number_integer())
      throw DataError(where + ": missing integer 'id'");
    ToKItem item;
    item.id = entry["id"].get<int>();
    for (const char* key : {"question", "reference_summary"}) {
      if (!entry.contains(key) || !entry[key].is_string())
        throw DataError(id_label(item.id) + ": missing string '" + key + "'");
    }
    item.question = entry["question"].get<std::string>();
    item.reference_summary = entry["reference_summary"].get<std::string>();
    items.push_back(std::move(item));
  }
  return QuestionBank(std::move(items));
}

std::string QuestionBank::to_json() const {
  json items = json::array();
  for (const auto& item : items_) {
    items.push_back({{"id", item.id},
                     {"question", item.question},
                     {"reference_summary", item.reference_summary}});
  }
  json doc = {{"version", kSchemaVersion}, {"items", std::move(items)}};
  return doc.dump(2) + "\n";
}

const QuestionBank& default_bank() {
  static const QuestionBank bank = QuestionBank::from_json(std::string(detail::kDefaultBankJson));
  return bank;
}

QuestionBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open question bank " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return QuestionBank::from_json(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_bank(const QuestionBank& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write question bank " + path.string());
  out << bank.to_json();
}

}  // namespace socratic
