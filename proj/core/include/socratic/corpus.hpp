#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace socratic {

/// A Theory-of-Knowledge essay question with the reference summary that
/// learner answers are scored against.
struct ToKItem {
  int id = 0;
  std::string question;
  std::string reference_summary;

  bool operator==(const ToKItem&) const = default;
};

/// Validated, immutable collection of ToK items. Construction enforces the
/// bank invariants (non-empty, unique ids, non-blank texts), so every
/// instance in circulation is valid.
class QuestionBank {
 public:
  static constexpr int kSchemaVersion = 1;

  explicit QuestionBank(std::vector<ToKItem> items);

  /// Throws PreconditionError for an unknown id.
  const ToKItem& get(int id) const;
  const ToKItem* find(int id) const noexcept;

  const std::vector<ToKItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  std::vector<int> ids() const;

  /// Parses the versioned bank JSON. Throws DataError naming the offending id.
  static QuestionBank from_json(const std::string& text);
  std::string to_json() const;

 private:
  std::vector<ToKItem> items_;
};

/// The five shipped questions and summaries (compiled in from
/// core/data/questions.json).
const QuestionBank& default_bank();

/// Throws DataError when the file is missing or invalid.
QuestionBank load_bank(const std::filesystem::path& path);
void save_bank(const QuestionBank& bank, const std::filesystem::path& path);

inline const ToKItem& get_item(const QuestionBank& bank, int id) { return bank.get(id); }

}  // namespace socratic
