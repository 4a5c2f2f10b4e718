#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace teleop::xml {

/// Owning DOM node. Only elements and their text are kept; comments, the
/// declaration and processing instructions are dropped.
struct Element {
  std::string name;
  int line = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // concatenated character data, whitespace-trimmed

  const std::string* attribute(std::string_view key) const;
};

/// Parses a document and returns its root element. Malformed XML and
/// duplicate attributes throw Error(schema) with the offending line.
Element parse(std::string_view document);

Element parse_file(const std::string& path);

/// Closed-schema view over one element: every attribute and child must be
/// consumed before finish(), or the element is rejected.
class StrictElement {
 public:
  explicit StrictElement(const Element& element);

  const Element& element() const { return element_; }

  std::string required(std::string_view key);
  std::optional<std::string> optional(std::string_view key);
  double required_number(std::string_view key);
  double optional_number(std::string_view key, double fallback);
  std::int64_t required_integer(std::string_view key);
  std::int64_t optional_integer(std::string_view key, std::int64_t fallback);
  bool optional_bool(std::string_view key, bool fallback);

  /// Children with this name, in document order (may be empty).
  std::vector<const Element*> children(std::string_view name);
  const Element& required_child(std::string_view name);
  const Element* optional_child(std::string_view name);

  /// Rejects unread attributes, unexpected children and stray text.
  void finish(bool allow_text = false);

  [[noreturn]] void fail(const std::string& what) const;

 private:
  const Element& element_;
  std::set<std::string, std::less<>> used_attributes_;
  std::set<std::string, std::less<>> used_children_;
};

/// Canonical emitter: fixed two-space indentation, attributes in call order,
/// one element per line.
class Writer {
 public:
  using Attributes = std::vector<std::pair<std::string, std::string>>;

  Writer();

  void open(std::string_view name, const Attributes& attributes = {});
  void close(std::string_view name);
  void leaf(std::string_view name, const Attributes& attributes = {});
  void text_element(std::string_view name, std::string_view text, const Attributes& attributes = {});

  const std::string& str() const { return out_; }

 private:
  void start_tag(std::string_view name, const Attributes& attributes);

  std::string out_;
  int depth_ = 0;
};

std::string escape(std::string_view text);

/// Shortest round-trip decimal text for a double.
std::string format_number(double value);

}  // namespace teleop::xml
