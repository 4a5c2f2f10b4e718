#include "teleop/xml.hpp"

#include <algorithm>
#include <boost/property_tree/detail/rapidxml.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "teleop/error.hpp"

namespace teleop::xml {

namespace rx = boost::property_tree::detail::rapidxml;

namespace {

class LineIndex {
 public:
  explicit LineIndex(const char* begin) : begin_(begin) {}
  int line_of(const char* p) const {
    if (p == nullptr || p < begin_) return 0;
    return 1 + static_cast<int>(std::count(begin_, p, '\n'));
  }

 private:
  const char* begin_;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

Element convert(const rx::xml_node<char>* node, const LineIndex& lines) {
  Element e;
  e.name.assign(node->name(), node->name_size());
  e.line = lines.line_of(node->name());
  for (auto* a = node->first_attribute(); a != nullptr; a = a->next_attribute()) {
    std::string key(a->name(), a->name_size());
    for (const auto& [existing, _] : e.attributes) {
      if (existing == key) {
        throw Error(Errc::schema, "line " + std::to_string(lines.line_of(a->name())) + ": element <" + e.name +
                                      ">: duplicate attribute '" + key + "'");
      }
    }
    e.attributes.emplace_back(std::move(key), std::string(a->value(), a->value_size()));
  }
  std::string text;
  for (auto* child = node->first_node(); child != nullptr; child = child->next_sibling()) {
    switch (child->type()) {
      case rx::node_element:
        e.children.push_back(convert(child, lines));
        break;
      case rx::node_data:
      case rx::node_cdata:
        text.append(child->value(), child->value_size());
        break;
      default:
        break;
    }
  }
  e.text = trim(text);
  return e;
}

}  // namespace

const std::string* Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

Element parse(std::string_view document) {
  std::vector<char> buffer(document.begin(), document.end());
  buffer.push_back('\0');
  const LineIndex lines(buffer.data());
  rx::xml_document<char> doc;
  try {
    doc.parse<rx::parse_validate_closing_tags>(buffer.data());
  } catch (const rx::parse_error& e) {
    throw Error(Errc::schema,
                "line " + std::to_string(lines.line_of(e.where<char>())) + ": malformed XML: " + e.what());
  }
  const rx::xml_node<char>* root = nullptr;
  for (auto* n = doc.first_node(); n != nullptr; n = n->next_sibling()) {
    if (n->type() != rx::node_element) continue;
    if (root != nullptr) {
      throw Error(Errc::schema, "line " + std::to_string(lines.line_of(n->name())) + ": multiple root elements");
    }
    root = n;
  }
  if (root == nullptr) throw Error(Errc::schema, "line 1: document has no root element");
  return convert(root, lines);
}

Element parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::setup, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

// ---------------------------------------------------------------------------

StrictElement::StrictElement(const Element& element) : element_(element) {}

void StrictElement::fail(const std::string& what) const {
  throw Error(Errc::schema, "line " + std::to_string(element_.line) + ": element <" + element_.name + ">: " + what);
}

std::optional<std::string> StrictElement::optional(std::string_view key) {
  const std::string* v = element_.attribute(key);
  if (v == nullptr) return std::nullopt;
  used_attributes_.insert(std::string(key));
  return *v;
}

std::string StrictElement::required(std::string_view key) {
  auto v = optional(key);
  if (!v) fail("missing attribute '" + std::string(key) + "'");
  return *v;
}

namespace {

std::optional<double> to_double(const std::string& s) {
  double value = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> to_integer(const std::string& s) {
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

}  // namespace

double StrictElement::required_number(std::string_view key) {
  const std::string text = required(key);
  auto v = to_double(text);
  if (!v) fail("attribute '" + std::string(key) + "' is not a number: '" + text + "'");
  return *v;
}

double StrictElement::optional_number(std::string_view key, double fallback) {
  if (element_.attribute(key) == nullptr) return fallback;
  return required_number(key);
}

std::int64_t StrictElement::required_integer(std::string_view key) {
  const std::string text = required(key);
  auto v = to_integer(text);
  if (!v) fail("attribute '" + std::string(key) + "' is not an integer: '" + text + "'");
  return *v;
}

std::int64_t StrictElement::optional_integer(std::string_view key, std::int64_t fallback) {
  if (element_.attribute(key) == nullptr) return fallback;
  return required_integer(key);
}

bool StrictElement::optional_bool(std::string_view key, bool fallback) {
  auto v = optional(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  fail("attribute '" + std::string(key) + "' must be true or false");
}

std::vector<const Element*> StrictElement::children(std::string_view name) {
  used_children_.insert(std::string(name));
  std::vector<const Element*> out;
  for (const auto& c : element_.children) {
    if (c.name == name) out.push_back(&c);
  }
  return out;
}

const Element& StrictElement::required_child(std::string_view name) {
  auto found = children(name);
  if (found.empty()) fail("missing element <" + std::string(name) + ">");
  if (found.size() > 1) fail("element <" + std::string(name) + "> appears more than once");
  return *found.front();
}

const Element* StrictElement::optional_child(std::string_view name) {
  auto found = children(name);
  if (found.size() > 1) fail("element <" + std::string(name) + "> appears more than once");
  return found.empty() ? nullptr : found.front();
}

void StrictElement::finish(bool allow_text) {
  for (const auto& [k, _] : element_.attributes) {
    if (!used_attributes_.count(k)) fail("unknown attribute '" + k + "'");
  }
  for (const auto& c : element_.children) {
    if (!used_children_.count(c.name)) {
      throw Error(Errc::schema, "line " + std::to_string(c.line) + ": unexpected element <" + c.name + "> inside <" +
                                    element_.name + ">");
    }
  }
  if (!allow_text && !element_.text.empty()) fail("unexpected text content");
}

// ---------------------------------------------------------------------------

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

Writer::Writer() { out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"; }

void Writer::start_tag(std::string_view name, const Attributes& attributes) {
  out_.append(static_cast<std::size_t>(depth_) * 2, ' ');
  out_ += '<';
  out_ += name;
  for (const auto& [k, v] : attributes) {
    out_ += ' ';
    out_ += k;
    out_ += "=\"";
    out_ += escape(v);
    out_ += '"';
  }
}

void Writer::open(std::string_view name, const Attributes& attributes) {
  start_tag(name, attributes);
  out_ += ">\n";
  ++depth_;
}

void Writer::close(std::string_view name) {
  --depth_;
  out_.append(static_cast<std::size_t>(depth_) * 2, ' ');
  out_ += "</";
  out_ += name;
  out_ += ">\n";
}

void Writer::leaf(std::string_view name, const Attributes& attributes) {
  start_tag(name, attributes);
  out_ += "/>\n";
}

void Writer::text_element(std::string_view name, std::string_view text, const Attributes& attributes) {
  start_tag(name, attributes);
  out_ += '>';
  out_ += escape(text);
  out_ += "</";
  out_ += name;
  out_ += ">\n";
}

}  // namespace teleop::xml
