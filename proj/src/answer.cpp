#include "solar/answer.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace solar {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Accepts sign + digits, with optional strict thousands grouping and an
// optional fraction. A bare trailing '.' is tolerated ("42." parses as 42).
struct ParsedNumber {
  bool negative = false;
  std::string integer;   // digits only, separators removed
  std::string fraction;  // digits only, possibly empty
};

bool parse_number(std::string_view s, ParsedNumber& out) {
  size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    out.negative = s[i] == '-';
    ++i;
  }
  size_t digits_start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  size_t first_run = i - digits_start;
  if (first_run == 0) {
    // Allow forms like ".5".
    if (i < s.size() && s[i] == '.') {
      out.integer.clear();
    } else {
      return false;
    }
  } else {
    out.integer.assign(s.substr(digits_start, first_run));
  }
  if (i < s.size() && s[i] == ',') {
    // Thousands separators: first group 1-3 digits, then strict groups of 3.
    if (first_run == 0 || first_run > 3) return false;
    while (i < s.size() && s[i] == ',') {
      ++i;
      size_t group_start = i;
      while (i < s.size() && is_digit(s[i])) ++i;
      if (i - group_start != 3) return false;
      out.integer.append(s.substr(group_start, 3));
    }
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    size_t frac_start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    out.fraction.assign(s.substr(frac_start, i - frac_start));
  }
  if (i != s.size()) return false;
  return !out.integer.empty() || !out.fraction.empty();
}

std::string render_number(const ParsedNumber& n) {
  std::string integer = n.integer;
  size_t keep = 0;
  while (keep + 1 < integer.size() && integer[keep] == '0') ++keep;
  integer.erase(0, keep);
  if (integer.empty()) integer = "0";

  std::string fraction = n.fraction;
  while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();

  bool zero = integer == "0" && fraction.empty();
  std::string out;
  if (n.negative && !zero) out.push_back('-');
  out += integer;
  if (!fraction.empty()) {
    out.push_back('.');
    out += fraction;
  }
  return out;
}

}  // namespace

std::string canonicalize_answer(std::string_view raw) {
  std::string s(trim(raw));

  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });

  std::string collapsed;
  collapsed.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
    } else {
      if (pending_space) collapsed.push_back(' ');
      pending_space = false;
      collapsed.push_back(c);
    }
  }
  s = std::move(collapsed);

  // Peeling one layer can expose another (e.g. "$5. " -> "$5" -> "5"), so
  // strip whitespace, trailing '.'/',' and surrounding '$' to a fixpoint.
  for (;;) {
    std::string_view v = trim(s);
    size_t e = v.size();
    while (e > 0 && (v[e - 1] == '.' || v[e - 1] == ',')) --e;
    v = v.substr(0, e);
    size_t b = 0;
    e = v.size();
    while (b < e && v[b] == '$') ++b;
    while (e > b && v[e - 1] == '$') --e;
    v = v.substr(b, e - b);
    if (v.size() == s.size()) break;
    s.assign(v);
  }

  ParsedNumber n;
  if (parse_number(s, n)) return render_number(n);
  return s;
}

namespace {

std::string take_line(std::string_view text, size_t from) {
  size_t eol = text.find('\n', from);
  if (eol == std::string_view::npos) eol = text.size();
  return std::string(text.substr(from, eol - from));
}

size_t rfind_case_insensitive(std::string_view haystack, std::string_view needle) {
  if (needle.empty() || haystack.size() < needle.size()) {
    return std::string_view::npos;
  }
  for (size_t i = haystack.size() - needle.size() + 1; i-- > 0;) {
    bool hit = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j]))) {
        hit = false;
        break;
      }
    }
    if (hit) return i;
  }
  return std::string_view::npos;
}

// Last maximal numeric substring: sign + digits, optional strict thousands
// grouping, optional fraction. A sign counts only when it starts the token.
std::string last_numeric_token(std::string_view text) {
  std::string best;
  size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    size_t start = i;
    if (start > 0 && (text[start - 1] == '+' || text[start - 1] == '-')) {
      bool signed_start = start == 1 || !is_digit(text[start - 2]);
      if (signed_start) --start;
    }
    size_t end = i;
    while (end < text.size() && is_digit(text[end])) ++end;
    // Greedy extension over thousands groups.
    while (end + 3 < text.size() && text[end] == ',' && is_digit(text[end + 1]) &&
           is_digit(text[end + 2]) && is_digit(text[end + 3]) &&
           (end + 4 >= text.size() || !is_digit(text[end + 4]))) {
      end += 4;
    }
    if (end < text.size() && text[end] == '.' && end + 1 < text.size() &&
        is_digit(text[end + 1])) {
      ++end;
      while (end < text.size() && is_digit(text[end])) ++end;
    }
    ParsedNumber n;
    if (parse_number(text.substr(start, end - start), n)) {
      best.assign(text.substr(start, end - start));
    }
    i = end > i ? end : i + 1;
  }
  return best;
}

}  // namespace

std::string extract_final_answer(std::string_view text) {
  constexpr std::string_view kHashMarker = "#### ";
  size_t hash_pos = text.rfind(kHashMarker);
  if (hash_pos != std::string_view::npos) {
    return canonicalize_answer(take_line(text, hash_pos + kHashMarker.size()));
  }

  constexpr std::string_view kAnswerMarker = "final answer:";
  size_t marker_pos = rfind_case_insensitive(text, kAnswerMarker);
  if (marker_pos != std::string_view::npos) {
    return canonicalize_answer(take_line(text, marker_pos + kAnswerMarker.size()));
  }

  std::string numeric = last_numeric_token(text);
  if (!numeric.empty()) return canonicalize_answer(numeric);
  return std::string();
}

}  // namespace solar
