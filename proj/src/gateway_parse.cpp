// Copyright (c) 2026 The pas Authors. All Rights Reserved
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <set>

#include "pas/model_gateway.hpp"

namespace pas::gateway {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// UTF-8 typographic quotes: “ ” ‘ ’ « »
constexpr std::string_view kOpenQuotes[] = {"\xE2\x80\x9C", "\xE2\x80\x98", "\xC2\xAB"};
constexpr std::string_view kCloseQuotes[] = {"\xE2\x80\x9D", "\xE2\x80\x99", "\xC2\xBB"};
constexpr std::string_view kBullets[] = {"\xE2\x80\xA2", "\xE2\x80\x93", "\xE2\x80\x94"};  // bullet, en dash, em dash

}  // namespace

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsSpace(s[b])) ++b;
  while (e > b && IsSpace(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string CollapseWhitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string AsciiLower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string StripListMarker(std::string_view s, bool* stripped) {
  std::string t = Trim(s);
  std::string_view v = t;
  std::size_t cut = 0;
  if (!v.empty() && (v[0] == '-' || v[0] == '*' || v[0] == '+')) {
    cut = 1;
  } else if (!v.empty() && v[0] == '(') {
    std::size_t i = 1;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) ++i;
    if (i > 1 && i < v.size() && v[i] == ')') cut = i + 1;
  } else if (!v.empty() && std::isdigit(static_cast<unsigned char>(v[0]))) {
    std::size_t i = 0;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) ++i;
    // "1." / "1)" / "1:" followed by whitespace or end; avoids eating "3D Printer".
    if (i < v.size() && (v[i] == '.' || v[i] == ')' || v[i] == ':') &&
        (i + 1 == v.size() || IsSpace(v[i + 1]))) {
      cut = i + 1;
    }
  } else {
    for (auto bullet : kBullets) {
      if (v.starts_with(bullet)) {
        cut = bullet.size();
        break;
      }
    }
  }
  if (stripped) *stripped = cut > 0;
  if (cut == 0) return t;
  return Trim(v.substr(cut));
}

std::string StripQuotes(std::string_view s) {
  std::string t = Trim(s);
  for (bool changed = true; changed && !t.empty();) {
    changed = false;
    std::string_view v = t;
    if (v.size() >= 4 && v.starts_with("**") && v.ends_with("**")) {
      t = Trim(v.substr(2, v.size() - 4));
      changed = true;
      continue;
    }
    if (v.size() >= 2 && v.front() == v.back() &&
        (v.front() == '"' || v.front() == '\'' || v.front() == '`' || v.front() == '*' ||
         v.front() == '_')) {
      t = Trim(v.substr(1, v.size() - 2));
      changed = true;
      continue;
    }
    for (std::size_t q = 0; q < std::size(kOpenQuotes); ++q) {
      auto open = kOpenQuotes[q];
      auto close = kCloseQuotes[q];
      if (v.size() >= open.size() + close.size() && v.starts_with(open) && v.ends_with(close)) {
        t = Trim(v.substr(open.size(), v.size() - open.size() - close.size()));
        changed = true;
        break;
      }
    }
  }
  return t;
}

namespace {

std::string CleanItem(std::string_view raw) {
  std::string item = StripQuotes(raw);
  while (!item.empty() && (item.back() == '.' || item.back() == ';' || item.back() == ',')) {
    item.pop_back();
  }
  return CollapseWhitespace(StripQuotes(item));
}

}  // namespace

ConceptListParse ParseConceptList(std::string_view reply) {
  ConceptListParse out;
  std::set<std::string> seen;
  auto emit = [&](std::string_view raw) {
    std::string item = CleanItem(raw);
    if (item.empty()) return;
    auto key = AsciiLower(item);
    if (seen.insert(key).second) out.items.push_back(std::move(item));
  };

  std::size_t pos = 0;
  while (pos <= reply.size()) {
    std::size_t end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    std::string line = Trim(reply.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    // Preambles such as "Here are some bird species:".
    if (line.back() == ':') continue;

    bool marked = false;
    std::string body = StripListMarker(line, &marked);
    if (marked) {
      emit(body);
      continue;
    }
    std::size_t start = 0;
    while (start <= body.size()) {
      std::size_t comma = body.find(',', start);
      if (comma == std::string::npos) comma = body.size();
      emit(std::string_view(body).substr(start, comma - start));
      start = comma + 1;
    }
  }
  return out;
}

Verdict ParseBoolVerdict(std::string_view reply) {
  std::string word;
  auto decide = [&]() -> std::optional<Verdict> {
    if (word.empty()) return std::nullopt;
    auto w = AsciiLower(word);
    word.clear();
    if (w == "true" || w == "yes") return Verdict::kTrue;
    if (w == "false" || w == "no") return Verdict::kFalse;
    return std::nullopt;
  };
  for (char c : reply) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word.push_back(c);
      continue;
    }
    if (auto v = decide()) return *v;
  }
  if (auto v = decide()) return *v;
  return Verdict::kUnparseable;
}

}  // namespace pas::gateway
