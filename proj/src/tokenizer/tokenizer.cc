// Copyright 2026 The MPE Toolkit Authors.
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

#include "mpe/tokenizer/tokenizer.h"

#include <algorithm>
#include <charconv>
#include <climits>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mpe/base/error.h"
#include "mpe/base/random.h"
#include "mpe/base/text.h"

namespace mpe {
namespace {

const std::vector<std::string> &SpecialPieces() {
  static const std::vector<std::string> specials = {
      "<pad>", "<s>", "</s>", "<unk>", std::string(kFieldSeparator), std::string(kPairSeparator)};
  return specials;
}

const char32_t kFieldChar = ToUtf32(kFieldSeparator)[0];
const char32_t kPairChar = ToUtf32(kPairSeparator)[0];
const char32_t kMarkerChar = ToUtf32(kWordMarker)[0];

// A pre-tokenized unit: either a separator id or a character chunk.
struct Segment {
  int32_t special = -1;
  std::u32string chunk;
};

// Splits normalized text into word chunks (the first carrying the word
// marker) and separator tokens.
std::vector<Segment> PreTokenize(std::string_view text) {
  std::vector<Segment> out;
  for (const std::string &word : SplitWhitespace(Normalize(text, {}))) {
    std::u32string chunk(1, kMarkerChar);
    for (char32_t c : ToUtf32(word)) {
      if (c == kFieldChar || c == kPairChar) {
        if (!chunk.empty() && chunk != std::u32string(1, kMarkerChar)) out.push_back({-1, chunk});
        chunk.clear();
        out.push_back({c == kFieldChar ? Vocabulary::kFieldSep : Vocabulary::kPairSep, {}});
      } else {
        chunk.push_back(c);
      }
    }
    if (!chunk.empty() && chunk != std::u32string(1, kMarkerChar)) out.push_back({-1, chunk});
  }
  return out;
}

std::set<char32_t> Alphabet(std::span<const std::string> texts) {
  std::set<char32_t> chars = {kMarkerChar};
  for (const auto &t : texts) {
    for (const Segment &s : PreTokenize(t)) chars.insert(s.chunk.begin(), s.chunk.end());
  }
  return chars;
}

[[noreturn]] void VocabParseError(size_t line, const std::string &msg) {
  throw Error(ErrorCode::kParse, "vocabulary line " + std::to_string(line) + ": " + msg);
}

}  // namespace

int Vocabulary::MinimumSize(std::span<const std::string> texts) {
  return kSpecialCount + static_cast<int>(Alphabet(texts).size());
}

Vocabulary Vocabulary::Train(std::span<const std::string> texts, int vocab_size, uint64_t seed,
                             size_t max_training_texts) {
  std::vector<size_t> chosen(texts.size());
  std::iota(chosen.begin(), chosen.end(), 0);
  if (max_training_texts > 0 && max_training_texts < texts.size()) {
    Rng rng(seed);
    rng.Shuffle(chosen.begin(), chosen.end());
    chosen.resize(max_training_texts);
    std::sort(chosen.begin(), chosen.end());
  }
  std::vector<std::string> sample;
  sample.reserve(chosen.size());
  for (size_t i : chosen) sample.push_back(texts[i]);

  const std::set<char32_t> alphabet = Alphabet(sample);
  const int minimum = kSpecialCount + static_cast<int>(alphabet.size());
  if (vocab_size < minimum) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary size " + std::to_string(vocab_size) +
                    " is too small; the minimum for this corpus is " + std::to_string(minimum));
  }

  std::vector<std::string> pieces = SpecialPieces();
  std::map<char32_t, int32_t> char_id;
  for (char32_t c : alphabet) {
    char_id[c] = static_cast<int32_t>(pieces.size());
    pieces.push_back(ToUtf8(std::u32string(1, c)));
  }
  std::unordered_map<std::string, int32_t> index;
  for (size_t i = 0; i < pieces.size(); ++i) index.emplace(pieces[i], static_cast<int32_t>(i));

  std::map<std::u32string, int64_t> chunk_counts;
  for (const auto &t : sample) {
    for (const Segment &s : PreTokenize(t)) {
      if (s.special < 0) ++chunk_counts[s.chunk];
    }
  }
  struct Word {
    std::vector<int32_t> symbols;
    int64_t count;
  };
  std::vector<Word> words;
  for (const auto &[chunk, count] : chunk_counts) {
    if (chunk.size() < 2) continue;
    Word w{{}, count};
    for (char32_t c : chunk) w.symbols.push_back(char_id.at(c));
    words.push_back(std::move(w));
  }

  std::unordered_map<uint64_t, int64_t> pair_counts;
  auto key = [](int32_t a, int32_t b) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
  };
  while (static_cast<int>(pieces.size()) < vocab_size && !words.empty()) {
    pair_counts.clear();
    for (const Word &w : words) {
      for (size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[key(w.symbols[i], w.symbols[i + 1])] += w.count;
      }
    }
    if (pair_counts.empty()) break;
    uint64_t best = 0;
    int64_t best_count = -1;
    for (const auto &[k, count] : pair_counts) {
      if (count < best_count) continue;
      if (count == best_count) {
        const auto &ba = pieces[best >> 32], &bb = pieces[best & 0xffffffffu];
        const auto &ka = pieces[k >> 32], &kb = pieces[k & 0xffffffffu];
        if (std::tie(ka, kb) >= std::tie(ba, bb)) continue;
      }
      best = k;
      best_count = count;
    }
    const auto left = static_cast<int32_t>(best >> 32);
    const auto right = static_cast<int32_t>(best & 0xffffffffu);
    const std::string merged = pieces[left] + pieces[right];
    int32_t id;
    if (auto it = index.find(merged); it != index.end()) {
      id = it->second;
    } else {
      id = static_cast<int32_t>(pieces.size());
      pieces.push_back(merged);
      index.emplace(merged, id);
    }
    size_t kept = 0;
    for (size_t k = 0; k < words.size(); ++k) {
      std::vector<int32_t> &s = words[k].symbols;
      size_t out = 0;
      for (size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          s[out++] = id;
          ++i;
        } else {
          s[out++] = s[i];
        }
      }
      s.resize(out);
      if (s.size() < 2) continue;
      if (kept != k) words[kept] = std::move(words[k]);
      ++kept;
    }
    words.resize(kept);
  }
  return Vocabulary(std::move(pieces));
}

Vocabulary::Vocabulary(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  BuildIndex();
}

void Vocabulary::BuildIndex() {
  const auto &specials = SpecialPieces();
  if (pieces_.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), pieces_.begin())) {
    throw Error(ErrorCode::kParse, "vocabulary does not start with the special tokens");
  }
  index_.clear();
  trie_.assign(1, TrieNode{});
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const auto id = static_cast<int32_t>(i);
    if (pieces_[i].empty()) throw Error(ErrorCode::kParse, "empty piece at id " + std::to_string(i));
    if (!index_.emplace(pieces_[i], id).second) {
      throw Error(ErrorCode::kParse, "duplicate piece '" + pieces_[i] + "'");
    }
    if (id < kSpecialCount) continue;
    int32_t node = 0;
    for (char32_t c : ToUtf32(pieces_[i])) {
      auto it = trie_[node].children.find(c);
      if (it == trie_[node].children.end()) {
        trie_.push_back(TrieNode{});
        const auto child = static_cast<int32_t>(trie_.size() - 1);
        trie_[node].children.emplace(c, child);
        node = child;
      } else {
        node = it->second;
      }
    }
    trie_[node].id = id;
  }
}

std::optional<int32_t> Vocabulary::Find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int32_t> Vocabulary::Encode(std::string_view text, size_t max_len) const {
  std::vector<int32_t> ids;
  for (const Segment &s : PreTokenize(text)) {
    if (ids.size() >= max_len) break;
    if (s.special >= 0) {
      ids.push_back(s.special);
      continue;
    }
    const std::u32string &w = s.chunk;
    size_t i = 0;
    while (i < w.size() && ids.size() < max_len) {
      int32_t node = 0, match = -1;
      size_t match_end = i;
      for (size_t j = i; j < w.size(); ++j) {
        auto it = trie_[node].children.find(w[j]);
        if (it == trie_[node].children.end()) break;
        node = it->second;
        if (trie_[node].id >= 0) {
          match = trie_[node].id;
          match_end = j + 1;
        }
      }
      if (match < 0) {
        ids.push_back(kUnk);
        ++i;
      } else {
        ids.push_back(match);
        i = match_end;
      }
    }
  }
  return ids;
}

std::string Vocabulary::Decode(std::span<const int32_t> ids) const {
  std::string out;
  for (int32_t id : ids) {
    if (id < 0 || id >= size() || id == kPad || id == kBos || id == kEos) continue;
    if (id == kUnk) {
      out += kUnknownGlyph;
    } else if (id == kFieldSep || id == kPairSep) {
      out += ' ';
      out += pieces_[id];
      out += ' ';
    } else {
      const std::string &p = pieces_[id];
      size_t pos = 0;
      while (pos < p.size()) {
        if (p.compare(pos, kWordMarker.size(), kWordMarker) == 0) {
          out += ' ';
          pos += kWordMarker.size();
        } else {
          out += p[pos++];
        }
      }
    }
  }
  return Normalize(out, {});
}

std::string Vocabulary::ToText() const {
  std::string out = "#mpe-vocab version=1 size=" + std::to_string(pieces_.size()) + "\n#specials";
  for (int32_t i = 0; i < kSpecialCount; ++i) out += " " + pieces_[i];
  out += "\n";
  for (size_t i = 0; i < pieces_.size(); ++i) out += std::to_string(i) + "\t" + pieces_[i] + "\n";
  return out;
}

Vocabulary Vocabulary::FromText(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  auto next = [&] {
    ++line_no;
    return static_cast<bool>(std::getline(in, line));
  };
  if (!next() || line.rfind("#mpe-vocab version=", 0) != 0) {
    VocabParseError(1, "missing '#mpe-vocab' header");
  }
  size_t size = 0;
  {
    std::istringstream header(line.substr(1));
    std::string magic, version, size_field;
    header >> magic >> version >> size_field;
    if (version != "version=1") VocabParseError(1, "unsupported " + version);
    if (size_field.rfind("size=", 0) != 0) VocabParseError(1, "missing size");
    const std::string digits = size_field.substr(5);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), size);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
      VocabParseError(1, "bad size '" + digits + "'");
    }
  }
  if (!next() || line.rfind("#specials", 0) != 0) VocabParseError(2, "missing '#specials' line");
  {
    std::istringstream specials(line.substr(9));
    std::vector<std::string> listed{std::istream_iterator<std::string>(specials), {}};
    if (listed != SpecialPieces()) VocabParseError(2, "unexpected special tokens");
  }
  std::vector<std::string> pieces;
  while (next()) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) VocabParseError(line_no, "expected 'id<TAB>piece'");
    size_t id = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, id);
    if (ec != std::errc() || ptr != line.data() + tab || id != pieces.size()) {
      VocabParseError(line_no, "expected id " + std::to_string(pieces.size()));
    }
    pieces.push_back(line.substr(tab + 1));
  }
  if (pieces.size() != size) {
    VocabParseError(line_no, "header declares " + std::to_string(size) + " pieces, found " +
                                 std::to_string(pieces.size()));
  }
  return Vocabulary(std::move(pieces));
}

void Vocabulary::Save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << ToText();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

Vocabulary Vocabulary::Load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  std::string text(std::istreambuf_iterator<char>(in), {});
  try {
    return FromText(text);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string SerializePairs(std::span<const PropertyValuePair> pairs, const PairOrder &order) {
  for (const auto &p : pairs) {
    for (const std::string *field : {&p.property, &p.value}) {
      if (Trim(*field).empty()) {
        throw Error(ErrorCode::kInvalidArgument, "cannot serialize a pair with an empty field");
      }
      if (field->find(kFieldSeparator) != std::string::npos ||
          field->find(kPairSeparator) != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument,
                    "pair field '" + *field + "' contains a reserved separator");
      }
    }
  }
  std::map<std::string, int> rank;
  for (size_t i = 0; i < order.properties.size(); ++i) {
    rank.emplace(order.properties[i], static_cast<int>(i));
  }
  auto rank_of = [&](const PropertyValuePair &p) {
    auto it = rank.find(p.property);
    return it == rank.end() ? INT_MAX : it->second;
  };
  std::vector<const PropertyValuePair *> sorted;
  for (const auto &p : pairs) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(), [&](const auto *a, const auto *b) {
    const int ra = rank_of(*a), rb = rank_of(*b);
    if (ra != rb) return ra < rb;
    if (ra == INT_MAX) return *a < *b;
    return false;
  });
  std::string out;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i) {
      out += ' ';
      out += kPairSeparator;
      out += ' ';
    }
    out += sorted[i]->property;
    out += ' ';
    out += kFieldSeparator;
    out += ' ';
    out += sorted[i]->value;
  }
  return out;
}

ParsedPairs ParsePairs(std::string_view text) {
  ParsedPairs result;
  std::string trimmed;
  try {
    trimmed = Trim(text);
  } catch (const Error &) {
    result.malformed = 1;
    return result;
  }
  if (trimmed.empty()) return result;
  std::set<PropertyValuePair> seen;
  size_t start = 0;
  while (true) {
    const size_t end = trimmed.find(kPairSeparator, start);
    const std::string_view segment = std::string_view(trimmed).substr(
        start, end == std::string::npos ? std::string::npos : end - start);
    const size_t sep = segment.find(kFieldSeparator);
    bool ok = sep != std::string_view::npos &&
              segment.find(kFieldSeparator, sep + kFieldSeparator.size()) == std::string_view::npos;
    if (ok) {
      try {
        PropertyValuePair pair{Normalize(segment.substr(0, sep), {}),
                               Normalize(segment.substr(sep + kFieldSeparator.size()), {})};
        ok = !pair.property.empty() && !pair.value.empty();
        if (ok && seen.insert(pair).second) result.pairs.push_back(std::move(pair));
      } catch (const Error &) {
        ok = false;
      }
    }
    if (!ok) ++result.malformed;
    if (end == std::string::npos) break;
    start = end + kPairSeparator.size();
  }
  return result;
}

std::vector<std::string> TokenizerTrainingTexts(const Corpus &corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size() * 2);
  for (const auto &r : corpus) texts.push_back(r.text);
  for (const auto &r : corpus) {
    if (!r.pairs.empty()) texts.push_back(SerializePairs(r.pairs));
  }
  return texts;
}

}  // namespace mpe
