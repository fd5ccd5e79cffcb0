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

// Subword vocabulary and the serialized pair-sequence target format.
//
// Targets are written as
//   property ⊢ value ⊣ property ⊢ value
// where ⊢ separates the fields of a pair and ⊣ separates pairs. Both
// separators are dedicated vocabulary items that merges never produce.
// Systems that generate predictions externally can emit this format
// directly and score it with ParsePairs.

#ifndef MPE_TOKENIZER_TOKENIZER_H_
#define MPE_TOKENIZER_TOKENIZER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mpe/corpus/record.h"

namespace mpe {

inline constexpr std::string_view kFieldSeparator = "⊢";
inline constexpr std::string_view kPairSeparator = "⊣";
// Marks a piece that starts a whitespace-delimited word.
inline constexpr std::string_view kWordMarker = "▁";
// Decoded form of UNK.
inline constexpr std::string_view kUnknownGlyph = "⁇";

inline constexpr size_t kDefaultMaxTokens = 512;
inline constexpr int kDefaultVocabSize = 2000;

class Vocabulary {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kBos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kUnk = 3;
  static constexpr int32_t kFieldSep = 4;
  static constexpr int32_t kPairSep = 5;
  static constexpr int32_t kSpecialCount = 6;

  // Byte-pair merges over whitespace-delimited words. Every character of
  // the training texts becomes a base piece, then the most frequent
  // adjacent pair is merged (ties broken by the pieces' byte order) until
  // vocab_size is reached or nothing is left to merge. When
  // max_training_texts > 0, a seeded sample of that many texts is used.
  // Throws kInvalidArgument, naming the minimum feasible size, when
  // vocab_size cannot hold the specials and base characters.
  static Vocabulary Train(std::span<const std::string> texts, int vocab_size, uint64_t seed,
                          size_t max_training_texts = 0);

  // Specials plus the distinct characters of `texts`.
  static int MinimumSize(std::span<const std::string> texts);

  // Greedy longest match per word; characters outside the vocabulary become
  // UNK. Keeps the first max_len ids.
  std::vector<int32_t> Encode(std::string_view text, size_t max_len = kDefaultMaxTokens) const;
  // Inverse of Encode up to whitespace normalization. PAD, BOS and EOS are
  // dropped.
  std::string Decode(std::span<const int32_t> ids) const;

  int32_t size() const { return static_cast<int32_t>(pieces_.size()); }
  const std::string &piece(int32_t id) const { return pieces_.at(static_cast<size_t>(id)); }
  std::optional<int32_t> Find(std::string_view piece) const;
  bool operator==(const Vocabulary &other) const { return pieces_ == other.pieces_; }

  // Text format:
  //   #mpe-vocab version=1 size=N
  //   #specials <pad> <s> </s> <unk> ⊢ ⊣
  //   then one "id<TAB>piece" line per piece, ids 0..N-1 in order.
  std::string ToText() const;
  static Vocabulary FromText(std::string_view text);
  void Save(const std::filesystem::path &path) const;
  static Vocabulary Load(const std::filesystem::path &path);

 private:
  explicit Vocabulary(std::vector<std::string> pieces);
  void BuildIndex();

  struct TrieNode {
    std::unordered_map<char32_t, int32_t> children;
    int32_t id = -1;
  };

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int32_t> index_;
  std::vector<TrieNode> trie_;
};

// Ordering for serialized targets. Pairs whose property appears in
// `properties` come first, in that order; the rest follow
// lexicographically. Values of one property keep their relative order when
// the property is listed and are sorted otherwise.
struct PairOrder {
  std::vector<std::string> properties;
};

// Throws kInvalidArgument when a field is empty or contains a separator.
std::string SerializePairs(std::span<const PropertyValuePair> pairs, const PairOrder &order = {});

struct ParsedPairs {
  // Duplicate-free, in text order.
  std::vector<PropertyValuePair> pairs;
  int malformed = 0;
};

// Never throws. Segments without exactly one field separator, or with an
// empty field, are counted as malformed and skipped.
ParsedPairs ParsePairs(std::string_view text);

// Article texts followed by their serialized targets.
std::vector<std::string> TokenizerTrainingTexts(const Corpus &corpus);

}  // namespace mpe

#endif  // MPE_TOKENIZER_TOKENIZER_H_
