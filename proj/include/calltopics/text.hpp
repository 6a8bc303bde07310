#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace calltopics::text {

/// Lowercased words with leading/trailing ASCII punctuation removed, split on
/// whitespace. Tokens that are pure punctuation vanish. Used for word counts,
/// vocabulary and the mock embedder.
std::vector<std::string> tokenize(std::string_view text);

std::size_t word_count(std::string_view text);

/// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
/// Returned pieces are trimmed; empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

std::string_view trim(std::string_view s);

std::string to_lower(std::string_view s);

/// Lookup key for topic labels: lowercase, internal whitespace runs collapsed
/// to one space, trimmed.
std::string normalize_label(std::string_view label);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

std::string hex64(std::uint64_t value);

}  // namespace calltopics::text
