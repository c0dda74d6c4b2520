#pragma once

#include <optional>
#include <string>

namespace ecgmon {

// AAMI beat taxonomy. Q (unclassified) is ingested but excluded from
// classifier training and evaluation.
enum class BeatClass : int { N = 0, S = 1, V = 2, F = 3, Q = 4 };

inline constexpr int kNumTrainableClasses = 4; // N,S,V,F

// Maps an annotation symbol to its AAMI class.
// Returns nullopt for symbols outside the standard grouping table; callers
// typically warn and fall back to Q.
std::optional<BeatClass> aami_from_symbol(char symbol);

char to_char(BeatClass c);
std::optional<BeatClass> beat_class_from_char(char c);

inline bool is_abnormal(BeatClass c) { return c != BeatClass::N; }

} // namespace ecgmon
