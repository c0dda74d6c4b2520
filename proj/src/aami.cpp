#include "ecgmon/aami.hpp"

namespace ecgmon {

// Standard symbol -> AAMI grouping:
//   N <- {N, L, R, e, j}, S <- {A, a, J, S}, V <- {V, E}, F <- {F},
//   Q <- {/, f, Q}.
std::optional<BeatClass> aami_from_symbol(char symbol) {
    switch (symbol) {
    case 'N':
    case 'L':
    case 'R':
    case 'e':
    case 'j':
        return BeatClass::N;
    case 'A':
    case 'a':
    case 'J':
    case 'S':
        return BeatClass::S;
    case 'V':
    case 'E':
        return BeatClass::V;
    case 'F':
        return BeatClass::F;
    case '/':
    case 'f':
    case 'Q':
        return BeatClass::Q;
    default:
        return std::nullopt;
    }
}

char to_char(BeatClass c) {
    switch (c) {
    case BeatClass::N: return 'N';
    case BeatClass::S: return 'S';
    case BeatClass::V: return 'V';
    case BeatClass::F: return 'F';
    case BeatClass::Q: return 'Q';
    }
    return '?';
}

std::optional<BeatClass> beat_class_from_char(char c) {
    switch (c) {
    case 'N': return BeatClass::N;
    case 'S': return BeatClass::S;
    case 'V': return BeatClass::V;
    case 'F': return BeatClass::F;
    case 'Q': return BeatClass::Q;
    default: return std::nullopt;
    }
}

} // namespace ecgmon
